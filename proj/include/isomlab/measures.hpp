#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "geom.hpp"

namespace isomlab {

template <class T>
concept MeasureElement = requires(const T& a, const T& b) {
    { element_distance(a, b) } -> std::convertible_to<double>;
    { merge_key(a) } -> std::convertible_to<double>;
    { element_dim(a) } -> std::convertible_to<int>;
};

template <class T>
concept SemigroupElement = MeasureElement<T> && requires(const T& a, const T& b) {
    { compose(a, b) } -> std::same_as<T>;
};

template <class T>
concept GroupElement = SemigroupElement<T> && requires(const T& a) {
    { inverse(a) } -> std::same_as<T>;
};

inline constexpr double kMergeTol = 1e-10;
inline constexpr std::size_t kEnumerationCap = 1000000;

template <MeasureElement T>
class DiscreteMeasure {
public:
    struct Atom {
        T element;
        double weight;
    };

    DiscreteMeasure() = default;

    // weights must be positive and sum to 1 within sum_tol; they are then rescaled
    explicit DiscreteMeasure(std::vector<Atom> atoms, double merge_tol = kMergeTol, double sum_tol = 1e-9) {
        if (atoms.empty()) throw InvalidArgument("measure has no atoms");
        const int d = element_dim(atoms.front().element);
        double total = 0;
        for (const auto& a : atoms) {
            if (!(a.weight > 0)) throw InvalidArgument("atom weights must be positive");
            check_dims(element_dim(a.element), d, "measure atoms");
            total += a.weight;
        }
        if (std::abs(total - 1.0) > sum_tol)
            throw InvalidArgument("atom weights sum to " + std::to_string(total) + ", expected 1");
        for (auto& a : atoms) a.weight /= total;
        atoms_ = merge(std::move(atoms), merge_tol, d);
    }

    static DiscreteMeasure delta(const T& g) { return DiscreteMeasure({{g, 1.0}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    int dim() const { return atoms_.empty() ? 0 : element_dim(atoms_.front().element); }

    double total_mass() const {
        double s = 0;
        for (const auto& a : atoms_) s += a.weight;
        return s;
    }

private:
    static std::vector<Atom> merge(std::vector<Atom> in, double tol, int d) {
        if (tol <= 0 || in.size() < 2) return in;
        std::vector<double> key(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) key[i] = merge_key(in[i].element);
        std::vector<std::size_t> order(in.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key[a] < key[b]; });
        const double window = key_slack<T>(d) * tol;

        std::vector<std::size_t> kept;  // indices into `in`, increasing key
        std::vector<double> mass(in.size(), 0.0);
        std::vector<std::size_t> owner(in.size());
        for (std::size_t idx : order) {
            std::size_t hit = in.size();
            for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
                if (key[idx] - key[*it] > window) break;
                if (element_distance(in[idx].element, in[*it].element) <= tol) {
                    hit = *it;
                    break;
                }
            }
            if (hit == in.size()) {
                kept.push_back(idx);
                hit = idx;
            }
            owner[idx] = hit;
        }
        // first representative in input order wins
        std::vector<std::size_t> first(in.size(), in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            auto o = owner[i];
            if (first[o] == in.size()) first[o] = i;
            mass[o] += in[i].weight;
        }
        std::vector<std::pair<std::size_t, std::size_t>> reps;  // (first index, owner)
        for (auto o : kept) reps.emplace_back(first[o], o);
        std::sort(reps.begin(), reps.end());
        std::vector<Atom> out;
        out.reserve(reps.size());
        for (auto [f, o] : reps) out.push_back({in[f].element, mass[o]});
        return out;
    }

    std::vector<Atom> atoms_;
};

using IsometryMeasure = DiscreteMeasure<Isometry>;
using SimilarityMeasure = DiscreteMeasure<Similarity>;
using RotationMeasure = DiscreteMeasure<Rotation>;
using PointMeasure = DiscreteMeasure<Vec>;

template <SemigroupElement T>
DiscreteMeasure<T> convolve(const DiscreteMeasure<T>& mu, const DiscreteMeasure<T>& nu) {
    check_dims(mu.dim(), nu.dim(), "convolve");
    std::vector<typename DiscreteMeasure<T>::Atom> out;
    out.reserve(mu.size() * nu.size());
    for (const auto& a : mu.atoms())
        for (const auto& b : nu.atoms()) out.push_back({compose(a.element, b.element), a.weight * b.weight});
    return DiscreteMeasure<T>(std::move(out));
}

template <SemigroupElement T>
DiscreteMeasure<T> convolution_power(const DiscreteMeasure<T>& mu, int l) {
    if (l < 1) throw InvalidArgument("convolution power must be >= 1");
    DiscreteMeasure<T> out = mu;
    for (int i = 1; i < l; ++i) out = convolve(out, mu);
    return out;
}

template <GroupElement T>
DiscreteMeasure<T> reverse(const DiscreteMeasure<T>& mu) {
    std::vector<typename DiscreteMeasure<T>::Atom> out;
    for (const auto& a : mu.atoms()) out.push_back({inverse(a.element), a.weight});
    return DiscreteMeasure<T>(std::move(out));
}

template <GroupElement T>
DiscreteMeasure<T> symmetrize(const DiscreteMeasure<T>& mu0) {
    return convolve(reverse(mu0), mu0);
}

inline RotationMeasure project_theta(const IsometryMeasure& mu) {
    std::vector<RotationMeasure::Atom> out;
    for (const auto& a : mu.atoms()) out.push_back({a.element.rot, a.weight});
    return RotationMeasure(std::move(out));
}

inline RotationMeasure project_theta(const SimilarityMeasure& mu) {
    std::vector<RotationMeasure::Atom> out;
    for (const auto& a : mu.atoms()) out.push_back({a.element.rot, a.weight});
    return RotationMeasure(std::move(out));
}

inline IsometryMeasure project_g(const SimilarityMeasure& eta) {
    std::vector<IsometryMeasure::Atom> out;
    for (const auto& a : eta.atoms()) out.push_back({to_isometry(a.element), a.weight});
    return IsometryMeasure(std::move(out));
}

inline Vec act_on(const Isometry& g, const Vec& x) { return apply(g, x); }
inline Vec act_on(const Similarity& k, const Vec& x) { return apply_similarity(k, x); }

// exact law of X_l...X_1(x0); merge_tol = 0 keeps every word
template <SemigroupElement T>
PointMeasure act(const DiscreteMeasure<T>& mu, const Vec& x0, int l, std::size_t cap = kEnumerationCap,
                 double merge_tol = kMergeTol) {
    check_dims(mu.dim(), x0.size(), "act");
    if (l < 0) throw InvalidArgument("act: negative step count");
    double words = std::pow(double(mu.size()), double(l));
    if (words > double(cap)) throw CapExceeded("act: " + std::to_string(mu.size()) + "^" + std::to_string(l) +
                                               " words exceed enumeration cap");
    std::vector<PointMeasure::Atom> cur{{x0, 1.0}};
    for (int step = 0; step < l; ++step) {
        std::vector<PointMeasure::Atom> next;
        next.reserve(cur.size() * mu.size());
        for (const auto& p : cur)
            for (const auto& a : mu.atoms()) next.push_back({act_on(a.element, p.element), p.weight * a.weight});
        cur = PointMeasure(std::move(next), merge_tol).atoms();
    }
    return PointMeasure(std::move(cur), merge_tol);
}

struct MomentReport {
    Vec v1, v2;
    double N = 0;
    double M = 0;
    bool degenerate = false;
};

namespace detail {
inline Mat linear_part(const Isometry& g) { return g.rot.matrix(); }
inline Mat linear_part(const Similarity& k) { return k.lambda * k.rot.matrix(); }
}  // namespace detail

// minimizes Q(v1,v2) = sum w |g(v1) - v2|^2; minimal-norm minimizer
template <class T>
    requires std::same_as<T, Isometry> || std::same_as<T, Similarity>
MomentReport min_second_moment(const DiscreteMeasure<T>& mu) {
    const int d = mu.dim();
    const auto k = static_cast<Eigen::Index>(mu.size());
    Mat b(k * d, 2 * d);
    Vec rhs(k * d);
    double scale = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& a = mu.atoms()[i];
        double sw = std::sqrt(a.weight);
        b.block(i * d, 0, d, d) = sw * detail::linear_part(a.element);
        b.block(i * d, d, d, d) = -sw * Mat::Identity(d, d);
        rhs.segment(i * d, d) = -sw * a.element.v;
        scale = std::max(scale, a.element.v.norm());
    }
    Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Vec uty = svd.matrixU().transpose() * rhs;
    Vec z = Vec::Zero(2 * d);
    double cutoff = 1e-9 * (s.size() ? s(0) : 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) z += svd.matrixV().col(i) * (uty(i) / s(i));

    MomentReport rep;
    rep.v1 = z.head(d);
    rep.v2 = z.tail(d);
    double q2 = 0, q3 = 0;
    for (const auto& a : mu.atoms()) {
        double r = (act_on(a.element, rep.v1) - rep.v2).norm();
        q2 += a.weight * r * r;
        q3 += a.weight * r * r * r;
    }
    rep.N = std::sqrt(q2);
    rep.degenerate = rep.N <= 1e-9 * scale;
    rep.M = rep.N > 0 && !rep.degenerate ? q3 / (rep.N * rep.N * rep.N) : 0.0;
    return rep;
}

inline Mat mean_rotation(const IsometryMeasure& mu) {
    const int d = mu.dim();
    Mat a = Mat::Zero(d, d);
    for (const auto& at : mu.atoms()) a += at.weight * at.element.rot.matrix();
    return a;
}

inline Vec mean_translation(const IsometryMeasure& mu) {
    Vec b = Vec::Zero(mu.dim());
    for (const auto& at : mu.atoms()) b += at.weight * at.element.v;
    return b;
}

namespace detail {
inline Vec solve_mean_fixed_point(const IsometryMeasure& mu, double margin) {
    const int d = mu.dim();
    Mat a = mean_rotation(mu);
    double na = op_norm_real(a);
    if (!(na < 1.0 - margin))
        throw NearSingular("mean rotation has norm " + std::to_string(na) + "; no unique fixed point");
    return (Mat::Identity(d, d) - a).partialPivLu().solve(mean_translation(mu));
}
}  // namespace detail

// fixed point of x -> integral g(x) d(mu_check * mu)(g)
inline Vec center_fixed_point(const IsometryMeasure& mu) {
    auto mu1 = symmetrize(mu);
    Vec x0;
    try {
        x0 = detail::solve_mean_fixed_point(mu1, 1e-6);
    } catch (const NearSingular&) {
        // two-atom measures always leave the axis of R1^T R2 fixed, yet the system stays consistent;
        // take the minimal-norm solution unless the mean rotation is the identity
        const int d = mu.dim();
        Mat a = Mat::Identity(d, d) - mean_rotation(mu1);
        if (op_norm_real(a) < 1e-6) throw;
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(a.rows(), a.cols());
        cod.setThreshold(1e-9);
        cod.compute(a);
        x0 = cod.solve(mean_translation(mu1));
    }
    Vec res = -x0;
    for (const auto& a : mu1.atoms()) res += a.weight * apply(a.element, x0);
    if (res.norm() >= 1e-10 * std::max(1.0, x0.norm()))
        throw NearSingular("fixed point residual " + std::to_string(res.norm()));
    return x0;
}

inline IsometryMeasure conjugate_by_translation(const IsometryMeasure& mu, const Vec& x0, double dilation = 1.0) {
    std::vector<IsometryMeasure::Atom> out;
    for (const auto& a : mu.atoms()) {
        Vec v = (a.element.v + a.element.rot.matrix() * x0 - x0) / dilation;
        out.push_back({Isometry(v, a.element.rot), a.weight});
    }
    return IsometryMeasure(std::move(out));
}

inline double moment(const IsometryMeasure& mu, double m) {
    double s = 0;
    for (const auto& a : mu.atoms()) s += a.weight * std::pow(a.element.v.norm(), m);
    return s;
}

struct Normalized {
    IsometryMeasure mu;
    double scale = 1;
    Vec center;
};

// recentre so the mean translation vanishes, then dilate to unit second moment
inline Normalized normalize(const IsometryMeasure& mu) {
    // own mean map: (I - A)x = b gives integral of v' = 0. Minimal-norm solution, so measures
    // that are already centred (e.g. +-e1 with trivial rotations) pass through unchanged.
    const int d = mu.dim();
    Mat a = Mat::Identity(d, d) - mean_rotation(mu);
    Vec b = mean_translation(mu);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a.rows(), a.cols());
    cod.setThreshold(1e-9);
    cod.compute(a);
    Vec x0 = cod.solve(b);
    if ((a * x0 - b).norm() > 1e-10 * std::max(1.0, b.norm()))
        throw NearSingular("normalize: mean translation cannot be removed by recentring");
    auto centred = conjugate_by_translation(mu, x0);
    double s = std::sqrt(moment(centred, 2));
    if (!(s > 0)) throw Degenerate("normalize: translation second moment is zero");
    return {conjugate_by_translation(mu, x0, s), s, x0};
}

// relative error of E|Y_l(0)|^2 = l E|v|^2, by exact enumeration
inline double walk_moment_check(const IsometryMeasure& mu, int l, std::size_t cap = kEnumerationCap) {
    Vec b = mean_translation(mu);
    double m2 = moment(mu, 2);
    if (b.norm() > 1e-12 * std::max(1.0, std::sqrt(m2))) throw PreconditionFailed("walk_moment_check: measure not centred");
    auto law = act(mu, Vec::Zero(mu.dim()), l, cap, 0.0);
    double e2 = 0;
    for (const auto& a : law.atoms()) e2 += a.weight * a.element.squaredNorm();
    return std::abs(e2 - l * m2) / (l * m2);
}

// (E|Y_l|^3)^{2/3} / (l (E|v|^3)^{2/3}); bounded in l for centred measures
inline double walk_third_moment_ratio(const IsometryMeasure& mu, int l, std::size_t cap = kEnumerationCap) {
    auto law = act(mu, Vec::Zero(mu.dim()), l, cap, 0.0);
    double e3 = 0;
    for (const auto& a : law.atoms()) e3 += a.weight * std::pow(a.element.norm(), 3);
    return std::pow(e3, 2.0 / 3.0) / (l * std::pow(moment(mu, 3), 2.0 / 3.0));
}

// Haar mass of {R in SO(d): ||R - I||_op <= delta}
inline double rotation_ball_volume(int d, double delta) {
    constexpr double pi = std::numbers::pi;
    if (delta >= 2.0) return 1.0;
    double a = 2.0 * std::asin(delta / 2.0);  // ||R - I|| = 2 sin(angle/2)
    if (d == 2) return a / pi;
    if (d == 3) return (a - std::sin(a)) / pi;
    throw InvalidArgument("rotation_ball_volume implemented for d = 2, 3");
}

inline double euclid_ball_volume(int d, double rho) {
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(rho, d);
}

struct CollisionEstimate {
    double estimate = 0;
    double collision_frequency = 0;
    double mc_sigma = 0;  // of the estimate, pairs treated as independent
    double cell_volume = 0;
    std::uint64_t pairs = 0;
};

// sample i.i.d. words of length k, count pairs whose difference lies in B_{delta,l1}
inline CollisionEstimate collision_l2(const IsometryMeasure& eta, int k, double delta, double l1,
                                      std::size_t nsamples, std::uint64_t seed) {
    if (!(delta > 0 && delta < 0.5)) throw InvalidArgument("collision_l2: delta must lie in (0, 1/2)");
    if (k < 1 || nsamples < 2) throw InvalidArgument("collision_l2: need k >= 1 and nsamples >= 2");
    const int d = eta.dim();
    std::vector<double> cum;
    double c = 0;
    for (const auto& a : eta.atoms()) cum.push_back(c += a.weight);
    Rng rng = make_stream(seed, 0);
    std::vector<Isometry> s;
    s.reserve(nsamples);
    for (std::size_t i = 0; i < nsamples; ++i) {
        Isometry g = Isometry::identity(d);
        for (int j = 0; j < k; ++j) {
            double u = uniform01(rng) * c;
            auto idx = std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin(), cum.size() - 1);
            g = compose(g, eta.atoms()[idx].element);
        }
        s.push_back(g);
    }
    const double h = delta * std::sqrt(l1);
    auto cell_of = [&](const Vec& v) {
        std::vector<std::int64_t> q(d);
        for (int i = 0; i < d; ++i) q[i] = static_cast<std::int64_t>(std::floor(v(i) / h));
        return q;
    };
    auto hash = [](const std::vector<std::int64_t>& q) {
        std::uint64_t x = 1469598103934665603ULL;
        for (auto v : q) x = splitmix64(x ^ static_cast<std::uint64_t>(v));
        return x;
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < s.size(); ++i) grid[hash(cell_of(s[i].v))].push_back(i);

    std::uint64_t hits = 0;
    int nb = 1;
    for (int i = 0; i < d; ++i) nb *= 3;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto base = cell_of(s[i].v);
        for (int code = 0; code < nb; ++code) {
            auto q = base;
            int cc = code;
            for (int j = 0; j < d; ++j, cc /= 3) q[j] += cc % 3 - 1;
            auto it = grid.find(hash(q));
            if (it == grid.end()) continue;
            for (auto j : it->second) {
                if (j <= i) continue;
                if (cell_of(s[j].v) != q) continue;  // hash collision guard
                if ((s[i].v - s[j].v).norm() <= h && rotation_distance(s[i].rot, s[j].rot) <= delta) ++hits;
            }
        }
    }
    CollisionEstimate out;
    double n = double(nsamples);
    out.pairs = static_cast<std::uint64_t>(n * (n - 1) / 2);
    out.collision_frequency = double(hits) / double(out.pairs);
    out.cell_volume = euclid_ball_volume(d, h) * rotation_ball_volume(d, delta);
    out.estimate = out.collision_frequency / out.cell_volume;
    double p = out.collision_frequency;
    out.mc_sigma = std::sqrt(std::max(p * (1 - p), 0.0) / (n / 2)) / out.cell_volume;
    return out;
}

}  // namespace isomlab
