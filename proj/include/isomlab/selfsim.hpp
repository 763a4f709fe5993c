#pragma once

// Self-similar measures: stationary sampling, the Fourier recursion, decay profiles,
// equal-ratio decomposition of convolution powers and the gap-component extraction.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "measures.hpp"
#include "presets.hpp"
#include "spectral.hpp"
#include "walk.hpp"

namespace isomlab {

using Rational = boost::multiprecision::cpp_rational;

class IFS {
public:
    IFS(std::vector<Similarity> maps, std::vector<double> probs) : maps_(std::move(maps)), probs_(std::move(probs)) {
        if (maps_.empty()) throw InvalidArgument("IFS: no maps");
        if (maps_.size() != probs_.size()) throw InvalidArgument("IFS: maps and probabilities differ in length");
        d_ = maps_.front().dim();
        double s = 0;
        for (std::size_t i = 0; i < maps_.size(); ++i) {
            check_dims(d_, maps_[i].dim(), "IFS");
            if (!(maps_[i].lambda > 0 && maps_[i].lambda < 1)) throw InvalidArgument("IFS: ratios must lie in (0,1)");
            if (!(probs_[i] > 0)) throw InvalidArgument("IFS: probabilities must be positive");
            s += probs_[i];
        }
        if (std::abs(s - 1) > 1e-9) throw InvalidArgument("IFS: probabilities must sum to 1");
    }

    int dim() const { return d_; }
    std::size_t size() const { return maps_.size(); }
    const std::vector<Similarity>& maps() const { return maps_; }
    const std::vector<double>& probs() const { return probs_; }
    const Similarity& map(std::size_t i) const { return maps_[i]; }
    double prob(std::size_t i) const { return probs_[i]; }

    double lambda_max() const {
        double m = 0;
        for (const auto& k : maps_) m = std::max(m, k.lambda);
        return m;
    }
    double p_min() const { return *std::min_element(probs_.begin(), probs_.end()); }

    SimilarityMeasure measure() const {
        std::vector<SimilarityMeasure::Atom> a;
        for (std::size_t i = 0; i < size(); ++i) a.push_back({maps_[i], probs_[i]});
        return SimilarityMeasure(std::move(a), 0.0);
    }
    IsometryMeasure g_measure() const { return project_g(measure()); }

private:
    std::vector<Similarity> maps_;
    std::vector<double> probs_;
    int d_ = 0;
};

inline bool has_common_fixed_point(const IFS& ifs, double tol = 1e-9) {
    Vec f0 = fixed_point(ifs.map(0));
    for (std::size_t i = 1; i < ifs.size(); ++i)
        if ((fixed_point(ifs.map(i)) - f0).norm() > tol) return false;
    return true;
}

inline void require_no_common_fixed_point(const IFS& ifs) {
    if (has_common_fixed_point(ifs))
        throw PreconditionFailed("IFS maps share a fixed point; the stationary measure is a point mass");
}

// b = sum p_i (lambda_i theta_i b + v_i)
inline Vec barycenter(const IFS& ifs) {
    const int d = ifs.dim();
    Mat a = Mat::Identity(d, d);
    Vec rhs = Vec::Zero(d);
    for (std::size_t i = 0; i < ifs.size(); ++i) {
        a -= ifs.prob(i) * detail::linear_part(ifs.map(i));
        rhs += ifs.prob(i) * ifs.map(i).v;
    }
    return a.partialPivLu().solve(rhs);
}

// covariance of the stationary law from E[XX^T] = sum p (A E[XX^T] A^T + A b v^T + v b^T A^T + v v^T)
inline Mat stationary_covariance(const IFS& ifs) {
    const int d = ifs.dim();
    Vec b = barycenter(ifs);
    Mat k = Mat::Identity(d * d, d * d);
    Mat c = Mat::Zero(d, d);
    for (std::size_t i = 0; i < ifs.size(); ++i) {
        Mat a = detail::linear_part(ifs.map(i));
        const Vec& v = ifs.map(i).v;
        const double p = ifs.prob(i);
        // vec(A M A^T) = (A kron A) vec(M), column-major vec
        for (int r1 = 0; r1 < d; ++r1)
            for (int c1 = 0; c1 < d; ++c1)
                for (int r2 = 0; r2 < d; ++r2)
                    for (int c2 = 0; c2 < d; ++c2) k(c1 * d + r1, c2 * d + r2) -= p * a(r1, r2) * a(c1, c2);
        Vec ab = a * b;
        c += p * (ab * v.transpose() + v * ab.transpose() + v * v.transpose());
    }
    Vec m = k.partialPivLu().solve(Eigen::Map<Vec>(c.data(), d * d));
    Mat m2 = Eigen::Map<Mat>(m.data(), d, d);
    Mat cov = m2 - b * b.transpose();
    return 0.5 * (cov + cov.transpose());
}

// radius about c of a ball containing the attractor
inline double support_radius(const IFS& ifs, const Vec& c) {
    double m = 0;
    for (const auto& k : ifs.maps()) m = std::max(m, (apply_similarity(k, c) - c).norm());
    return m / (1 - ifs.lambda_max());
}

inline int auto_depth(const IFS& ifs, double tol) {
    const double diam = 2 * support_radius(ifs, barycenter(ifs));
    if (diam <= tol) return 1;
    return std::max(1, static_cast<int>(std::ceil(std::log(tol / diam) / std::log(ifs.lambda_max()))));
}

// i.i.d. samples of the stationary law within tol; depth 0 picks the depth from tol
inline WalkEnsemble sample_stationary(const IFS& ifs, std::size_t n, int depth, std::uint64_t seed, double tol = 1e-9,
                                      unsigned workers = 0) {
    if (depth <= 0) depth = auto_depth(ifs, tol);
    // composition of i.i.d. maps: backward and forward orders have the same law
    return simulate_walk(ifs.measure(), barycenter(ifs), depth, n, seed, workers);
}

// ---------------------------------------------------------------------------
// Fourier transform by the stationarity recursion

struct NuHat {
    std::complex<double> value;
    double error = 0;
    std::size_t evaluations = 0;
};

class NuHatEvaluator {
public:
    NuHatEvaluator(const IFS& ifs, double tol = 1e-10, std::size_t budget = 2'000'000)
        : ifs_(ifs), tol_(tol), budget_(budget) {
        if (!(tol > 0)) throw InvalidArgument("nu_hat: tol must be > 0");
        b_ = barycenter(ifs);
        trcov_ = std::max(stationary_covariance(ifs).trace(), 0.0);
        radius_ = support_radius(ifs, b_);
        xi_small_ = trcov_ > 0 ? std::sqrt(tol / (2 * std::numbers::pi * std::numbers::pi * trcov_))
                               : std::numeric_limits<double>::infinity();
        pitch_ = radius_ > 0 ? tol / (8 * std::numbers::pi * radius_) : 1.0;
    }

    NuHat operator()(const Vec& xi) {
        check_dims(ifs_.dim(), xi.size(), "nu_hat");
        memo_.clear();
        evals_ = 0;
        auto [v, e] = eval(xi);
        return {v, e, evals_};
    }

    double base_radius() const { return xi_small_; }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::int64_t>& k) const {
            std::uint64_t h = 1469598103934665603ULL;
            for (auto x : k) h = splitmix64(h ^ static_cast<std::uint64_t>(x));
            return static_cast<std::size_t>(h);
        }
    };
    struct Entry {
        Vec xi;
        std::complex<double> centered;  // e(-<xi, b>) nu_hat(xi)
        double err;
    };

    std::complex<double> phase(const Vec& xi, const Vec& x) const {
        double ph = 2 * std::numbers::pi * xi.dot(x);
        return {std::cos(ph), -std::sin(ph)};  // e^{-2 pi i <xi, x>}, as in plane_wave_coeffs
    }

    std::pair<std::complex<double>, double> eval(const Vec& xi) {
        const double nx = xi.norm();
        if (nx <= xi_small_) return {phase(xi, b_), 2 * std::numbers::pi * std::numbers::pi * trcov_ * nx * nx};
        std::vector<std::int64_t> key(xi.size());
        for (Eigen::Index k = 0; k < xi.size(); ++k) key[k] = static_cast<std::int64_t>(std::llround(xi(k) / pitch_));
        if (auto it = memo_.find(key); it != memo_.end()) {
            const Entry& e = it->second;
            double lip = 2 * std::numbers::pi * radius_ * (xi - e.xi).norm();
            return {phase(xi, b_) * e.centered, e.err + lip};
        }
        if (++evals_ > budget_) throw RecursionBudgetExceeded("nu_hat: recursion budget exceeded");
        std::complex<double> s = 0;
        double err = 0;
        for (std::size_t i = 0; i < ifs_.size(); ++i) {
            const auto& k = ifs_.map(i);
            Vec child = k.lambda * (k.rot.matrix().transpose() * xi);
            auto [v, e] = eval(child);
            s += ifs_.prob(i) * phase(xi, k.v) * v;
            err += ifs_.prob(i) * e;
        }
        memo_.emplace(std::move(key), Entry{xi, phase(xi, -b_) * s, err});
        return {s, err};
    }

    const IFS& ifs_;
    double tol_;
    std::size_t budget_;
    Vec b_;
    double trcov_ = 0, radius_ = 0, xi_small_ = 0, pitch_ = 1;
    std::size_t evals_ = 0;
    std::unordered_map<std::vector<std::int64_t>, Entry, KeyHash> memo_;
};

inline NuHat nu_hat(const IFS& ifs, const Vec& xi, double tol = 1e-10, std::size_t budget = 2'000'000) {
    NuHatEvaluator ev(ifs, tol, budget);
    return ev(xi);
}

// ---------------------------------------------------------------------------
// decay of ||Res_r nu_hat||_2 (normalized sphere measure)

struct DecayRow {
    double r = 0;
    double norm = 0;
    double err = 0;
    bool resolved = true;  // Monte Carlo rows: |nu_hat|^2 estimate above 3 sigma
    int quad_lmax = 0;
    bool quad_capped = false;
};

struct DecayProfile {
    std::vector<DecayRow> rows;
    std::string method;  // "recursion" or "monte-carlo"
    std::size_t window_begin = 0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double n_est = -std::numeric_limits<double>::infinity();  // heuristic smoothness class
};

struct DecayOptions {
    double tol = 1e-10;
    std::size_t budget = 2'000'000;  // per nu_hat evaluation
    int max_quad_lmax = 48;
    bool allow_monte_carlo = true;
    std::size_t mc_samples = 200000;
    std::uint64_t seed = 1;
};

namespace detail {

inline int decay_quad_degree(double r, double radius, int cap, bool& capped) {
    int L = static_cast<int>(std::ceil(2 * std::numbers::pi * r * radius)) + 6;
    capped = L > cap;
    return std::min(L, cap);
}

inline void fit_decay(DecayProfile& p, int d) {
    p.window_begin = p.rows.size() / 2;
    std::vector<double> x, y;
    for (std::size_t i = p.window_begin; i < p.rows.size(); ++i)
        if (p.rows[i].resolved && p.rows[i].norm > 0) {
            x.push_back(p.rows[i].r);
            y.push_back(p.rows[i].norm);
        }
    if (x.size() < 2) return;
    p.slope = loglog_slope(x, y);
    p.n_est = p.slope < 0 ? std::floor(-p.slope - d - 1 + 1e-6) : -std::numeric_limits<double>::infinity();
}

// sphere average of |nu_hat|^2 by the recursion; d = 1 uses the two points +-r
inline DecayRow exact_row(NuHatEvaluator& ev, int d, double r, double radius, int cap) {
    DecayRow row;
    row.r = r;
    double sq = 0, err = 0;
    if (d == 1) {
        for (double s : {r, -r}) {
            auto h = ev(Vec::Constant(1, s));
            sq += 0.5 * std::norm(h.value);
            err = std::max(err, h.error);
        }
    } else {
        row.quad_lmax = decay_quad_degree(r, radius, cap, row.quad_capped);
        auto q = quadrature(row.quad_lmax);
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            auto h = ev(r * Vec(q.nodes[i]));
            sq += q.weights[i] * std::norm(h.value);
            err = std::max(err, h.error);
        }
    }
    row.norm = std::sqrt(sq);
    row.err = err;  // | ||f|| - ||g|| | <= sup |f - g|
    return row;
}

}  // namespace detail

inline DecayProfile decay_profile(const IFS& ifs, const std::vector<double>& r_grid, const DecayOptions& opt = {}) {
    const int d = ifs.dim();
    if (d != 1 && d != 3) throw DimensionMismatch("decay_profile: supports d = 1 and d = 3");
    if (r_grid.size() < 2) throw InvalidArgument("decay_profile: need at least 2 radii");
    for (std::size_t i = 1; i < r_grid.size(); ++i)
        if (!(r_grid[i] > r_grid[i - 1])) throw InvalidArgument("decay_profile: r_grid must be increasing");
    DecayProfile p;
    const double radius = support_radius(ifs, barycenter(ifs));
    try {
        NuHatEvaluator ev(ifs, opt.tol, opt.budget);
        for (double r : r_grid) p.rows.push_back(detail::exact_row(ev, d, r, radius, opt.max_quad_lmax));
        p.method = "recursion";
    } catch (const RecursionBudgetExceeded&) {
        if (!opt.allow_monte_carlo || d != 3) throw;
        p.rows.clear();
        p.method = "monte-carlo";
        auto ens = sample_stationary(ifs, opt.mc_samples, 0, opt.seed);
        for (double r : r_grid) {
            DecayRow row;
            row.r = r;
            row.quad_lmax = detail::decay_quad_degree(r, radius, opt.max_quad_lmax, row.quad_capped);
            auto s = sphere_average(ens, r, quadrature(row.quad_lmax));
            row.resolved = s.value > 3 * s.mc_sigma;
            row.norm = std::sqrt(std::max(s.value, 0.0));
            row.err = row.norm > 0 ? s.mc_sigma / (2 * row.norm) : std::sqrt(s.mc_sigma);
            p.rows.push_back(row);
        }
    }
    detail::fit_decay(p, d);
    return p;
}

// ---------------------------------------------------------------------------
// equal-ratio decomposition of eta^{*(l0)}

// nearest simple fraction within 1e-12 (denominator <= 1e9), else the exact binary value
inline Rational rationalize(double x) {
    using boost::multiprecision::cpp_int;
    if (!std::isfinite(x)) throw InvalidArgument("rationalize: non-finite value");
    cpp_int h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double f = x;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(f);
        cpp_int ai = static_cast<long long>(a);
        cpp_int h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > cpp_int(1000000000)) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        Rational q(h1, k1);
        if (std::abs(static_cast<double>(q) - x) <= 1e-12) return q;
        if (f == a) break;
        f = 1.0 / (f - a);
        if (!std::isfinite(f) || f > 1e12) break;
    }
    return Rational(x);
}

// rational probabilities summing to exactly 1
inline std::vector<Rational> exact_probabilities(const IFS& ifs) {
    std::vector<Rational> q;
    Rational s = 0;
    for (double p : ifs.probs()) {
        q.push_back(rationalize(p));
        s += q.back();
    }
    for (auto& x : q) x /= s;
    return q;
}

struct RatioClass {
    std::vector<int> a;                   // a_i = number of uses of map i
    Rational weight;                      // multinomial * prod p_i^{a_i}
    Rational word_weight;                 // a_1! ... a_k! / l0!
    std::vector<std::vector<int>> words;  // map indices, word b means kappa_{b_1} ... kappa_{b_l0}
    std::vector<Similarity> elements;
    double lambda = 1;                    // prod lambda_i^{a_i}
    SimilarityMeasure measure() const {
        std::vector<SimilarityMeasure::Atom> at;
        const double w = static_cast<double>(word_weight);
        for (const auto& e : elements) at.push_back({e, w});
        return SimilarityMeasure(std::move(at), 0.0);
    }
};

namespace detail {

inline Rational factorial(int n) {
    Rational f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline void compositions(int total, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int x = total; x >= 0; --x) {
        cur.push_back(x);
        compositions(total - x, parts - 1, cur, out);
        cur.pop_back();
    }
}

inline Similarity word_element(const IFS& ifs, const std::vector<int>& w) {
    Similarity s(1.0, Rotation(ifs.dim()), Vec::Zero(ifs.dim()));
    for (int i : w) s = compose(s, ifs.map(i));
    return s;
}

}  // namespace detail

inline std::vector<RatioClass> ratio_decomposition(const IFS& ifs, int l0, std::size_t cap = kEnumerationCap) {
    if (l0 < 1) throw InvalidArgument("ratio_decomposition: need l0 >= 1");
    const int k = static_cast<int>(ifs.size());
    if (std::pow(double(k), double(l0)) > double(cap))
        throw CapExceeded("ratio_decomposition: k^l0 words exceed enumeration cap");
    const auto p = exact_probabilities(ifs);
    std::vector<std::vector<int>> types;
    std::vector<int> cur;
    detail::compositions(l0, k, cur, types);
    std::vector<RatioClass> out;
    const Rational l0f = detail::factorial(l0);
    for (const auto& a : types) {
        RatioClass c;
        c.a = a;
        Rational denom = 1, prodp = 1;
        double lam = 1;
        for (int i = 0; i < k; ++i) {
            denom *= detail::factorial(a[i]);
            for (int j = 0; j < a[i]; ++j) {
                prodp *= p[i];
                lam *= ifs.map(i).lambda;
            }
        }
        c.word_weight = denom / l0f;
        c.weight = prodp * l0f / denom;
        c.lambda = lam;
        // distinct permutations of the sorted multiset
        std::vector<int> w;
        for (int i = 0; i < k; ++i) w.insert(w.end(), a[i], i);
        do {
            c.words.push_back(w);
            c.elements.push_back(detail::word_element(ifs, w));
        } while (std::next_permutation(w.begin(), w.end()));
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// gap component

struct GapComponent {
    Rational q0_exact;
    double q0 = 0;
    SimilarityMeasure eta0;  // original coordinates
    int l1 = 0;
    Similarity kappa0;
    std::vector<int> kappa0_word;  // map indices, applied right to left
    std::vector<int> class_a;
    double ratio = 0;              // common ratio of eta0
    double separation = 0;         // |kappa0(v1) - v2| in normalized coordinates
    Vec center;                    // normalization x' = scale (x - center)
    double scale = 1;
    Vec v1, v2;                    // normalized coordinates
    double t_gap = std::numeric_limits<double>::quiet_NaN();  // d = 3 only
};

namespace detail {

// minimax point of max_i |kappa_i(y) - y| by smoothed Newton
inline Vec minimax_center(const IFS& ifs) {
    const int d = ifs.dim();
    const std::size_t k = ifs.size();
    std::vector<Mat> A;
    std::vector<Vec> b;
    for (const auto& m : ifs.maps()) {
        A.push_back(m.lambda * m.rot.matrix() - Mat::Identity(d, d));
        b.push_back(m.v);
    }
    auto gvals = [&](const Vec& y) {
        std::vector<double> g(k);
        for (std::size_t i = 0; i < k; ++i) g[i] = (A[i] * y + b[i]).squaredNorm();
        return g;
    };
    auto fmax = [&](const Vec& y) {
        auto g = gvals(y);
        return *std::max_element(g.begin(), g.end());
    };
    Vec y = barycenter(ifs);
    for (double sharp : {1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7}) {
        const double beta = sharp / std::max(fmax(y), 1e-300);
        auto smooth = [&](const Vec& z) {
            auto g = gvals(z);
            double m = *std::max_element(g.begin(), g.end()), s = 0;
            for (double x : g) s += std::exp(beta * (x - m));
            return m + std::log(s) / beta;
        };
        for (int it = 0; it < 100; ++it) {
            auto g = gvals(y);
            double m = *std::max_element(g.begin(), g.end());
            std::vector<double> w(k);
            double ws = 0;
            for (std::size_t i = 0; i < k; ++i) ws += (w[i] = std::exp(beta * (g[i] - m)));
            Vec grad = Vec::Zero(d);
            Mat H = Mat::Zero(d, d);
            std::vector<Vec> gi(k);
            for (std::size_t i = 0; i < k; ++i) {
                w[i] /= ws;
                gi[i] = 2 * A[i].transpose() * (A[i] * y + b[i]);
                grad += w[i] * gi[i];
                H += w[i] * 2 * A[i].transpose() * A[i];
            }
            for (std::size_t i = 0; i < k; ++i) H += beta * w[i] * gi[i] * gi[i].transpose();
            H -= beta * grad * grad.transpose();
            Vec step = -H.ldlt().solve(grad);
            if (!step.allFinite()) step = -grad;
            double f0 = smooth(y), t = 1;
            while (t > 1e-12 && smooth(y + t * step) > f0 - 1e-4 * t * std::abs(grad.dot(step))) t *= 0.5;
            y += t * step;
            if (t * step.norm() <= 1e-15 * (1 + y.norm())) break;
        }
    }
    return y;
}

inline Similarity to_normalized(const Similarity& k, const Vec& c, double s) {
    return Similarity(k.lambda, k.rot, s * (apply_similarity(k, c) - c));
}

inline Similarity from_normalized(const Similarity& k, const Vec& c, double s) {
    return Similarity(k.lambda, k.rot, k.v / s + c - k.lambda * (k.rot.matrix() * c));
}

}  // namespace detail

inline constexpr double kPivotSlack = 1e-6;

inline GapComponent extract_gap_component(const IFS& ifs, int l0, int tgap_cap = 8) {
    if (ifs.size() < 2) throw PreconditionFailed("extract_gap_component: a single map has a fixed point");
    require_no_common_fixed_point(ifs);
    const int d = ifs.dim();
    GapComponent out;
    out.center = detail::minimax_center(ifs);
    double spread = 0;
    for (const auto& m : ifs.maps()) spread = std::max(spread, (apply_similarity(m, out.center) - out.center).norm());
    if (!(spread > 0)) throw PreconditionFailed("extract_gap_component: degenerate normalization");
    out.scale = 1 / spread;
    std::vector<Similarity> nmaps;
    for (const auto& m : ifs.maps()) nmaps.push_back(detail::to_normalized(m, out.center, out.scale));
    IFS nifs(nmaps, ifs.probs());

    auto classes = ratio_decomposition(nifs, l0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < classes.size(); ++i)
        if (classes[i].weight > classes[best].weight) best = i;
    const RatioClass& cls = classes[best];
    out.class_a = cls.a;
    auto eta_a = cls.measure();
    auto mom = min_second_moment(eta_a);
    out.v1 = mom.v1;
    out.v2 = mom.v2;
    const auto p = exact_probabilities(ifs);

    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < nifs.size() && !first; ++i)
        if ((apply_similarity(nifs.map(i), out.v1) - out.v2).norm() >= 0.5) first = i;
    Similarity k0n;
    if (first) {
        k0n = nifs.map(*first);
        out.kappa0_word = {int(*first)};
        out.q0_exact = cls.weight * cls.weight * p[*first];
        out.l1 = 2 * l0 + 1;
    } else {
        Vec x = apply_similarity(nifs.map(0), out.v1);
        std::size_t bi = 0;
        double bd = -1;
        for (std::size_t i = 0; i < nifs.size(); ++i) {
            double dist = (apply_similarity(nifs.map(i), x) - x).norm();
            if (dist > bd) {
                bd = dist;
                bi = i;
            }
        }
        k0n = compose(nifs.map(bi), nifs.map(0));
        out.kappa0_word = {int(bi), 0};
        out.q0_exact = cls.weight * cls.weight * p[bi] * p[0];
        out.l1 = 2 * l0 + 2;
    }
    out.separation = (apply_similarity(k0n, out.v1) - out.v2).norm();
    if (out.separation < 0.5 - kPivotSlack)
        throw NoPivot("extract_gap_component: no pivot reaches separation 1/2 (normalization bug)");
    out.q0 = static_cast<double>(out.q0_exact);

    auto eta0n = convolve(convolve(eta_a, SimilarityMeasure::delta(k0n)), eta_a);
    std::vector<SimilarityMeasure::Atom> atoms;
    for (const auto& a : eta0n.atoms()) atoms.push_back({detail::from_normalized(a.element, out.center, out.scale), a.weight});
    out.eta0 = SimilarityMeasure(std::move(atoms));
    out.kappa0 = detail::from_normalized(k0n, out.center, out.scale);
    out.ratio = cls.lambda * cls.lambda * k0n.lambda;
    if (d == 3) out.t_gap = t_gap(project_theta(out.eta0), tgap_cap).value;
    return out;
}

// ---------------------------------------------------------------------------
// closed-form bounds; c is an unspecified absolute constant

inline double abert_bound(double q0, double c = 1.0) {
    if (!(q0 > 0 && q0 < 1)) throw InvalidArgument("abert_bound: need 0 < q0 < 1");
    double x = q0 / std::log(1 / q0);
    return 1 - c * x * x;
}

struct AbertPrecondition {
    double norm_R0 = 0;  // t_gap lower estimate of ||R_0(alpha)||
    double threshold = 0;
    bool ok = false;
};

inline AbertPrecondition abert_precondition(const RotationMeasure& alpha, double q0, int lcap = 8) {
    if (!(q0 > 0 && q0 < 1)) throw InvalidArgument("abert_precondition: need 0 < q0 < 1");
    AbertPrecondition a;
    a.norm_R0 = t_gap(alpha, lcap).value;
    a.threshold = q0 / 2;
    a.ok = a.norm_R0 <= a.threshold;
    return a;
}

inline double smoothness_threshold(int n, double M, double gap, double c = 1.0) {
    if (n < 1) throw InvalidArgument("smoothness_threshold: need n >= 1");
    if (!(M >= 1)) throw InvalidArgument("smoothness_threshold: need M >= 1");
    if (!(gap > 0 && gap <= 1)) throw InvalidArgument("smoothness_threshold: need gap in (0, 1]");
    if (!(c > 0)) throw InvalidArgument("smoothness_threshold: need c > 0");
    return std::max(0.0, 1 - c * gap / (n * M * M));
}

// ---------------------------------------------------------------------------
// presets

// x -> lambda x +- 1 on the line, equal weights
inline IFS bernoulli_ifs(double lambda = 0.5) {
    Vec p = Vec::Constant(1, 1.0), m = Vec::Constant(1, -1.0);
    return IFS({Similarity(lambda, Rotation(1), p), Similarity(lambda, Rotation(1), m)}, {0.5, 0.5});
}

// two maps in R^3 with golden-angle rotations about x and z; translations scaled by (1 - lambda)
inline IFS contrast_ifs(double lambda) {
    const double a = golden_angle();
    return IFS({Similarity(lambda, Rotation::rx(a), (1 - lambda) * unit3(2)),
                Similarity(lambda, Rotation::rz(a), (1 - lambda) * unit3(0))},
               {0.5, 0.5});
}

// ---------------------------------------------------------------------------
// Res_r nu_hat = S_r Res_{lambda r} nu_hat for a single common ratio

struct OneLambdaRow {
    double r = 0;
    double lhs = 0;      // ||Res_r nu_hat||
    double s_norm = 0;   // ||S_r P_s||
    double rhs = 0;      // ||S_r P_s|| * ||Res_{lambda r} nu_hat||
    double slack = 0;
    bool ok = false;
};

inline std::vector<OneLambdaRow> one_lambda_check(const IFS& ifs, const std::vector<double>& r_grid, int s = 20,
                                                  const DecayOptions& opt = {}) {
    if (ifs.dim() != 3) throw DimensionMismatch("one_lambda_check: needs d = 3");
    const double lam = ifs.map(0).lambda;
    for (const auto& m : ifs.maps())
        if (std::abs(m.lambda - lam) > 1e-12) throw PreconditionFailed("one_lambda_check: ratios differ");
    const auto g = ifs.g_measure();
    const double radius_b = support_radius(ifs, barycenter(ifs));
    const double radius_0 = support_radius(ifs, Vec::Zero(3));
    NuHatEvaluator ev(ifs, opt.tol, opt.budget);
    std::vector<OneLambdaRow> out;
    for (double r : r_grid) {
        OneLambdaRow row;
        row.r = r;
        auto hi = detail::exact_row(ev, 3, r, radius_b, opt.max_quad_lmax);
        auto lo = detail::exact_row(ev, 3, lam * r, radius_b, opt.max_quad_lmax);
        row.lhs = hi.norm;
        row.s_norm = band_singular_values(g, r, s)(0);
        row.rhs = row.s_norm * lo.norm;
        // degree > s part of Res_{lambda r} nu_hat, transform errors, roundoff
        row.slack = sup_tail_bound(2 * std::numbers::pi * lam * r * radius_0, s + 1) + hi.err + lo.err + kRoundoffBar;
        row.ok = row.lhs <= row.rhs + row.slack;
        out.push_back(row);
    }
    return out;
}

}  // namespace isomlab
