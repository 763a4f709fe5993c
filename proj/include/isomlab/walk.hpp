#pragma once

// Monte Carlo ensembles of Y_l = X_l ... X_1(x0) and the statistics run on them.

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "digest.hpp"
#include "harmonics.hpp"
#include "measures.hpp"
#include "rng.hpp"

namespace isomlab {

inline constexpr std::size_t kWalkShard = std::size_t(1) << 14;

struct WalkEnsemble {
    int d = 0;
    int l = 0;
    Vec x0;
    std::size_t n = 0;
    std::vector<double> endpoints;  // point i at [i*d, (i+1)*d)
    std::uint64_t seed = 0;
    std::uint64_t mu_digest = 0;

    Eigen::Map<const Vec> point(std::size_t i) const { return Eigen::Map<const Vec>(endpoints.data() + i * d, d); }
    // d x n, column i is endpoint i
    Eigen::Map<const Mat> matrix() const { return Eigen::Map<const Mat>(endpoints.data(), d, Eigen::Index(n)); }
};

namespace detail {

struct CompactMeasure {
    int d = 0;
    std::vector<double> rot;    // row-major d*d per atom
    std::vector<double> trans;  // d per atom
    std::vector<double> cum;    // cumulative weights, last = total
};

template <class T>
CompactMeasure compact(const DiscreteMeasure<T>& mu) {
    CompactMeasure c;
    c.d = mu.dim();
    double acc = 0;
    for (const auto& a : mu.atoms()) {
        Mat lin = linear_part(a.element);
        for (int i = 0; i < c.d; ++i)
            for (int j = 0; j < c.d; ++j) c.rot.push_back(lin(i, j));
        for (int i = 0; i < c.d; ++i) c.trans.push_back(a.element.v(i));
        c.cum.push_back(acc += a.weight);
    }
    return c;
}

inline std::size_t pick_atom(const CompactMeasure& c, Rng& rng) {
    double u = uniform01(rng) * c.cum.back();
    auto it = std::upper_bound(c.cum.begin(), c.cum.end(), u);
    return std::min<std::size_t>(it - c.cum.begin(), c.cum.size() - 1);
}

// runs job(shard) for shard in [0, nshards) over `workers` threads; shards are independent
template <class F>
void for_each_shard(std::size_t nshards, unsigned workers, F&& job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(nshards, 1)));
    if (workers <= 1) {
        for (std::size_t s = 0; s < nshards; ++s) job(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            try {
                for (std::size_t s; (s = next++) < nshards;) job(s);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace detail

// shard s (kWalkShard samples) draws from make_stream(seed, s), so the result does not
// depend on the worker count
template <class T>
WalkEnsemble simulate_walk(const DiscreteMeasure<T>& mu, const Vec& x0, int l, std::size_t n, std::uint64_t seed,
                           unsigned workers = 0) {
    if (l < 1) throw InvalidArgument("simulate_walk: need l >= 1");
    if (n < 1) throw InvalidArgument("simulate_walk: need n >= 1");
    check_dims(mu.dim(), x0.size(), "simulate_walk");
    const auto cm = detail::compact(mu);
    const int d = cm.d;
    WalkEnsemble e;
    e.d = d;
    e.l = l;
    e.x0 = x0;
    e.n = n;
    e.seed = seed;
    e.mu_digest = measure_digest(mu);
    e.endpoints.assign(n * d, 0.0);
    const std::size_t nshards = (n + kWalkShard - 1) / kWalkShard;
    detail::for_each_shard(nshards, workers, [&](std::size_t s) {
        Rng rng = make_stream(seed, s);
        std::vector<double> x(d), y(d);
        const std::size_t lo = s * kWalkShard, hi = std::min(n, lo + kWalkShard);
        for (std::size_t i = lo; i < hi; ++i) {
            for (int k = 0; k < d; ++k) x[k] = x0(k);
            for (int step = 0; step < l; ++step) {
                const std::size_t a = detail::pick_atom(cm, rng);
                const double* R = cm.rot.data() + a * d * d;
                const double* v = cm.trans.data() + a * d;
                for (int r = 0; r < d; ++r) {
                    double acc = v[r];
                    for (int c = 0; c < d; ++c) acc += R[r * d + c] * x[c];
                    y[r] = acc;
                }
                std::swap(x, y);
            }
            for (int k = 0; k < d; ++k) e.endpoints[i * d + k] = x[k];
        }
    });
    for (double v : e.endpoints)
        if (!std::isfinite(v)) throw Error("simulate_walk: non-finite endpoint");
    return e;
}

// ---------------------------------------------------------------------------
// Gaussian model

struct GaussianModel {
    Vec y0;
    double sigma = 0;  // per coordinate, per sqrt(step)
    int l = 0;
    int d = 0;
    Vec coord_var;     // sample variance of each coordinate of Y_l
    Vec coord_var_se;  // its standard error
    double scale() const { return sigma * std::sqrt(double(l)); }
};

inline GaussianModel gaussian_fit(const WalkEnsemble& e) {
    if (e.n < 1000) throw InvalidArgument("gaussian_fit: need n >= 1000");
    const int d = e.d;
    const double n = double(e.n);
    Vec mean = Vec::Zero(d);
    for (std::size_t i = 0; i < e.n; ++i) mean += e.point(i);
    mean /= n;
    Vec m2 = Vec::Zero(d), m4 = Vec::Zero(d);
    for (std::size_t i = 0; i < e.n; ++i) {
        Vec c = e.point(i) - mean;
        m2 += c.cwiseProduct(c);
        m4 += c.cwiseProduct(c).cwiseProduct(c.cwiseProduct(c));
    }
    m2 /= n;
    m4 /= n;
    const double total = m2.sum();
    if (!(total > 1e-24 * std::max(1.0, mean.squaredNorm())))
        throw DegenerateEnsemble("gaussian_fit: sample covariance vanishes");
    GaussianModel g;
    g.y0 = mean;
    g.l = e.l;
    g.d = d;
    g.sigma = std::sqrt(total / (double(e.l) * d));
    g.coord_var = m2;
    g.coord_var_se = ((m4 - m2.cwiseProduct(m2)).cwiseMax(0.0) / n).cwiseSqrt();
    return g;
}

// largest |var_i - var_j| / combined standard error over coordinate pairs
inline double isotropy_zmax(const GaussianModel& g) {
    double z = 0;
    for (int i = 0; i < g.d; ++i)
        for (int j = i + 1; j < g.d; ++j) {
            double se = std::hypot(g.coord_var_se(i), g.coord_var_se(j));
            if (se > 0) z = std::max(z, std::abs(g.coord_var(i) - g.coord_var(j)) / se);
        }
    return z;
}

inline void check_model(const GaussianModel& g) {
    if (!(g.sigma > 0) || !std::isfinite(g.sigma) || g.l < 1 || g.y0.size() != g.d)
        throw DegenerateEnsemble("Gaussian model is degenerate");
}

// P(|W - c| <= rho) for W standard normal in R^d, |c| = c
inline double std_gaussian_ball_mass(int d, double c, double rho) {
    if (rho <= 0) return 0.0;
    if (c == 0) return boost::math::cdf(boost::math::chi_squared_distribution<double>(d), rho * rho);
    return boost::math::cdf(boost::math::non_central_chi_squared_distribution<double>(d, c * c), rho * rho);
}

// closed form of the above for d = 3
inline double std_gaussian_ball_mass_d3(double c, double rho) {
    boost::math::normal_distribution<double> N;
    auto phi = [&](double x) { return boost::math::pdf(N, x); };
    auto Phi = [&](double x) { return boost::math::cdf(N, x); };
    if (c == 0) return 2 * Phi(rho) - 1 - 2 * rho * phi(rho);
    return Phi(rho - c) - Phi(-rho - c) - (phi(c - rho) - phi(c + rho)) / c;
}

// mass of B(r, z) under y0 + sqrt(l) sigma Z
inline double gaussian_ball_mass(const GaussianModel& g, const Vec& z, double r) {
    check_model(g);
    const double s = g.scale();
    return std_gaussian_ball_mass(g.d, (z - g.y0).norm() / s, r / s);
}

struct BallProbability {
    double phat = 0;
    double mc_sigma = 0;
};

inline BallProbability ball_probability(const WalkEnsemble& e, const Vec& z, double r) {
    if (!(r > 0)) throw InvalidArgument("ball_probability: need r > 0");
    check_dims(e.d, z.size(), "ball_probability");
    const double r2 = r * r;
    std::size_t count = 0;
    for (std::size_t i = 0; i < e.n; ++i)
        if ((e.point(i) - z).squaredNorm() <= r2) ++count;
    BallProbability b;
    b.phat = double(count) / double(e.n);
    b.mc_sigma = std::sqrt(b.phat * (1 - b.phat) / double(e.n));
    return b;
}

struct Ball {
    Vec z;
    double r = 0;
};

struct LltRow {
    Vec z;
    double r = 0;
    double phat = 0;
    double mc_sigma = 0;
    double prediction = 0;
    double zscore = 0;  // (phat - prediction) / sqrt(prediction (1 - prediction) / n)
};

struct LltReport {
    std::vector<LltRow> rows;
    std::vector<double> shell_edges;  // radii about y0, in length units
    std::vector<std::size_t> shell_counts;
    double shell_expected = 0;
    double chi2 = 0;
    int dof = 0;
    double p_value = 0;
    double max_abs_z() const {
        double m = 0;
        for (const auto& r : rows) m = std::max(m, std::abs(r.zscore));
        return m;
    }
};

// 20 equiprobable radial shells under the model; the model must come from an independent ensemble
inline LltReport llt_report(const WalkEnsemble& e, const GaussianModel& model, const std::vector<Ball>& balls,
                            int shells = 20) {
    check_model(model);
    check_dims(e.d, model.d, "llt_report");
    if (shells < 2) throw InvalidArgument("llt_report: need at least 2 shells");
    LltReport rep;
    const double n = double(e.n);
    for (const auto& b : balls) {
        LltRow row;
        row.z = b.z;
        row.r = b.r;
        auto bp = ball_probability(e, b.z, b.r);
        row.phat = bp.phat;
        row.mc_sigma = bp.mc_sigma;
        row.prediction = gaussian_ball_mass(model, b.z, b.r);
        double sd = std::sqrt(std::max(row.prediction * (1 - row.prediction), 0.0) / n);
        row.zscore = sd > 0 ? (row.phat - row.prediction) / sd : (row.phat == row.prediction ? 0.0 : INFINITY);
        rep.rows.push_back(std::move(row));
    }
    boost::math::chi_squared_distribution<double> chi(model.d);
    const double s = model.scale();
    for (int k = 1; k < shells; ++k) rep.shell_edges.push_back(s * std::sqrt(boost::math::quantile(chi, double(k) / shells)));
    rep.shell_counts.assign(shells, 0);
    for (std::size_t i = 0; i < e.n; ++i) {
        double rad = (e.point(i) - model.y0).norm();
        auto k = std::upper_bound(rep.shell_edges.begin(), rep.shell_edges.end(), rad) - rep.shell_edges.begin();
        ++rep.shell_counts[k];
    }
    rep.shell_expected = n / shells;
    for (auto c : rep.shell_counts) rep.chi2 += (double(c) - rep.shell_expected) * (double(c) - rep.shell_expected) / rep.shell_expected;
    rep.dof = shells - 1;
    rep.p_value = boost::math::gamma_q(rep.dof / 2.0, rep.chi2 / 2.0);
    return rep;
}

// centers y0 + t u for t on an even grid in [0, 3 sigma sqrt(l)], radii sigma sqrt(l) {1/4, 1/2}
inline std::vector<Ball> radial_probe_balls(const GaussianModel& g, const Vec& direction, int npos = 10) {
    check_model(g);
    if (npos < 2) throw InvalidArgument("radial_probe_balls: need npos >= 2");
    Vec u = direction.normalized();
    const double s = g.scale();
    std::vector<Ball> out;
    for (double frac : {0.25, 0.5})
        for (int k = 0; k < npos; ++k) out.push_back({g.y0 + (3.0 * s * k / (npos - 1)) * u, frac * s});
    return out;
}

// ---------------------------------------------------------------------------
// Fourier statistics

namespace detail {

// sums of e(<xi, Y_i>) over fixed batches of the ensemble
inline std::vector<std::complex<double>> batch_sums(const WalkEnsemble& e, const Vec& xi, int batches) {
    std::vector<std::complex<double>> s(batches, 0.0);
    const double tau = 2 * std::numbers::pi;
    for (std::size_t i = 0; i < e.n; ++i) {
        double ph = tau * e.point(i).dot(xi);
        s[i * batches / e.n] += std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return s;
}

inline std::vector<double> batch_sizes(std::size_t n, int batches) {
    std::vector<double> m(batches, 0.0);
    for (std::size_t i = 0; i < n; ++i) m[i * batches / n] += 1;
    return m;
}

}  // namespace detail

// unbiased estimate of |nu_hat(xi)|^2: mean over ordered pairs i != j of e(<xi, Y_i - Y_j>)
inline double char_sq(const WalkEnsemble& e, const Vec& xi) {
    if (e.n < 2) throw InvalidArgument("char_sq: need n >= 2");
    check_dims(e.d, xi.size(), "char_sq");
    auto s = detail::batch_sums(e, xi, 1);
    double n = double(e.n);
    return (std::norm(s[0]) - n) / (n * (n - 1));
}

struct SphereAverage {
    double value = 0;
    double mc_sigma = 0;  // leave-one-batch-out jackknife over 16 batches
    int quad_lmax = 0;
    std::size_t nodes = 0;
    double diameter = 0;
    bool undersampled = false;  // node spacing * rho * diameter > 1
};

inline double ensemble_diameter(const WalkEnsemble& e) {
    Vec mean = Vec::Zero(e.d);
    for (std::size_t i = 0; i < e.n; ++i) mean += e.point(i);
    mean /= double(e.n);
    double rmax = 0;
    for (std::size_t i = 0; i < e.n; ++i) rmax = std::max(rmax, (e.point(i) - mean).norm());
    return 2 * rmax;
}

// quadrature average over |xi| = rho of char_sq (d = 3)
inline SphereAverage sphere_average(const WalkEnsemble& e, double rho, const SphereQuadrature& quad) {
    if (e.d != 3) throw DimensionMismatch("sphere_average: quadrature route needs d = 3");
    if (e.n < 32) throw InvalidArgument("sphere_average: need n >= 32");
    if (rho < 0) throw InvalidArgument("sphere_average: need rho >= 0");
    constexpr int B = 16;
    SphereAverage out;
    out.quad_lmax = quad.lmax;
    out.nodes = quad.nodes.size();
    out.diameter = ensemble_diameter(e);
    out.undersampled = (std::numbers::pi / (quad.lmax + 1)) * rho * out.diameter > 1;
    const auto sizes = detail::batch_sizes(e.n, B);
    const double n = double(e.n);
    // per node: |S|^2 and |S - S_b|^2 for each b
    double full = 0;
    std::vector<double> loo(B, 0.0);
    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
        Vec xi = rho * Vec(quad.nodes[q]);
        auto s = detail::batch_sums(e, xi, B);
        std::complex<double> tot = std::accumulate(s.begin(), s.end(), std::complex<double>(0));
        const double w = quad.weights[q];
        full += w * (std::norm(tot) - n) / (n * (n - 1));
        for (int b = 0; b < B; ++b) {
            double m = n - sizes[b];
            loo[b] += w * (std::norm(tot - s[b]) - m) / (m * (m - 1));
        }
    }
    out.value = full;
    double mean_loo = std::accumulate(loo.begin(), loo.end(), 0.0) / B, v = 0;
    for (double x : loo) v += (x - mean_loo) * (x - mean_loo);
    out.mc_sigma = std::sqrt(v * (B - 1) / B);
    return out;
}

// picks the quadrature degree from rho * diameter, capped at max_lmax
inline SphereAverage sphere_average(const WalkEnsemble& e, double rho, int max_lmax = 32) {
    double diam = ensemble_diameter(e);
    int L = static_cast<int>(std::ceil(std::numbers::pi * rho * diam)) + 1;
    L = std::clamp(L, 4, max_lmax);
    return sphere_average(e, rho, quadrature(L));
}

// ---------------------------------------------------------------------------
// non-concentration

// max over cells of side r (two grids, offset 0 and r/2 per axis) of cell count / n
inline double max_ball_mass(const WalkEnsemble& e, double r) {
    if (!(r > 0)) throw InvalidArgument("max_ball_mass: need r > 0");
    const int d = e.d;
    std::vector<std::int64_t> cells(e.n * d);
    std::vector<std::size_t> idx(e.n);
    std::size_t best = 0;
    for (double off : {0.0, 0.5 * r}) {
        for (std::size_t i = 0; i < e.n; ++i)
            for (int k = 0; k < d; ++k)
                cells[i * d + k] = static_cast<std::int64_t>(std::floor((e.endpoints[i * d + k] + off) / r));
        std::iota(idx.begin(), idx.end(), 0);
        auto less = [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(cells.begin() + a * d, cells.begin() + (a + 1) * d,
                                                cells.begin() + b * d, cells.begin() + (b + 1) * d);
        };
        std::sort(idx.begin(), idx.end(), less);
        std::size_t run = 0;
        for (std::size_t i = 0; i < e.n; ++i) {
            bool same = i > 0 && std::equal(cells.begin() + idx[i] * d, cells.begin() + (idx[i] + 1) * d,
                                            cells.begin() + idx[i - 1] * d);
            run = same ? run + 1 : 1;
            best = std::max(best, run);
        }
    }
    return double(best) / double(e.n);
}

// least-squares slope of log y against log x
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need >= 2 matching points");
    double mx = 0, my = 0;
    const double k = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) throw InvalidArgument("loglog_slope: values must be positive");
        mx += std::log(x[i]) / k;
        my += std::log(y[i]) / k;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------
// plane waves averaged over spheres

// mean over S^2 of e(<u, xi>), by Gauss-Legendre in cos(theta)
inline double sphere_mean_plane_wave(const Eigen::Vector3d& u) {
    const double a = 2 * std::numbers::pi * u.norm();
    if (a == 0) return 1.0;
    const int npts = 24 + static_cast<int>(std::ceil(0.75 * a));
    const auto& gl = gauss_legendre(npts);
    double s = 0;
    for (int i = 0; i < npts; ++i) s += gl.w[i] * std::cos(a * gl.x[i]);
    return 0.5 * s;
}

// closed form of the normalized mean over S^{d-1} of e(<u, xi>) with |u| = s
inline double sphere_mean_plane_wave_closed(int d, double s) {
    if (d < 2) throw InvalidArgument("sphere mean: need d >= 2");
    const double x = 2 * std::numbers::pi * s;
    if (x < 1e-8) return 1.0;
    if (d == 3) return std::sin(x) / x;
    const double nu = d / 2.0 - 1;
    return std::tgamma(d / 2.0) * std::pow(x / 2, -nu) * std::cyl_bessel_j(nu, x);
}

struct DecompositionReport {
    std::size_t n_inner = 0, n_outer = 0;
    double mass_inner = 0, mass_outer = 0;
    double lipschitz_estimate = 0;  // max finite-difference slope of eta1_hat
    double lipschitz_bound = 0;     // 2 pi r_cut * mass_inner
    double sphere_avg_outer = 0;    // normalized mean of eta2_hat over |xi| = rho
    double sphere_constant = 0;     // |avg| * (rho r_cut)^{(d-1)/2}
    double sphere_bound = 0;        // d = 3: mass_outer / (2 pi rho r_cut)
    bool lipschitz_ok = false;
    bool sphere_ok = false;  // only decided for d = 3
    std::vector<std::string> warnings;
};

// split the empirical law about its mean at radius r_cut
inline DecompositionReport decomposition_check(const WalkEnsemble& e, double r_cut, double rho, int npairs = 32,
                                               std::uint64_t seed = 0) {
    if (!(r_cut > 0) || !(rho > 0)) throw InvalidArgument("decomposition_check: need r_cut, rho > 0");
    const int d = e.d;
    const double n = double(e.n);
    Vec mean = Vec::Zero(d);
    for (std::size_t i = 0; i < e.n; ++i) mean += e.point(i);
    mean /= n;
    std::vector<Vec> inner;
    DecompositionReport rep;
    double outer_sum = 0;
    for (std::size_t i = 0; i < e.n; ++i) {
        Vec c = e.point(i) - mean;
        double s = c.norm();
        if (s <= r_cut) {
            inner.push_back(c);
        } else {
            ++rep.n_outer;
            outer_sum += sphere_mean_plane_wave_closed(d, rho * s);
        }
    }
    rep.n_inner = inner.size();
    rep.mass_inner = rep.n_inner / n;
    rep.mass_outer = rep.n_outer / n;
    if (rep.n_inner < 100) rep.warnings.push_back("inner part has fewer than 100 samples");
    if (rep.n_outer < 100) rep.warnings.push_back("outer part has fewer than 100 samples");

    auto eta1 = [&](const Vec& xi) {
        std::complex<double> s = 0;
        for (const auto& c : inner) {
            double ph = 2 * std::numbers::pi * c.dot(xi);
            s += std::complex<double>(std::cos(ph), std::sin(ph));
        }
        return s / n;
    };
    Rng rng = make_stream(seed, 0x6c6970);
    const double h = 1e-3 / r_cut;
    for (int p = 0; p < npairs && !inner.empty(); ++p) {
        Vec xi(d), dir(d);
        for (int k = 0; k < d; ++k) {
            xi(k) = std_normal(rng);
            dir(k) = std_normal(rng);
        }
        xi *= rho / std::sqrt(double(d));
        dir.normalize();
        double slope = std::abs(eta1(xi + h * dir) - eta1(xi)) / h;
        rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, slope);
    }
    rep.lipschitz_bound = 2 * std::numbers::pi * r_cut * rep.mass_inner;
    rep.lipschitz_ok = rep.lipschitz_estimate <= rep.lipschitz_bound * (1 + 1e-9) + 1e-15;

    rep.sphere_avg_outer = outer_sum / n;
    rep.sphere_constant = std::abs(rep.sphere_avg_outer) * std::pow(rho * r_cut, (d - 1) / 2.0);
    if (d == 3) {
        rep.sphere_bound = rep.mass_outer / (2 * std::numbers::pi * rho * r_cut);
        rep.sphere_ok = std::abs(rep.sphere_avg_outer) <= rep.sphere_bound * (1 + 1e-12) + 1e-15;
    }
    return rep;
}

// mean |Y - c|^2 / l with its Monte Carlo standard error
struct MomentEstimate {
    double value = 0;
    double mc_sigma = 0;
};

inline MomentEstimate mean_square_per_step(const WalkEnsemble& e, const Vec& center) {
    check_dims(e.d, center.size(), "mean_square_per_step");
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < e.n; ++i) {
        double q = (e.point(i) - center).squaredNorm();
        s += q;
        s2 += q * q;
    }
    const double n = double(e.n);
    double m = s / n;
    double var = std::max(s2 / n - m * m, 0.0);
    return {m / e.l, std::sqrt(var / n) / e.l};
}

}  // namespace isomlab
