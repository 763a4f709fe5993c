#pragma once

// Band-limited realizations of rho_r(g) and S_r on L^2(S^2).
//
// The compression P_out rho_r(g) P_in only sees plane-wave coefficients of degree
// <= lin + lout (Gaunt selection rule), so every matrix assembled here is the exact
// compression; truncation only enters when a compressed matrix is used to act.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "harmonics.hpp"
#include "measures.hpp"

namespace isomlab {

// roundoff allowance attached to exact compressions
inline constexpr double kRoundoffBar = 1e-10;

struct OperatorMatrix {
    double r = 0;
    int lmax_in = 0;
    int lmax_out = 0;
    int safe_degree = 0;
    double tail_bound = 0;  // sup-norm error of the action on inputs of degree <= safe_degree
    CMat entries;
    int lmax() const { return lmax_out; }
};

// multiplication by a band function, as a sparse list of Gaunt terms
class GauntTable {
public:
    GauntTable(int lin, int lout) : lin_(lin), lout_(lout) {
        if (lin < 0 || lout < 0) throw InvalidArgument("GauntTable: negative band");
        build();
    }
    GauntTable(int lin, int lout, std::vector<int> row, std::vector<int> col, std::vector<int> om,
               std::vector<double> coeff)
        : lin_(lin), lout_(lout), row_(std::move(row)), col_(std::move(col)), om_(std::move(om)), coeff_(std::move(coeff)) {}

    int lin() const { return lin_; }
    int lout() const { return lout_; }
    int omega_lmax() const { return lin_ + lout_; }
    std::size_t size() const { return coeff_.size(); }

    // P_out Mult(omega) P_in, omega given to degree >= lin + lout
    CMat multiply(const BandFunction& omega) const {
        if (omega.lmax < omega_lmax()) throw InvalidArgument("GauntTable::multiply: omega band too small");
        CMat m = CMat::Zero(band_size(lout_), band_size(lin_));
        const cplx* w = omega.coeffs.data();
        cplx* out = m.data();
        const Eigen::Index ld = m.rows();
        for (std::size_t k = 0; k < coeff_.size(); ++k) out[col_[k] * ld + row_[k]] += coeff_[k] * w[om_[k]];
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path);
        const char magic[4] = {'I', 'S', 'G', 'T'};
        f.write(magic, 4);
        std::int64_t hdr[3] = {lin_, lout_, static_cast<std::int64_t>(size())};
        f.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
        f.write(reinterpret_cast<const char*>(row_.data()), row_.size() * sizeof(int));
        f.write(reinterpret_cast<const char*>(col_.data()), col_.size() * sizeof(int));
        f.write(reinterpret_cast<const char*>(om_.data()), om_.size() * sizeof(int));
        f.write(reinterpret_cast<const char*>(coeff_.data()), coeff_.size() * sizeof(double));
    }

    // nullptr-like empty optional on any mismatch
    static std::unique_ptr<GauntTable> load(const std::string& path, int lin, int lout) {
        std::ifstream f(path, std::ios::binary);
        if (!f) return nullptr;
        char magic[4];
        std::int64_t hdr[3];
        if (!f.read(magic, 4) || std::string(magic, 4) != "ISGT") return nullptr;
        if (!f.read(reinterpret_cast<char*>(hdr), sizeof hdr)) return nullptr;
        if (hdr[0] != lin || hdr[1] != lout || hdr[2] < 0) return nullptr;
        std::size_t n = static_cast<std::size_t>(hdr[2]);
        std::vector<int> row(n), col(n), om(n);
        std::vector<double> coeff(n);
        f.read(reinterpret_cast<char*>(row.data()), n * sizeof(int));
        f.read(reinterpret_cast<char*>(col.data()), n * sizeof(int));
        f.read(reinterpret_cast<char*>(om.data()), n * sizeof(int));
        f.read(reinterpret_cast<char*>(coeff.data()), n * sizeof(double));
        if (!f) return nullptr;
        return std::make_unique<GauntTable>(lin, lout, std::move(row), std::move(col), std::move(om), std::move(coeff));
    }

private:
    void build() {
        // M_{(l'm'),(lm)} = sum_L omega_{L,m'-m} (-1)^{m'} gaunt(l',-m', L,m'-m, l,m),
        // with (l' L l; -m' M m) = (L l l'; M m -m') read off one recursion in L
        ThreeJ zero, t;
        for (int lp = 0; lp <= lout_; ++lp)
            for (int l = 0; l <= lin_; ++l) {
                wigner3j_range(l, lp, 0, 0, zero);
                for (int mp = -lp; mp <= lp; ++mp)
                    for (int m = -l; m <= l; ++m) {
                        const int M = mp - m;
                        wigner3j_range(l, lp, m, -mp, t);
                        for (int L = t.jmin; L <= t.jmax; ++L) {
                            if ((L + l + lp) % 2) continue;
                            double g = std::sqrt((2.0 * lp + 1) * (2.0 * L + 1) * (2.0 * l + 1)) * zero.at(L) * t.at(L);
                            if (g == 0.0) continue;
                            row_.push_back(lm_index(lp, mp));
                            col_.push_back(lm_index(l, m));
                            om_.push_back(lm_index(L, M));
                            coeff_.push_back((mp % 2) ? -g : g);
                        }
                    }
            }
    }

    int lin_, lout_;
    std::vector<int> row_, col_, om_;
    std::vector<double> coeff_;
};

// cached per (lin, lout); ISOMLAB_CACHE names a directory for on-disk copies
inline const GauntTable& gaunt_table(int lin, int lout) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::unique_ptr<GauntTable>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[{lin, lout}];
    if (slot) return *slot;
    const char* dir = std::getenv("ISOMLAB_CACHE");
    std::string path;
    if (dir && *dir) {
        path = (std::filesystem::path(dir) / ("gaunt_" + std::to_string(lin) + "_" + std::to_string(lout) + ".bin")).string();
        slot = GauntTable::load(path, lin, lout);
        if (slot) return *slot;
    }
    slot = std::make_unique<GauntTable>(lin, lout);
    if (!path.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
        try {
            slot->save(path);
        } catch (const Error&) {
            // cache is best effort
        }
    }
    return *slot;
}

// m <- m * blockdiag(D^l(rot)), columns indexed by (l, m)
inline void apply_rotation_right(CMat& m, const Rotation& rot, int lin) {
    for (int l = 0; l <= lin; ++l) {
        if (l == 0) continue;
        CMat D = wigner_D(l, rot);
        m.middleCols(l * l, 2 * l + 1) = (m.middleCols(l * l, 2 * l + 1) * D).eval();
    }
}

inline void check_d3(int d, const char* what) {
    if (d != 3) throw DimensionMismatch(std::string(what) + ": operator assembly needs d = 3");
}

// P_out rho_r(g) P_in
inline CMat rho_block(const Isometry& g, double r, int lin, int lout) {
    check_d3(g.dim(), "rho_block");
    if (r < 0) throw InvalidArgument("rho_block: r must be >= 0");
    if (std::max(lin, lout) > kWignerCap) throw CapExceeded("rho_block: band above Wigner cap");
    const auto& table = gaunt_table(lin, lout);
    Eigen::Vector3d v = g.v;
    CMat m = table.multiply(plane_wave_coeffs(r, v, table.omega_lmax()));
    apply_rotation_right(m, g.rot, lin);
    return m;
}

inline double max_translation(const IsometryMeasure& mu) {
    double m = 0;
    for (const auto& a : mu.atoms()) m = std::max(m, a.element.v.norm());
    return m;
}

// sup-norm error of P_L applied to outputs from inputs of degree <= safe
inline double action_tail(double r, double vmax, int lmax, int safe) {
    return sup_tail_bound(2.0 * std::numbers::pi * r * vmax, lmax - safe);
}

inline OperatorMatrix rho_matrix(const Isometry& g, double r, int lmax) {
    OperatorMatrix op;
    op.r = r;
    op.lmax_in = op.lmax_out = lmax;
    op.safe_degree = lmax / 2;
    op.entries = rho_block(g, r, lmax, lmax);
    op.tail_bound = action_tail(r, g.v.norm(), lmax, op.safe_degree);
    return op;
}

// P_out S_r P_in
inline CMat S_r_block(const IsometryMeasure& mu, double r, int lin, int lout) {
    CMat s = CMat::Zero(band_size(lout), band_size(lin));
    for (const auto& a : mu.atoms()) s += a.weight * rho_block(a.element, r, lin, lout);
    return s;
}

inline OperatorMatrix S_r_matrix(const IsometryMeasure& mu, double r, int lmax) {
    OperatorMatrix op;
    op.r = r;
    op.lmax_in = op.lmax_out = lmax;
    op.safe_degree = lmax / 2;
    op.entries = S_r_block(mu, r, lmax, lmax);
    op.tail_bound = action_tail(r, max_translation(mu), lmax, op.safe_degree);
    return op;
}

struct NormEstimate {
    double value = 0;
    double error = 0;
    bool converged = true;
    int iterations = 0;
};

// power iteration on A^* A, certified by the eigen-residual
inline NormEstimate power_norm(const CMat& a, double tol = 1e-9, int max_iter = 10000, std::uint64_t seed = 7) {
    NormEstimate est;
    if (a.size() == 0) return est;
    Rng rng = make_stream(seed, 0);
    CVec x(a.cols());
    for (auto& c : x) c = cplx(std_normal(rng), std_normal(rng));
    x.normalize();
    double lam = 0;
    for (int it = 1; it <= max_iter; ++it) {
        CVec y = a.adjoint() * (a * x);
        double ny = y.norm();
        if (ny == 0) {
            est.value = 0;
            est.iterations = it;
            return est;
        }
        lam = x.dot(y).real();
        double res = (y - lam * x).norm();
        x = y / ny;
        est.iterations = it;
        if (res <= tol * std::max(lam, 1e-300)) {
            est.value = std::sqrt(std::max(lam, 0.0));
            // Rayleigh quotient error is quadratic in the residual
            est.error = res / std::max(2.0 * est.value, 1e-300);
            return est;
        }
    }
    est.value = std::sqrt(std::max(lam, 0.0));
    est.converged = false;
    return est;
}

inline double largest_singular_value(const CMat& a) {
    if (a.size() == 0) return 0.0;
    if (a.rows() == a.cols() && (a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
        Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::BDCSVD<CMat> svd(a);
    return svd.singularValues()(0);
}

// largest singular value; dense up to dimension 1100, power iteration beyond
inline NormEstimate op_norm(const OperatorMatrix& a, bool restrict_to_safe = false) {
    CMat m = restrict_to_safe ? CMat(a.entries.topLeftCorner(band_size(std::min(a.safe_degree, a.lmax_out)),
                                                             band_size(std::min(a.safe_degree, a.lmax_in))))
                              : a.entries;
    NormEstimate est;
    if (std::max(m.rows(), m.cols()) <= 1100) {
        est.value = largest_singular_value(m);
        est.error = kRoundoffBar;
    } else {
        est = power_norm(m);
        est.error += kRoundoffBar;
    }
    if (restrict_to_safe) est.error += a.tail_bound;
    return est;
}

inline NormEstimate op_norm(const CMat& m) {
    OperatorMatrix a;
    a.entries = m;
    a.lmax_in = a.lmax_out = -1;
    return op_norm(a, false);
}

// singular values of S_r restricted to inputs of degree <= s, descending.
// ||S_r phi||^2 = <S_r(mu_check * mu) phi, phi>, and the compression of that operator is exact.
inline Eigen::VectorXd band_singular_values(const IsometryMeasure& mu, double r, int s) {
    auto gram_measure = symmetrize(mu);
    CMat g = S_r_block(gram_measure, r, s, s);
    g = (0.5 * (g + g.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    for (auto& x : ev) x = std::sqrt(std::max(x, 0.0));
    return ev;
}

struct FrReport {
    BandFunction F;
    double norm = 0;          // ||F_r||_2
    double dist_from_one = 0; // ||1 - F_r||_2
    double bound = 0;         // 4 pi^2 r^2
    double tail = 0;          // L2 mass beyond the band
};

inline void require_normalized(const IsometryMeasure& mu, const char* what) {
    if (mean_translation(mu).norm() > 1e-9 || std::abs(moment(mu, 2) - 1.0) > 1e-9)
        throw PreconditionFailed(std::string(what) + ": measure must be centred with unit second moment");
}

// F_r = S_r 1: rotations fix constants, so F_r = sum w_i omega_r(g_i)
inline FrReport F_r_function(const IsometryMeasure& mu, double r, int lmax, bool check_normalized = true) {
    check_d3(mu.dim(), "F_r_function");
    if (check_normalized) require_normalized(mu, "F_r_function");
    FrReport rep;
    rep.F = BandFunction(lmax);
    for (const auto& a : mu.atoms())
        rep.F.coeffs += a.weight * plane_wave_coeffs(r, Eigen::Vector3d(a.element.v), lmax).coeffs;
    rep.norm = rep.F.norm();
    BandFunction one = BandFunction::constant(lmax);
    rep.dist_from_one = (one.coeffs - rep.F.coeffs).norm();
    rep.bound = 4.0 * std::numbers::pi * std::numbers::pi * r * r;
    rep.tail = sup_tail_bound(2.0 * std::numbers::pi * r * max_translation(mu), lmax + 1);
    return rep;
}

// ---------------------------------------------------------------------------
// rotation part: T on L^2_0(SO(3)) via irreducible blocks

struct TGapReport {
    std::vector<double> per_l;  // index l-1 for l = 1..Lcap
    double value = 0;
};

inline TGapReport t_gap(const RotationMeasure& theta, int lcap) {
    if (lcap < 1) throw InvalidArgument("t_gap: Lcap must be >= 1");
    if (theta.dim() != 3) throw DimensionMismatch("t_gap: needs d = 3");
    TGapReport rep;
    for (int l = 1; l <= lcap; ++l) {
        CMat s = CMat::Zero(2 * l + 1, 2 * l + 1);
        for (const auto& a : theta.atoms()) s += a.weight * wigner_D(l, a.element).adjoint();
        double n = largest_singular_value(s);
        rep.per_l.push_back(n);
        rep.value = std::max(rep.value, n);
    }
    return rep;
}

inline TGapReport t_gap(const IsometryMeasure& mu, int lcap) { return t_gap(project_theta(mu), lcap); }

// ---------------------------------------------------------------------------
// spectral-gap curve

struct SpectralCurve {
    std::vector<double> r, norm, err, gap, bound_rhs, second;
    double c_fit = 0;        // min over grid of gap / min{r^2, M^-2}
    double c_fit_lower = 0;  // same with error bars subtracted
    int band = 0;            // input degree cap s
    double M = 0, N = 0;     // third moment; min-second-moment N
    double t_gap = 0;
};

inline SpectralCurve spectral_curve(const IsometryMeasure& mu, const std::vector<double>& r_grid, int s, int tgap_cap = 8) {
    check_d3(mu.dim(), "spectral_curve");
    SpectralCurve c;
    c.band = s;
    c.M = moment(mu, 3);
    c.N = min_second_moment(mu).N;
    c.t_gap = t_gap(mu, tgap_cap).value;
    const double cap = c.M > 0 ? 1.0 / (c.M * c.M) : std::numeric_limits<double>::infinity();
    c.c_fit = c.c_fit_lower = std::numeric_limits<double>::infinity();
    for (double r : r_grid) {
        if (r < 0) throw InvalidArgument("spectral_curve: r must be >= 0");
        auto sv = band_singular_values(mu, r, s);
        double n = sv(0), e = kRoundoffBar;
        double rhs = std::min(r * r, cap);
        c.r.push_back(r);
        c.norm.push_back(n);
        c.err.push_back(e);
        c.gap.push_back(1.0 - n);
        c.bound_rhs.push_back(rhs);
        c.second.push_back(sv.size() > 1 ? sv(1) : 0.0);
        if (rhs > 0) {
            c.c_fit = std::min(c.c_fit, (1.0 - n) / rhs);
            c.c_fit_lower = std::min(c.c_fit_lower, (1.0 - n - e) / rhs);
        }
    }
    if (!std::isfinite(c.c_fit)) c.c_fit = c.c_fit_lower = 0;
    return c;
}

struct TwoRadius {
    double gap1 = 0, gap2 = 0;
    double ratio = 0;  // max gap / |r1 - r2|^2
    bool ok = true;
};

inline TwoRadius two_radius_check(const IsometryMeasure& mu, double r1, double r2, int s, double c_fit) {
    TwoRadius t;
    t.gap1 = 1.0 - band_singular_values(mu, r1, s)(0);
    t.gap2 = 1.0 - band_singular_values(mu, r2, s)(0);
    double dr = std::abs(r1 - r2);
    double g = std::max(t.gap1, t.gap2);
    t.ratio = dr > 0 ? g / (dr * dr) : std::numeric_limits<double>::infinity();
    t.ok = g + kRoundoffBar >= c_fit * dr * dr;
    return t;
}

// ---------------------------------------------------------------------------
// Littlewood-Paley

// i.i.d. words of length `len` drawn from mu
inline Isometry sample_word(const IsometryMeasure& mu, int len, Rng& rng) {
    std::vector<double> cdf;
    double acc = 0;
    for (const auto& a : mu.atoms()) cdf.push_back(acc += a.weight);
    Isometry g = Isometry::identity(mu.dim());
    for (int k = 0; k < len; ++k) {
        double u = uniform01(rng) * acc;
        auto idx = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
        g = compose(g, mu.atoms()[idx].element);
    }
    return g;
}

inline bool is_symmetric(const IsometryMeasure& mu, double tol = 1e-9) {
    auto rev = reverse(mu);
    for (const auto& a : mu.atoms()) {
        bool found = false;
        for (const auto& b : rev.atoms())
            if (element_distance(a.element, b.element) < tol && std::abs(a.weight - b.weight) < tol) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

// Monte Carlo estimate of P_s S_r^{len} P_s over `batches` independent batches
struct WordAverage {
    std::vector<CMat> batch_means;
    CMat mean;
};

inline WordAverage word_average(const IsometryMeasure& mu, double r, int s, int len, int nwords, int batches, std::uint64_t seed) {
    if (batches < 2 || nwords < batches) throw InvalidArgument("word_average: need nwords >= batches >= 2");
    WordAverage w;
    const int n = band_size(s);
    w.mean = CMat::Zero(n, n);
    const int per = nwords / batches;
    for (int b = 0; b < batches; ++b) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(b));
        CMat acc = CMat::Zero(n, n);
        for (int k = 0; k < per; ++k) acc += rho_block(sample_word(mu, len, rng), r, s, s);
        acc /= double(per);
        w.mean += acc / double(batches);
        w.batch_means.push_back(std::move(acc));
    }
    return w;
}

// mean and standard error of a scalar functional over batch means
template <class F>
std::pair<cplx, double> batch_stat(const WordAverage& w, F f) {
    const std::size_t b = w.batch_means.size();
    std::vector<cplx> vals;
    cplx mean = 0;
    for (const auto& m : w.batch_means) {
        vals.push_back(f(m));
        mean += vals.back() / double(b);
    }
    double var = 0;
    for (const auto& v : vals) var += std::norm(v - mean);
    var /= double(b - 1);
    return {mean, std::sqrt(var / double(b))};
}

struct LPResult {
    double lhs = 0, rhs = 0, slack = 0;
    bool ok = false;
};

struct CrossTerm {
    int i = 0;
    double value = 0, bound = 0, slack = 0;
    bool ok = false;
};

struct LPReport {
    BlockSpec spec;
    std::vector<LPResult> results;
    std::vector<CrossTerm> cross;
    int passes = 0;
    int cross_passes = 0;
};

// phis must be band limited to s; the constant factor 4 on MC standard errors gives the slack
inline LPReport littlewood_paley_check(const IsometryMeasure& mu, double r, int L, int l0, const std::vector<BandFunction>& phis,
                                       int s, int nwords, std::uint64_t seed, int n0_override = 0, bool cross_terms = false) {
    if (l0 > L || l0 < 1) throw InvalidArgument("littlewood_paley_check: need 1 <= l0 <= L");
    if (!is_symmetric(mu)) throw PreconditionFailed("littlewood_paley_check: measure must be symmetric");
    LPReport rep;
    rep.spec = n0_override > 0 ? block_spec_from_n0(n0_override, s) : block_spec(r, L, s);
    auto w = word_average(mu, r, s, 2 * l0, nwords, 20, seed);
    constexpr double kSigmas = 4.0;
    const double twopie = 2.0 * std::numbers::pi * std::numbers::e * r;
    for (const auto& phi0 : phis) {
        if (phi0.lmax > s) throw InvalidArgument("littlewood_paley_check: phi above the safe band");
        BandFunction phi = phi0.resized(s);
        auto blocks = project_blocks(phi, rep.spec);
        auto quad = [](const CMat& m, const BandFunction& a, const BandFunction& b) { return b.coeffs.dot(m * a.coeffs); };
        // lhs - 3 sum_i ||S^l0 phi_i||^2 as one statistic
        auto diff = batch_stat(w, [&](const CMat& m) {
            cplx v = quad(m, phi, phi);
            for (const auto& bl : blocks) v -= 3.0 * quad(m, bl, bl);
            return v;
        });
        LPResult res;
        res.lhs = quad(w.mean, phi, phi).real();
        double sum = 0;
        for (const auto& bl : blocks) sum += quad(w.mean, bl, bl).real();
        res.rhs = 0.5 * std::pow(phi.norm(), 2) + 3.0 * sum;
        res.slack = 2.0 * (kSigmas * diff.second + kRoundoffBar);
        res.ok = res.lhs <= res.rhs + res.slack;
        rep.passes += res.ok;
        rep.results.push_back(res);
        if (!cross_terms) continue;
        for (std::size_t i = 0; i + 2 < blocks.size(); ++i) {
            BandFunction far(s);
            for (std::size_t j = i + 2; j < blocks.size(); ++j) far.coeffs += blocks[j].coeffs;
            double scale = blocks[i].norm() * far.norm();
            if (scale == 0) continue;
            auto st = batch_stat(w, [&](const CMat& m) { return quad(m, blocks[i], far); });
            CrossTerm ct;
            ct.i = static_cast<int>(i);
            ct.value = std::abs(quad(w.mean, blocks[i], far));
            ct.bound = twopie * twopie * 2.0 * l0 / std::pow(2.0, 2.0 * (rep.spec.n0 + int(i))) * scale;
            ct.slack = kSigmas * st.second + kRoundoffBar;
            ct.ok = ct.value <= ct.bound + ct.slack;
            rep.cross_passes += ct.ok;
            rep.cross.push_back(ct);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Schur averaging and the Hilbert-Schmidt Fourier bound

struct SchurResult {
    double mean = 0, sigma = 0, expected = 0;
    double zscore() const { return sigma > 0 ? (mean - expected) / sigma : (mean == expected ? 0.0 : 1e300); }
};

inline SchurResult schur_average(int l, const CVec& u, const CVec& v, int nsamples, std::uint64_t seed) {
    if (u.size() != 2 * l + 1 || v.size() != 2 * l + 1) throw DimensionMismatch("schur_average: vectors must have length 2l+1");
    if (u.norm() == 0 || v.norm() == 0) throw InvalidArgument("schur_average: zero vector");
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(l));
    double s = 0, s2 = 0;
    for (int k = 0; k < nsamples; ++k) {
        CMat D = wigner_D(l, haar_rotation(3, rng));
        double x = std::norm(v.dot(D * u));
        s += x;
        s2 += x * x;
    }
    SchurResult res;
    res.mean = s / nsamples;
    res.sigma = std::sqrt(std::max(s2 / nsamples - res.mean * res.mean, 0.0) / nsamples);
    res.expected = u.squaredNorm() * v.squaredNorm() / (2 * l + 1);
    return res;
}

struct HSResult {
    double hs = 0;     // MC estimate of ||pi_l(f)||_HS
    double bound = 0;  // ||f||_2 / sqrt(2l+1)
    double exact = 0;  // closed form via the Weyl integration formula
};

// f = indicator of {g : ||g - g0||_op <= delta}, g0 Haar random
inline HSResult hs_fourier_check(int l, double delta, int nsamples, std::uint64_t seed) {
    Rng rng = make_stream(seed, 1000 + static_cast<std::uint64_t>(l));
    Rotation g0 = haar_rotation(3, rng);
    CMat acc = CMat::Zero(2 * l + 1, 2 * l + 1);
    for (int k = 0; k < nsamples; ++k) {
        Rotation g = haar_rotation(3, rng);
        if (rotation_distance(g, g0) <= delta) acc += wigner_D(l, g);
    }
    HSResult res;
    res.hs = (acc / double(nsamples)).norm();
    res.bound = std::sqrt(rotation_ball_volume(3, delta) / (2 * l + 1));
    // pi(f) = D(g0) c I with c = (1/(2l+1)) int_{|w| <= a} chi_l(w) (1 - cos w)/pi dw
    double a = 2.0 * std::asin(std::min(delta, 2.0) / 2.0);
    const auto& gl = gauss_legendre(200);
    double integral = 0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        double w = 0.5 * a * (gl.x[i] + 1.0);
        double chi = std::abs(std::sin(w / 2)) < 1e-14 ? 2.0 * l + 1 : std::sin((l + 0.5) * w) / std::sin(w / 2);
        integral += 0.5 * a * gl.w[i] * chi * (1 - std::cos(w)) / std::numbers::pi;
    }
    res.exact = std::abs(integral) / std::sqrt(2.0 * l + 1);
    return res;
}

// ---------------------------------------------------------------------------
// Fourier transform of mu.nu restricted to the sphere of radius r

// coefficients of S_r phi up to degree lout; exact within that band
inline BandFunction fourier_step(const BandFunction& phi, const IsometryMeasure& mu, double r, int lout) {
    if (lout < phi.lmax) throw InvalidArgument("fourier_step: output band below input band");
    return BandFunction(lout, S_r_block(mu, r, phi.lmax, lout) * phi.coeffs);
}

// Res_r of the transform of delta_{x0}
inline BandFunction psi_r(double r, const Vec& x0, int lmax) {
    check_d3(static_cast<int>(x0.size()), "psi_r");
    return plane_wave_coeffs(r, Eigen::Vector3d(x0), lmax);
}

struct FourierIterate {
    BandFunction phi;
    double err_bound = 0;  // L2 distance to the band-L part of Res_r of the transform of mu^{*l}.delta_{x0}
};

// l steps at fixed band L; each step loses at most the degree > L tail of the true iterate
inline FourierIterate fourier_iterate(const IsometryMeasure& mu, double r, const Vec& x0, int l, int L) {
    FourierIterate it;
    it.phi = psi_r(r, x0, L);
    const double vmax = max_translation(mu), twopi = 2.0 * std::numbers::pi;
    it.err_bound = sup_tail_bound(twopi * r * x0.norm(), L + 1);
    CMat s = S_r_block(mu, r, L, L);
    for (int j = 0; j < l; ++j) {
        it.phi.coeffs = s * it.phi.coeffs;
        if (j + 1 < l) it.err_bound += sup_tail_bound(twopi * r * (x0.norm() + (j + 1) * vmax), L + 1);
    }
    it.err_bound += kRoundoffBar;
    return it;
}

}  // namespace isomlab
