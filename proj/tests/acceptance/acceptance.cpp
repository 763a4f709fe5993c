// one line per criterion. XFAIL marks a failure that is understood and documented; the exit code
// is nonzero only for an unexpected FAIL or an exception.
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include <isomlab/isomlab.hpp>

using namespace isomlab;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
    bool pass = false;
    std::string detail;
    std::string xfail;  // non-empty: the failing part is a known limitation, with the reason
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::vector<double> log_grid(double a, double b, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, double(i) / (n - 1)));
    return g;
}

Vec v3(double x, double y, double z) { return Vec(Eigen::Vector3d(x, y, z)); }

BandFunction random_unit(int s, Rng& rng) {
    BandFunction f(s);
    for (auto& c : f.coeffs) c = {std_normal(rng), std_normal(rng)};
    f.coeffs /= f.coeffs.norm();
    return f;
}

double sinc(double x) { return x == 0 ? 1.0 : std::sin(x) / x; }

const IsometryMeasure& prepared() {
    static const IsometryMeasure mu = prepared_gap_measure();
    return mu;
}

// ---------------------------------------------------------------------------

Outcome c1_moment_identity() {
    Rng rng = make_stream(kSeed, 1);
    double worst = 0;
    for (int t = 0; t < 5; ++t) {
        int k = 2 + t % 2;
        std::vector<IsometryMeasure::Atom> atoms;
        double tot = 0;
        for (int i = 0; i < k; ++i) {
            double w = 0.2 + uniform01(rng);
            tot += w;
            atoms.push_back({Isometry(v3(std_normal(rng), std_normal(rng), std_normal(rng)), haar_rotation(3, rng)), w});
        }
        for (auto& a : atoms) a.weight /= tot;
        auto mu = normalize(IsometryMeasure(std::move(atoms))).mu;
        for (int l = 1; l <= 5; ++l) worst = std::max(worst, walk_moment_check(mu, l));
    }
    return {worst < 1e-12, fmt("5 measures, l<=5: max rel err %.2e (tol 1e-12)", worst)};
}

Outcome c2_stationary_phase() {
    double err = 0;
    for (double s : {0.1, 0.25, 1.0, 3.7}) {
        Eigen::Vector3d u = s * Eigen::Vector3d(0.48, -0.6, 0.64);
        err = std::max(err, std::abs(sphere_mean_plane_wave(u) - sinc(2 * std::numbers::pi * s)));
    }
    double ratio = 0;
    for (double s : log_grid(1, 1e3, 61)) {
        Eigen::Vector3d u = s * Eigen::Vector3d(0, 0.6, 0.8);
        ratio = std::max(ratio, std::abs(sphere_mean_plane_wave(u)) * 2 * std::numbers::pi * s);
    }
    return {err <= 1e-10 && ratio <= 1 + 1e-12,
            fmt("closed form err %.2e (tol 1e-10); max |mean|*2pi|u| on [1,1e3] = %.4f (<= 1)", err, ratio)};
}

Outcome c3_operator_anchor() {
    const Vec v = v3(0.3, -0.4, 1.2).normalized();
    double err = 0;
    for (double rv : {0.1, 0.5, 1.0, 1.5, 2.0}) {
        IsometryMeasure pm({{Isometry::translation(v), 0.5}, {Isometry::translation(Vec(-v)), 0.5}});
        auto op = S_r_matrix(pm, rv, 32);
        double got = op.entries.col(0).squaredNorm();
        err = std::max(err, std::abs(got - 0.5 * (1 + sinc(4 * std::numbers::pi * rv))));
    }
    Rng rng = make_stream(kSeed, 3);
    IsometryMeasure rot({{Isometry(Vec::Zero(3), haar_rotation(3, rng)), 0.2},
                         {Isometry(Vec::Zero(3), haar_rotation(3, rng)), 0.3},
                         {Isometry(Vec::Zero(3), haar_rotation(3, rng)), 0.5}});
    const int L = 10;
    auto op = S_r_matrix(rot, 0.7, L);
    double berr = 0, off = 0;
    for (int l = 0; l <= L; ++l) {
        CMat w = CMat::Zero(2 * l + 1, 2 * l + 1);
        for (const auto& a : rot.atoms()) w += a.weight * wigner_D(l, a.element.rot);
        Eigen::JacobiSVD<CMat> ref(w);
        Eigen::JacobiSVD<CMat> got(op.entries.block(l * l, l * l, 2 * l + 1, 2 * l + 1));
        berr = std::max(berr, (ref.singularValues() - got.singularValues()).cwiseAbs().maxCoeff());
        CMat rest = op.entries.block(0, l * l, op.entries.rows(), 2 * l + 1);
        rest.block(l * l, 0, 2 * l + 1, 2 * l + 1).setZero();
        off = std::max(off, rest.cwiseAbs().maxCoeff());
    }
    return {err <= 1e-8 && berr <= 1e-10 && off <= 1e-10,
            fmt("||S_r 1||^2 err %.2e (tol 1e-8, r|v|<=2, L=32); rotation block sv err %.2e, off-block %.2e (tol 1e-10)", err,
                berr, off)};
}

SpectralCurve& curve() {
    static SpectralCurve c = spectral_curve(prepared(), log_grid(0.05, 8, 30), 16);
    return c;
}

Outcome c4_spectral_gap() {
    const auto& c = curve();
    double worst = -1;
    for (std::size_t i = 0; i < c.r.size(); ++i) worst = std::max(worst, c.norm[i] - c.err[i]);
    std::vector<double> ratio;
    for (double r : {0.05, 0.1, 0.2}) ratio.push_back((1 - band_singular_values(prepared(), r, 16)(0)) / (r * r));
    double mean = (ratio[0] + ratio[1] + ratio[2]) / 3, spread = 0;
    for (double q : ratio) spread = std::max(spread, std::abs(q / mean - 1));
    bool ok = worst <= 1 - 1e-3 && c.c_fit_lower > 0 && spread <= 0.25;
    return {ok, fmt("30 radii in [0.05,8], s=16: max norm-err %.4f (<= 0.999); c_fit %.4f (lower %.4f > 0); "
                    "(1-||S_r||)/r^2 = %.4f %.4f %.4f, spread %.1f%% (<= 25%%)",
                    worst, c.c_fit, c.c_fit_lower, ratio[0], ratio[1], ratio[2], 100 * spread)};
}

Outcome c5_two_radius() {
    const auto& c = curve();
    double min_ratio = INFINITY;
    int above = 0;
    for (int k = 0; k < 20; ++k) {
        double r1 = 0.1 + 0.39 * k;
        double r2 = r1 + 0.05 + 0.05 * (k % 4);
        auto t = two_radius_check(prepared(), r1, r2, 16, c.c_fit_lower);
        double dr = r2 - r1;
        min_ratio = std::min(min_ratio, (std::max(t.gap1, t.gap2) - kRoundoffBar) / (dr * dr));
        above += t.ok;
    }
    double second = 0;
    for (std::size_t i = 0; i < c.r.size(); ++i) second = std::max(second, c.second[i] - c.err[i]);
    return {min_ratio > 0 && second <= 0.99,
            fmt("20 pairs |dr|<=0.2: min max(gap)/dr^2 = %.4f (> 0), %d/20 above c_fit*dr^2; max second singular value %.4f "
                "(<= 0.99)",
                min_ratio, above, second)};
}

Outcome c6_littlewood_paley() {
    Rng rng = make_stream(kSeed, 6);
    std::vector<BandFunction> phis;
    for (int i = 0; i < 100; ++i) phis.push_back(random_unit(8, rng));
    int passes = 0, blocks = 0;
    std::string n0s;
    for (double r : {0.5, 2.0}) {
        auto rep = littlewood_paley_check(prepared(), r, 16, 4, phis, 8, 4000, kSeed + 60 + int(r * 10));
        passes += rep.passes;
        blocks = std::max<int>(blocks, rep.spec.ranges.size());
        n0s += fmt(" n0(%.1f)=%d", r, rep.spec.n0);
    }
    // at the prescribed parameters the first block already holds every degree <= 8, so the cross
    // terms are checked on a forced split n0 = 1 of degree <= 16 functions
    std::vector<BandFunction> p16;
    for (int i = 0; i < 10; ++i) p16.push_back(random_unit(16, rng));
    int cross = 0, cross_ok = 0, nonvac = 0, forced_ok = 0;
    double worst = 0;
    for (double r : {0.02, 0.05}) {
        auto rep = littlewood_paley_check(prepared(), r, 16, 4, p16, 16, 2000, kSeed + 61, 1, true);
        forced_ok += rep.passes;
        for (const auto& ct : rep.cross) {
            ++cross;
            cross_ok += ct.ok;
            // |value| <= ||phi_i|| ||far|| always, so the bound says something only when its factor is < 1
            nonvac += std::pow(2 * std::numbers::pi * std::numbers::e * r, 2) * 2 * 4 / std::pow(4.0, 1 + ct.i) < 1;
            worst = std::max(worst, ct.value / ct.bound);
        }
    }
    bool ok = passes == 200 && cross_ok == cross && cross >= 20 && forced_ok == 20;
    return {ok, fmt("inequality %d/200 (r=0.5,2; L=16, l0=4;%s, %d block: single-block, holds trivially); "
                    "forced n0=1: inequality %d/20, cross terms %d/%d, %d non-vacuous, max value/bound %.2e",
                    passes, n0s.c_str(), blocks, forced_ok, cross_ok, cross, nonvac, worst)};
}

Outcome c7_schur() {
    Rng rng = make_stream(kSeed, 7);
    double zmax = 0;
    for (int l = 1; l <= 6; ++l) {
        CVec u(2 * l + 1), v(2 * l + 1);
        for (auto& x : u) x = {std_normal(rng), std_normal(rng)};
        for (auto& x : v) x = {std_normal(rng), std_normal(rng)};
        zmax = std::max(zmax, std::abs(schur_average(l, u, v, 100000, kSeed + 70).zscore()));
    }
    double hs_ratio = 0;
    for (int l = 1; l <= 6; ++l)
        for (double delta : {0.5, 1.0}) {
            auto h = hs_fourier_check(l, delta, 100000, kSeed + 71);
            hs_ratio = std::max(hs_ratio, h.hs / h.bound);
        }
    return {zmax <= 3 && hs_ratio <= 1.05,
            fmt("l=1..6, n=1e5: max |z| %.2f (<= 3); max HS/bound %.3f (<= 1.05)", zmax, hs_ratio)};
}

Outcome c8_llt() {
    auto test = simulate_walk(prepared(), Vec::Zero(3), 100, 1000000, kSeed + 80);
    auto fit = simulate_walk(prepared(), Vec::Zero(3), 100, 1000000, splitmix64(kSeed + 81));
    auto model = gaussian_fit(fit);
    auto balls = radial_probe_balls(model, v3(1, 1, 1));
    auto rep = llt_report(test, model, balls);
    return {rep.max_abs_z() <= 4 && rep.p_value > 1e-3,
            fmt("l=100, n=1e6, independent fit (sigma %.4f): %zu balls, max |z| %.2f (<= 4); shell chi2 %.1f on %d dof, "
                "p=%.3f (> 0.001)",
                model.sigma, rep.rows.size(), rep.max_abs_z(), rep.chi2, rep.dof, rep.p_value)};
}

Outcome c9_non_concentration() {
    std::vector<double> rs = {0.02, 0.05, 0.1, 0.2}, mass;
    constexpr double L = 40;
    for (double r : rs) {
        int l = int(std::ceil(L * std::log(1 / r)));
        auto e = simulate_walk(prepared(), Vec::Zero(3), l, 1000000, kSeed + 90 + l);
        mass.push_back(max_ball_mass(e, std::sqrt(L) * r));
    }
    double slope = loglog_slope(rs, mass);
    bool slope_ok = slope >= 0.25;

    auto e = simulate_walk(prepared(), Vec::Zero(3), 60, 1000000, kSeed + 99);
    const double var = 60.0 / 3.0;  // per coordinate, unit second moment per step
    auto resolved_decreasing = [&](const std::vector<double>& rhos, std::vector<SphereAverage>& out, int cap) {
        for (double rho : rhos) out.push_back(sphere_average(e, rho, cap));
        bool ok = true;
        for (std::size_t i = 0; i + 1 < out.size(); ++i)
            ok = ok && out[i].value - out[i + 1].value > 3 * (out[i].mc_sigma + out[i + 1].mc_sigma);
        return ok;
    };
    std::vector<SphereAverage> lo, hi;
    bool lo_ok = resolved_decreasing({0.025, 0.05, 0.1}, lo, 16);
    double worst_pred = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        double rho = 0.025 * (1 << i);
        double pred = std::exp(-4 * std::numbers::pi * std::numbers::pi * var * rho * rho);
        worst_pred = std::max(worst_pred, std::abs(std::log(lo[i].value / pred)));
    }
    lo_ok = lo_ok && worst_pred < std::log(2.0);
    bool hi_ok = resolved_decreasing({1, 2, 4, 8}, hi, 16);

    std::string d = fmt("slope %.3f (>= 0.25; masses %.2e %.2e %.2e %.2e); A(rho) l=60 at 0.025/0.05/0.1: %.3e %.3e %.3e, "
                        "resolved decreasing, within x%.2f of Gaussian; at 1/2/4/8: %.1e %.1e %.1e %.1e (sigma %.1e)",
                        slope, mass[0], mass[1], mass[2], mass[3], lo[0].value, lo[1].value, lo[2].value,
                        std::exp(worst_pred), hi[0].value, hi[1].value, hi[2].value, hi[3].value, hi[0].mc_sigma);
    Outcome o{slope_ok && lo_ok && hi_ok, d};
    if (slope_ok && lo_ok && !hi_ok)
        o.xfail = "A(rho) at rho>=1 is ~exp(-790) under the Gaussian limit, far below the n=1e6 noise floor, so the ordering "
                  "is not resolvable";
    return o;
}

Outcome c10_selfsim() {
    auto b = bernoulli_ifs();
    NuHatEvaluator ev(b, 1e-10);
    double berr = 0;
    for (int i = 0; i <= 400; ++i) {
        double xi = 0.01 * i;
        berr = std::max(berr, std::abs(ev(Vec::Constant(1, xi)).value - sinc(4 * std::numbers::pi * xi)));
    }
    auto grid = log_grid(1, 5, 8);
    auto p1 = decay_profile(contrast_ifs(0.25), grid);
    auto p2 = decay_profile(contrast_ifs(0.9), grid);
    double margin = p1.slope - p2.slope;
    auto rows = one_lambda_check(contrast_ifs(0.25), log_grid(0.5, 4, 10), 20);
    int ok_rows = 0;
    for (const auto& r : rows) ok_rows += r.ok;
    bool ok = berr <= 1e-6 && margin >= 0.5 && ok_rows == 10;
    return {ok, fmt("(a) Bernoulli max err %.2e (tol 1e-6); (b) slopes %.3f (lambda 0.25, %s) vs %.3f (lambda 0.9, %s), "
                    "margin %.3f (>= 0.5); (c) one-lambda %d/10",
                    berr, p1.slope, p1.method.c_str(), p2.slope, p2.method.c_str(), margin, ok_rows)};
}

Outcome c11_ratio() {
    IFS ifs({Similarity(0.5, Rotation::rx(golden_angle()), unit3(2)), Similarity(0.3, Rotation::rz(golden_angle()), unit3(0))},
            {0.5, 0.5});
    bool sums = true;
    double rerr = 0;
    for (int l0 = 1; l0 <= 6; ++l0) {
        Rational t = 0;
        for (const auto& c : ratio_decomposition(ifs, l0)) {
            t += c.weight;
            for (const auto& e : c.elements) rerr = std::max(rerr, std::abs(e.lambda - c.lambda));
        }
        sums = sums && t == 1;
    }
    auto two = ratio_decomposition(ifs, 2);
    bool quarters = two.size() == 3 && two[0].weight == Rational(1, 4) && two[1].weight == Rational(1, 2) &&
                    two[2].weight == Rational(1, 4);

    const int l0 = 2;
    auto g = extract_gap_component(ifs, l0);
    double eta_err = 0;
    for (const auto& a : g.eta0.atoms()) eta_err = std::max(eta_err, std::abs(a.element.lambda - g.ratio));
    // words of length l1: class a, then the pivot word, then class a
    const int k = 2, l1 = g.l1, mid = int(g.kappa0_word.size());
    double q = 0;
    std::vector<int> w(l1);
    for (long code = 0; code < (1L << l1); ++code) {
        double p = 1;
        for (int i = 0; i < l1; ++i) {
            w[i] = (code >> i) & 1;
            p *= ifs.prob(w[i]);
        }
        std::vector<int> a1(k, 0), a2(k, 0);
        for (int i = 0; i < l0; ++i) ++a1[w[i]];
        for (int i = l0 + mid; i < l1; ++i) ++a2[w[i]];
        bool hit = a1 == g.class_a && a2 == g.class_a && std::equal(g.kappa0_word.begin(), g.kappa0_word.end(), w.begin() + l0);
        if (hit) q += p;
    }
    bool ok = sums && rerr <= 1e-12 && quarters && eta_err <= 1e-12 && std::abs(q - g.q0) <= 1e-12 && l1 == 2 * l0 + mid;
    return {ok, fmt("sum p^a = 1 exactly for l0<=6: %s; class ratio err %.1e; l0=2 weights 1/4,1/2,1/4: %s; eta0 single ratio "
                    "%.4g (err %.1e); q0 %.6g vs enumerated %.6g over %d words",
                    sums ? "yes" : "no", rerr, quarters ? "yes" : "no", g.ratio, eta_err, g.q0, q, 1 << l1)};
}

Outcome c12_infrastructure() {
    Rng rng = make_stream(kSeed, 12);
    double hom = 0;
    for (int t = 0; t < 50; ++t) {
        Rotation a = haar_rotation(3, rng), b = haar_rotation(3, rng);
        for (int l = 0; l <= 8; ++l)
            hom = std::max(hom, (wigner_D(l, compose(a, b)) - wigner_D(l, a) * wigner_D(l, b)).cwiseAbs().maxCoeff());
    }
    auto q = quadrature(16);
    CMat gram = CMat::Zero(band_size(16), band_size(16));
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        CVec y = sph_harm_all(16, q.nodes[i]);
        gram += q.weights[i] * y * y.adjoint();
    }
    double orth = (gram - CMat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();

    auto fine = quadrature(48);
    double res_max = 0, excess = -INFINITY;  // residual minus the tail bound, roundoff 1e-13 allowed
    for (double rv : {0.25, 1.0, 2.0}) {
        Eigen::Vector3d v = rv * Eigen::Vector3d(0.6, 0, 0.8);
        auto f = plane_wave_coeffs(1.0, v, 32);
        auto vals = evaluate(f, fine);
        double res = 0;
        for (std::size_t i = 0; i < fine.nodes.size(); ++i) {
            double ph = 2 * std::numbers::pi * v.dot(fine.nodes[i]);
            res = std::max(res, std::abs(vals[i] - std::complex<double>(std::cos(ph), -std::sin(ph))));
        }
        double x = 2 * std::numbers::pi * rv;
        res_max = std::max(res_max, res);
        excess = std::max(excess, res - std::min(sup_tail_bound(x, 33), taylor_tail_bound(x, 33)));
    }

    auto w1 = simulate_walk(prepared(), Vec::Zero(3), 20, 100000, kSeed, 1);
    auto w2 = simulate_walk(prepared(), Vec::Zero(3), 20, 100000, kSeed, 2);
    bool same_walk = w1.endpoints == w2.endpoints;
    auto sv1 = band_singular_values(prepared(), 0.7, 8), sv2 = band_singular_values(prepared(), 0.7, 8);
    bool same_sv = (sv1.array() == sv2.array()).all();
    auto dir = std::filesystem::temp_directory_path() / "isomlab_acceptance_rerun";
    std::filesystem::remove_all(dir);
    std::string text[2];
    for (int k = 0; k < 2; ++k) {
        io::RunWriter rw(dir, "walk", io::json{{"seed", 3}}, 3, k + 1);
        io::CsvTable t{{"i", "x"}, {}};
        for (std::size_t i = 0; i < 50; ++i) t.add_numbers({double(i), w1.endpoints[i]});
        text[k] = io::read_text(rw.csv("endpoints.csv", t));
        rw.finish();
    }
    bool same_csv = text[0] == text[1];
    std::filesystem::remove_all(dir);
    bool ok = hom <= 1e-9 && orth <= 1e-12 && excess <= 1e-13 && same_walk && same_sv && same_csv;
    return {ok, fmt("Wigner homomorphism %.1e (tol 1e-9); quadrature Gram err %.1e (tol 1e-12); plane-wave max residual %.1e, "
                    "max residual - tail bound %.1e (<= 1e-13); reruns identical: walk(1 vs 2 workers) %s, spectrum %s, csv %s",
                    hom, orth, res_max, excess, same_walk ? "yes" : "no", same_sv ? "yes" : "no", same_csv ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    std::string report;  // copy of stdout, written to argv[1] if given
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"moment identity", c1_moment_identity},
        {"stationary phase", c2_stationary_phase},
        {"operator anchor", c3_operator_anchor},
        {"spectral gap curve", c4_spectral_gap},
        {"two-radius dichotomy", c5_two_radius},
        {"Littlewood-Paley", c6_littlewood_paley},
        {"Schur / HS Fourier", c7_schur},
        {"local limit theorem", c8_llt},
        {"non-concentration", c9_non_concentration},
        {"self-similar diagnostics", c10_selfsim},
        {"ratio decomposition", c11_ratio},
        {"infrastructure exactness", c12_infrastructure},
    };
    int bad = 0, xfail = 0, pass = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        std::string status;
        try {
            o = criteria[i].second();
            status = o.pass ? "PASS" : (o.xfail.empty() ? "FAIL" : "XFAIL");
        } catch (const std::exception& e) {
            status = "ERROR";
            o.detail = e.what();
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string line = fmt("[%-5s] %2zu %-24s ", status.c_str(), i + 1, criteria[i].first) + o.detail + fmt(" (%.1fs)", dt);
        if (status == "XFAIL") line += " -- expected: " + o.xfail;
        std::printf("%s\n", line.c_str());
        report += line + "\n";
        std::fflush(stdout);
        if (status == "PASS")
            ++pass;
        else if (status == "XFAIL")
            ++xfail;
        else
            ++bad;
    }
    std::string summary = fmt("summary: %d pass, %d xfail, %d fail\n", pass, xfail, bad);
    std::printf("%s", summary.c_str());
    if (argc > 1) io::write_text(argv[1], report + summary);
    return bad == 0 ? 0 : 1;
}
