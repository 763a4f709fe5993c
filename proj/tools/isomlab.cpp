// isomlab command-line front end.
// exit codes: 0 success, 1 numerical check failed (or runtime failure), 2 usage / config error

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include <isomlab/io.hpp>

using namespace isomlab;
using namespace isomlab::io;

namespace {

constexpr const char* kConstantNote = "up to an unspecified absolute constant c (value used is reported)";

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out_dir = "isomlab-out";
    std::optional<int> lmax;
    std::string r_grid;  // "a,b,c" or "min:max:count"
};

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json parse_grid_flag(const std::string& s) {
    if (s.find(':') != std::string::npos) {
        double a = 0, b = 0;
        long long n = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(s);
        if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':')
            throw ValidationError("--r-grid", "expected min:max:count or a comma list");
        return json{{"min", a}, {"max", b}, {"count", n}};
    }
    json arr = json::array();
    std::istringstream in(s);
    for (std::string tok; std::getline(in, tok, ',');) {
        try {
            std::size_t used = 0;
            double x = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            arr.push_back(x);
        } catch (const std::exception&) {
            throw ValidationError("--r-grid", "not a number: \"" + tok + "\"");
        }
    }
    return arr;
}

// effective config: file, then flags; the digest covers the result
ExperimentConfig effective_config(const Common& c, const std::string& section) {
    json j = c.config_path.empty() ? json::object() : read_json_file(c.config_path);
    if (!j.is_object()) throw ValidationError("/", "expected an object");
    if (c.seed) j["seed"] = *c.seed;
    if (c.workers) j["workers"] = *c.workers;
    if (c.lmax) {
        if (section == "spectrum") j["spectrum"]["lmax"] = *c.lmax;
        if (section == "selfsim") j["selfsim"]["max_quad_lmax"] = *c.lmax;
        if (section == "diagnostics") j["diagnostics"]["lp_L"] = *c.lmax;
    }
    if (!c.r_grid.empty()) j[section]["r_grid"] = parse_grid_flag(c.r_grid);
    return parse_config(j);
}

json effective_json(const ExperimentConfig& cfg) {
    json j = cfg.raw;
    j.erase("workers");  // results do not depend on it
    return j;
}

void add_common(CLI::App* sub, Common& c, bool grid) {
    sub->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "master seed (overrides config)");
    sub->add_option("--workers", c.workers, "worker threads, 0 = hardware concurrency");
    sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("--lmax", c.lmax, "band limit (spectrum: input band s; selfsim: quadrature cap; diagnostics: LP scale L)");
    if (grid) sub->add_option("--r-grid", c.r_grid, "radii: a,b,c or min:max:count (log spaced)");
}

void say(const std::string& s) { std::cout << s << std::endl; }

std::string f6(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Common& c, const std::vector<double>& dump_r) {
    auto cfg = effective_config(c, "spectrum");
    auto mu = cfg.measure();
    RunWriter w(c.out_dir, "spectrum", effective_json(cfg), cfg.seed, cfg.workers);
    auto curve = spectral_curve(mu, cfg.spectrum.r_grid, cfg.spectrum.lmax, cfg.spectrum.tgap_cap);
    w.csv("spectral_curve.csv", spectral_curve_table(curve));
    CsvTable second{{"r", "second_singular_value"}, {}};
    for (std::size_t i = 0; i < curve.r.size(); ++i) second.add_numbers({curve.r[i], curve.second[i]});
    w.csv("second_singular.csv", second);
    for (double r : dump_r) {
        auto op = S_r_matrix(mu, r, cfg.spectrum.lmax);
        std::string name = "S_r_" + f6(r) + ".isom";
        save_operator(w.dir() / name, op);
        w.note_output(name);
    }
    double worst = 0;
    for (std::size_t i = 0; i < curve.r.size(); ++i) worst = std::max(worst, curve.norm[i] - curve.err[i]);
    const bool norms_ok = worst <= 1 - 1e-3;
    const bool c_ok = curve.c_fit_lower > 0;
    json summary{{"c_fit", curve.c_fit},
                 {"c_fit_lower", curve.c_fit_lower},
                 {"M3", curve.M},
                 {"N", curve.N},
                 {"t_gap", curve.t_gap},
                 {"band_s", curve.band},
                 {"max_norm_minus_err", worst},
                 {"norm_bound_note", "band norms are lower bounds on ||S_r||; err_bar is a roundoff bar"},
                 {"checks", {{"norms_below_1_minus_1e-3", norms_ok}, {"c_fit_positive", c_ok}}}};
    w.json_file("spectrum_summary.json", summary);
    w.finish();
    say("spectrum: " + std::to_string(curve.r.size()) + " radii, c_fit=" + f6(curve.c_fit) + " t_gap=" + f6(curve.t_gap) +
        " -> " + c.out_dir);
    if (!norms_ok || !c_ok) throw CheckFailed("spectrum: no uniform gap (max norm " + f6(worst) + ", c_fit " + f6(curve.c_fit) + ")");
    return 0;
}

WalkEnsemble run_walk(const ExperimentConfig& cfg, const IsometryMeasure& mu, std::size_t n, std::uint64_t seed) {
    Vec x0 = cfg.walk.x0;
    if (x0.size() != mu.dim()) throw ValidationError("/walk/x0", "dimension differs from the measure");
    return simulate_walk(mu, x0, cfg.walk.l, n, seed, cfg.workers);
}

int cmd_walk(const Common& c, bool save) {
    auto cfg = effective_config(c, "walk");
    auto mu = cfg.measure();
    RunWriter w(c.out_dir, "walk", effective_json(cfg), cfg.seed, cfg.workers);
    auto e = run_walk(cfg, mu, cfg.walk.n, cfg.seed);
    if (save) {
        save_ensemble(w.dir() / "ensemble", e);
        w.note_output("ensemble.bin");
        w.note_output("ensemble.json");
    }
    auto ms = mean_square_per_step(e, cfg.walk.x0);
    json summary{{"l", e.l}, {"n", e.n}, {"mu_digest", hex64(e.mu_digest)}, {"mean_square_per_step", ms.value},
                 {"mean_square_per_step_sigma", ms.mc_sigma}};
    if (e.n >= 1000 && e.l > 0) {
        auto g = gaussian_fit(e);
        summary["sigma"] = g.sigma;
        summary["y0"] = std::vector<double>(g.y0.data(), g.y0.data() + g.y0.size());
        summary["isotropy_zmax"] = isotropy_zmax(g);
    }
    w.json_file("walk_summary.json", summary);
    w.finish();
    say("walk: l=" + std::to_string(e.l) + " n=" + std::to_string(e.n) + " E|Y-x0|^2/l=" + f6(ms.value) + " -> " + c.out_dir);
    return 0;
}

int cmd_llt(const Common& c, double zmax, double pmin) {
    auto cfg = effective_config(c, "walk");
    auto mu = cfg.measure();
    if (mu.dim() != 3) throw ValidationError("/measure", "llt uses d = 3 probe geometry");
    RunWriter w(c.out_dir, "llt", effective_json(cfg), cfg.seed, cfg.workers);
    // independent streams for the fit and the test ensembles
    auto fit = run_walk(cfg, mu, cfg.walk.fit_n, splitmix64(cfg.seed ^ 0x6669740000000000ULL));
    auto test = run_walk(cfg, mu, cfg.walk.n, cfg.seed);
    auto model = gaussian_fit(fit);
    check_model(model);
    Vec dir = Vec::Zero(3);
    dir(0) = 1;
    auto balls = radial_probe_balls(model, dir);
    auto rep = llt_report(test, model, balls, cfg.walk.shells);
    w.csv("llt_balls.csv", llt_table(rep));
    w.csv("llt_shells.csv", shell_table(rep));
    const bool z_ok = rep.max_abs_z() <= zmax, p_ok = rep.p_value > pmin;
    w.json_file("llt_summary.json", json{{"sigma", model.sigma},
                                         {"isotropy_zmax", isotropy_zmax(model)},
                                         {"max_abs_z", rep.max_abs_z()},
                                         {"chi2", rep.chi2},
                                         {"dof", rep.dof},
                                         {"p_value", rep.p_value},
                                         {"checks", {{"z_within", z_ok}, {"p_above", p_ok}}}});
    w.finish();
    say("llt: max|z|=" + f6(rep.max_abs_z()) + " chi2 p=" + f6(rep.p_value) + " -> " + c.out_dir);
    if (!z_ok || !p_ok) throw CheckFailed("llt: local limit check failed");
    return 0;
}

int cmd_selfsim(const Common& c, const std::vector<double>& contrast) {
    auto cfg = effective_config(c, "selfsim");
    const auto& s = cfg.selfsim;
    RunWriter w(c.out_dir, "selfsim", effective_json(cfg), cfg.seed, cfg.workers);
    DecayOptions opt;
    opt.tol = s.tol;
    opt.budget = s.budget;
    opt.mc_samples = s.mc_samples;
    opt.max_quad_lmax = s.max_quad_lmax;
    opt.seed = cfg.seed;
    bool ok = true;
    json summary = json::object();

    if (!contrast.empty()) {
        if (contrast.size() != 2) throw ValidationError("--contrast", "expected two ratios");
        json rows = json::array();
        double slope[2];
        for (int k = 0; k < 2; ++k) {
            if (!(contrast[k] > 0 && contrast[k] < 1)) throw ValidationError("--contrast", "ratios must lie in (0, 1)");
            auto p = decay_profile(contrast_ifs(contrast[k]), s.r_grid, opt);
            w.csv("decay_lambda_" + f6(contrast[k]) + ".csv", decay_table(p));
            slope[k] = p.slope;
            rows.push_back(json{{"lambda", contrast[k]}, {"slope", p.slope}, {"method", p.method}});
        }
        // larger ratio: smoother measure, faster decay
        const int hi = contrast[0] > contrast[1] ? 0 : 1;
        const double gap = slope[1 - hi] - slope[hi];
        summary["contrast"] = rows;
        summary["slope_gap"] = gap;
        summary["contrast_ok"] = gap >= 0.5;
        ok = ok && gap >= 0.5;
        say("selfsim contrast: slope gap " + f6(gap));
    } else {
        auto ifs = cfg.ifs();
        auto p = decay_profile(ifs, s.r_grid, opt);
        w.csv("decay.csv", decay_table(p));
        summary["k"] = ifs.size();
        summary["p_min"] = ifs.p_min();
        summary["lambda_max"] = ifs.lambda_max();
        summary["decay"] = json{{"method", p.method}, {"slope", p.slope}, {"n_est", std::isfinite(p.n_est) ? json(p.n_est) : json("-inf")},
                                {"n_est_note", "heuristic differentiability class from the fitted slope"}};
        if (ifs.dim() == 1) {
            // sinc match for the symmetric Bernoulli case
            auto b = bernoulli_ifs();
            bool is_b = ifs.size() == 2;
            for (std::size_t i = 0; is_b && i < 2; ++i)
                is_b = std::abs(ifs.map(i).lambda - 0.5) < 1e-15 && std::abs(std::abs(ifs.map(i).v(0)) - 1) < 1e-15 &&
                       std::abs(ifs.prob(i) - 0.5) < 1e-15;
            if (is_b && ifs.map(0).v(0) * ifs.map(1).v(0) < 0) {
                NuHatEvaluator ev(ifs, s.tol, s.budget);
                double worst = 0;
                CsvTable t{{"xi", "nu_hat", "sinc", "abs_diff"}, {}};
                for (int i = 0; i <= 256; ++i) {
                    double xi = 4.0 * i / 256, a = 4 * std::numbers::pi * xi;
                    double ref = a == 0 ? 1.0 : std::sin(a) / a;
                    auto h = ev(Vec::Constant(1, xi));
                    worst = std::max(worst, std::abs(h.value - ref));
                    t.add_numbers({xi, h.value.real(), ref, std::abs(h.value - ref)});
                }
                w.csv("bernoulli_sinc.csv", t);
                summary["bernoulli_sinc_max_diff"] = worst;
                ok = ok && worst <= 1e-6;
                say("selfsim bernoulli: max |nu_hat - sinc| = " + f6(worst));
            }
        }
        if (ifs.size() >= 2) {
            try {
                auto g = extract_gap_component(ifs, s.l0);
                json gc{{"q0", g.q0}, {"l1", g.l1}, {"ratio", g.ratio}, {"separation", g.separation}, {"kappa0_word", g.kappa0_word},
                        {"class", g.class_a}};
                if (std::isfinite(g.t_gap)) {
                    gc["t_gap_eta0"] = g.t_gap;
                    auto pre = abert_precondition(project_theta(g.eta0), g.q0);
                    gc["abert_precondition"] = json{{"norm_R0", pre.norm_R0}, {"threshold", pre.threshold}, {"ok", pre.ok}};
                    const double gap = 1 - g.t_gap;
                    if (gap > 0) {
                        double M = 1;
                        for (const auto& m : ifs.maps()) M = std::max(M, m.v.norm());
                        gc["smoothness_threshold"] = json{{"n", s.n}, {"M", M}, {"gap", gap}, {"c", s.c},
                                                          {"lambda_bar", smoothness_threshold(s.n, M, gap, s.c)}, {"note", kConstantNote}};
                    }
                }
                if (g.q0 < 1) gc["abert_bound"] = json{{"c", s.c}, {"value", abert_bound(g.q0, s.c)}, {"note", kConstantNote}};
                summary["gap_component"] = gc;
            } catch (const CapExceeded& e) {
                summary["gap_component"] = json{{"skipped", e.what()}};
            }
        }
        say("selfsim: " + p.method + " slope " + f6(p.slope) + " -> " + c.out_dir);
    }
    w.json_file("selfsim_summary.json", summary);
    w.finish();
    if (!ok) throw CheckFailed("selfsim: check failed");
    return 0;
}

BandFunction random_unit_band(int s, Rng& rng) {
    BandFunction f(s);
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs(i) = {std_normal(rng), std_normal(rng)};
    f.coeffs /= f.coeffs.norm();
    return f;
}

int cmd_diagnostics(const Common& c, const std::set<std::string>& only, int lp_words) {
    auto cfg = effective_config(c, "diagnostics");
    const auto& d = cfg.diagnostics;
    auto want = [&](const char* k) { return only.empty() || only.count(k); };
    RunWriter w(c.out_dir, "diagnostics", effective_json(cfg), cfg.seed, cfg.workers);
    json summary = json::object();
    bool ok = true;

    if (want("schur")) {
        CsvTable t{{"l", "mean", "sigma", "expected", "zscore", "pass"}, {}};
        Rng rng = make_stream(cfg.seed, 101);
        bool all = true;
        for (int l = 1; l <= d.schur_lmax; ++l) {
            CVec u(2 * l + 1), v(2 * l + 1);
            for (int i = 0; i < 2 * l + 1; ++i) {
                u(i) = {std_normal(rng), std_normal(rng)};
                v(i) = {std_normal(rng), std_normal(rng)};
            }
            auto r = schur_average(l, u, v, static_cast<int>(d.schur_samples), splitmix64(cfg.seed + l));
            bool pass = std::abs(r.zscore()) <= 3;
            all = all && pass;
            t.add({std::to_string(l), fmt(r.mean), fmt(r.sigma), fmt(r.expected), fmt(r.zscore()), pass ? "1" : "0"});
        }
        w.csv("schur.csv", t);
        summary["schur"] = all;
        ok = ok && all;
        say(std::string("schur: ") + (all ? "pass" : "FAIL"));
    }
    auto mu = cfg.measure();
    if (want("lp")) {
        const int s = d.lp_L / 2;
        Rng rng = make_stream(cfg.seed, 202);
        std::vector<BandFunction> phis;
        for (int i = 0; i < d.lp_count; ++i) phis.push_back(random_unit_band(s, rng));
        CsvTable t{{"r", "phi", "lhs", "rhs", "slack", "pass"}, {}};
        CsvTable x{{"r", "block", "value", "bound", "slack", "pass"}, {}};
        bool all = true;
        for (double r : d.lp_r) {
            auto rep = littlewood_paley_check(mu, r, d.lp_L, d.lp_l0, phis, s, lp_words, splitmix64(cfg.seed ^ std::hash<double>{}(r)),
                                              0, true);
            for (std::size_t i = 0; i < rep.results.size(); ++i) {
                const auto& q = rep.results[i];
                t.add({fmt(r), std::to_string(i), fmt(q.lhs), fmt(q.rhs), fmt(q.slack), q.ok ? "1" : "0"});
            }
            for (const auto& ct : rep.cross) x.add({fmt(r), std::to_string(ct.i), fmt(ct.value), fmt(ct.bound), fmt(ct.slack), ct.ok ? "1" : "0"});
            all = all && rep.passes == int(rep.results.size()) && rep.cross_passes == int(rep.cross.size());
            say("littlewood-paley r=" + f6(r) + ": " + std::to_string(rep.passes) + "/" + std::to_string(rep.results.size()) +
                " (n0=" + std::to_string(rep.spec.n0) + ")");
        }
        w.csv("littlewood_paley.csv", t);
        w.csv("littlewood_paley_cross.csv", x);
        summary["littlewood_paley"] = all;
        ok = ok && all;
    }
    if (want("two-radius")) {
        auto curve = spectral_curve(mu, cfg.spectrum.r_grid, cfg.spectrum.lmax, cfg.spectrum.tgap_cap);
        CsvTable t{{"r1", "r2", "gap1", "gap2", "ratio"}, {}};
        double cmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d.pairs; ++i) {
            double r1 = 0.05 * std::pow(7.8 / 0.05, d.pairs == 1 ? 0.0 : double(i) / (d.pairs - 1));
            double r2 = r1 + 0.05 + 0.15 * (i % 3) / 2.0;
            auto tr = two_radius_check(mu, r1, r2, cfg.spectrum.lmax, 0.0);
            cmin = std::min(cmin, tr.ratio);
            t.add_numbers({r1, r2, tr.gap1, tr.gap2, tr.ratio});
        }
        w.csv("two_radius.csv", t);
        double second = 0;
        for (std::size_t i = 0; i < curve.r.size(); ++i) second = std::max(second, curve.second[i] - curve.err[i]);
        bool pass = cmin > 0 && second <= 0.99;
        summary["two_radius"] = json{{"min_ratio", cmin}, {"max_second", second}, {"pass", pass}};
        ok = ok && pass;
        say("two-radius: min ratio " + f6(cmin) + ", max second singular value " + f6(second));
    }
    if (want("collision")) {
        auto c2 = collision_l2(mu, 4, 0.25, 4.0, 20000, cfg.seed);
        summary["collision"] = json{{"estimate", c2.estimate}, {"frequency", c2.collision_frequency}, {"mc_sigma", c2.mc_sigma},
                                    {"cell_volume", c2.cell_volume}, {"pairs", c2.pairs}};
        say("collision: estimate " + f6(c2.estimate));
    }
    if (want("non-concentration")) {
        CsvTable t{{"r", "l", "ball_radius", "max_ball_mass"}, {}};
        std::vector<double> rs, ms;
        for (std::size_t i = 0; i < d.nc_r.size(); ++i) {
            double r = d.nc_r[i];
            int l = static_cast<int>(std::ceil(d.nc_L * std::log(1 / r)));
            auto e = simulate_walk(mu, Vec::Zero(mu.dim()), l, d.nc_n, splitmix64(cfg.seed + 31 * i), cfg.workers);
            double rad = std::sqrt(double(d.nc_L)) * r;
            double m = max_ball_mass(e, rad);
            rs.push_back(r);
            ms.push_back(m);
            t.add_numbers({r, double(l), rad, m});
        }
        w.csv("non_concentration.csv", t);
        double slope = rs.size() >= 2 ? loglog_slope(rs, ms) : std::numeric_limits<double>::quiet_NaN();
        const double need = (mu.dim() - 1.0) / (2.0 * (mu.dim() + 1.0));
        bool pass = slope >= need;
        summary["non_concentration"] = json{{"slope", slope}, {"required", need}, {"pass", pass}};
        ok = ok && pass;
        say("non-concentration: slope " + f6(slope) + " (need >= " + f6(need) + ")");
    }
    w.json_file("diagnostics_summary.json", summary);
    w.finish();
    if (!ok) throw CheckFailed("diagnostics: at least one check failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"isomlab: random walks on the motion group and self-similar measures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kCodeVersion));

    Common c;
    auto* spectrum = app.add_subcommand("spectrum", "spectral-gap curve of S_r");
    add_common(spectrum, c, true);
    std::vector<double> dump_r;
    spectrum->add_option("--dump-operator", dump_r, "write the S_r matrix at these radii (binary)");

    auto* walk = app.add_subcommand("walk", "simulate a walk ensemble");
    add_common(walk, c, false);
    bool save = false;
    walk->add_flag("--save-ensemble", save, "write the endpoints as a flat binary with manifest");

    auto* llt = app.add_subcommand("llt", "local limit theorem report");
    add_common(llt, c, false);
    double zmax = 4, pmin = 1e-3;
    llt->add_option("--zmax", zmax, "largest accepted |z|")->capture_default_str();
    llt->add_option("--pmin", pmin, "smallest accepted chi-square p-value")->capture_default_str();

    auto* selfsim = app.add_subcommand("selfsim", "decay profiles and threshold report for an IFS");
    add_common(selfsim, c, true);
    std::vector<double> contrast;
    selfsim->add_option("--contrast", contrast, "compare the rotation-rich two-map IFS at two ratios")->expected(2);

    auto* diag = app.add_subcommand("diagnostics", "Schur, Littlewood-Paley, two-radius, collision, non-concentration");
    add_common(diag, c, false);
    std::vector<std::string> only;
    int lp_words = 4000;
    diag->add_option("--only", only, "subset: schur, lp, two-radius, collision, non-concentration")
        ->check(CLI::IsMember({"schur", "lp", "two-radius", "collision", "non-concentration"}));
    diag->add_option("--lp-words", lp_words, "Monte Carlo words for the Littlewood-Paley averages")->capture_default_str();

    auto* schema = app.add_subcommand("schema", "print the config schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*spectrum) return cmd_spectrum(c, dump_r);
        if (*walk) return cmd_walk(c, save);
        if (*llt) return cmd_llt(c, zmax, pmin);
        if (*selfsim) return cmd_selfsim(c, contrast);
        if (*diag) return cmd_diagnostics(c, std::set<std::string>(only.begin(), only.end()), lp_words);
        if (*schema) {
            std::cout << config_schema().dump(2) << std::endl;
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const CheckFailed& e) {
        std::cerr << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}
