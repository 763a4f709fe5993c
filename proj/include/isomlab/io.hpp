#pragma once

// Configuration parsing and validation, CSV reports, run manifests, binary dumps.

#include <array>
#include <chrono>
#include <cinttypes>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "digest.hpp"
#include "presets.hpp"
#include "selfsim.hpp"
#include "spectral.hpp"
#include "walk.hpp"

namespace isomlab::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

#ifdef ISOMLAB_VERSION
inline constexpr const char* kCodeVersion = ISOMLAB_VERSION;
#else
inline constexpr const char* kCodeVersion = "dev";
#endif

// ---------------------------------------------------------------------------
// field access with JSON-pointer paths in the errors

inline std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string join(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline const json* find(const json& obj, const std::string& key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path.empty() ? "/" : path, "expected an object");
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(join(path, it.key()), "unknown field");
    }
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path, "expected a number");
    double x = j.get<double>();
    if (!std::isfinite(x)) throw ValidationError(path, "must be finite");
    return x;
}

inline long long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
    return j.get<long long>();
}

inline double number_or(const json& obj, const std::string& key, const std::string& path, double def) {
    const json* v = find(obj, key);
    return v ? as_number(*v, join(path, key)) : def;
}

inline long long integer_or(const json& obj, const std::string& key, const std::string& path, long long def,
                            long long lo = std::numeric_limits<long long>::min(),
                            long long hi = std::numeric_limits<long long>::max()) {
    const json* v = find(obj, key);
    if (!v) return def;
    long long x = as_integer(*v, join(path, key));
    if (x < lo || x > hi)
        throw ValidationError(join(path, key), "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

inline std::string string_or(const json& obj, const std::string& key, const std::string& path, const std::string& def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_string()) throw ValidationError(join(path, key), "expected a string");
    return v->get<std::string>();
}

inline Vec as_vector(const json& j, const std::string& path, int d = -1) {
    if (!j.is_array()) throw ValidationError(path, "expected an array of numbers");
    if (d >= 0 && static_cast<int>(j.size()) != d)
        throw ValidationError(path, "expected " + std::to_string(d) + " entries, got " + std::to_string(j.size()));
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = as_number(j[i], join(path, i));
    return v;
}

// ---------------------------------------------------------------------------
// grids: explicit list or {min, max, count, spacing: "log"|"linear"}

inline std::vector<double> parse_grid(const json& j, const std::string& path) {
    std::vector<double> g;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) g.push_back(as_number(j[i], join(path, i)));
    } else if (j.is_object()) {
        reject_unknown(j, path, {"min", "max", "count", "spacing"});
        const json* lo = find(j, "min");
        const json* hi = find(j, "max");
        if (!lo) throw ValidationError(join(path, "min"), "missing");
        if (!hi) throw ValidationError(join(path, "max"), "missing");
        double a = as_number(*lo, join(path, "min")), b = as_number(*hi, join(path, "max"));
        long long n = integer_or(j, "count", path, 10, 1, 100000);
        std::string sp = string_or(j, "spacing", path, "log");
        if (sp != "log" && sp != "linear") throw ValidationError(join(path, "spacing"), "expected \"log\" or \"linear\"");
        if (sp == "log" && !(a > 0)) throw ValidationError(join(path, "min"), "log spacing needs min > 0");
        if (!(b >= a)) throw ValidationError(join(path, "max"), "must be >= min");
        for (long long i = 0; i < n; ++i) {
            double t = n == 1 ? 0.0 : double(i) / double(n - 1);
            g.push_back(sp == "log" ? a * std::pow(b / a, t) : a + (b - a) * t);
        }
    } else {
        throw ValidationError(path, "expected a list or {min, max, count, spacing}");
    }
    if (g.empty()) throw ValidationError(path, "grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw ValidationError(join(path, i), "grid must be strictly increasing");
    return g;
}

// ---------------------------------------------------------------------------
// measures: {"preset": ...} or {"atoms": [{weight, rotation, translation, lambda?}, ...]}

inline Rotation parse_rotation(const json* j, const std::string& path, int d) {
    if (!j || j->is_null()) return Rotation(d);
    if (j->is_string()) {
        if (j->get<std::string>() == "identity") return Rotation(d);
        throw ValidationError(path, "unknown rotation \"" + j->get<std::string>() + "\"");
    }
    require_object(*j, path);
    reject_unknown(*j, path, {"axis", "angle", "matrix"});
    if (const json* m = find(*j, "matrix")) {
        const std::string mp = join(path, "matrix");
        if (!m->is_array() || static_cast<int>(m->size()) != d)
            throw ValidationError(mp, "expected " + std::to_string(d) + " rows");
        Mat a(d, d);
        for (int r = 0; r < d; ++r) a.row(r) = as_vector((*m)[r], join(mp, r), d).transpose();
        try {
            return Rotation::from_matrix(a, 1e-9);
        } catch (const Error& e) {
            throw ValidationError(mp, e.what());
        }
    }
    if (d != 3) throw ValidationError(path, "axis/angle rotations need d = 3; use \"matrix\"");
    const json* ax = find(*j, "axis");
    const json* an = find(*j, "angle");
    if (!ax) throw ValidationError(join(path, "axis"), "missing");
    if (!an) throw ValidationError(join(path, "angle"), "missing");
    Vec axis = as_vector(*ax, join(path, "axis"), 3);
    if (axis.norm() == 0) throw ValidationError(join(path, "axis"), "axis is zero");
    return Rotation::axis_angle(Eigen::Vector3d(axis), as_number(*an, join(path, "angle")));
}

struct ParsedAtom {
    double weight;
    Rotation rot;
    Vec v;
    std::optional<double> lambda;
};

inline std::vector<ParsedAtom> parse_atoms(const json& j, const std::string& path, int d, bool allow_lambda) {
    const json* atoms = find(j, "atoms");
    const std::string ap = join(path, "atoms");
    if (!atoms) throw ValidationError(ap, "missing");
    if (!atoms->is_array() || atoms->empty()) throw ValidationError(ap, "expected a non-empty array");
    std::vector<ParsedAtom> out;
    double total = 0;
    for (std::size_t i = 0; i < atoms->size(); ++i) {
        const json& a = (*atoms)[i];
        const std::string p = join(ap, i);
        require_object(a, p);
        if (allow_lambda)
            reject_unknown(a, p, {"weight", "rotation", "translation", "lambda"});
        else
            reject_unknown(a, p, {"weight", "rotation", "translation"});
        const json* w = find(a, "weight");
        if (!w) throw ValidationError(join(p, "weight"), "missing");
        double wt = as_number(*w, join(p, "weight"));
        if (!(wt > 0)) throw ValidationError(join(p, "weight"), "must be > 0");
        total += wt;
        const json* t = find(a, "translation");
        if (!t) throw ValidationError(join(p, "translation"), "missing");
        ParsedAtom pa{wt, parse_rotation(find(a, "rotation"), join(p, "rotation"), d), as_vector(*t, join(p, "translation"), d),
                      std::nullopt};
        if (const json* l = find(a, "lambda")) {
            double lam = as_number(*l, join(p, "lambda"));
            if (!(lam > 0 && lam < 1)) throw ValidationError(join(p, "lambda"), "must lie in (0, 1)");
            pa.lambda = lam;
        }
        out.push_back(std::move(pa));
    }
    if (std::abs(total - 1) > 1e-9) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "weights sum to %.12g, expected 1 (tolerance 1e-9)", total);
        throw ValidationError(ap, buf);
    }
    return out;
}

inline IsometryMeasure parse_measure(const json& j, const std::string& path = "/measure") {
    require_object(j, path);
    if (const json* pr = find(j, "preset")) {
        reject_unknown(j, path, {"preset"});
        if (!pr->is_string()) throw ValidationError(join(path, "preset"), "expected a string");
        const std::string name = pr->get<std::string>();
        if (name == "default_gap") return prepared_gap_measure();
        if (name == "raw_gap") return default_gap_measure();
        throw ValidationError(join(path, "preset"), "unknown preset \"" + name + "\" (default_gap, raw_gap)");
    }
    reject_unknown(j, path, {"d", "atoms", "prepare"});
    const int d = static_cast<int>(integer_or(j, "d", path, 3, 1, 16));
    std::vector<IsometryMeasure::Atom> at;
    for (auto& a : parse_atoms(j, path, d, false)) at.push_back({Isometry(a.v, a.rot), a.weight});
    IsometryMeasure mu(std::move(at));
    // "prepare": k -> normalize(symmetrize(mu^{*k}))
    if (const json* p = find(j, "prepare")) {
        long long k = as_integer(*p, join(path, "prepare"));
        if (k < 0 || k > 8) throw ValidationError(join(path, "prepare"), "out of range [0, 8]");
        if (k > 0) mu = prepare_gap_measure(mu, static_cast<int>(k));
    }
    return mu;
}

inline IFS parse_ifs(const json& j, const std::string& path = "/selfsim/ifs") {
    require_object(j, path);
    if (const json* pr = find(j, "preset")) {
        reject_unknown(j, path, {"preset", "lambda"});
        if (!pr->is_string()) throw ValidationError(join(path, "preset"), "expected a string");
        const std::string name = pr->get<std::string>();
        double lam = number_or(j, "lambda", path, name == "bernoulli" ? 0.5 : 0.25);
        if (!(lam > 0 && lam < 1)) throw ValidationError(join(path, "lambda"), "must lie in (0, 1)");
        if (name == "bernoulli") return bernoulli_ifs(lam);
        if (name == "contrast") return contrast_ifs(lam);
        throw ValidationError(join(path, "preset"), "unknown preset \"" + name + "\" (bernoulli, contrast)");
    }
    reject_unknown(j, path, {"d", "atoms"});
    const int d = static_cast<int>(integer_or(j, "d", path, 3, 1, 16));
    std::vector<Similarity> maps;
    std::vector<double> p;
    auto atoms = parse_atoms(j, path, d, true);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!atoms[i].lambda) throw ValidationError(join(join(join(path, "atoms"), i), "lambda"), "missing");
        maps.emplace_back(*atoms[i].lambda, atoms[i].rot, atoms[i].v);
        p.push_back(atoms[i].weight);
    }
    IFS ifs(std::move(maps), std::move(p));
    if (ifs.size() >= 2 && has_common_fixed_point(ifs))
        throw ValidationError(join(path, "atoms"), "maps share a fixed point (stationary measure is a point mass)");
    return ifs;
}

// ---------------------------------------------------------------------------
// experiment config

struct SpectrumConfig {
    std::vector<double> r_grid;
    int lmax = 16;  // input band s
    int tgap_cap = 8;
    double c_threshold = 1.0;
};

struct WalkConfig {
    int l = 100;
    std::size_t n = 1000000;
    std::size_t fit_n = 1000000;
    Vec x0 = Vec::Zero(3);
    int shells = 20;
};

struct SelfsimConfig {
    std::optional<json> ifs_spec;
    std::vector<double> r_grid;
    double tol = 1e-10;
    std::size_t budget = 2000000;
    std::size_t mc_samples = 200000;
    int max_quad_lmax = 48;
    int l0 = 2;
    int n = 1;       // smoothness order for the threshold report
    double c = 1.0;  // unspecified constant of the threshold theorems
};

struct DiagnosticsConfig {
    int schur_lmax = 6;
    std::size_t schur_samples = 100000;
    int lp_count = 100;
    int lp_L = 16;
    int lp_l0 = 4;
    std::vector<double> lp_r = {0.5, 2.0};
    std::vector<double> nc_r = {0.02, 0.05, 0.1, 0.2};
    std::size_t nc_n = 1000000;
    int nc_L = 40;
    int pairs = 20;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    json measure_spec = json{{"preset", "default_gap"}};
    SpectrumConfig spectrum;
    WalkConfig walk;
    SelfsimConfig selfsim;
    DiagnosticsConfig diagnostics;
    json raw = json::object();  // as given, for the digest

    IsometryMeasure measure() const { return parse_measure(measure_spec, "/measure"); }
    IFS ifs() const {
        return selfsim.ifs_spec ? parse_ifs(*selfsim.ifs_spec, "/selfsim/ifs") : contrast_ifs(0.25);
    }
};

inline std::vector<double> default_spectrum_grid() {
    std::vector<double> g;
    for (int i = 0; i < 30; ++i) g.push_back(0.05 * std::pow(8.0 / 0.05, i / 29.0));
    return g;
}

inline std::vector<double> default_decay_grid() {
    std::vector<double> g;
    for (int i = 0; i < 8; ++i) g.push_back(std::pow(5.0, i / 7.0));
    return g;
}

inline ExperimentConfig parse_config(const json& j) {
    require_object(j, "");
    reject_unknown(j, "", {"schema_version", "seed", "workers", "measure", "spectrum", "walk", "selfsim", "diagnostics"});
    ExperimentConfig c;
    c.raw = j;
    c.schema_version = static_cast<int>(integer_or(j, "schema_version", "", kSchemaVersion));
    if (c.schema_version != kSchemaVersion)
        throw ValidationError("/schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                                     std::to_string(kSchemaVersion) + ")");
    c.seed = static_cast<std::uint64_t>(integer_or(j, "seed", "", 1, 0));
    c.workers = static_cast<unsigned>(integer_or(j, "workers", "", 0, 0, 1024));
    if (const json* m = find(j, "measure")) {
        c.measure_spec = *m;
        (void)parse_measure(*m, "/measure");  // validate now
    }
    c.spectrum.r_grid = default_spectrum_grid();
    if (const json* s = find(j, "spectrum")) {
        const std::string p = "/spectrum";
        require_object(*s, p);
        reject_unknown(*s, p, {"r_grid", "lmax", "tgap_cap", "c"});
        if (const json* g = find(*s, "r_grid")) c.spectrum.r_grid = parse_grid(*g, join(p, "r_grid"));
        c.spectrum.lmax = static_cast<int>(integer_or(*s, "lmax", p, 16, 1, 64));
        c.spectrum.tgap_cap = static_cast<int>(integer_or(*s, "tgap_cap", p, 8, 1, 64));
        c.spectrum.c_threshold = number_or(*s, "c", p, 1.0);
        for (std::size_t i = 0; i < c.spectrum.r_grid.size(); ++i)
            if (c.spectrum.r_grid[i] < 0) throw ValidationError(join(join(p, "r_grid"), i), "r must be >= 0");
    }
    if (const json* w = find(j, "walk")) {
        const std::string p = "/walk";
        require_object(*w, p);
        reject_unknown(*w, p, {"l", "n", "fit_n", "x0", "shells"});
        c.walk.l = static_cast<int>(integer_or(*w, "l", p, 100, 0, 100000000));
        c.walk.n = static_cast<std::size_t>(integer_or(*w, "n", p, 1000000, 1, 100000000));
        c.walk.fit_n = static_cast<std::size_t>(integer_or(*w, "fit_n", p, 1000000, 1000, 100000000));
        c.walk.shells = static_cast<int>(integer_or(*w, "shells", p, 20, 2, 1000));
        if (const json* x = find(*w, "x0")) c.walk.x0 = as_vector(*x, join(p, "x0"));
    }
    c.selfsim.r_grid = default_decay_grid();
    if (const json* s = find(j, "selfsim")) {
        const std::string p = "/selfsim";
        require_object(*s, p);
        reject_unknown(*s, p, {"ifs", "r_grid", "tol", "budget", "mc_samples", "max_quad_lmax", "l0", "n", "c"});
        if (const json* f = find(*s, "ifs")) {
            (void)parse_ifs(*f, join(p, "ifs"));
            c.selfsim.ifs_spec = *f;
        }
        if (const json* g = find(*s, "r_grid")) c.selfsim.r_grid = parse_grid(*g, join(p, "r_grid"));
        if (c.selfsim.r_grid.size() < 2) throw ValidationError(join(p, "r_grid"), "need at least 2 radii");
        c.selfsim.tol = number_or(*s, "tol", p, 1e-10);
        if (!(c.selfsim.tol > 0)) throw ValidationError(join(p, "tol"), "must be > 0");
        c.selfsim.budget = static_cast<std::size_t>(integer_or(*s, "budget", p, 2000000, 1));
        c.selfsim.mc_samples = static_cast<std::size_t>(integer_or(*s, "mc_samples", p, 200000, 32));
        c.selfsim.max_quad_lmax = static_cast<int>(integer_or(*s, "max_quad_lmax", p, 48, 4, 256));
        c.selfsim.l0 = static_cast<int>(integer_or(*s, "l0", p, 2, 1, 20));
        c.selfsim.n = static_cast<int>(integer_or(*s, "n", p, 1, 1, 1000));
        c.selfsim.c = number_or(*s, "c", p, 1.0);
        if (!(c.selfsim.c > 0)) throw ValidationError(join(p, "c"), "must be > 0");
    }
    if (const json* dg = find(j, "diagnostics")) {
        const std::string p = "/diagnostics";
        require_object(*dg, p);
        reject_unknown(*dg, p, {"schur_lmax", "schur_samples", "lp_count", "lp_L", "lp_l0", "lp_r", "nc_r", "nc_n", "nc_L", "pairs"});
        auto& d = c.diagnostics;
        d.schur_lmax = static_cast<int>(integer_or(*dg, "schur_lmax", p, 6, 1, 32));
        d.schur_samples = static_cast<std::size_t>(integer_or(*dg, "schur_samples", p, 100000, 100));
        d.lp_count = static_cast<int>(integer_or(*dg, "lp_count", p, 100, 1, 100000));
        d.lp_L = static_cast<int>(integer_or(*dg, "lp_L", p, 16, 2, 64));
        d.lp_l0 = static_cast<int>(integer_or(*dg, "lp_l0", p, 4, 1, 64));
        if (const json* g = find(*dg, "lp_r")) d.lp_r = parse_grid(*g, join(p, "lp_r"));
        if (const json* g = find(*dg, "nc_r")) d.nc_r = parse_grid(*g, join(p, "nc_r"));
        d.nc_n = static_cast<std::size_t>(integer_or(*dg, "nc_n", p, 1000000, 100));
        d.nc_L = static_cast<int>(integer_or(*dg, "nc_L", p, 40, 1, 1000));
        d.pairs = static_cast<int>(integer_or(*dg, "pairs", p, 20, 1, 10000));
    }
    return c;
}

inline json read_json_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError(path.string(), "cannot open config");
    try {
        return json::parse(f, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string(), std::string("parse error: ") + e.what());
    }
}

inline ExperimentConfig load_config(const fs::path& path) { return parse_config(read_json_file(path)); }

// the accepted document shape, with defaults
inline json config_schema() {
    auto grid = json{{"oneOf", json::array({json{{"type", "array"}, {"items", "number"}},
                                            json{{"min", "number"}, {"max", "number"}, {"count", "integer, default 10"},
                                                 {"spacing", "\"log\" (default) | \"linear\""}}})}};
    auto atom = json{{"weight", "number > 0; weights sum to 1 within 1e-9"},
                     {"rotation", "\"identity\" | {axis: [3], angle} | {matrix: [[d x d]]}; default identity"},
                     {"translation", "array of d numbers"}};
    auto ifs_atom = atom;
    ifs_atom["lambda"] = "number in (0, 1)";
    return json{
        {"schema_version", kSchemaVersion},
        {"seed", "integer >= 0, default 1"},
        {"workers", "integer >= 0, default 0 (hardware concurrency)"},
        {"measure", json{{"oneOf", json::array({json{{"preset", "default_gap | raw_gap"}},
                                               json{{"d", "integer, default 3"},
                                                    {"atoms", json::array({atom})},
                                                    {"prepare", "k in [0, 8]: normalize(symmetrize(mu^{*k}))"}}})}}},
        {"spectrum", json{{"r_grid", grid}, {"lmax", "input band s, default 16"}, {"tgap_cap", "default 8"},
                          {"c", "constant for threshold labels, default 1"}}},
        {"walk", json{{"l", "default 100"}, {"n", "default 1000000"}, {"fit_n", "default 1000000"}, {"x0", "array of d"},
                      {"shells", "default 20"}}},
        {"selfsim", json{{"ifs", json{{"oneOf", json::array({json{{"preset", "bernoulli | contrast"}, {"lambda", "number"}},
                                                             json{{"d", "integer"}, {"atoms", json::array({ifs_atom})}}})}}},
                         {"r_grid", grid},
                         {"tol", "default 1e-10"},
                         {"budget", "default 2000000"},
                         {"mc_samples", "default 200000"},
                         {"max_quad_lmax", "default 48"},
                         {"l0", "default 2"},
                         {"n", "default 1"},
                         {"c", "default 1"}}},
        {"diagnostics", json{{"schur_lmax", 6}, {"schur_samples", 100000}, {"lp_count", 100}, {"lp_L", 16}, {"lp_l0", 4},
                             {"lp_r", json::array({0.5, 2.0})}, {"nc_r", json::array({0.02, 0.05, 0.1, 0.2})},
                             {"nc_n", 1000000}, {"nc_L", 40}, {"pairs", 20}}}};
}

// ---------------------------------------------------------------------------
// manifests and CSV

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
    return buf;
}

inline std::uint64_t config_digest(const json& j) { return fnv1a(j.dump()); }

// round-trip formatting, locale independent
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct RunManifest {
    std::string command;
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string code_version = kCodeVersion;
    double wall_time = 0;
    std::vector<std::string> outputs;
    json extra = json::object();

    // depends only on what determines the result tables
    std::string run_id() const {
        std::uint64_t h = fnv1a(command);
        h = fnv1a(&config_digest, sizeof config_digest, h);
        h = fnv1a(&seed, sizeof seed, h);
        return hex64(h);
    }
    std::string file_name() const { return "manifest-" + run_id() + ".json"; }

    json to_json() const {
        return json{{"command", command},         {"config_digest", hex64(config_digest)},
                    {"seed", seed},               {"workers", workers},
                    {"code_version", code_version}, {"wall_time_s", wall_time},
                    {"outputs", outputs},         {"run_id", run_id()},
                    {"extra", extra}};
    }
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        if (row.size() != header.size()) throw InvalidArgument("CsvTable: row width differs from header");
        rows.push_back(std::move(row));
    }
    void add_numbers(const std::vector<double>& row) {
        std::vector<std::string> s;
        for (double x : row) s.push_back(fmt(x));
        add(std::move(s));
    }
    std::string render(const std::string& manifest_ref) const {
        std::ostringstream o;
        if (!manifest_ref.empty()) o << "# manifest: " << manifest_ref << "\n";
        for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
        o << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
            o << "\n";
        }
        return o.str();
    }
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    std::ostringstream o;
    o << f.rdbuf();
    return o.str();
}

// collects outputs of one command; manifest-<id>.json is written at the end and runs.jsonl appended
class RunWriter {
public:
    RunWriter(fs::path out_dir, std::string command, const json& config, std::uint64_t seed, unsigned workers)
        : dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
        m_.command = std::move(command);
        m_.config_digest = config_digest(config);
        m_.seed = seed;
        m_.workers = workers;
        m_.extra["config"] = config;
    }

    const fs::path& dir() const { return dir_; }
    RunManifest& manifest() { return m_; }

    fs::path csv(const std::string& name, const CsvTable& t) {
        fs::path p = dir_ / name;
        write_text(p, t.render(m_.file_name()));
        m_.outputs.push_back(name);
        return p;
    }
    fs::path json_file(const std::string& name, const json& j) {
        fs::path p = dir_ / name;
        json out = j;
        out["manifest"] = m_.file_name();
        write_text(p, out.dump(2) + "\n");
        m_.outputs.push_back(name);
        return p;
    }
    void note_output(const std::string& name) { m_.outputs.push_back(name); }

    fs::path finish() {
        m_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        fs::path p = dir_ / m_.file_name();
        write_text(p, m_.to_json().dump(2) + "\n");
        std::ofstream log(dir_ / "runs.jsonl", std::ios::app);
        log << m_.to_json().dump() << "\n";
        return p;
    }

private:
    fs::path dir_;
    RunManifest m_;
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// report tables

inline CsvTable spectral_curve_table(const SpectralCurve& c) {
    CsvTable t{{"r", "norm", "err_bar", "gap", "bound_rhs"}, {}};
    for (std::size_t i = 0; i < c.r.size(); ++i) t.add_numbers({c.r[i], c.norm[i], c.err[i], c.gap[i], c.bound_rhs[i]});
    return t;
}

inline CsvTable decay_table(const DecayProfile& p) {
    CsvTable t{{"r", "norm", "err", "slope_window"}, {}};
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& r = p.rows[i];
        t.add({fmt(r.r), fmt(r.norm), fmt(r.err), (i >= p.window_begin && r.resolved) ? "1" : "0"});
    }
    return t;
}

inline CsvTable llt_table(const LltReport& rep) {
    CsvTable t{{"z0", "z1", "z2", "radius", "phat", "mc_sigma", "prediction", "zscore"}, {}};
    for (const auto& r : rep.rows) {
        std::vector<double> row;
        for (int k = 0; k < 3; ++k) row.push_back(k < r.z.size() ? r.z(k) : 0.0);
        row.insert(row.end(), {r.r, r.phat, r.mc_sigma, r.prediction, r.zscore});
        t.add_numbers(row);
    }
    return t;
}

inline CsvTable shell_table(const LltReport& rep) {
    CsvTable t{{"shell", "inner", "outer", "count", "expected"}, {}};
    const auto& e = rep.shell_edges;  // interior edges only
    for (std::size_t i = 0; i < rep.shell_counts.size(); ++i)
        t.add_numbers({double(i), i == 0 ? 0.0 : e[i - 1], i < e.size() ? e[i] : std::numeric_limits<double>::infinity(),
                       double(rep.shell_counts[i]), rep.shell_expected});
    return t;
}

// ---------------------------------------------------------------------------
// binary formats (little-endian hosts)

namespace detail {
template <class T>
void put(std::ostream& o, const T& x) {
    o.write(reinterpret_cast<const char*>(&x), sizeof x);
}
template <class T>
T get(std::istream& i, const std::string& what) {
    T x;
    if (!i.read(reinterpret_cast<char*>(&x), sizeof x)) throw Error("truncated " + what);
    return x;
}
inline void check_magic(std::istream& i, const char (&magic)[5], const std::string& what) {
    char m[4];
    if (!i.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw Error(what + ": bad magic");
}
}  // namespace detail

// <base>.bin: d*n doubles, point-major; <base>.json: {seed, l, n, d, x0, mu_digest}
inline void save_ensemble(const fs::path& base, const WalkEnsemble& e) {
    fs::path bin = base, man = base;
    bin += ".bin";
    man += ".json";
    std::ofstream f(bin, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + bin.string());
    f.write(reinterpret_cast<const char*>(e.endpoints.data()), static_cast<std::streamsize>(e.endpoints.size() * sizeof(double)));
    if (!f) throw Error("write failed: " + bin.string());
    std::vector<double> x0(e.x0.data(), e.x0.data() + e.x0.size());
    json m{{"seed", e.seed}, {"l", e.l}, {"n", e.n}, {"d", e.d}, {"x0", x0}, {"mu_digest", hex64(e.mu_digest)}};
    write_text(man, m.dump(2) + "\n");
}

inline WalkEnsemble load_ensemble(const fs::path& base) {
    fs::path bin = base, man = base;
    bin += ".bin";
    man += ".json";
    json m = json::parse(read_text(man));
    WalkEnsemble e;
    e.seed = m.at("seed").get<std::uint64_t>();
    e.l = m.at("l").get<int>();
    e.n = m.at("n").get<std::size_t>();
    e.d = m.at("d").get<int>();
    auto x0 = m.at("x0").get<std::vector<double>>();
    e.x0 = Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    e.mu_digest = std::stoull(m.at("mu_digest").get<std::string>(), nullptr, 16);
    const std::size_t want = e.n * static_cast<std::size_t>(e.d) * sizeof(double);
    if (fs::file_size(bin) != want) throw Error("ensemble payload size does not match its manifest");
    e.endpoints.resize(e.n * e.d);
    std::ifstream f(bin, std::ios::binary);
    f.read(reinterpret_cast<char*>(e.endpoints.data()), static_cast<std::streamsize>(want));
    if (!f) throw Error("cannot read " + bin.string());
    return e;
}

// "ISOM": double r, int32 lmax_in, int32 lmax_out, then rows x cols complex pairs, row-major
inline void save_operator(const fs::path& path, const OperatorMatrix& op) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f.write("ISOM", 4);
    detail::put(f, op.r);
    detail::put(f, static_cast<std::int32_t>(op.lmax_in));
    detail::put(f, static_cast<std::int32_t>(op.lmax_out));
    for (Eigen::Index i = 0; i < op.entries.rows(); ++i)
        for (Eigen::Index j = 0; j < op.entries.cols(); ++j) {
            detail::put(f, op.entries(i, j).real());
            detail::put(f, op.entries(i, j).imag());
        }
    if (!f) throw Error("write failed: " + path.string());
}

inline OperatorMatrix load_operator(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    detail::check_magic(f, "ISOM", path.string());
    OperatorMatrix op;
    op.r = detail::get<double>(f, "operator header");
    op.lmax_in = detail::get<std::int32_t>(f, "operator header");
    op.lmax_out = detail::get<std::int32_t>(f, "operator header");
    if (op.lmax_in < 0 || op.lmax_out < 0 || op.lmax_in > kWignerCap || op.lmax_out > kWignerCap)
        throw Error("operator header: band out of range");
    op.entries.resize(band_size(op.lmax_out), band_size(op.lmax_in));
    for (Eigen::Index i = 0; i < op.entries.rows(); ++i)
        for (Eigen::Index j = 0; j < op.entries.cols(); ++j) {
            double re = detail::get<double>(f, "operator payload");
            double im = detail::get<double>(f, "operator payload");
            op.entries(i, j) = {re, im};
        }
    return op;
}

// "ISBF": int32 lmax, then (lmax+1)^2 complex pairs
inline void save_band(const fs::path& path, const BandFunction& b) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f.write("ISBF", 4);
    detail::put(f, static_cast<std::int32_t>(b.lmax));
    for (Eigen::Index i = 0; i < b.coeffs.size(); ++i) {
        detail::put(f, b.coeffs(i).real());
        detail::put(f, b.coeffs(i).imag());
    }
}

inline BandFunction load_band(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    detail::check_magic(f, "ISBF", path.string());
    int L = detail::get<std::int32_t>(f, "band header");
    if (L < 0 || L > kWignerCap) throw Error("band header: lmax out of range");
    BandFunction b(L);
    for (Eigen::Index i = 0; i < b.coeffs.size(); ++i) {
        double re = detail::get<double>(f, "band payload");
        double im = detail::get<double>(f, "band payload");
        b.coeffs(i) = {re, im};
    }
    return b;
}

}  // namespace isomlab::io
