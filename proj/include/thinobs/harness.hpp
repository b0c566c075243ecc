#ifndef THINOBS_HARNESS_HPP
#define THINOBS_HARNESS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acceptance.hpp"
#include "avgcap.hpp"
#include "capacity.hpp"
#include "corrector.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "obstacle.hpp"
#include "udist.hpp"

namespace thinobs {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "thinobs 0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Typed access to one JSON object. Errors name the full key path; every
/// value read (or defaulted) is echoed into `resolved` for the manifest.
class Params {
public:
    Params(const json& src, std::string path) : src_(src), path_(std::move(path)) {
        if (!src_.is_object()) fail(ErrorCode::ConfigError, path_ + ": expected an object");
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return src_.contains(key); }
    bool is_string(const std::string& key) const { return src_.contains(key) && src_[key].is_string(); }

    double num(const std::string& key, std::optional<double> fallback = std::nullopt) {
        used_.insert(key);
        double v;
        if (!src_.contains(key)) {
            if (!fallback) fail(ErrorCode::ConfigError, where(key) + ": required number is missing");
            v = *fallback;
        } else if (src_[key].is_number()) {
            v = src_[key].get<double>();
        } else {
            fail(ErrorCode::ConfigError, where(key) + ": expected a number");
        }
        resolved[key] = v;
        return v;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        used_.insert(key);
        std::int64_t v = fallback;
        if (src_.contains(key)) {
            if (!src_[key].is_number_integer()) fail(ErrorCode::ConfigError, where(key) + ": expected an integer");
            v = src_[key].get<std::int64_t>();
        }
        resolved[key] = v;
        return v;
    }

    std::string str(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        used_.insert(key);
        std::string v;
        if (!src_.contains(key)) {
            if (!fallback) fail(ErrorCode::ConfigError, where(key) + ": required string is missing");
            v = *fallback;
        } else if (src_[key].is_string()) {
            v = src_[key].get<std::string>();
        } else {
            fail(ErrorCode::ConfigError, where(key) + ": expected a string");
        }
        resolved[key] = v;
        return v;
    }

    bool flag(const std::string& key, bool fallback) {
        used_.insert(key);
        bool v = fallback;
        if (src_.contains(key)) {
            if (!src_[key].is_boolean()) fail(ErrorCode::ConfigError, where(key) + ": expected true or false");
            v = src_[key].get<bool>();
        }
        resolved[key] = v;
        return v;
    }

    /// A number or a list of numbers.
    std::vector<double> nums(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
        used_.insert(key);
        std::vector<double> v;
        if (!src_.contains(key)) {
            if (!fallback) fail(ErrorCode::ConfigError, where(key) + ": required list is missing");
            v = *fallback;
        } else if (src_[key].is_number()) {
            v.push_back(src_[key].get<double>());
        } else if (src_[key].is_array()) {
            for (std::size_t i = 0; i < src_[key].size(); ++i) {
                if (!src_[key][i].is_number())
                    fail(ErrorCode::ConfigError, where(key) + "[" + std::to_string(i) + "]: expected a number");
                v.push_back(src_[key][i].get<double>());
            }
        } else {
            fail(ErrorCode::ConfigError, where(key) + ": expected a number or a list of numbers");
        }
        resolved[key] = v;
        return v;
    }

    /// Box given as a list of "lo..hi" strings or [lo, hi] pairs.
    Box box(const std::string& key, std::size_t dim) {
        used_.insert(key);
        Box b = Box::cube(dim, 0.0, 1.0);
        if (src_.contains(key)) {
            const auto& arr = src_[key];
            if (!arr.is_array()) fail(ErrorCode::ConfigError, where(key) + ": expected a list of axis intervals");
            b.axes.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const auto at = where(key) + "[" + std::to_string(i) + "]";
                if (arr[i].is_string()) {
                    try {
                        b.axes.push_back(parse_interval(arr[i].get<std::string>()));
                    } catch (const std::exception&) {
                        fail(ErrorCode::ConfigError, at + ": expected lo..hi");
                    }
                } else if (arr[i].is_array() && arr[i].size() == 2 && arr[i][0].is_number() && arr[i][1].is_number()) {
                    b.axes.push_back({arr[i][0].get<double>(), arr[i][1].get<double>()});
                } else {
                    fail(ErrorCode::ConfigError, at + ": expected lo..hi or [lo, hi]");
                }
            }
        }
        json axes = json::array();
        for (const auto& a : b.axes) axes.push_back({a.lo, a.hi});
        resolved[key] = axes;
        return b;
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (auto it = src_.begin(); it != src_.end(); ++it)
            if (!used_.count(it.key()) && it.key() != "name" && it.key() != "kind")
                fail(ErrorCode::ConfigError, where(it.key()) + ": unknown key");
    }

    json resolved = json::object();

private:
    const json& src_;
    std::string path_;
    std::set<std::string> used_;
};

struct RunContext {
    std::uint64_t seed = 20240611;
    unsigned threads = 1;
    bool quick = false;
    /// Receives acceptance verdict lines as they finish.
    std::ostream* log = nullptr;
};

struct ScenarioOutput {
    std::string name;
    std::string kind;
    std::string csv;
    json resolved;
    std::vector<Verdict> verdicts;
    std::vector<std::pair<std::string, VIResult>> fields;
};

struct ReportBundle {
    std::vector<ScenarioOutput> scenarios;
    json manifest;

    bool all_pass() const {
        for (const auto& s : scenarios)
            for (const auto& v : s.verdicts)
                if (!v.pass) return false;
        return true;
    }
};

namespace harness_detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string join(const std::vector<double>& v, const char* sep = ";") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + num(v[i]);
    return s;
}

inline ShapeSpec shape_param(Params& p, const std::string& key, const std::string& fallback) {
    const auto text = p.str(key, fallback);
    try {
        return ShapeSpec::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, p.where(key) + ": " + e.what());
    }
}

inline FieldFn field_param(Params& p, const std::string& key, const std::string& fallback) {
    const auto text = p.str(key, fallback);
    try {
        return FieldFn::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, p.where(key) + ": " + e.what());
    }
}

inline Vec unit_param(Params& p, const std::string& key, const std::vector<double>& fallback) {
    auto v = p.nums(key, fallback);
    const double len = norm2(v);
    if (!(len > 0.0)) fail(ErrorCode::ConfigError, p.where(key) + ": normal must be nonzero");
    for (auto& x : v) x /= len;
    return v;
}

/// Plane with the given normal; offset defaults to the one through the box centre.
inline HyperplaneSpec plane_param(Params& p, std::size_t dim, const Box& box) {
    std::vector<double> fallback(dim, 0.0);
    fallback.back() = 1.0;
    const auto nu = unit_param(p, "nu", fallback);
    if (nu.size() != dim) fail(ErrorCode::ConfigError, p.where("nu") + ": expected " + std::to_string(dim) + " components");
    Vec centre(dim);
    for (std::size_t i = 0; i < dim; ++i) centre[i] = 0.5 * (box.axes[i].lo + box.axes[i].hi);
    const double c = p.num("offset", dot(nu, centre));
    return HyperplaneSpec(nu, c);
}

/// "capnu": a number, or "auto" to integrate slice capacities of `shape`.
inline double capnu_param(Params& p, const ShapeSpec& shape, std::span<const double> nu, const RunContext& ctx) {
    if (p.has("capnu") && !p.is_string("capnu")) return p.num("capnu");
    if (p.str("capnu", "auto") != "auto") fail(ErrorCode::ConfigError, p.where("capnu") + ": expected \"auto\" or a number");
    const double cap_h = p.num("capnu_h", 1.0 / 16.0);
    ProfileOptions prof;
    prof.threads = ctx.threads;
    const auto grid = default_capacity_grid(cap_h, shape.support_radius());
    const double v = averaged_capacity(slice_profile(shape, nu, grid, prof)).value;
    p.resolved["capnu_value"] = v;
    return v;
}

inline SorOptions sor_param(Params& p) {
    SorOptions o;
    o.omega = p.num("omega", 1.5);
    o.tol = p.num("tol", 1e-8);
    o.max_sweeps = static_cast<std::size_t>(p.integer("max_sweeps", 200000));
    return o;
}

inline ProblemSpec problem_param(Params& p, double default_h) {
    ProblemSpec spec;
    spec.omega = p.box("box", 3);
    spec.h = p.num("h", default_h);
    spec.psi = field_param(p, "psi", "bump:0.5,0.5,0.5,0.35,1");
    spec.f = field_param(p, "f", "const:0");
    return spec;
}

inline void run_count(Params& p, ScenarioOutput& out) {
    const auto dims = p.nums("nu", std::vector<double>{0, 0, 1}).size();
    Box box = p.box("box", dims);
    if (box.dim() != dims) fail(ErrorCode::ConfigError, p.where("box") + ": needs one interval per axis");
    const auto plane = plane_param(p, dims, box);
    const auto shape = shape_param(p, "shape", "ball:0.5");
    const auto eps_list = p.nums("eps", std::vector<double>{0.25});
    std::ostringstream csv;
    csv << "eps,t,window,N,A,ratio\n";
    for (double eps : eps_list) {
        PerforationSpec perf(eps, static_cast<int>(dims), shape);
        const auto recs = enumerate_intersections(plane, perf, box);
        // Intersections correspond to frac(alpha·k' + c/(eps nu_n)) falling in a
        // window of width 2 a r / (eps |nu_n|) around 0.
        const double width = 2.0 * perf.hole_radius() / (eps * std::abs(plane.normal_last()));
        double start = -plane.offset() / (eps * plane.normal_last()) - 0.5 * width;
        start -= std::floor(start);
        const auto n = lattice_size(Region{{box.projected()}}, eps);
        const double ratio = n ? static_cast<double>(recs.size()) / (static_cast<double>(n) * width) : 0.0;
        csv << num(eps) << "," << num(start) << "," << num(width) << "," << n << "," << recs.size() << "," << num(ratio)
            << "\n";
    }
    out.csv = csv.str();
}

inline void run_equidist(Params& p, ScenarioOutput& out) {
    SlopeVector alpha;
    std::size_t dims;
    if (p.has("alpha")) {
        alpha.alpha = p.nums("alpha");
        dims = alpha.alpha.size() + 1;
    } else {
        const auto nu = unit_param(p, "nu", {0, 0, 1});
        dims = nu.size();
        alpha = slope_vector(HyperplaneSpec(nu, 0.0));
    }
    Box box = p.box("box", dims - 1);
    if (box.dim() == dims) box = box.projected();
    if (box.dim() != dims - 1) fail(ErrorCode::ConfigError, p.where("box") + ": dimension does not match the slope");
    const double pexp = p.num("p", 0.5);
    const auto eps = p.nums("eps", std::vector<double>{1.0 / 64, 1.0 / 128, 1.0 / 256});
    const auto ts = p.nums("t", std::vector<double>{0.0, 0.25, 0.5, 0.75});
    std::ostringstream csv;
    csv << "eps,t,window,N,A,ratio\n";
    for (const auto& row : equidist_report(alpha, Region{{box}}, pexp, eps, ts))
        csv << num(row.eps) << "," << num(row.t) << "," << num(row.report.window.width) << "," << row.report.n_lattice
            << "," << row.report.a_count << "," << num(row.report.ratio) << "\n";
    out.csv = csv.str();
}

inline void run_discrepancy(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    auto alphas = p.nums("alpha", std::vector<double>{});
    const auto N = p.integer("N", 1000);
    if (N < 1) fail(ErrorCode::ConfigError, p.where("N") + ": must be >= 1");
    const auto kesten_samples = p.integer("kesten", 0);
    const auto sweep = p.str("sweep", "");
    const auto seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<std::int64_t>(ctx.seed)));
    if (kesten_samples > 0)
        for (double a : seeded_uniforms(seed, static_cast<std::size_t>(kesten_samples))) alphas.push_back(a);
    if (alphas.empty()) fail(ErrorCode::ConfigError, p.where("alpha") + ": no alpha given and kesten = 0");
    std::vector<std::size_t> sizes{static_cast<std::size_t>(N)};
    if (!sweep.empty()) {
        const std::string prefix = "dyadic:";
        if (sweep.rfind(prefix, 0) != 0) fail(ErrorCode::ConfigError, p.where("sweep") + ": expected dyadic:kmin..kmax");
        const auto iv = parse_interval(sweep.substr(prefix.size()));
        sizes = dyadic_sizes(static_cast<int>(iv.lo), static_cast<int>(iv.hi));
    }
    std::ostringstream csv;
    csv << "alpha,N,star,extreme,kesten_ratio\n";
    std::vector<double> ratios;
    json exponents = json::array();
    for (double a : alphas) {
        for (auto n : sizes) {
            const auto d = discrepancy(frac_sequence(a, n));
            csv << num(a) << "," << n << "," << num(d.star) << "," << num(d.extreme) << ",";
            if (n >= 16) {
                const double r = static_cast<double>(n) * d.extreme /
                                 (std::log(static_cast<double>(n)) * std::log(std::log(static_cast<double>(n))));
                csv << num(r);
                if (n == sizes.back()) ratios.push_back(r);
            }
            csv << "\n";
        }
        if (sizes.size() >= 3) exponents.push_back({{"alpha", a}, {"exponent", decay_exponent(a, sizes)}});
    }
    if (!exponents.empty()) out.resolved["decay_exponents"] = exponents;
    if (!ratios.empty()) out.resolved["kesten_median"] = median(ratios);
    out.csv = csv.str();
}

inline void run_capacity(Params& p, ScenarioOutput& out) {
    const auto shape = shape_param(p, "shape", "ball:1");
    const auto nu = unit_param(p, "nu", {0, 0, 1});
    const double s = p.num("s", 0.0);
    const double R = p.num("R", 16.0);
    const double h = p.num("h", 1.0 / 16.0);
    const double growth = p.num("growth", 1.15);
    const auto mode = p.str("mode", "slice");
    const auto grid = default_capacity_grid(h, shape.support_radius(), R, growth);
    CapacityEstimate est;
    if (mode == "slice") est = slice_capacity(shape, nu, s, grid);
    else if (mode == "solid") est = capacity_bracket(GammaSpec::solid(shape), grid);
    else fail(ErrorCode::ConfigError, p.where("mode") + ": expected slice or solid");
    std::ostringstream csv;
    csv << "shape,nu,s,R,h,energy,lower,upper,value\n";
    csv << shape.name() << "," << join(nu) << "," << num(s) << "," << num(R) << "," << num(h) << "," << num(est.energy)
        << "," << num(est.lower) << "," << num(est.upper) << "," << num(est.value) << "\n";
    out.csv = csv.str();
}

inline void run_avgcap(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    const auto shape = shape_param(p, "shape", "ball:0.5");
    const auto nu = unit_param(p, "nu", {0, 0, 1});
    ProfileOptions prof;
    prof.m = static_cast<std::size_t>(p.integer("m", 21));
    try {
        prof.rule = parse_rule(p.str("rule", "simpson"));
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, p.where("rule") + ": " + e.what());
    }
    prof.threads = ctx.threads;
    const double h = p.num("h", 1.0 / 16.0);
    const double R = p.num("R", 16.0);
    const double growth = p.num("growth", 1.15);
    const auto profile = slice_profile(shape, nu, default_capacity_grid(h, shape.support_radius(), R, growth), prof);
    const auto avg = averaged_capacity(profile);
    std::ostringstream csv;
    csv << "s,f_lower,f_value,f_upper\n";
    for (std::size_t i = 0; i < profile.f_values.size(); ++i) {
        const auto& f = profile.f_values[i];
        csv << num(profile.s_nodes()[i]) << "," << num(f.lower) << "," << num(f.value) << "," << num(f.upper) << "\n";
    }
    csv << "capnu,lower,upper\n" << num(avg.value) << "," << num(avg.lower) << "," << num(avg.upper) << "\n";
    out.csv = csv.str();
}

inline void run_corrector(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    const Box box = p.box("box", 3);
    const auto plane = plane_param(p, 3, box);
    const auto shape = shape_param(p, "shape", "ball:0.5");
    const double eps = p.num("eps", 1.0 / 16.0);
    PerforationSpec perf(eps, 3, shape);
    const double h_local = p.num("h_local", perf.hole_radius() / 16.0);
    CorrectorOptions opt;
    opt.threads = ctx.threads;
    opt.growth = p.num("growth", 1.15);
    double capnu = -1.0;
    if (p.has("capnu") && !p.is_string("capnu")) capnu = p.num("capnu");
    else if (p.str("capnu", "auto") != "auto") fail(ErrorCode::ConfigError, p.where("capnu") + ": expected \"auto\" or a number");
    const auto rep = region_energy(plane, perf, box, h_local, capnu, opt);
    out.resolved["capnu_value"] = rep.capnu;
    out.resolved["rational_direction_warning"] = rep.rational_direction_warning;
    std::ostringstream csv;
    csv << "k1,k2,k3,tau,energy\n";
    for (const auto& c : rep.cells)
        csv << c.record.k[0] << "," << c.record.k[1] << "," << c.record.k[2] << "," << num(c.record.tau) << ","
            << num(c.energy) << "\n";
    csv << "total,predicted,rel_error\n" << num(rep.total_energy) << "," << num(rep.predicted) << "," << num(rep.rel_error)
        << "\n";
    out.csv = csv.str();
}

inline const char* kObstacleHeader = "eps,L2_diff,J_eps,J_limit,iters\n";

inline void run_solve_eps(Params& p, ScenarioOutput& out) {
    const auto spec = problem_param(p, 1.0 / 128.0);
    const auto plane = plane_param(p, 3, spec.omega);
    const auto shape = shape_param(p, "shape", "ball:1");
    const double eps = p.num("eps", 0.25);
    const auto sor = sor_param(p);
    auto res = solve_eps(spec, plane, PerforationSpec(eps, 3, shape), sor);
    out.csv = std::string(kObstacleHeader) + num(eps) + ",," + num(res.J) + ",," + std::to_string(res.iterations) + "\n";
    out.fields.emplace_back("u_eps", std::move(res));
}

inline void run_solve_limit(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    const auto spec = problem_param(p, 1.0 / 128.0);
    const auto plane = plane_param(p, 3, spec.omega);
    const auto shape = shape_param(p, "shape", "ball:1");
    const double capnu = capnu_param(p, shape, plane.normal(), ctx);
    const auto sor = sor_param(p);
    auto res = solve_limit(spec, plane, capnu, sor);
    out.resolved["complementarity"] = res.complementarity;
    out.csv = std::string(kObstacleHeader) + ",,," + num(res.J) + "," + std::to_string(res.iterations) + "\n";
    out.fields.emplace_back("u_limit", std::move(res));
}

inline void run_converge(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    const auto spec = problem_param(p, 1.0 / 128.0);
    const auto plane = plane_param(p, 3, spec.omega);
    const auto shape = shape_param(p, "shape", "ball:1");
    const auto eps = p.nums("eps", std::vector<double>{0.25, 0.125, 0.0625});
    const double capnu = capnu_param(p, shape, plane.normal(), ctx);
    const auto sor = sor_param(p);
    auto table = convergence_study(spec, plane, shape, eps, capnu, sor);
    std::ostringstream csv;
    csv << kObstacleHeader;
    for (const auto& r : table.rows)
        csv << num(r.eps) << "," << num(r.l2_diff) << "," << num(r.J_eps) << "," << num(r.J_limit) << "," << r.iterations
            << "\n";
    out.resolved["complementarity"] = table.limit.complementarity;
    out.csv = csv.str();
    out.fields.emplace_back("u_limit", std::move(table.limit));
}

inline void run_accept(Params& p, ScenarioOutput& out, const RunContext& ctx) {
    AcceptanceOptions o;
    o.quick = p.flag("quick", ctx.quick);
    o.threads = ctx.threads;
    o.seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<std::int64_t>(ctx.seed)));
    Suite suite;
    try {
        suite = parse_suite(p.str("suite", "all"));
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, p.where("suite") + ": " + e.what());
    }
    out.verdicts = run_acceptance(suite, o, ctx.log);
    std::ostringstream csv;
    csv << "criterion,name,pass,indicative,seconds,detail\n";
    for (const auto& v : out.verdicts) {
        std::string detail = v.detail;
        for (auto& ch : detail)
            if (ch == ',' || ch == '"') ch = ';';
        csv << v.id << "," << v.name << "," << (v.pass ? "pass" : "fail") << "," << (v.indicative ? "yes" : "no") << ","
            << num(v.seconds) << "," << detail << "\n";
    }
    out.csv = csv.str();
}

} // namespace harness_detail

/// Named scenarios usable without spelling out their parameters.
inline json builtin_scenario(const std::string& name) {
    if (name == "equidist-sqrt23")
        return {{"name", name},
                {"kind", "equidist"},
                {"alpha", {std::sqrt(2.0), std::sqrt(3.0)}},
                {"p", 0.5},
                {"eps", {1.0 / 64, 1.0 / 128, 1.0 / 256}},
                {"t", {0.0, 0.25, 0.5, 0.75}}};
    if (name == "disk-capacity") return {{"name", name}, {"kind", "capacity"}, {"shape", "ball:1"}, {"nu", {1, 2, 3}}};
    if (name == "ball-avgcap") return {{"name", name}, {"kind", "avgcap"}, {"shape", "ball:0.5"}, {"nu", {0.3, -0.5, 0.8}}};
    if (name == "kesten") return {{"name", name}, {"kind", "discrepancy"}, {"kesten", 50}, {"N", 100000}};
    return nullptr;
}

inline ScenarioOutput run_scenario(const json& sc, const std::string& path, const RunContext& ctx) {
    using namespace harness_detail;
    if (!sc.is_object()) fail(ErrorCode::ConfigError, path + ": expected an object");
    json effective = sc;
    if (!sc.contains("kind")) {
        if (!sc.contains("name") || !sc["name"].is_string())
            fail(ErrorCode::ConfigError, path + ".kind: required string is missing");
        const auto base = builtin_scenario(sc["name"].get<std::string>());
        if (base.is_null()) fail(ErrorCode::ConfigError, path + ".name: unknown built-in scenario and no kind given");
        effective = base;
        for (auto it = sc.begin(); it != sc.end(); ++it) effective[it.key()] = it.value();
    }
    if (!effective["kind"].is_string()) fail(ErrorCode::ConfigError, path + ".kind: expected a string");
    ScenarioOutput out;
    out.kind = effective["kind"].get<std::string>();
    out.name = effective.contains("name") && effective["name"].is_string() ? effective["name"].get<std::string>() : out.kind;
    Params p(effective, path);
    try {
        if (out.kind == "count") run_count(p, out);
        else if (out.kind == "equidist") run_equidist(p, out);
        else if (out.kind == "discrepancy") run_discrepancy(p, out, ctx);
        else if (out.kind == "capacity") run_capacity(p, out);
        else if (out.kind == "avgcap") run_avgcap(p, out, ctx);
        else if (out.kind == "corrector-energy") run_corrector(p, out, ctx);
        else if (out.kind == "solve-eps") run_solve_eps(p, out);
        else if (out.kind == "solve-limit") run_solve_limit(p, out, ctx);
        else if (out.kind == "converge") run_converge(p, out, ctx);
        else if (out.kind == "accept") run_accept(p, out, ctx);
        else fail(ErrorCode::ConfigError, path + ".kind: unknown scenario kind '" + out.kind + "'");
        p.finish();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(e.code(), "scenario '" + out.name + "': " + std::string(e.what()));
    }
    json resolved = {{"name", out.name}, {"kind", out.kind}};
    for (auto it = p.resolved.begin(); it != p.resolved.end(); ++it) resolved[it.key()] = it.value();
    for (auto it = out.resolved.begin(); it != out.resolved.end(); ++it) resolved[it.key()] = it.value();
    out.resolved = resolved;
    return out;
}

/// Runs every scenario of a config document.
///
/// Schema (version 1): {"schema_version": 1, "seed": int, "threads": int,
/// "quick": bool, "output_dir": str, "scenarios": [ {...}, ... ]}.
inline ReportBundle run(const json& config, RunContext ctx = {}) {
    if (!config.is_object()) fail(ErrorCode::ConfigError, "config: expected an object");
    static const std::set<std::string> known{"schema_version", "seed", "threads", "quick", "output_dir", "scenarios"};
    for (auto it = config.begin(); it != config.end(); ++it)
        if (!known.count(it.key())) fail(ErrorCode::ConfigError, it.key() + ": unknown key");
    if (config.contains("schema_version")) {
        if (!config["schema_version"].is_number_integer() || config["schema_version"].get<int>() != kSchemaVersion)
            fail(ErrorCode::ConfigError, "schema_version: expected " + std::to_string(kSchemaVersion));
    }
    if (config.contains("seed")) {
        if (!config["seed"].is_number_integer()) fail(ErrorCode::ConfigError, "seed: expected an integer");
        ctx.seed = config["seed"].get<std::uint64_t>();
    }
    if (config.contains("threads")) {
        if (!config["threads"].is_number_integer() || config["threads"].get<int>() < 1)
            fail(ErrorCode::ConfigError, "threads: expected a positive integer");
        ctx.threads = config["threads"].get<unsigned>();
    }
    if (config.contains("quick")) {
        if (!config["quick"].is_boolean()) fail(ErrorCode::ConfigError, "quick: expected true or false");
        ctx.quick = config["quick"].get<bool>();
    }
    json scenarios = json::array();
    if (config.contains("scenarios")) {
        if (!config["scenarios"].is_array()) fail(ErrorCode::ConfigError, "scenarios: expected a list");
        scenarios = config["scenarios"];
    }

    ReportBundle bundle;
    json resolved = json::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        bundle.scenarios.push_back(run_scenario(scenarios[i], "scenarios[" + std::to_string(i) + "]", ctx));
        resolved.push_back(bundle.scenarios.back().resolved);
    }
    bundle.manifest = {{"tool", kToolVersion},
                       {"schema_version", kSchemaVersion},
                       {"seed", ctx.seed},
                       {"threads", ctx.threads},
                       {"quick", ctx.quick},
                       {"scenarios", resolved}};
    return bundle;
}

/// Writes <name>.csv per scenario, field dumps, acceptance.txt and manifest.json.
inline void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::filesystem::path& file, const std::string& text) {
        std::ofstream out(file, std::ios::binary);
        require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write " + file.string());
        out << text;
    };
    std::string verdicts;
    for (const auto& s : bundle.scenarios) {
        write(dir / (s.name + ".csv"), s.csv);
        for (const auto& [label, field] : s.fields) write_field((dir / (s.name + "." + label + ".field")).string(), field);
        for (const auto& v : s.verdicts) verdicts += format_verdict(v) + "\n";
    }
    if (!verdicts.empty()) write(dir / "acceptance.txt", verdicts);
    write(dir / "manifest.json", bundle.manifest.dump(2) + "\n");
}

inline json load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorCode::ConfigError, "cannot open config '" + file.string() + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, file.string() + ": " + e.what());
    }
}

} // namespace thinobs

#endif
