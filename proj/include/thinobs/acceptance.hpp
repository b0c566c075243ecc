#ifndef THINOBS_ACCEPTANCE_HPP
#define THINOBS_ACCEPTANCE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "avgcap.hpp"
#include "capacity.hpp"
#include "corrector.hpp"
#include "lattice.hpp"
#include "obstacle.hpp"
#include "udist.hpp"

namespace thinobs {

struct Verdict {
    int id = 0;
    std::string name;
    bool pass = false;
    /// Run on reduced grids; the verdict is indicative only.
    bool indicative = false;
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::string detail;
};

struct AcceptanceOptions {
    bool quick = false;
    unsigned threads = 1;
    std::uint64_t seed = 20240611;
};

enum class Suite { Counting, Discrepancy, Capacity, Avgcap, Corrector, Obstacle, All };

inline Suite parse_suite(const std::string& name) {
    if (name == "counting") return Suite::Counting;
    if (name == "discrepancy") return Suite::Discrepancy;
    if (name == "capacity") return Suite::Capacity;
    if (name == "avgcap") return Suite::Avgcap;
    if (name == "corrector") return Suite::Corrector;
    if (name == "obstacle") return Suite::Obstacle;
    if (name == "all") return Suite::All;
    fail(ErrorCode::InvalidArgument, "unknown acceptance suite '" + name + "'");
}

inline std::vector<int> suite_criteria(Suite s) {
    switch (s) {
    case Suite::Counting: return {4};
    case Suite::Discrepancy: return {5, 6};
    case Suite::Capacity: return {1};
    case Suite::Avgcap: return {2, 3};
    case Suite::Corrector: return {7};
    case Suite::Obstacle: return {8, 9};
    case Suite::All: return {1, 2, 3, 4, 5, 6, 7, 8, 9};
    }
    return {};
}

namespace accept_detail {

inline std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

/// Unit vectors with Gaussian components from a fixed seed.
inline std::vector<Vec> seeded_directions(std::uint64_t seed, std::size_t count) {
    const auto u = seeded_uniforms(seed, 2 * 3 * count);
    std::vector<Vec> out;
    for (std::size_t i = 0; i < count; ++i) {
        Vec v(3);
        for (int c = 0; c < 3; ++c) {
            // Box-Muller on two uniforms.
            const double u1 = 1.0 - u[6 * i + 2 * c], u2 = u[6 * i + 2 * c + 1];
            v[c] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        out.push_back(normalized(v));
    }
    return out;
}

inline Verdict disk_capacity(const AcceptanceOptions& o) {
    Verdict v{1, "disk capacity", false, o.quick, 0, 300, ""};
    const double h = o.quick ? 1.0 / 8.0 : 1.0 / 16.0;
    const auto grid = default_capacity_grid(h, 1.0, 16.0);
    const std::vector<Vec> dirs{{0, 0, 1}, normalized({1, 2, 3}), normalized({0.3, -0.5, 0.8})};
    double worst = 0.0;
    std::string values;
    for (const auto& nu : dirs) {
        const auto est = slice_capacity(ShapeSpec::ball(1.0), nu, 0.0, grid);
        worst = std::max(worst, std::abs(est.value - 8.0) / 8.0);
        values += fmt("%.4f ", est.value);
    }
    v.pass = worst <= 0.05;
    v.detail = "values " + values + fmt("worst rel err %.4f (tol 0.05)", worst);
    return v;
}

inline Verdict ball_average(const AcceptanceOptions& o) {
    Verdict v{2, "averaged capacity of ball", false, o.quick, 0, 900, ""};
    const double r = 0.5;
    const double target = std::numbers::pi / 3.0;
    const double h = o.quick ? 1.0 / 8.0 : 1.0 / 32.0;
    const auto grid = default_capacity_grid(h, r, 16.0);
    ProfileOptions prof;
    prof.threads = o.threads;
    std::vector<double> vals;
    std::string values;
    for (const auto& nu : seeded_directions(o.seed, 3)) {
        vals.push_back(averaged_capacity(slice_profile(ShapeSpec::ball(r), nu, grid, prof)).value);
        values += fmt("%.4f ", vals.back());
    }
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    double mean = 0.0;
    for (double x : vals) mean += x / static_cast<double>(vals.size());
    const double spread = (*hi - *lo) / mean;
    double worst = 0.0;
    for (double x : vals) worst = std::max(worst, std::abs(x - target) / target);
    v.pass = worst <= 0.10 && spread <= 0.05;
    v.detail = "values " + values + fmt("vs pi/3=%.4f worst rel err %.3f (tol 0.10), spread %.4f (tol 0.05)", target,
                                        worst, spread) +
               fmt("; closed form 4*pi*r^2=%.4f", ball_averaged_capacity(r));
    return v;
}

inline Verdict scaling(const AcceptanceOptions& o) {
    Verdict v{3, "scaling identity", false, o.quick, 0, 900, ""};
    const double h = o.quick ? 1.0 / 8.0 : 1.0 / 16.0;
    const auto grid = default_capacity_grid(h, 1.0, 16.0);
    ProfileOptions prof;
    prof.threads = o.threads;
    if (o.quick) prof.m = 11;
    const Vec nu = normalized({0.3, -0.5, 0.8});
    const auto [scaled, base] = scaling_check(ShapeSpec::ball(1.0), nu, 0.5, grid, prof);
    const double rel = std::abs(scaled - base) / base;
    auto disk = [](double s) { return s * s >= 1.0 ? 0.0 : 8.0 * std::sqrt(1.0 - s * s); };
    const auto [as, ab] = scaling_check_analytic(disk, 1.0, 0.5, 3, QuadratureRule::Simpson, 21);
    const double arel = std::abs(as - ab);
    v.pass = rel <= 0.08 && arel <= 1e-10;
    v.detail = fmt("numeric %.4f vs %.4f rel %.4f (tol 0.08); analytic |diff| %.2e (tol 1e-10)", scaled, base, rel, arel);
    return v;
}

inline Verdict equidistribution(const AcceptanceOptions& o) {
    Verdict v{4, "equidistribution", false, false, 0, 60, ""};
    const SlopeVector alpha{{std::sqrt(2.0), std::sqrt(3.0)}};
    const Region E{{Box::cube(2, 0.0, 1.0)}};
    std::vector<double> ts;
    for (int i = 0; i < 16; ++i) ts.push_back(i / 16.0);
    const std::vector<double> eps{std::ldexp(1.0, -8)};
    double worst = 0.0;
    for (const auto& row : equidist_report(alpha, E, 0.5, eps, ts)) worst = std::max(worst, std::abs(row.report.ratio - 1.0));

    // Independent double loop at eps = 2^-6.
    const double e6 = std::ldexp(1.0, -6);
    const double w = std::sqrt(e6);
    bool match = true;
    for (double t : ts) {
        long long brute = 0;
        for (int i = 1; i < 64; ++i)
            for (int j = 1; j < 64; ++j) {
                const double x = std::sqrt(2.0) * i + std::sqrt(3.0) * j;
                const double fr = x - std::floor(x);
                double d = fr - t;
                d -= std::floor(d);
                if (d < w) ++brute;
            }
        if (brute != count_window(E, alpha, e6, t, w).a_count) match = false;
    }
    (void)o;
    v.pass = worst <= 0.05 && match;
    v.detail = fmt("max |ratio-1| %.4f (tol 0.05); brute-force match at 2^-6: ", worst) + (match ? "yes" : "no");
    return v;
}

inline Verdict kesten(const AcceptanceOptions& o) {
    Verdict v{5, "Kesten ratio", false, o.quick, 0, 300, ""};
    const std::size_t N = o.quick ? 10000 : 100000;
    const auto alphas = seeded_uniforms(o.seed, 50);
    std::vector<double> ratios;
    for (double a : alphas) ratios.push_back(kesten_ratio(a, N));
    const double med = median(ratios);
    v.pass = med >= 0.10 && med <= 0.40;
    v.detail = fmt("median %.4f over 50 alphas, N=%.0f (band [0.10, 0.40], 2/pi^2=%.4f)", med, static_cast<double>(N),
                   2.0 / (std::numbers::pi * std::numbers::pi));
    return v;
}

/// Supremum over half-open intervals with endpoints drawn from a dense
/// candidate set: the sample points, points just after them, and a uniform mesh.
inline double dense_interval_discrepancy(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double delta = 0.25 / (n * n * n);
    std::vector<double> cand{0.0, 1.0};
    for (double p : x) {
        cand.push_back(p);
        cand.push_back(std::min(1.0, p + delta));
    }
    for (int i = 1; i < 256; ++i) cand.push_back(i / 256.0);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    auto below = [&](double t) { return static_cast<double>(std::lower_bound(x.begin(), x.end(), t) - x.begin()); };
    double best = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t j = i + 1; j < cand.size(); ++j) {
            const double a = cand[i], b = cand[j];
            const double count = below(b) - below(a);
            best = std::max(best, std::abs(count / n - (b - a)));
        }
    // [a, a + 0) limits: a single point mass at a.
    for (std::size_t i = 0; i < x.size();) {
        std::size_t j = i;
        while (j < x.size() && x[j] == x[i]) ++j;
        best = std::max(best, static_cast<double>(j - i) / n);
        i = j;
    }
    return best;
}

inline Verdict discrepancy_oracle(const AcceptanceOptions& o) {
    Verdict v{6, "discrepancy oracle equivalence", false, false, 0, 60, ""};
    std::mt19937_64 rng(o.seed + 6);
    double worst_excess = 0.0;
    bool ok = true;
    for (int s = 0; s < 20; ++s) {
        const std::size_t N = 1 + rng() % 200;
        const auto vals = seeded_uniforms(rng(), N);
        SequenceSample sample{vals};
        const double scan = extreme_discrepancy_scan(sample);
        const double brute = dense_interval_discrepancy(vals);
        const double diff = std::abs(scan - brute);
        const double slack = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
        worst_excess = std::max(worst_excess, diff / slack);
        if (diff > slack) ok = false;
    }
    v.pass = ok;
    v.detail = fmt("20 samples, worst |scan - brute| / (1/N^2) = %.3g (tol 1)", worst_excess);
    return v;
}

inline Verdict corrector_energy(const AcceptanceOptions& o) {
    Verdict v{7, "corrector energy", false, o.quick, 0, 1800, ""};
    PerforationSpec p(1.0 / 16.0, 3, ShapeSpec::ball(0.5));
    const auto plane = HyperplaneSpec::through({1.0, std::sqrt(2.0), std::sqrt(3.0)}, Vec{0.5, 0.5, 0.5});
    const double h_unit = o.quick ? 1.0 / 16.0 : 1.0 / 32.0;
    CorrectorOptions opt;
    opt.threads = o.threads;
    const auto rep = region_energy(plane, p, Box::cube(3, 0.0, 1.0), h_unit * p.hole_scale(), -1.0, opt);

    // Rescaling identity on the first cell: direct unit-scale solve.
    double identity_err = 1.0;
    if (!rep.cells.empty()) {
        const auto& cell = rep.cells.front();
        auto solve = opt.solve;
        solve.far_field = false;
        const auto gamma = GammaSpec::slice(p.shape(), plane.normal(), cell.s_unit);
        const double unit = dirichlet_energy(cap_potential(gamma, cell_grid(p, h_unit * p.hole_scale(), opt.growth), solve));
        identity_err = std::abs(cell.energy / std::pow(p.hole_scale(), p.dim() - 2.0) - unit) / unit;
    }
    v.pass = rep.rel_error <= 0.20 && identity_err <= 1e-10 && !rep.cells.empty();
    v.detail = fmt("cells %.0f total %.5f predicted %.5f (sigma %.5f", static_cast<double>(rep.cells.size()),
                   rep.total_energy, rep.predicted, rep.sigma) +
               fmt(" capnu %.5f) rel err %.4f (tol 0.20); rescaling identity rel err %.1e (tol 1e-10)", rep.capnu,
                   rep.rel_error, identity_err);
    return v;
}

inline Verdict obstacle_trend(const AcceptanceOptions& o) {
    Verdict v{8, "obstacle convergence trend", false, o.quick, 0, 3600, ""};
    ProblemSpec spec;
    spec.h = o.quick ? 1.0 / 64.0 : 1.0 / 128.0;
    spec.psi = FieldFn::bump({0.5, 0.5, 0.5}, 0.35, 1.0);
    spec.f = FieldFn::constant(0.0);
    const auto plane = HyperplaneSpec::through({1.0, std::sqrt(2.0), std::sqrt(3.0)}, Vec{0.5, 0.5, 0.5});
    const auto shape = ShapeSpec::ball(1.0);
    ProfileOptions prof;
    prof.threads = o.threads;
    const double capnu =
        averaged_capacity(slice_profile(shape, plane.normal(), default_capacity_grid(1.0 / 16.0, 1.0), prof)).value;
    SorOptions sor;
    sor.omega = 1.9;
    const std::vector<double> eps = o.quick ? std::vector<double>{0.25, 0.125} : std::vector<double>{0.25, 0.125, 0.0625};
    const auto table = convergence_study(spec, plane, shape, eps, capnu, sor);
    bool decreasing = true, invariants = table.limit.monotone && table.limit.feasible;
    std::string diffs;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        diffs += fmt("%.5f ", r.l2_diff);
        if (i > 0 && !(r.l2_diff < table.rows[i - 1].l2_diff)) decreasing = false;
        invariants = invariants && r.monotone && r.feasible;
    }
    const double comp = table.limit.complementarity;
    v.pass = decreasing && comp <= 1e-5 && invariants;
    v.detail = "L2 diffs " + diffs + (decreasing ? "(strictly decreasing)" : "(NOT decreasing)") +
               fmt("; capnu %.4f; limit complementarity %.2e (tol 1e-5); ", capnu, comp) +
               "feasibility+monotonicity " + (invariants ? "ok" : "violated");
    return v;
}

inline Verdict trivial_obstacle(const AcceptanceOptions& o) {
    Verdict v{9, "trivial-obstacle identity", false, false, 0, 600, ""};
    (void)o;
    const auto plane = HyperplaneSpec::through({1.0, std::sqrt(2.0), std::sqrt(3.0)}, Vec{0.5, 0.5, 0.5});
    PerforationSpec p(0.125, 3, ShapeSpec::ball(1.0));
    bool all_zero = true;
    const std::vector<FieldFn> psis{FieldFn::constant(-0.1), FieldFn::bump({0.5, 0.5, 0.5}, 0.3, -1.0)};
    const std::vector<FieldFn> fs{FieldFn::constant(0.0), FieldFn::constant(-1.0), FieldFn::bump({0.4, 0.5, 0.6}, 0.3, -2.0)};
    for (const auto& psi : psis)
        for (const auto& f : fs) {
            ProblemSpec spec;
            spec.h = 1.0 / 64.0;
            spec.psi = psi;
            spec.f = f;
            const auto ue = solve_eps(spec, plane, p);
            const auto u = solve_limit(spec, plane, 4.0 * std::numbers::pi);
            for (std::size_t i = 0; i < u.u.size(); ++i)
                if (ue.u[i] != 0.0 || u.u[i] != 0.0) all_zero = false;
        }
    v.pass = all_zero;
    v.detail = std::string("u_eps and u identically zero over 6 (psi, f) pairs: ") + (all_zero ? "yes" : "no");
    return v;
}

} // namespace accept_detail

inline Verdict run_criterion(int id, const AcceptanceOptions& o) {
    using namespace accept_detail;
    static const std::vector<std::function<Verdict(const AcceptanceOptions&)>> table{
        disk_capacity, ball_average, scaling, equidistribution, kesten, discrepancy_oracle, corrector_energy,
        obstacle_trend, trivial_obstacle};
    require(id >= 1 && id <= 9, ErrorCode::InvalidArgument, "criteria are numbered 1..9");
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = table[static_cast<std::size_t>(id - 1)](o);
    } catch (const std::exception& e) {
        static const char* names[] = {"disk capacity", "averaged capacity of ball", "scaling identity",
                                      "equidistribution", "Kesten ratio", "discrepancy oracle equivalence",
                                      "corrector energy", "obstacle convergence trend", "trivial-obstacle identity"};
        v.id = id;
        v.name = names[id - 1];
        v.pass = false;
        v.detail = std::string("error: ") + e.what();
    }
    v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.budget_seconds > 0.0 && v.seconds > v.budget_seconds) {
        v.pass = false;
        v.detail += accept_detail::fmt("; over budget (%.0f s > %.0f s)", v.seconds, v.budget_seconds);
    }
    return v;
}

inline std::string format_verdict(const Verdict& v) {
    char head[128];
    std::snprintf(head, sizeof head, "[%s] criterion %d %s (%.1f s)%s: ", v.pass ? "PASS" : "FAIL", v.id,
                  v.name.c_str(), v.seconds, v.indicative ? " [indicative]" : "");
    return head + v.detail;
}

/// Runs the criteria of a suite, printing one line per criterion as it finishes.
inline std::vector<Verdict> run_acceptance(Suite suite, const AcceptanceOptions& o, std::ostream* log = nullptr) {
    std::vector<Verdict> out;
    for (int id : suite_criteria(suite)) {
        out.push_back(run_criterion(id, o));
        if (log) *log << format_verdict(out.back()) << std::endl;
    }
    return out;
}

} // namespace thinobs

#endif
