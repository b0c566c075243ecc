#ifndef THINOBS_OBSTACLE_HPP
#define THINOBS_OBSTACLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "lattice.hpp"

namespace thinobs {

/// Scalar data on the box: a constant, or a smooth compactly supported bump
/// height * (1 - |x - c|^2 / r^2)^2 inside B_r(c), 0 outside.
struct FieldFn {
    enum class Kind { Const, Bump };

    Kind kind = Kind::Const;
    double value = 0.0;
    Vec center;
    double radius = 1.0;
    double height = 0.0;

    static FieldFn constant(double v) { return {Kind::Const, v, {}, 1.0, 0.0}; }
    static FieldFn bump(Vec c, double r, double height) {
        require(r > 0.0, ErrorCode::InvalidArgument, "bump radius must be positive");
        return {Kind::Bump, 0.0, std::move(c), r, height};
    }

    /// "const:v" or "bump:c1,..,cn,radius,height".
    static FieldFn parse(const std::string& text) {
        const auto colon = text.find(':');
        require(colon != std::string::npos, ErrorCode::InvalidArgument, "expected kind:params, got '" + text + "'");
        const auto kind = text.substr(0, colon);
        const auto params = parse_vector(text.substr(colon + 1));
        if (kind == "const") {
            require(params.size() == 1, ErrorCode::InvalidArgument, "const takes one value");
            return constant(params[0]);
        }
        if (kind == "bump") {
            require(params.size() >= 3, ErrorCode::InvalidArgument, "bump takes center, radius, height");
            return bump(Vec(params.begin(), params.end() - 2), params[params.size() - 2], params.back());
        }
        fail(ErrorCode::InvalidArgument, "unknown function kind '" + kind + "'");
    }

    std::string descriptor() const {
        if (kind == Kind::Const) return "const:" + format_number(value);
        std::string s = "bump:";
        for (double c : center) s += format_number(c) + ",";
        return s + format_number(radius) + "," + format_number(height);
    }

    double operator()(std::span<const double> x) const {
        if (kind == Kind::Const) return value;
        require(x.size() == center.size(), ErrorCode::InvalidArgument, "bump: dimension mismatch");
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - center[i]) * (x[i] - center[i]);
        q /= radius * radius;
        return q >= 1.0 ? 0.0 : height * (1.0 - q) * (1.0 - q);
    }

    /// Upper bound of |f| over R^n.
    double sup_abs() const { return kind == Kind::Const ? std::abs(value) : std::abs(height); }
};

struct ProblemSpec {
    Box omega = Box::cube(3, 0.0, 1.0);
    double h = 1.0 / 128.0;
    FieldFn psi = FieldFn::constant(0.0);
    FieldFn f = FieldFn::constant(0.0);
};

struct SorOptions {
    double omega = 1.5;
    std::size_t max_sweeps = 200000;
    /// Stop once the largest update is below tol * scale (scale = ||psi||_inf,
    /// or ||f||_inf L^2 when psi vanishes).
    double tol = 1e-8;
    /// Sweeps between energy evaluations for the monotonicity check.
    std::size_t check_every = 100;
};

/// Node lattice of the box, boundary included, last index fastest.
struct BoxGrid {
    Box omega;
    double h = 0.0;
    std::array<std::size_t, 3> n{};

    BoxGrid() = default;
    BoxGrid(Box b, double spacing) : omega(std::move(b)), h(spacing) {
        require(omega.dim() == 3, ErrorCode::NotSupported, "obstacle solves support n = 3 only");
        require(h > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
        for (int a = 0; a < 3; ++a) {
            const double cells = omega.axes[a].length() / h;
            const double rounded = std::round(cells);
            require(rounded >= 2.0 && std::abs(cells - rounded) <= 1e-9 * rounded, ErrorCode::InvalidArgument,
                    "box sides must be integer multiples of h");
            n[a] = static_cast<std::size_t>(rounded) + 1;
        }
    }

    std::size_t node_count() const { return n[0] * n[1] * n[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * n[1] + j) * n[2] + k; }
    double coord(int axis, std::size_t i) const { return omega.axes[axis].lo + h * static_cast<double>(i); }
    std::array<double, 3> position(std::size_t i, std::size_t j, std::size_t k) const {
        return {coord(0, i), coord(1, j), coord(2, k)};
    }
    bool interior(std::size_t i, std::size_t j, std::size_t k) const {
        return i > 0 && j > 0 && k > 0 && i + 1 < n[0] && j + 1 < n[1] && k + 1 < n[2];
    }
};

/// Nodes carrying the thin constraint: one per grid column along the dominant
/// axis of nu, the interior node nearest to where the column pierces the plane.
struct ThinLayer {
    std::vector<std::size_t> nodes;
    /// Plane point of each node's column.
    std::vector<std::array<double, 3>> points;
    /// Surface quadrature weight per node: h^2 / |nu_d|.
    double weight = 0.0;
};

inline ThinLayer thin_layer(const BoxGrid& g, const HyperplaneSpec& plane) {
    require(plane.dim() == 3, ErrorCode::NotSupported, "obstacle solves support n = 3 only");
    const auto& nu = plane.normal();
    const int d = static_cast<int>(dominant_axis(nu));
    const int a = (d + 1) % 3, b = (d + 2) % 3;
    ThinLayer layer;
    layer.weight = g.h * g.h / std::abs(nu[d]);
    std::array<std::size_t, 3> idx{};
    for (std::size_t ia = 1; ia + 1 < g.n[a]; ++ia)
        for (std::size_t ib = 1; ib + 1 < g.n[b]; ++ib) {
            std::array<double, 3> p{};
            p[a] = g.coord(a, ia);
            p[b] = g.coord(b, ib);
            p[d] = (plane.offset() - nu[a] * p[a] - nu[b] * p[b]) / nu[d];
            const double t = std::round((p[d] - g.omega.axes[d].lo) / g.h);
            if (t < 1.0 || t > static_cast<double>(g.n[d] - 2)) continue;
            idx[a] = ia;
            idx[b] = ib;
            idx[d] = static_cast<std::size_t>(t);
            layer.nodes.push_back(g.index(idx[0], idx[1], idx[2]));
            layer.points.push_back(p);
        }
    return layer;
}

/// Subset of the thin layer inside the perforation: columns whose plane
/// point lies in a_eps T + eps k for an enumerated intersection k.
inline ThinLayer perforated_layer(const BoxGrid& g, const HyperplaneSpec& plane, const PerforationSpec& p) {
    const auto full = thin_layer(g, plane);
    std::set<std::vector<long long>> hosts;
    for (const auto& rec : enumerate_intersections(plane, p, g.omega)) hosts.insert(rec.k);
    const double eps = p.epsilon();
    const double a = p.hole_scale();
    ThinLayer out;
    out.weight = full.weight;
    std::vector<long long> k(3);
    Vec y(3);
    for (std::size_t i = 0; i < full.nodes.size(); ++i) {
        const auto& x = full.points[i];
        // Holes sit inside B_{eps/2}(eps k), so the host is the rounded lattice point.
        for (int c = 0; c < 3; ++c) {
            k[c] = static_cast<long long>(std::llround(x[c] / eps));
            y[c] = (x[c] - eps * static_cast<double>(k[c])) / a;
        }
        if (!hosts.count(k) || !p.shape().contains(y)) continue;
        out.nodes.push_back(full.nodes[i]);
        out.points.push_back(x);
    }
    return out;
}

struct VIResult {
    BoxGrid grid;
    std::vector<double> u;
    double J = 0.0;
    /// Nodes where the lower bound (or, in limit mode, the penalty) is active.
    std::vector<std::uint8_t> active;
    std::size_t iterations = 0;
    /// Largest update of the final sweep, relative to the stopping scale.
    double residual = 0.0;
    /// Scaled l-infinity residual of the discrete optimality conditions.
    double complementarity = 0.0;
    /// J never increased between checks.
    bool monotone = true;
    /// u >= lower at every interior node and u = 0 on the boundary.
    bool feasible = true;
    std::size_t constrained_nodes = 0;
};

namespace detail {

/// Projected SOR for
///   J(v) = h/2 sum_links (dv)^2 - h^3 sum f v + 1/2 sum_pen kappa h (psi - v)_+^2,
/// v >= lower at interior nodes, v = 0 on the boundary. kappa = capnu w / h
/// (zero off the penalty layer). Penalty nodes take exact local minimizers.
class ObstacleSweeper {
public:
    ObstacleSweeper(const BoxGrid& g, const ProblemSpec& spec)
        : g_(g), lower_(g.node_count(), 0.0), hf2_(g.node_count(), 0.0) {
        for (std::size_t i = 1; i + 1 < g.n[0]; ++i)
            for (std::size_t j = 1; j + 1 < g.n[1]; ++j)
                for (std::size_t k = 1; k + 1 < g.n[2]; ++k) {
                    const auto x = g.position(i, j, k);
                    hf2_[g.index(i, j, k)] = g.h * g.h * spec.f(x);
                }
    }

    std::vector<double>& lower() { return lower_; }

    void set_penalty(const ThinLayer& layer, const std::vector<double>& psi, double capnu) {
        kappa_.assign(g_.node_count(), 0.0);
        pen_psi_.assign(g_.node_count(), 0.0);
        const double kap = capnu * layer.weight / g_.h;
        for (std::size_t i = 0; i < layer.nodes.size(); ++i) {
            kappa_[layer.nodes[i]] = kap;
            pen_psi_[layer.nodes[i]] = psi[i];
        }
    }

    double penalty_kappa(std::size_t p) const { return kappa_.empty() ? 0.0 : kappa_[p]; }

    double energy(const std::vector<double>& v, const ProblemSpec& spec) const {
        (void)spec;
        const double h = g_.h;
        double grad = 0.0, src = 0.0, pen = 0.0;
        const std::size_t sx = g_.n[1] * g_.n[2], sy = g_.n[2];
        for (std::size_t i = 0; i < g_.n[0]; ++i)
            for (std::size_t j = 0; j < g_.n[1]; ++j)
                for (std::size_t k = 0; k < g_.n[2]; ++k) {
                    const std::size_t p = g_.index(i, j, k);
                    if (i + 1 < g_.n[0]) grad += (v[p + sx] - v[p]) * (v[p + sx] - v[p]);
                    if (j + 1 < g_.n[1]) grad += (v[p + sy] - v[p]) * (v[p + sy] - v[p]);
                    if (k + 1 < g_.n[2]) grad += (v[p + 1] - v[p]) * (v[p + 1] - v[p]);
                    src += hf2_[p] * v[p];
                    const double kap = penalty_kappa(p);
                    if (kap > 0.0) {
                        const double gap = std::max(0.0, pen_psi_[p] - v[p]);
                        pen += kap * gap * gap;
                    }
                }
        return 0.5 * h * grad - h * src + 0.5 * h * pen;
    }

    /// One lexicographic sweep; returns the largest update.
    double sweep(std::vector<double>& v, double omega) const {
        const std::size_t sx = g_.n[1] * g_.n[2], sy = g_.n[2];
        const bool has_pen = !kappa_.empty();
        double biggest = 0.0;
        for (std::size_t i = 1; i + 1 < g_.n[0]; ++i)
            for (std::size_t j = 1; j + 1 < g_.n[1]; ++j) {
                const std::size_t row = g_.index(i, j, 0);
                for (std::size_t k = 1; k + 1 < g_.n[2]; ++k) {
                    const std::size_t p = row + k;
                    const double sum = v[p - sx] + v[p + sx] + v[p - sy] + v[p + sy] + v[p - 1] + v[p + 1];
                    const double gs = (sum + hf2_[p]) / 6.0;
                    double next;
                    if (has_pen && kappa_[p] > 0.0) {
                        next = gs >= pen_psi_[p] ? gs : (sum + hf2_[p] + kappa_[p] * pen_psi_[p]) / (6.0 + kappa_[p]);
                        next = std::max(next, lower_[p]);
                    } else {
                        next = std::max(lower_[p], v[p] + omega * (gs - v[p]));
                    }
                    biggest = std::max(biggest, std::abs(next - v[p]));
                    v[p] = next;
                }
            }
        return biggest;
    }

    /// Largest violation of the discrete optimality conditions, in units of v.
    double complementarity(const std::vector<double>& v, std::vector<std::uint8_t>& active) const {
        const std::size_t sx = g_.n[1] * g_.n[2], sy = g_.n[2];
        active.assign(g_.node_count(), 0);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < g_.n[0]; ++i)
            for (std::size_t j = 1; j + 1 < g_.n[1]; ++j)
                for (std::size_t k = 1; k + 1 < g_.n[2]; ++k) {
                    const std::size_t p = g_.index(i, j, k);
                    const double sum = v[p - sx] + v[p + sx] + v[p - sy] + v[p + sy] + v[p - 1] + v[p + 1];
                    const double kap = penalty_kappa(p);
                    const double gap = kap > 0.0 ? std::max(0.0, pen_psi_[p] - v[p]) : 0.0;
                    const double grad = (6.0 * v[p] - sum - hf2_[p] - kap * gap) / 6.0;
                    if (v[p] <= lower_[p] + 1e-10) {
                        active[p] = 1;
                        worst = std::max(worst, -grad);
                    } else {
                        if (gap > 0.0) active[p] = 1;
                        worst = std::max(worst, std::abs(grad));
                    }
                }
        return worst;
    }

private:
    const BoxGrid& g_;
    std::vector<double> lower_;
    std::vector<double> hf2_;
    std::vector<double> kappa_;
    std::vector<double> pen_psi_;
};

inline void check_admissible(const BoxGrid& g, const ProblemSpec& spec) {
    // Nodes on or next to the boundary.
    auto near_edge = [&](std::size_t i, std::size_t j, std::size_t k) {
        return i <= 1 || j <= 1 || k <= 1 || i + 2 >= g.n[0] || j + 2 >= g.n[1] || k + 2 >= g.n[2];
    };
    for (std::size_t i = 0; i < g.n[0]; ++i)
        for (std::size_t j = 0; j < g.n[1]; ++j)
            for (std::size_t k = 0; k < g.n[2]; ++k) {
                if (!near_edge(i, j, k)) continue;
                const auto x = g.position(i, j, k);
                if (spec.psi(x) > 0.0)
                    fail(ErrorCode::InfeasibleObstacle, "obstacle is positive next to the boundary");
            }
}

inline double stop_scale(const ProblemSpec& spec) {
    const double psi = spec.psi.kind == FieldFn::Kind::Const ? std::max(spec.psi.value, 0.0) : std::max(spec.psi.height, 0.0);
    if (psi > 0.0) return psi;
    double side = 0.0;
    for (const auto& a : spec.omega.axes) side = std::max(side, a.length());
    return spec.f.sup_abs() * side * side;
}

inline VIResult run_sor(const BoxGrid& g, const ProblemSpec& spec, ObstacleSweeper& sw, const SorOptions& opt,
                        const std::vector<double>* initial) {
    require(opt.omega > 0.0 && opt.omega < 2.0, ErrorCode::InvalidArgument, "SOR factor must lie in (0, 2)");
    VIResult res;
    res.grid = g;
    res.u.assign(g.node_count(), 0.0);
    if (initial) {
        require(initial->size() == g.node_count(), ErrorCode::InvalidArgument, "initial field has the wrong size");
        for (std::size_t i = 1; i + 1 < g.n[0]; ++i)
            for (std::size_t j = 1; j + 1 < g.n[1]; ++j)
                for (std::size_t k = 1; k + 1 < g.n[2]; ++k) {
                    const std::size_t p = g.index(i, j, k);
                    res.u[p] = std::max((*initial)[p], sw.lower()[p]);
                }
    } else {
        res.u = sw.lower();
        for (std::size_t p = 0; p < res.u.size(); ++p) res.u[p] = std::max(res.u[p], 0.0);
    }

    const double scale = stop_scale(spec);
    const double target = opt.tol * scale;
    double last_j = sw.energy(res.u, spec);
    bool done = false;
    double update = 0.0;
    while (res.iterations < opt.max_sweeps) {
        update = sw.sweep(res.u, opt.omega);
        ++res.iterations;
        if (update <= target) done = true;
        if (done || res.iterations % opt.check_every == 0) {
            const double j = sw.energy(res.u, spec);
            if (j > last_j + 1e-12 * std::max(1.0, std::abs(last_j))) res.monotone = false;
            last_j = j;
        }
        if (done) break;
    }
    if (!done)
        fail(ErrorCode::NoConvergence, "projected SOR did not settle within " + std::to_string(opt.max_sweeps) + " sweeps");
    res.J = last_j;
    for (std::size_t i = 0; i < g.n[0]; ++i)
        for (std::size_t j = 0; j < g.n[1]; ++j)
            for (std::size_t k = 0; k < g.n[2]; ++k) {
                const std::size_t p = g.index(i, j, k);
                const double floor_value = g.interior(i, j, k) ? std::max(sw.lower()[p], 0.0) : 0.0;
                if (g.interior(i, j, k) ? res.u[p] < floor_value : res.u[p] != 0.0) res.feasible = false;
            }
    res.residual = scale > 0.0 ? update / scale : update;
    const double worst = sw.complementarity(res.u, res.active);
    res.complementarity = scale > 0.0 ? worst / scale : worst;
    return res;
}

} // namespace detail

/// eps-level thin obstacle problem: v >= psi on Gamma_eps nodes, v >= 0
/// elsewhere, v = 0 on the boundary.
inline VIResult solve_eps(const ProblemSpec& spec, const HyperplaneSpec& plane, const PerforationSpec& p,
                          const SorOptions& opt = {}, const std::vector<double>* initial = nullptr) {
    BoxGrid g(spec.omega, spec.h);
    require(p.dim() == 3, ErrorCode::NotSupported, "obstacle solves support n = 3 only");
    require(spec.h <= 0.5 * p.hole_radius() * (1.0 + 1e-12), ErrorCode::ResolutionLost,
            "grid spacing exceeds half the hole radius a_eps * support_radius");
    detail::check_admissible(g, spec);
    detail::ObstacleSweeper sw(g, spec);
    const auto layer = perforated_layer(g, plane, p);
    for (std::size_t i = 0; i < layer.nodes.size(); ++i)
        sw.lower()[layer.nodes[i]] = std::max(spec.psi(layer.points[i]), 0.0);
    auto res = detail::run_sor(g, spec, sw, opt, initial);
    res.constrained_nodes = layer.nodes.size();
    return res;
}

/// v >= psi on every node of the thin layer of the plane (hard thin obstacle on Gamma).
inline VIResult solve_thin(const ProblemSpec& spec, const HyperplaneSpec& plane, const SorOptions& opt = {}) {
    BoxGrid g(spec.omega, spec.h);
    detail::check_admissible(g, spec);
    detail::ObstacleSweeper sw(g, spec);
    const auto layer = thin_layer(g, plane);
    for (std::size_t i = 0; i < layer.nodes.size(); ++i)
        sw.lower()[layer.nodes[i]] = std::max(spec.psi(layer.points[i]), 0.0);
    auto res = detail::run_sor(g, spec, sw, opt, nullptr);
    res.constrained_nodes = layer.nodes.size();
    return res;
}

/// Limit problem: J plus 1/2 capnu sum_Gamma w (psi - v)_+^2, v >= 0.
inline VIResult solve_limit(const ProblemSpec& spec, const HyperplaneSpec& plane, double capnu,
                            const SorOptions& opt = {}, const std::vector<double>* initial = nullptr) {
    require(capnu >= 0.0, ErrorCode::InvalidArgument, "averaged capacity must be non-negative");
    BoxGrid g(spec.omega, spec.h);
    detail::check_admissible(g, spec);
    detail::ObstacleSweeper sw(g, spec);
    const auto layer = thin_layer(g, plane);
    if (capnu > 0.0) {
        std::vector<double> psi(layer.nodes.size());
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = spec.psi(layer.points[i]);
        sw.set_penalty(layer, psi, capnu);
    }
    auto res = detail::run_sor(g, spec, sw, opt, initial);
    res.constrained_nodes = capnu > 0.0 ? layer.nodes.size() : 0;
    return res;
}

/// sqrt(h^3 sum (a - b)^2).
inline double l2_difference(const VIResult& a, const VIResult& b) {
    require(a.u.size() == b.u.size(), ErrorCode::InvalidArgument, "fields live on different grids");
    double s = 0.0;
    for (std::size_t p = 0; p < a.u.size(); ++p) s += (a.u[p] - b.u[p]) * (a.u[p] - b.u[p]);
    return std::sqrt(s * a.grid.h * a.grid.h * a.grid.h);
}

inline double l2_norm(const VIResult& a) {
    double s = 0.0;
    for (double v : a.u) s += v * v;
    return std::sqrt(s * a.grid.h * a.grid.h * a.grid.h);
}

struct ConvergenceRow {
    double eps = 0.0;
    double l2_diff = 0.0;
    double J_eps = 0.0;
    double J_limit = 0.0;
    std::size_t iterations = 0;
    std::size_t constrained_nodes = 0;
    bool monotone = true;
    bool feasible = true;
};

struct ConvergenceTable {
    VIResult limit;
    std::vector<ConvergenceRow> rows;
};

inline ConvergenceTable convergence_study(const ProblemSpec& spec, const HyperplaneSpec& plane, const ShapeSpec& shape,
                                          const std::vector<double>& eps_list, double capnu, const SorOptions& opt = {}) {
    ConvergenceTable table;
    table.limit = solve_limit(spec, plane, capnu, opt);
    for (double eps : eps_list) {
        PerforationSpec p(eps, 3, shape);
        const auto ue = solve_eps(spec, plane, p, opt);
        ConvergenceRow row;
        row.eps = eps;
        row.l2_diff = l2_difference(ue, table.limit);
        row.J_eps = ue.J;
        row.J_limit = table.limit.J;
        row.iterations = ue.iterations;
        row.constrained_nodes = ue.constrained_nodes;
        row.monotone = ue.monotone;
        row.feasible = ue.feasible;
        table.rows.push_back(row);
    }
    return table;
}

inline constexpr std::size_t kFieldHeaderBytes = 64;

/// Flat little-endian doubles in node order after a 64-byte text header.
inline void write_field(const std::string& path, const VIResult& res) {
    const auto& g = res.grid;
    char header[256];
    std::snprintf(header, sizeof header, "thinobs n=%zu,%zu,%zu h=%.9g", g.n[0], g.n[1], g.n[2], g.h);
    std::string text(header);
    std::snprintf(header, sizeof header, " lo=%g,%g,%g hi=%g,%g,%g", g.omega.axes[0].lo, g.omega.axes[1].lo,
                  g.omega.axes[2].lo, g.omega.axes[0].hi, g.omega.axes[1].hi, g.omega.axes[2].hi);
    // The box corners are informative only; drop them when they do not fit.
    if (text.size() + std::strlen(header) < kFieldHeaderBytes) text += header;
    text.resize(kFieldHeaderBytes - 1, ' ');
    text.push_back('\n');
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(res.u.data()), static_cast<std::streamsize>(res.u.size() * sizeof(double)));
}

} // namespace thinobs

#endif
