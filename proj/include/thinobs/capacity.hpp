#ifndef THINOBS_CAPACITY_HPP
#define THINOBS_CAPACITY_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "lattice.hpp"
#include "pcg.hpp"

namespace thinobs {

/// Compact set whose capacity potential is sought, in coordinates relative
/// to the grid centre.
struct GammaSpec {
    enum class Kind { Point, Solid, Slice };

    Kind kind = Kind::Point;
    ShapeSpec shape = ShapeSpec::ball(1.0);
    Vec nu;
    double s = 0.0;

    static GammaSpec point() { return {}; }
    static GammaSpec solid(ShapeSpec shape) { return {Kind::Solid, std::move(shape), {}, 0.0}; }
    /// shape ∩ {x·nu = s}.
    static GammaSpec slice(ShapeSpec shape, Vec nu, double s) {
        return {Kind::Slice, std::move(shape), normalized(std::move(nu)), s};
    }

    double support_radius() const { return kind == Kind::Point ? 0.0 : shape.support_radius(); }
};

/// Surface measure of the unit sphere in R^n.
inline double unit_sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// c_n in cap(B'_rho) = omega_n / c_n rho^(n-2).
inline double flat_disk_constant(int n) {
    require(n >= 3, ErrorCode::InvalidArgument, "flat disk capacity needs n >= 3");
    if (n == 3) return std::numbers::pi / 2.0;
    if (n == 4) return 1.0;
    auto double_factorial = [](int k) {
        double v = 1.0;
        for (int i = k; i > 1; i -= 2) v *= i;
        return v;
    };
    const double ratio = double_factorial(n - 4) / double_factorial(n - 3);
    return n % 2 ? ratio : std::numbers::pi * ratio / 2.0;
}

/// Capacity of the flat (n-1)-ball of radius rho in R^n.
inline double flat_disk_capacity(double rho, int n = 3) {
    return unit_sphere_area(n) / flat_disk_constant(n) * std::pow(rho, n - 2.0);
}

namespace detail {

/// `far_field` asks for R >= 2 * support (free-space capacities); cell
/// problems only need the target inside B_R.
inline void check_grid_for(const GammaSpec& gamma, const GridSpec& g, bool far_field = true) {
    if (g.dim != 3) fail(ErrorCode::NotSupported, "grid solves support n = 3 only");
    const double support = gamma.support_radius();
    require(support <= 1.0 + 1e-12, ErrorCode::InvalidArgument, "target set must lie in B_1");
    if (far_field)
        require(g.R >= 2.0 * std::max(support, 0.5), ErrorCode::InvalidArgument,
                "truncation radius must be >= 2 * support");
    else
        require(g.R >= support * (1.0 - 1e-12), ErrorCode::InvalidArgument, "target set must lie in B_R");
    if (gamma.kind != GammaSpec::Kind::Point)
        require(g.h <= 0.5 * support + 1e-15, ErrorCode::ResolutionLost,
                "grid spacing exceeds a quarter of the target's diameter");
    if (g.growth > 1.0)
        require(g.core >= support + g.h, ErrorCode::InvalidArgument, "graded grid core must cover the target set");
}

inline std::vector<NodeKind> classify(const TensorGrid& grid, const GammaSpec& gamma) {
    const std::size_t nx = grid.size(0), ny = grid.size(1), nz = grid.size(2);
    std::vector<NodeKind> kinds(grid.node_count(), NodeKind::Free);
    const double r2 = grid.spec().R * grid.spec().R * (1.0 - 1e-12);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t k = 0; k < nz; ++k) {
                const auto x = grid.position(i, j, k);
                if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] >= r2) kinds[grid.index(i, j, k)] = NodeKind::Outside;
            }

    switch (gamma.kind) {
    case GammaSpec::Kind::Point:
        kinds[grid.index(grid.nearest(0, 0.0), grid.nearest(1, 0.0), grid.nearest(2, 0.0))] = NodeKind::Gamma;
        break;
    case GammaSpec::Kind::Solid: {
        const double reach = gamma.shape.support_radius();
        for (std::size_t i = 0; i < nx; ++i) {
            if (std::abs(grid.coords(0)[i]) > reach) continue;
            for (std::size_t j = 0; j < ny; ++j) {
                if (std::abs(grid.coords(1)[j]) > reach) continue;
                for (std::size_t k = 0; k < nz; ++k) {
                    const auto x = grid.position(i, j, k);
                    if (gamma.shape.contains(x)) kinds[grid.index(i, j, k)] = NodeKind::Gamma;
                }
            }
        }
        break;
    }
    case GammaSpec::Kind::Slice: {
        // One node per grid column along the dominant normal axis: the node
        // nearest to where the column pierces the plane, kept when the
        // piercing point lies in the shape.
        const auto& nu = gamma.nu;
        require(nu.size() == 3, ErrorCode::InvalidArgument, "slice normal must have 3 components");
        const int d = static_cast<int>(dominant_axis(nu));
        const int a = (d + 1) % 3, b = (d + 2) % 3;
        const double reach = gamma.shape.support_radius();
        std::array<double, 3> p{};
        std::array<std::size_t, 3> idx{};
        for (std::size_t ia = 0; ia < grid.size(a); ++ia) {
            const double xa = grid.coords(a)[ia];
            if (std::abs(xa) > reach) continue;
            for (std::size_t ib = 0; ib < grid.size(b); ++ib) {
                const double xb = grid.coords(b)[ib];
                if (std::abs(xb) > reach) continue;
                p[a] = xa;
                p[b] = xb;
                p[d] = (gamma.s - nu[a] * xa - nu[b] * xb) / nu[d];
                if (!gamma.shape.contains(p)) continue;
                idx[a] = ia;
                idx[b] = ib;
                idx[d] = grid.nearest(d, p[d]);
                kinds[grid.index(idx[0], idx[1], idx[2])] = NodeKind::Gamma;
            }
        }
        break;
    }
    }
    return kinds;
}

/// Calls fn(p, q, w) for every grid link p -> q (q = p + stride along an axis).
template <class Fn>
void for_each_link(const TensorGrid& grid, Fn&& fn) {
    const std::size_t nx = grid.size(0), ny = grid.size(1), nz = grid.size(2);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t k = 0; k < nz; ++k) {
                const std::size_t p = grid.index(i, j, k);
                if (i + 1 < nx) fn(p, p + grid.stride(0), grid.dual(1, j) * grid.dual(2, k) * grid.inv_link(0, i));
                if (j + 1 < ny) fn(p, p + grid.stride(1), grid.dual(0, i) * grid.dual(2, k) * grid.inv_link(1, j));
                if (k + 1 < nz) fn(p, p + grid.stride(2), grid.dual(0, i) * grid.dual(1, j) * grid.inv_link(2, k));
            }
}

/// Finite-volume Laplacian on free nodes; entries at fixed nodes are zero.
class GridLaplacian {
public:
    GridLaplacian(const TensorGrid& grid, const std::vector<NodeKind>& kinds) : grid_(grid), kinds_(kinds) {
        diag_.assign(grid.node_count(), 0.0);
        for_each_link(grid, [&](std::size_t p, std::size_t q, double w) {
            diag_[p] += w;
            diag_[q] += w;
        });
    }

    double diag(std::size_t p) const { return diag_[p]; }

    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t nx = grid_.size(0), ny = grid_.size(1), nz = grid_.size(2);
        const std::size_t sx = grid_.stride(0), sy = grid_.stride(1);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t k = 0; k < nz; ++k) {
                    const std::size_t p = grid_.index(i, j, k);
                    if (kinds_[p] != NodeKind::Free) {
                        y[p] = 0.0;
                        continue;
                    }
                    // Free nodes are strictly inside B_R, hence never on the box faces.
                    const double wxm = grid_.dual(1, j) * grid_.dual(2, k) * grid_.inv_link(0, i - 1);
                    const double wxp = grid_.dual(1, j) * grid_.dual(2, k) * grid_.inv_link(0, i);
                    const double wym = grid_.dual(0, i) * grid_.dual(2, k) * grid_.inv_link(1, j - 1);
                    const double wyp = grid_.dual(0, i) * grid_.dual(2, k) * grid_.inv_link(1, j);
                    const double wzm = grid_.dual(0, i) * grid_.dual(1, j) * grid_.inv_link(2, k - 1);
                    const double wzp = grid_.dual(0, i) * grid_.dual(1, j) * grid_.inv_link(2, k);
                    y[p] = diag_[p] * x[p] - wxm * x[p - sx] - wxp * x[p + sx] - wym * x[p - sy] - wyp * x[p + sy] -
                           wzm * x[p - 1] - wzp * x[p + 1];
                }
            }
    }

    /// Symmetric SOR preconditioner: z = w(2-w) (D + wU)^{-1} D (D + wL)^{-1} r.
    void ssor(std::span<const double> r, std::span<double> z, double omega) const {
        const std::size_t nx = grid_.size(0), ny = grid_.size(1), nz = grid_.size(2);
        const std::size_t sx = grid_.stride(0), sy = grid_.stride(1);
        auto neighbours = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t p, bool lower) {
            double acc = 0.0;
            auto take = [&](std::size_t q, double w) {
                if (kinds_[q] == NodeKind::Free) acc += w * z[q];
            };
            if (lower) {
                take(p - sx, grid_.dual(1, j) * grid_.dual(2, k) * grid_.inv_link(0, i - 1));
                take(p - sy, grid_.dual(0, i) * grid_.dual(2, k) * grid_.inv_link(1, j - 1));
                take(p - 1, grid_.dual(0, i) * grid_.dual(1, j) * grid_.inv_link(2, k - 1));
            } else {
                take(p + sx, grid_.dual(1, j) * grid_.dual(2, k) * grid_.inv_link(0, i));
                take(p + sy, grid_.dual(0, i) * grid_.dual(2, k) * grid_.inv_link(1, j));
                take(p + 1, grid_.dual(0, i) * grid_.dual(1, j) * grid_.inv_link(2, k));
            }
            return acc;
        };
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j)
                for (std::size_t k = 0; k < nz; ++k) {
                    const std::size_t p = grid_.index(i, j, k);
                    z[p] = kinds_[p] == NodeKind::Free ? (r[p] + omega * neighbours(i, j, k, p, true)) / diag_[p] : 0.0;
                }
        for (std::size_t p = 0; p < z.size(); ++p) z[p] *= diag_[p];
        for (std::size_t i = nx; i-- > 0;)
            for (std::size_t j = ny; j-- > 0;)
                for (std::size_t k = nz; k-- > 0;) {
                    const std::size_t p = grid_.index(i, j, k);
                    if (kinds_[p] != NodeKind::Free) continue;
                    z[p] = (z[p] + omega * neighbours(i, j, k, p, false)) / diag_[p];
                }
        const double scale = omega * (2.0 - omega);
        for (auto& v : z) v *= scale;
    }

private:
    const TensorGrid& grid_;
    const std::vector<NodeKind>& kinds_;
    std::vector<double> diag_;
};

} // namespace detail

struct CapacitySolveOptions {
    double rel_tol = 1e-8;
    /// Relaxation factor of the symmetric SOR preconditioner.
    double ssor_omega = 1.8;
    /// Enforce R >= 2 * support; cell problems switch this off.
    bool far_field = true;
};

/// Discrete capacity potential: harmonic (finite-volume 7-point Laplacian) at
/// free nodes, 1 on gamma nodes, 0 on and outside the sphere |x| = R.
inline ScalarField cap_potential(const GammaSpec& gamma, const GridSpec& spec, const CapacitySolveOptions& options = {}) {
    detail::check_grid_for(gamma, spec, options.far_field);
    TensorGrid grid(spec);
    auto kinds = detail::classify(grid, gamma);
    const std::size_t n = grid.node_count();

    std::size_t gamma_nodes = 0;
    for (auto k : kinds) gamma_nodes += (k == NodeKind::Gamma);
    if (gamma_nodes == 0) fail(ErrorCode::EmptyGamma, "no grid node rasterizes into the target set");

    detail::GridLaplacian lap(grid, kinds);
    std::vector<double> rhs(n, 0.0);
    detail::for_each_link(grid, [&](std::size_t p, std::size_t q, double w) {
        if (kinds[p] == NodeKind::Free && kinds[q] == NodeKind::Gamma) rhs[p] += w;
        if (kinds[q] == NodeKind::Free && kinds[p] == NodeKind::Gamma) rhs[q] += w;
    });

    std::vector<double> x(n, 0.0);
    PcgOptions opt;
    opt.rel_tol = options.rel_tol;
    opt.max_iter = static_cast<std::size_t>(20.0 * spec.R / spec.h);
    auto apply = [&](std::span<const double> in, std::span<double> out) { lap.apply(in, out); };
    auto precond = [&](std::span<const double> r, std::span<double> z) { lap.ssor(r, z, options.ssor_omega); };
    const auto res = pcg(apply, precond, rhs, x, opt);
    if (!res.converged)
        fail(ErrorCode::NoConvergence, "capacity potential did not reach the residual target within " +
                                           std::to_string(opt.max_iter) + " iterations");

    for (std::size_t p = 0; p < n; ++p)
        if (kinds[p] == NodeKind::Gamma) x[p] = 1.0;
        else if (kinds[p] == NodeKind::Outside) x[p] = 0.0;

    return ScalarField{std::move(grid), std::move(x), std::move(kinds), res.iterations, res.rel_residual};
}

/// Discrete Dirichlet energy: sum over links of w (u_p - u_q)^2; on a uniform
/// grid w = h^(n-2).
inline double dirichlet_energy(const ScalarField& field) {
    double energy = 0.0;
    detail::for_each_link(field.grid, [&](std::size_t p, std::size_t q, double w) {
        if (field.kinds[p] != NodeKind::Free && field.kinds[q] != NodeKind::Free) return;
        const double d = field.values[p] - field.values[q];
        energy += w * d * d;
    });
    return energy;
}

struct CapacityEstimate {
    /// Discrete energy of the potential on B_R, i.e. cap(gamma, B_R).
    double energy = 0.0;
    /// energy * (1 - M_R)^2 <= cap(gamma).
    double lower = 0.0;
    /// energy >= cap(gamma).
    double upper = 0.0;
    double M_R = 0.0;
    /// Truncation-corrected estimate inside [lower, upper].
    double value = 0.0;
    std::size_t gamma_nodes = 0;
    std::size_t iterations = 0;
    /// Continuum set nonempty but no node rasterized into it.
    bool unresolved = false;

    static CapacityEstimate zero() { return {}; }
};

/// Bracket from a truncated-ball energy.
///
/// `value` removes the leading truncation error: a potential of capacity C
/// decays like C / ((n-2) omega_n |x|^(n-2)), so 1/cap = 1/cap(gamma,B_R) +
/// 1/((n-2) omega_n R^(n-2)) up to O(R^(2-n)) relative terms. The result is
/// exact for balls and clamped into [lower, upper].
inline CapacityEstimate make_estimate(double energy, double R, int n = 3) {
    CapacityEstimate est;
    est.energy = energy;
    est.M_R = std::pow(R, -(n - 2.0));
    est.upper = energy;
    est.lower = energy * (1.0 - est.M_R) * (1.0 - est.M_R);
    if (energy > 0.0) {
        const double far = (n - 2.0) * unit_sphere_area(n) * std::pow(R, n - 2.0);
        est.value = std::clamp(1.0 / (1.0 / energy + 1.0 / far), est.lower, est.upper);
    }
    return est;
}

inline CapacityEstimate capacity_bracket(const GammaSpec& gamma, const GridSpec& spec,
                                         const CapacitySolveOptions& options = {}) {
    const auto field = cap_potential(gamma, spec, options);
    auto est = make_estimate(dirichlet_energy(field), spec.R, spec.dim);
    for (auto k : field.kinds) est.gamma_nodes += (k == NodeKind::Gamma);
    est.iterations = field.iterations;
    return est;
}

/// Default grid for unit-size sets: R = 16, uniform core covering the support.
inline GridSpec default_capacity_grid(double h, double support_radius, double R = 16.0, double growth = 1.15) {
    const double core = std::ceil((support_radius + 2.0 * h) / h) * h;
    return GridSpec::graded(h, R, core, growth);
}

/// cap(T ∩ {x·nu = s}) with a bracket. Zero once |s| reaches the support.
inline CapacityEstimate slice_capacity(const ShapeSpec& shape, std::span<const double> nu, double s,
                                       const GridSpec& spec, const CapacitySolveOptions& options = {}) {
    if (spec.dim != 3) fail(ErrorCode::NotSupported, "capacity grid solves support n = 3 only");
    require(nu.size() == 3, ErrorCode::InvalidArgument, "slice normal must have 3 components");
    if (std::abs(s) >= shape.support_radius()) return CapacityEstimate::zero();
    const auto gamma = GammaSpec::slice(shape, Vec(nu.begin(), nu.end()), s);
    try {
        return capacity_bracket(gamma, spec, options);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGamma) throw;
        auto est = CapacityEstimate::zero();
        est.unresolved = shape.slice_nonempty(gamma.nu, s);
        return est;
    }
}

} // namespace thinobs

#endif
