#ifndef THINOBS_CORRECTOR_HPP
#define THINOBS_CORRECTOR_HPP

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "avgcap.hpp"
#include "capacity.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "lattice.hpp"
#include "parallel.hpp"

namespace thinobs {

struct CorrectorOptions {
    /// Growth of the cell grid outside its uniform core.
    double growth = 1.15;
    unsigned threads = 1;
    /// Keep the unit-scale potential of each cell in the result.
    bool keep_fields = false;
    CapacitySolveOptions solve;
};

struct CellCorrector {
    IntersectionRecord record;
    /// Slice offset along nu in unit-shape coordinates: gamma = T ∩ {y·nu = s_unit}.
    double s_unit = 0.0;
    /// Energy of the corrector on B_{eps/2}(eps k).
    double energy = 0.0;
    /// Energy of the rescaled problem on B_{eps/(2 a_eps)}; energy = a^(n-2) * unit_energy.
    double unit_energy = 0.0;
    /// Slice nonempty but no node rasterized into it; counted as 0.
    bool unresolved = false;
    std::optional<ScalarField> local_field;
};

/// Grid of the rescaled cell problem: unit shape, ball of radius eps / (2 a_eps).
inline GridSpec cell_grid(const PerforationSpec& p, double h_local, double growth = 1.15) {
    const double a = p.hole_scale();
    const double h = h_local / a;
    const double R = p.epsilon() / (2.0 * a);
    const double support = p.shape().support_radius();
    const double core = std::ceil((support + 2.0 * h) / h) * h;
    if (core >= R - h || growth == 1.0) return GridSpec::uniform(h, R);
    return GridSpec::graded(h, R, core, growth);
}

/// Corrector of one cell solved in rescaled coordinates x -> (x - eps k) / a_eps.
inline CellCorrector build_cell_corrector(const IntersectionRecord& rec, const HyperplaneSpec& plane,
                                          const PerforationSpec& p, double h_local, const CorrectorOptions& opt = {}) {
    if (p.dim() != 3) fail(ErrorCode::NotSupported, "cell correctors are solved for n = 3 only");
    const double a = p.hole_scale();
    const double support = p.shape().support_radius();
    require(h_local <= a * support / 4.0 * (1.0 + 1e-12), ErrorCode::ResolutionLost,
            "h_local must not exceed a_eps * support_radius / 4");
    const double s_phys = slice_offset(rec, plane);
    if (std::abs(s_phys) > a * support)
        fail(ErrorCode::EmptyGamma, "plane misses the hole of this cell");

    CellCorrector cell;
    cell.record = rec;
    cell.s_unit = s_phys / a;

    const auto grid = cell_grid(p, h_local, opt.growth);
    const auto gamma = GammaSpec::slice(p.shape(), plane.normal(), cell.s_unit);
    auto solve = opt.solve;
    solve.far_field = false;
    try {
        auto field = cap_potential(gamma, grid, solve);
        cell.unit_energy = dirichlet_energy(field);
        if (opt.keep_fields) cell.local_field = std::move(field);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGamma) throw;
        if (!p.shape().slice_nonempty(plane.normal(), cell.s_unit)) throw;
        cell.unresolved = true;
    }
    cell.energy = std::pow(a, p.dim() - 2.0) * cell.unit_energy;
    return cell;
}

/// Area of {x' in box' : lo < alpha·x' + lift < hi} for n = 3 (polygon clipping)
/// or n = 2 (interval), divided by |nu_n| to give sigma(plane ∩ box).
inline double plane_section_area(const HyperplaneSpec& plane, const Box& box) {
    const std::size_t n = plane.dim();
    require(box.dim() == n, ErrorCode::InvalidArgument, "plane_section_area: dimension mismatch");
    if (box.empty()) return 0.0;
    const auto slope = slope_vector(plane);
    const double lift = plane.offset() / plane.normal_last();
    const auto& zr = box.axes.back();
    if (n == 2) {
        // x_2 = alpha x_1 + lift inside (lo, hi).
        double lo = box.axes[0].lo, hi = box.axes[0].hi;
        const double al = slope.alpha[0];
        if (al == 0.0) {
            if (!zr.contains(lift)) return 0.0;
        } else {
            double t1 = (zr.lo - lift) / al, t2 = (zr.hi - lift) / al;
            if (t1 > t2) std::swap(t1, t2);
            lo = std::max(lo, t1);
            hi = std::min(hi, t2);
        }
        return std::max(0.0, hi - lo) / std::abs(plane.normal_last());
    }
    if (n != 3) fail(ErrorCode::NotSupported, "plane sections implemented for n = 2, 3");

    using Pt = std::array<double, 2>;
    std::vector<Pt> poly{{box.axes[0].lo, box.axes[1].lo},
                         {box.axes[0].hi, box.axes[1].lo},
                         {box.axes[0].hi, box.axes[1].hi},
                         {box.axes[0].lo, box.axes[1].hi}};
    // Keep the side where sign * (alpha·x + lift - bound) <= 0.
    auto clip = [&](double bound, double sign) {
        auto g = [&](const Pt& q) { return sign * (slope.alpha[0] * q[0] + slope.alpha[1] * q[1] + lift - bound); };
        std::vector<Pt> out;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Pt& cur = poly[i];
            const Pt& nxt = poly[(i + 1) % poly.size()];
            const double gc = g(cur), gn = g(nxt);
            if (gc <= 0.0) out.push_back(cur);
            if ((gc < 0.0 && gn > 0.0) || (gc > 0.0 && gn < 0.0)) {
                const double t = gc / (gc - gn);
                out.push_back({cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])});
            }
        }
        poly = std::move(out);
    };
    clip(zr.hi, 1.0);
    if (!poly.empty()) clip(zr.lo, -1.0);
    double area = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& u = poly[i];
        const Pt& v = poly[(i + 1) % poly.size()];
        area += u[0] * v[1] - v[0] * u[1];
    }
    return 0.5 * std::abs(area) / std::abs(plane.normal_last());
}

/// Whether x is within `tol` of a rational with denominator <= max_den.
inline bool looks_rational(double x, long long max_den = 10000, double tol = 1e-10) {
    double v = x;
    long long p0 = 1, q0 = 0, p1 = static_cast<long long>(std::floor(v)), q1 = 1;
    double rem = v - std::floor(v);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol) return true;
        if (rem < 1e-15) return true;
        v = 1.0 / rem;
        const auto ai = static_cast<long long>(std::floor(v));
        rem = v - std::floor(v);
        const long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > max_den) return false;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return false;
}

/// True when every ratio nu_i / nu_j of nonzero components looks rational,
/// i.e. no slope component is a plausible member of the badly-approximable class.
inline bool rational_direction(std::span<const double> nu) {
    for (std::size_t i = 0; i < nu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j) {
            if (i == j || nu[j] == 0.0 || nu[i] == 0.0) continue;
            if (!looks_rational(nu[i] / nu[j])) return false;
        }
    return true;
}

struct EnergyReport {
    Box region;
    std::vector<CellCorrector> cells;
    double total_energy = 0.0;
    double sigma = 0.0;
    double capnu = 0.0;
    double predicted = 0.0;
    double rel_error = 0.0;
    std::size_t unresolved = 0;
    bool rational_direction_warning = false;
};

/// Averaged capacity of the perforation shape on the resolution used by the cells.
inline double reference_capnu(const PerforationSpec& p, std::span<const double> nu, double h_local,
                              const CorrectorOptions& opt = {}) {
    const double h = h_local / p.hole_scale();
    ProfileOptions prof;
    prof.threads = opt.threads;
    prof.solve = opt.solve;
    const auto grid = default_capacity_grid(h, p.shape().support_radius());
    return averaged_capacity(slice_profile(p.shape(), nu, grid, prof)).value;
}

/// Sum of cell corrector energies over a box, against sigma(plane ∩ E) cap_nu(T).
/// Pass capnu <= 0 to compute it with reference_capnu.
inline EnergyReport region_energy(const HyperplaneSpec& plane, const PerforationSpec& p, const Box& region,
                                  double h_local, double capnu = -1.0, const CorrectorOptions& opt = {}) {
    EnergyReport rep;
    rep.region = region;
    rep.rational_direction_warning = rational_direction(plane.normal());
    const auto records = enumerate_intersections(plane, p, region);
    rep.cells = parallel_map(records.size(), opt.threads,
                             [&](std::size_t i) { return build_cell_corrector(records[i], plane, p, h_local, opt); });
    for (const auto& c : rep.cells) {
        rep.total_energy += c.energy;
        rep.unresolved += c.unresolved;
    }
    rep.sigma = plane_section_area(plane, region);
    if (rep.sigma > 0.0) rep.capnu = capnu > 0.0 ? capnu : reference_capnu(p, plane.normal(), h_local, opt);
    else rep.capnu = std::max(capnu, 0.0);
    rep.predicted = rep.sigma * rep.capnu;
    rep.rel_error = rep.predicted > 0.0 ? std::abs(rep.total_energy - rep.predicted) / rep.predicted : 0.0;
    return rep;
}

} // namespace thinobs

#endif
