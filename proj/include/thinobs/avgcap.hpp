#ifndef THINOBS_AVGCAP_HPP
#define THINOBS_AVGCAP_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capacity.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "parallel.hpp"

namespace thinobs {

enum class QuadratureRule { Trapezoid, Simpson, Graded };

inline QuadratureRule parse_rule(const std::string& name) {
    if (name == "trapezoid") return QuadratureRule::Trapezoid;
    if (name == "simpson") return QuadratureRule::Simpson;
    if (name == "graded") return QuadratureRule::Graded;
    fail(ErrorCode::InvalidArgument, "unknown quadrature rule '" + name + "'");
}

inline std::string to_string(QuadratureRule rule) {
    switch (rule) {
    case QuadratureRule::Trapezoid: return "trapezoid";
    case QuadratureRule::Simpson: return "simpson";
    case QuadratureRule::Graded: return "graded";
    }
    return "?";
}

/// Nodes and weights for integrals over [-support, support].
///
/// Graded nodes s = support sin(theta) with Simpson weights in theta absorb
/// the square-root behaviour at the ends of ball-like profiles.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Quadrature make_quadrature(QuadratureRule rule, std::size_t m, double support) {
    require(m >= 5, ErrorCode::InvalidArgument, "slice profiles need at least 5 nodes");
    require(support > 0.0, ErrorCode::InvalidArgument, "support must be positive");
    if (rule != QuadratureRule::Trapezoid)
        require(m % 2 == 1, ErrorCode::InvalidArgument, "Simpson-type rules need an odd node count");
    Quadrature q;
    q.nodes.resize(m);
    q.weights.resize(m);
    std::vector<double> unit(m);
    if (rule == QuadratureRule::Trapezoid) {
        for (std::size_t i = 0; i < m; ++i) unit[i] = (i == 0 || i + 1 == m) ? 0.5 : 1.0;
    } else {
        for (std::size_t i = 0; i < m; ++i) unit[i] = (i == 0 || i + 1 == m) ? 1.0 / 3.0 : (i % 2 ? 4.0 / 3.0 : 2.0 / 3.0);
    }
    const double step = 2.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = -1.0 + step * static_cast<double>(i);
        if (rule == QuadratureRule::Graded) {
            const double theta = 0.5 * std::numbers::pi * u;
            q.nodes[i] = support * std::sin(theta);
            q.weights[i] = unit[i] * step * 0.5 * std::numbers::pi * support * std::cos(theta);
        } else {
            q.nodes[i] = support * u;
            q.weights[i] = unit[i] * step * support;
        }
    }
    // Exact endpoints so that f(±support) = 0 by construction.
    q.nodes.front() = -support;
    q.nodes.back() = support;
    return q;
}

/// Slice capacities below this are treated as zero.
inline constexpr double kSliceFloor = 1e-8;

struct SliceProfile {
    Quadrature quadrature;
    std::vector<CapacityEstimate> f_values;
    QuadratureRule rule = QuadratureRule::Simpson;
    double support = 0.0;

    const std::vector<double>& s_nodes() const { return quadrature.nodes; }
};

struct AveragedCapacity {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct ProfileOptions {
    std::size_t m = 21;
    QuadratureRule rule = QuadratureRule::Simpson;
    unsigned threads = 1;
    CapacitySolveOptions solve;
};

/// f(s) = cap(T ∩ {x·nu = s}) at the quadrature nodes.
inline SliceProfile slice_profile(const ShapeSpec& shape, std::span<const double> nu, const GridSpec& grid,
                                  const ProfileOptions& opt = {}) {
    SliceProfile prof;
    prof.rule = opt.rule;
    prof.support = shape.support_radius();
    prof.quadrature = make_quadrature(opt.rule, opt.m, prof.support);
    const Vec unit_nu = normalized(Vec(nu.begin(), nu.end()));
    prof.f_values = parallel_map(opt.m, opt.threads, [&](std::size_t i) {
        auto est = slice_capacity(shape, unit_nu, prof.quadrature.nodes[i], grid, opt.solve);
        if (est.value < kSliceFloor) {
            const bool flagged = est.unresolved;
            est = CapacityEstimate::zero();
            est.unresolved = flagged;
        }
        return est;
    });
    return prof;
}

/// cap_nu(T) = ∫ f(s) ds by the profile's quadrature; the bracket integrates
/// the slice brackets.
inline AveragedCapacity averaged_capacity(const SliceProfile& profile) {
    AveragedCapacity out;
    const auto& w = profile.quadrature.weights;
    require(w.size() == profile.f_values.size(), ErrorCode::InvalidArgument, "profile is inconsistent");
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.value += w[i] * profile.f_values[i].value;
        out.lower += w[i] * profile.f_values[i].lower;
        out.upper += w[i] * profile.f_values[i].upper;
    }
    return out;
}

/// Quadrature of a closed-form profile over [-support, support].
inline double integrate_profile(const std::function<double(double)>& f, double support, QuadratureRule rule,
                                std::size_t m) {
    const auto q = make_quadrature(rule, m, support);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += q.weights[i] * f(q.nodes[i]);
    return total;
}

/// Closed form of cap_nu(B_r) in R^n: 2 (omega_n / c_n) r^(n-1) ∫_0^1 (1 - s^2)^((n-2)/2) ds.
inline double ball_averaged_capacity(double r, int n = 3) {
    const double k = 0.5 * (n - 2.0);
    const double beta_half = std::sqrt(std::numbers::pi) * std::tgamma(k + 1.0) / (2.0 * std::tgamma(k + 1.5));
    return 2.0 * unit_sphere_area(n) / flat_disk_constant(n) * std::pow(r, n - 1.0) * beta_half;
}

/// (a^{-(n-1)} cap_nu(aT), cap_nu(T)) computed on the same grid.
inline std::pair<double, double> scaling_check(const ShapeSpec& shape, std::span<const double> nu, double a,
                                               const GridSpec& grid, const ProfileOptions& opt = {}) {
    require(a > 0.0 && a <= 1.0, ErrorCode::InvalidArgument, "scale factor must lie in (0, 1]");
    require(a * shape.support_radius() >= 4.0 * grid.h, ErrorCode::ResolutionLost,
            "scaled shape is smaller than four grid spacings");
    const int n = grid.dim;
    const double base = averaged_capacity(slice_profile(shape, nu, grid, opt)).value;
    if (a == 1.0) return {base, base};
    const double scaled = averaged_capacity(slice_profile(shape.scaled(a), nu, grid, opt)).value;
    return {scaled * std::pow(a, -(n - 1.0)), base};
}

/// Same comparison with a closed-form profile f: f_a(s) = a^(n-2) f(s/a).
inline std::pair<double, double> scaling_check_analytic(const std::function<double(double)>& f, double support,
                                                        double a, int n, QuadratureRule rule, std::size_t m) {
    require(a > 0.0 && a <= 1.0, ErrorCode::InvalidArgument, "scale factor must lie in (0, 1]");
    auto fa = [&](double s) { return std::pow(a, n - 2.0) * f(s / a); };
    const double scaled = integrate_profile(fa, a * support, rule, m);
    const double base = integrate_profile(f, support, rule, m);
    return {scaled * std::pow(a, -(n - 1.0)), base};
}

} // namespace thinobs

#endif
