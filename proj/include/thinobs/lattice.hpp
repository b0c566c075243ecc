#ifndef THINOBS_LATTICE_HPP
#define THINOBS_LATTICE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace thinobs {

// ---------------------------------------------------------------------------
// Reference shape T, a compact subset of the closed unit ball centred at 0.
// ---------------------------------------------------------------------------

class ShapeSpec {
public:
    enum class Kind { Ball, LevelSet };

    /// Descriptor convention: phi(x) <= 0 exactly on the shape.
    using Descriptor = std::function<double(std::span<const double>)>;

    static ShapeSpec ball(double radius) {
        require(radius > 0.0 && radius <= 1.0, ErrorCode::InvalidArgument, "ball radius must lie in (0, 1]");
        ShapeSpec s;
        s.kind_ = Kind::Ball;
        s.support_ = radius;
        s.name_ = "ball:" + format_number(radius);
        return s;
    }

    static ShapeSpec level_set(std::string name, Descriptor phi, double support_radius) {
        require(support_radius > 0.0 && support_radius <= 1.0, ErrorCode::InvalidArgument,
                "level-set support radius must lie in (0, 1]");
        require(static_cast<bool>(phi), ErrorCode::InvalidArgument, "level-set descriptor is empty");
        ShapeSpec s;
        s.kind_ = Kind::LevelSet;
        s.support_ = support_radius;
        s.phi_ = std::make_shared<Descriptor>(std::move(phi));
        s.name_ = std::move(name);
        return s;
    }

    /// Axis-aligned ellipsoid with the given semi-axes (each in (0, 1]).
    static ShapeSpec ellipsoid(Vec semi_axes) {
        double support = 0.0;
        double smallest = 1.0;
        std::string name = "ellipsoid:";
        for (std::size_t i = 0; i < semi_axes.size(); ++i) {
            require(semi_axes[i] > 0.0 && semi_axes[i] <= 1.0, ErrorCode::InvalidArgument,
                    "ellipsoid semi-axes must lie in (0, 1]");
            support = std::max(support, semi_axes[i]);
            smallest = std::min(smallest, semi_axes[i]);
            name += (i ? "," : "") + format_number(semi_axes[i]);
        }
        auto phi = [axes = std::move(semi_axes), smallest](std::span<const double> x) {
            require(x.size() == axes.size(), ErrorCode::InvalidArgument, "ellipsoid: dimension mismatch");
            double q = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] / axes[i]) * (x[i] / axes[i]);
            return (std::sqrt(q) - 1.0) * smallest;
        };
        return level_set(std::move(name), std::move(phi), support);
    }

    /// "ball:r" or "ellipsoid:a,b,c".
    static ShapeSpec parse(const std::string& text) {
        const auto colon = text.find(':');
        require(colon != std::string::npos, ErrorCode::InvalidArgument, "shape must be kind:params, got '" + text + "'");
        const auto kind = text.substr(0, colon);
        const auto params = text.substr(colon + 1);
        if (kind == "ball") return ball(std::stod(params));
        if (kind == "ellipsoid") return ellipsoid(parse_vector(params));
        fail(ErrorCode::InvalidArgument, "unknown shape kind '" + kind + "'");
    }

    Kind kind() const { return kind_; }
    double support_radius() const { return support_; }
    /// Ball radius; for level sets the support radius.
    double radius() const { return support_; }
    const std::string& name() const { return name_; }

    double descriptor(std::span<const double> x) const {
        if (kind_ == Kind::Ball) return norm2(x) - support_;
        return (*phi_)(x);
    }

    bool contains(std::span<const double> x) const {
        if (kind_ == Kind::Ball) return dot(x, x) <= support_ * support_;
        return (*phi_)(x) <= 0.0;
    }

    /// a*T.
    ShapeSpec scaled(double a) const {
        require(a > 0.0 && a * support_ <= 1.0, ErrorCode::InvalidArgument, "scaled shape must stay inside B_1");
        if (kind_ == Kind::Ball) return ball(a * support_);
        auto inner = phi_;
        ShapeSpec s = level_set(
            name_ + "*" + format_number(a),
            [inner, a](std::span<const double> x) {
                Vec y(x.begin(), x.end());
                for (auto& v : y) v /= a;
                return a * (*inner)(y);
            },
            a * support_);
        return s;
    }

    /// Whether T ∩ {x·nu = s} is nonempty. Exact for balls; level sets are
    /// sampled on a 9^(n-1) grid spanning the slice of the support ball.
    bool slice_nonempty(std::span<const double> nu, double s) const {
        if (std::abs(s) > support_) return false;
        if (kind_ == Kind::Ball) return true;
        const std::size_t n = nu.size();
        const double rho = std::sqrt(std::max(0.0, support_ * support_ - s * s));
        const auto basis = orthonormal_complement(nu);
        constexpr int kSamples = 9;
        std::vector<int> idx(n - 1, 0);
        Vec x(n);
        while (true) {
            for (std::size_t i = 0; i < n; ++i) x[i] = s * nu[i];
            for (std::size_t j = 0; j + 1 < n; ++j) {
                const double u = -rho + 2.0 * rho * idx[j] / (kSamples - 1);
                for (std::size_t i = 0; i < n; ++i) x[i] += u * basis[j][i];
            }
            if ((*phi_)(x) <= 0.0) return true;
            std::size_t d = 0;
            while (d < idx.size() && ++idx[d] == kSamples) idx[d++] = 0;
            if (d == idx.size()) break;
        }
        return false;
    }

private:
    Kind kind_ = Kind::Ball;
    double support_ = 1.0;
    std::shared_ptr<const Descriptor> phi_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Hyperplane {x·nu = offset} and its graph slope.
// ---------------------------------------------------------------------------

class HyperplaneSpec {
public:
    HyperplaneSpec(Vec normal, double offset) : normal_(std::move(normal)), offset_(offset) {
        require(normal_.size() >= 2, ErrorCode::InvalidArgument, "hyperplane needs dimension >= 2");
        require(std::abs(norm2(normal_) - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "normal must be a unit vector");
    }

    /// Normalizes `direction` first.
    static HyperplaneSpec from_direction(Vec direction, double offset) {
        return HyperplaneSpec(normalized(std::move(direction)), offset);
    }

    /// The plane through `point` with the given normal direction.
    static HyperplaneSpec through(Vec direction, std::span<const double> point) {
        auto nu = normalized(std::move(direction));
        const double c = dot(nu, point);
        return HyperplaneSpec(std::move(nu), c);
    }

    const Vec& normal() const { return normal_; }
    double offset() const { return offset_; }
    std::size_t dim() const { return normal_.size(); }
    double normal_last() const { return normal_.back(); }

    /// Signed distance from x to the plane.
    double signed_distance(std::span<const double> x) const { return dot(normal_, x) - offset_; }

private:
    Vec normal_;
    double offset_;
};

inline constexpr double kMinNormalLast = 1e-9;

struct SlopeVector {
    Vec alpha;
};

/// alpha_i = -nu_i / nu_n, so that the plane is the graph x_n = alpha·x' + c/nu_n.
inline SlopeVector slope_vector(const HyperplaneSpec& h) {
    const double nn = h.normal_last();
    require(std::abs(nn) >= kMinNormalLast, ErrorCode::DegenerateNormal,
            "|nu_n| < 1e-9: plane is too close to vertical for the graph parametrization");
    SlopeVector s;
    s.alpha.resize(h.dim() - 1);
    for (std::size_t i = 0; i + 1 < h.dim(); ++i) s.alpha[i] = -h.normal()[i] / nn;
    return s;
}

// ---------------------------------------------------------------------------
// Periodic perforation a_eps*T + eps*k at the critical rate a_eps = eps^(n/(n-1)).
// ---------------------------------------------------------------------------

inline double critical_hole_scale(double epsilon, int dim) {
    return std::pow(epsilon, static_cast<double>(dim) / static_cast<double>(dim - 1));
}

class PerforationSpec {
public:
    PerforationSpec(double epsilon, int dim, ShapeSpec shape)
        : epsilon_(epsilon), dim_(dim), shape_(std::move(shape)) {
        require(epsilon > 0.0 && epsilon < 0.5, ErrorCode::InvalidArgument, "epsilon must lie in (0, 1/2)");
        require(dim >= 2, ErrorCode::InvalidArgument, "dimension must be >= 2");
        hole_scale_ = critical_hole_scale(epsilon, dim);
        // Holes may touch but never cross the cell boundary.
        require(hole_scale_ * shape_.support_radius() <= 0.5 * epsilon * (1.0 + 1e-12), ErrorCode::InvalidArgument,
                "holes a_eps*T do not fit inside the eps-cells");
    }

    double epsilon() const { return epsilon_; }
    int dim() const { return dim_; }
    const ShapeSpec& shape() const { return shape_; }
    double hole_scale() const { return hole_scale_; }
    /// Radius of the ball containing every hole.
    double hole_radius() const { return hole_scale_ * shape_.support_radius(); }

private:
    double epsilon_;
    int dim_;
    ShapeSpec shape_;
    double hole_scale_ = 0.0;
};

// ---------------------------------------------------------------------------
// Intersections of the plane with the perforation.
// ---------------------------------------------------------------------------

struct IntersectionRecord {
    std::vector<long long> k;
    /// Height of the plane above the cell centre eps*k, measured along e_n.
    double tau = 0.0;
};

/// Signed offset along nu of the plane relative to the cell centre; the slice
/// of the hole is a_eps*T ∩ {y·nu = slice_offset}.
inline double slice_offset(const IntersectionRecord& rec, const HyperplaneSpec& h) {
    return h.normal_last() * rec.tau;
}

/// Unique k_n with alpha·k' - k_n in [-1/2, 1/2).
inline long long canonical_layer(std::span<const double> alpha, std::span<const long long> kprime) {
    double v = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) v += alpha[i] * static_cast<double>(kprime[i]);
    return static_cast<long long>(std::floor(v + 0.5));
}

namespace detail {

/// Odometer over the product of index ranges; calls fn(k) for each point.
template <class Fn>
void for_each_lattice_point(const std::vector<IndexRange>& ranges, Fn&& fn) {
    for (const auto& r : ranges)
        if (r.count() == 0) return;
    std::vector<long long> k(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) k[i] = ranges[i].first;
    while (true) {
        fn(std::as_const(k));
        std::size_t d = ranges.size();
        while (d > 0) {
            --d;
            if (++k[d] <= ranges[d].last) break;
            k[d] = ranges[d].first;
            if (d == 0) return;
        }
        if (ranges.empty()) return;
    }
}

inline std::vector<IndexRange> box_ranges(const Box& box, double eps) {
    std::vector<IndexRange> r;
    r.reserve(box.dim());
    for (const auto& iv : box.axes) r.push_back(lattice_range(iv, eps));
    return r;
}

} // namespace detail

/// All k with eps*k in `box` whose hole eps*k + a_eps*T meets the plane,
/// sorted lexicographically by k.
inline std::vector<IntersectionRecord> enumerate_intersections(const HyperplaneSpec& h, const PerforationSpec& p,
                                                               const Box& box) {
    const std::size_t n = h.dim();
    require(static_cast<std::size_t>(p.dim()) == n && box.dim() == n, ErrorCode::InvalidArgument,
            "enumerate_intersections: dimension mismatch");
    const auto slope = slope_vector(h);
    std::vector<IntersectionRecord> out;
    if (box.empty()) return out;

    const double eps = p.epsilon();
    const double a = p.hole_scale();
    const double reach = p.hole_radius();
    const double nn = h.normal_last();
    const double lift = h.offset() / nn;
    const double band = reach / std::abs(nn);
    const auto& nu = h.normal();
    const bool is_ball = p.shape().kind() == ShapeSpec::Kind::Ball;

    auto ranges = detail::box_ranges(box, eps);
    const IndexRange last_axis = ranges.back();
    ranges.pop_back();

    std::vector<long long> k(n);
    Vec x(n);
    detail::for_each_lattice_point(ranges, [&](const std::vector<long long>& kp) {
        double z = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) z += slope.alpha[i] * static_cast<double>(kp[i]);
        z = eps * z + lift;
        auto lo = static_cast<long long>(std::floor((z - band) / eps)) - 1;
        auto hi = static_cast<long long>(std::ceil((z + band) / eps)) + 1;
        lo = std::max(lo, last_axis.first);
        hi = std::min(hi, last_axis.last);
        for (long long kn = lo; kn <= hi; ++kn) {
            std::copy(kp.begin(), kp.end(), k.begin());
            k[n - 1] = kn;
            for (std::size_t i = 0; i < n; ++i) x[i] = eps * static_cast<double>(k[i]);
            const double dist = dot(nu, x) - h.offset();
            bool hit = false;
            if (is_ball) {
                hit = std::abs(dist) <= reach;
            } else if (std::abs(dist) <= reach) {
                hit = p.shape().slice_nonempty(nu, -dist / a);
            }
            if (hit) out.push_back({k, z - eps * static_cast<double>(kn)});
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Counting alpha·k' mod 1 in windows.
// ---------------------------------------------------------------------------

namespace detail {

/// Visits every k in eps^{-1} E ∩ Z^m once, even where boxes overlap.
template <class Fn>
void for_each_region_point(const Region& region, double eps, Fn&& fn) {
    if (region.boxes.size() == 1) {
        if (!region.boxes.front().empty()) for_each_lattice_point(box_ranges(region.boxes.front(), eps), fn);
        return;
    }
    const std::size_t m = region.dim();
    std::vector<IndexRange> hull;
    for (const auto& b : region.boxes) {
        if (b.empty()) continue;
        auto rs = box_ranges(b, eps);
        if (hull.empty()) {
            hull = std::move(rs);
            continue;
        }
        for (std::size_t i = 0; i < m; ++i) {
            hull[i].first = std::min(hull[i].first, rs[i].first);
            hull[i].last = std::max(hull[i].last, rs[i].last);
        }
    }
    if (hull.empty()) return;
    Vec x(m);
    for_each_lattice_point(hull, [&](const std::vector<long long>& k) {
        for (std::size_t i = 0; i < m; ++i) x[i] = eps * static_cast<double>(k[i]);
        if (region.contains(x)) fn(k);
    });
}

} // namespace detail

/// #(eps^{-1} E ∩ Z^m).
inline long long lattice_size(const Region& region, double eps) {
    require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
    if (region.boxes.size() == 1) {
        const auto& box = region.boxes.front();
        if (box.empty()) return 0;
        long long total = 1;
        for (const auto& r : detail::box_ranges(box, eps)) total *= r.count();
        return total;
    }
    long long total = 0;
    detail::for_each_region_point(region, eps, [&](const std::vector<long long>&) { ++total; });
    return total;
}

/// Fractional parts {alpha·k'} for every k' in eps^{-1} E ∩ Z^m, in lattice order.
inline std::vector<double> lattice_fractions(const Region& region, std::span<const double> alpha, double eps) {
    require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
    std::vector<double> out;
    if (region.boxes.empty()) return out;
    const std::size_t m = region.dim();
    require(alpha.size() == m, ErrorCode::InvalidArgument, "alpha dimension does not match the region");
    detail::for_each_region_point(region, eps, [&](const std::vector<long long>& k) {
        double v = 0.0;
        for (std::size_t i = 0; i < m; ++i) v += alpha[i] * static_cast<double>(k[i]);
        out.push_back(v - std::floor(v));
    });
    return out;
}

/// Half-open window [start, start+width) on the circle R/Z.
struct Window {
    double start = 0.0;
    double width = 0.0;

    bool contains(double frac) const {
        const double end = start + width;
        if (end <= 1.0) return frac >= start && frac < end;
        return frac >= start || frac < end - 1.0;
    }

    /// Whether frac lies within `guard` of either endpoint (mod 1).
    bool near_boundary(double frac, double guard) const {
        auto circ = [](double a, double b) {
            const double d = std::abs(a - b);
            return std::min(d, 1.0 - d);
        };
        double end = start + width;
        end -= std::floor(end);
        return circ(frac, start) < guard || circ(frac, end) < guard;
    }
};

inline constexpr double kWindowGuard = 1e-12;

struct CountReport {
    long long n_lattice = 0;
    long long a_count = 0;
    Window window;
    double ratio = 0.0;
    /// Points within 1e-12 of a window endpoint (classification may be round-off sensitive).
    long long boundary_hits = 0;
};

inline Window make_window(double t, double w) {
    require(w > 0.0, ErrorCode::ZeroWindow, "window width must be positive");
    require(w <= 1.0, ErrorCode::InvalidArgument, "window width must be at most 1");
    return {t - std::floor(t), w};
}

inline CountReport count_fractions(std::span<const double> fracs, Window win) {
    CountReport rep;
    rep.window = win;
    rep.n_lattice = static_cast<long long>(fracs.size());
    for (double f : fracs) {
        if (win.contains(f)) ++rep.a_count;
        if (win.width < 1.0 && win.near_boundary(f, kWindowGuard)) ++rep.boundary_hits;
    }
    rep.ratio = rep.n_lattice ? static_cast<double>(rep.a_count) / (static_cast<double>(rep.n_lattice) * win.width) : 0.0;
    return rep;
}

inline CountReport count_window(const Region& region, const SlopeVector& alpha, double eps, double t, double w) {
    const auto win = make_window(t, w);
    const auto fracs = lattice_fractions(region, alpha.alpha, eps);
    return count_fractions(fracs, win);
}

struct EquidistRow {
    double eps = 0.0;
    double t = 0.0;
    CountReport report;
};

/// Ratios A(eps^p, t) / (N(eps) eps^p) for every (eps, t) pair.
inline std::vector<EquidistRow> equidist_report(const SlopeVector& alpha, const Region& region, double p,
                                                std::span<const double> eps_list, std::span<const double> t_samples) {
    require(p > 0.0 && p < 1.0, ErrorCode::InvalidArgument, "p must lie in (0, 1)");
    std::vector<EquidistRow> rows;
    for (double eps : eps_list) {
        require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidArgument, "eps must lie in (0, 1)");
        const auto fracs = lattice_fractions(region, alpha.alpha, eps);
        const double width = std::pow(eps, p);
        for (double t : t_samples) rows.push_back({eps, t, count_fractions(fracs, make_window(t, width))});
    }
    return rows;
}

} // namespace thinobs

#endif
