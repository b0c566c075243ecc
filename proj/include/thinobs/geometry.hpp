#ifndef THINOBS_GEOMETRY_HPP
#define THINOBS_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace thinobs {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::InvalidArgument, "dot: dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vec normalized(Vec v) {
    const double len = norm2(v);
    require(len > 0.0, ErrorCode::InvalidArgument, "cannot normalize a zero vector");
    for (auto& x : v) x /= len;
    return v;
}

/// Open interval (lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool empty() const { return !(hi > lo); }
    bool contains(double x) const { return lo < x && x < hi; }
    double length() const { return empty() ? 0.0 : hi - lo; }
};

/// Open axis-aligned box, one interval per axis.
struct Box {
    std::vector<Interval> axes;

    Box() = default;
    explicit Box(std::vector<Interval> a) : axes(std::move(a)) {}

    static Box cube(std::size_t dim, double lo, double hi) {
        return Box(std::vector<Interval>(dim, Interval{lo, hi}));
    }

    std::size_t dim() const { return axes.size(); }

    bool empty() const {
        return axes.empty() || std::any_of(axes.begin(), axes.end(), [](const Interval& i) { return i.empty(); });
    }

    bool contains(std::span<const double> x) const {
        for (std::size_t i = 0; i < axes.size(); ++i)
            if (!axes[i].contains(x[i])) return false;
        return true;
    }

    double volume() const {
        double v = 1.0;
        for (const auto& a : axes) v *= a.length();
        return v;
    }

    /// The box with the last axis dropped.
    Box projected() const {
        return Box(std::vector<Interval>(axes.begin(), axes.end() - (axes.empty() ? 0 : 1)));
    }
};

/// Finite union of open boxes in R^m.
struct Region {
    std::vector<Box> boxes;

    Region() = default;
    Region(Box b) { boxes.push_back(std::move(b)); }
    explicit Region(std::vector<Box> bs) : boxes(std::move(bs)) {}

    std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

    bool contains(std::span<const double> x) const {
        return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(x); });
    }
};

/// Integers k with lo < eps*k < hi, evaluated in floating point the same way
/// every membership test in this library does.
struct IndexRange {
    long long first = 0;
    long long last = -1;

    long long count() const { return last >= first ? last - first + 1 : 0; }
};

inline IndexRange lattice_range(const Interval& iv, double eps) {
    if (iv.empty()) return {};
    auto first = static_cast<long long>(std::floor(iv.lo / eps)) - 1;
    auto last = static_cast<long long>(std::ceil(iv.hi / eps)) + 1;
    while (!(eps * static_cast<double>(first) > iv.lo)) ++first;
    while (!(eps * static_cast<double>(last) < iv.hi)) --last;
    return {first, last};
}

/// Orthonormal basis of the complement of the unit vector `nu`.
inline std::vector<Vec> orthonormal_complement(std::span<const double> nu) {
    const std::size_t n = nu.size();
    std::vector<Vec> basis;
    basis.reserve(n - 1);
    std::vector<Vec> all{Vec(nu.begin(), nu.end())};
    for (std::size_t axis = 0; axis < n && basis.size() + 1 < n; ++axis) {
        Vec v(n, 0.0);
        v[axis] = 1.0;
        for (const auto& b : all) {
            const double c = dot(v, b);
            for (std::size_t i = 0; i < n; ++i) v[i] -= c * b[i];
        }
        const double len = norm2(v);
        if (len < 1e-6) continue;
        for (auto& x : v) x /= len;
        all.push_back(v);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Index of the component of largest magnitude.
inline std::size_t dominant_axis(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    return best;
}

/// Parses "lo..hi".
/// Short decimal form used in descriptors.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline Interval parse_interval(const std::string& text) {
    const auto pos = text.find("..");
    require(pos != std::string::npos, ErrorCode::InvalidArgument, "expected lo..hi, got '" + text + "'");
    return {std::stod(text.substr(0, pos)), std::stod(text.substr(pos + 2))};
}

inline Vec parse_vector(const std::string& text) {
    Vec out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        require(!piece.empty(), ErrorCode::InvalidArgument, "empty component in '" + text + "'");
        out.push_back(std::stod(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace thinobs

#endif
