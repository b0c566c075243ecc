#ifndef THINOBS_UDIST_HPP
#define THINOBS_UDIST_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "error.hpp"

namespace thinobs {

/// Fractional parts of a sequence; every value in [0, 1).
struct SequenceSample {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

inline double frac(double x) {
    const double f = x - std::floor(x);
    return f < 1.0 ? f : 0.0;
}

/// values[j-1] = {j alpha}, j = 1..N.
inline SequenceSample frac_sequence(double alpha, std::size_t count) {
    require(count >= 1, ErrorCode::InvalidArgument, "frac_sequence needs N >= 1");
    SequenceSample s;
    s.values.resize(count);
    for (std::size_t j = 1; j <= count; ++j) s.values[j - 1] = frac(static_cast<double>(j) * alpha);
    return s;
}

struct DiscrepancyResult {
    double extreme = 0.0;
    double star = 0.0;
    std::size_t count = 0;
};

namespace detail {

inline std::vector<double> sorted_sample(const SequenceSample& s) {
    require(s.size() >= 1, ErrorCode::EmptySample, "discrepancy of an empty sample");
    for (double v : s.values)
        require(v >= 0.0 && v < 1.0, ErrorCode::InvalidArgument, "sample values must lie in [0, 1)");
    std::vector<double> x = s.values;
    std::sort(x.begin(), x.end());
    return x;
}

inline double star_from_sorted(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double star = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double up = static_cast<double>(i + 1) / n - x[i];
        const double down = x[i] - static_cast<double>(i) / n;
        star = std::max({star, up, down});
    }
    return star;
}

} // namespace detail

/// Star and extreme discrepancy of a sample.
///
/// With d_i = i/N - x_(i) over the sorted sample, the best closed interval
/// [x_(i), x_(j)] has excess d_j - d_i + 1/N and the best open one
/// (x_(i), x_(j)) has deficit d_i - d_j + 1/N, so
///     D_N = 1/N + max_i d_i - min_i d_i.
/// The supremum over half-open intervals is reported even when it is only a
/// limit (a single point gives D_1 = 1).
inline DiscrepancyResult discrepancy(const SequenceSample& s) {
    const auto x = detail::sorted_sample(s);
    const double n = static_cast<double>(x.size());
    double dmax = -1.0, dmin = 2.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(i + 1) / n - x[i];
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
    }
    return {std::min(1.0, 1.0 / n + dmax - dmin), detail::star_from_sorted(x), x.size()};
}

/// O(N^2) scan over all pairs of order statistics.
inline double extreme_discrepancy_scan(const SequenceSample& s) {
    const auto x = detail::sorted_sample(s);
    const double n = static_cast<double>(x.size());
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i; j < x.size(); ++j) {
            const double len = x[j] - x[i];
            const double inside_closed = static_cast<double>(j - i + 1) / n;
            const double inside_open = (static_cast<double>(j) - static_cast<double>(i) - 1.0) / n;
            best = std::max({best, inside_closed - len, len - inside_open});
        }
    }
    return std::min(1.0, best);
}

/// |(1/N) sum_{j=1..N} exp(2 pi i l j alpha)|.
inline double weyl_sum(double alpha, long long l, std::size_t count) {
    require(l != 0, ErrorCode::ZeroFrequency, "Weyl sums need a nonzero frequency");
    require(count >= 1, ErrorCode::InvalidArgument, "weyl_sum needs N >= 1");
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 1; j <= count; ++j) {
        const double phase = frac(static_cast<double>(l) * frac(static_cast<double>(j) * alpha));
        acc += std::polar(1.0, 2.0 * std::numbers::pi * phase);
    }
    return std::abs(acc) / static_cast<double>(count);
}

/// N D_N(alpha) / (log N log log N), natural logarithms.
inline double kesten_ratio(double alpha, std::size_t count) {
    require(count >= 16, ErrorCode::InvalidArgument, "kesten_ratio needs N >= 16");
    const double n = static_cast<double>(count);
    const double d = discrepancy(frac_sequence(alpha, count)).extreme;
    return n * d / (std::log(n) * std::log(std::log(n)));
}

/// Negated least-squares slope of log D_N(alpha) against log N.
inline double decay_exponent(double alpha, std::span<const std::size_t> counts) {
    require(counts.size() >= 3, ErrorCode::InvalidArgument, "decay_exponent needs at least 3 sample sizes");
    for (std::size_t i = 1; i < counts.size(); ++i)
        require(counts[i] > counts[i - 1], ErrorCode::InvalidArgument, "sample sizes must increase strictly");
    std::vector<double> lx, ly;
    for (auto c : counts) {
        lx.push_back(std::log(static_cast<double>(c)));
        ly.push_back(std::log(discrepancy(frac_sequence(alpha, c)).extreme));
    }
    const double m = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return -sxy / sxx;
}

/// Dyadic sizes 2^kmin .. 2^kmax.
inline std::vector<std::size_t> dyadic_sizes(int kmin, int kmax) {
    require(kmin >= 0 && kmax >= kmin && kmax < 63, ErrorCode::InvalidArgument, "invalid dyadic range");
    std::vector<std::size_t> out;
    for (int k = kmin; k <= kmax; ++k) out.push_back(std::size_t{1} << k);
    return out;
}

/// Uniform draws in [0, 1) from a 64-bit Mersenne twister, 53 bits each.
inline std::vector<double> seeded_uniforms(std::uint64_t seed, std::size_t count) {
    std::mt19937_64 rng(seed);
    std::vector<double> out(count);
    for (auto& v : out) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return out;
}

inline double median(std::vector<double> v) {
    require(!v.empty(), ErrorCode::InvalidArgument, "median of an empty list");
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace thinobs

#endif
