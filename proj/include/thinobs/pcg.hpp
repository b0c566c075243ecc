#ifndef THINOBS_PCG_HPP
#define THINOBS_PCG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace thinobs {

struct PcgOptions {
    double rel_tol = 1e-8;
    std::size_t max_iter = 1000;
};

struct PcgResult {
    std::size_t iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

namespace detail {

/// Blocked summation with a fixed partition, so results do not depend on
/// how the blocks are scheduled.
inline double dot_blocked(std::span<const double> a, std::span<const double> b) {
    constexpr std::size_t kBlock = 4096;
    double total = 0.0;
    for (std::size_t start = 0; start < a.size(); start += kBlock) {
        const std::size_t stop = std::min(a.size(), start + kBlock);
        double partial = 0.0;
        for (std::size_t i = start; i < stop; ++i) partial += a[i] * b[i];
        total += partial;
    }
    return total;
}

} // namespace detail

/// Preconditioned conjugate gradients for an SPD operator.
///
/// `apply(x, y)` computes y = A x, `precond(r, z)` computes z = M^{-1} r.
/// Both operate on spans of equal length. `x` holds the initial guess.
template <class Apply, class Precond>
PcgResult pcg(const Apply& apply, const Precond& precond, std::span<const double> rhs, std::span<double> x,
              const PcgOptions& opt) {
    const std::size_t n = rhs.size();
    std::vector<double> r(n), z(n), p(n), q(n);

    apply(std::span<const double>(x.data(), n), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];

    PcgResult res;
    const double bnorm = std::sqrt(detail::dot_blocked(rhs, rhs));
    if (bnorm == 0.0) {
        for (auto& v : x) v = 0.0;
        res.converged = true;
        return res;
    }
    double rnorm = std::sqrt(detail::dot_blocked(r, r));
    res.rel_residual = rnorm / bnorm;
    if (res.rel_residual <= opt.rel_tol) {
        res.converged = true;
        return res;
    }

    precond(std::span<const double>(r), std::span<double>(z));
    p = z;
    double rho = detail::dot_blocked(r, z);

    while (res.iterations < opt.max_iter) {
        apply(std::span<const double>(p), std::span<double>(q));
        const double alpha = rho / detail::dot_blocked(p, q);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        ++res.iterations;
        rnorm = std::sqrt(detail::dot_blocked(r, r));
        res.rel_residual = rnorm / bnorm;
        if (res.rel_residual <= opt.rel_tol) {
            res.converged = true;
            break;
        }
        precond(std::span<const double>(r), std::span<double>(z));
        const double rho_next = detail::dot_blocked(r, z);
        const double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

} // namespace thinobs

#endif
