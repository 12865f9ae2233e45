#pragma once

// Hermite functions, generalized Laguerre polynomials, their cross
// short-time Fourier transforms, and the finite-sum upper incomplete gamma
// function. Everything here is a pure function of its arguments.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "opsieve/common.hpp"

namespace opsieve::specialfn {

/// Largest Hermite index the library evaluates by default.
inline constexpr int kMaxHermiteIndex = 64;

/// STFT magnitudes below this are flushed to exact zero.
inline constexpr double kUnderflowClamp = 1e-300;

namespace detail {

inline double log_factorial(int n) { return std::lgamma(double(n) + 1.0); }

/// log of binomial(a, b) for integer a >= b >= 0.
inline double log_binomial(int a, int b) {
    return log_factorial(a) - log_factorial(b) - log_factorial(a - b);
}

}  // namespace detail

/// Hermite function h_n(t), orthonormal in L2 with h_0(t) = 2^{1/4} e^{-pi t^2}.
/// Evaluated by the weighted three-term recurrence
///   sqrt(n+1) h_{n+1}(t) = 2 sqrt(pi) t h_n(t) - sqrt(n) h_{n-1}(t),
/// which keeps the Gaussian weight inside every iterate.
inline double hermite_eval(int n, double t, int max_index = kMaxHermiteIndex) {
    if (n < 0 || n > max_index)
        throw IndexOverflowError("hermite_eval: index " + std::to_string(n) +
                                 " outside [0, " + std::to_string(max_index) + "]");
    if (!std::isfinite(t)) throw DomainError("hermite_eval: non-finite argument");

    const double h0 = std::pow(2.0, 0.25) * std::exp(-kPi * t * t);
    if (n == 0) return h0;
    double prev = h0;
    double cur = 2.0 * std::sqrt(kPi) * t * h0;  // h_1
    for (int k = 1; k < n; ++k) {
        double next = (2.0 * std::sqrt(kPi) * t * cur - std::sqrt(double(k)) * prev) /
                      std::sqrt(double(k) + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Generalized Laguerre polynomial L_k^alpha(t), t >= 0. For alpha >= 0 the
/// forward recurrence in the degree is used; negative integer orders are
/// resolved through the reflection identity
///   (-t)^n / n! L_j^{n-j}(t) = (-t)^j / j! L_n^{j-n}(t).
inline double laguerre_eval(int k, int alpha, double t) {
    if (k < 0) throw DomainError("laguerre_eval: negative degree");
    if (t < 0.0 || !std::isfinite(t)) throw DomainError("laguerre_eval: t must be >= 0 and finite");

    if (alpha < 0) {
        // Reflection with n = k, j = k + alpha: L_k^{j-k}(t) = (j!/k!)(-t)^{k-j} L_j^{k-j}(t).
        const int j = k + alpha;
        if (j < 0) return 0.0;  // binom(k+alpha, k) = 0 forces the zero chain
        if (t == 0.0) return 0.0;
        const int d = k - j;  // = -alpha > 0
        const double lj = laguerre_eval(j, d, t);
        if (lj == 0.0) return 0.0;
        const double logmag = detail::log_factorial(j) - detail::log_factorial(k) +
                              d * std::log(t) + std::log(std::abs(lj));
        double sign = (d % 2 == 0) ? 1.0 : -1.0;
        if (lj < 0.0) sign = -sign;
        return sign * std::exp(logmag);
    }

    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = 1.0 + double(alpha) - t;
    for (int i = 1; i < k; ++i) {
        double next = ((2.0 * i + 1.0 + alpha - t) * cur - (double(i) + alpha) * prev) /
                      (double(i) + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Radial profile of the Hermite cross-STFT:
///   sigma_{n,k}(r) = sqrt(k!/n! pi^{n-k}) r^{n-k} L_k^{n-k}(pi r^2) e^{-pi r^2/2}.
/// For n < k the reflection identity gives sigma_{n,k} = (-1)^{k-n} sigma_{k,n}.
inline double stft_hermite_radial(int n, int k, double r) {
    if (n < k) {
        const double s = ((k - n) % 2 == 0) ? 1.0 : -1.0;
        return s * stft_hermite_radial(k, n, r);
    }
    const int d = n - k;  // >= 0
    const double t = kPi * r * r;
    if (r == 0.0) return (d == 0) ? 1.0 : 0.0;
    const double logpref = 0.5 * (detail::log_factorial(k) - detail::log_factorial(n) +
                                  d * std::log(kPi)) +
                           d * std::log(r) - 0.5 * t;
    const double val = std::exp(logpref) * laguerre_eval(k, d, t);
    if (std::abs(val) < kUnderflowClamp) return 0.0;
    return val;
}

/// Cross STFT of Hermite functions,
///   V_{h_k} h_n(z) = <h_n, pi(z) h_k> = sigma_{n,k}(r) e^{i(k-n)theta} e^{-i pi x w},
/// with z = (x, w), r = |z|. Exact up to the clamp; no quadrature involved.
inline Complex stft_hermite(int n, int k, PhasePoint z, int max_index = kMaxHermiteIndex) {
    if (n < 0 || n > max_index || k < 0 || k > max_index)
        throw IndexOverflowError("stft_hermite: index outside configured range");
    const double r = z.radius();
    const double sig = stft_hermite_radial(n, k, r);
    if (sig == 0.0) return {0.0, 0.0};
    const double theta = z.angle();
    const double phase = double(k - n) * theta - kPi * z.x * z.w;
    return sig * Complex{std::cos(phase), std::sin(phase)};
}

/// Upper incomplete gamma at positive integer order,
///   Gamma(m, t) = (m-1)! e^{-t} sum_{k<m} t^k / k!.
/// The sum is accumulated through log-space terms so large m does not overflow
/// before the final exponential.
inline double upper_incomplete_gamma(int m, double t) {
    if (m < 1) throw DomainError("upper_incomplete_gamma: order must be >= 1");
    if (t < 0.0 || !std::isfinite(t)) throw DomainError("upper_incomplete_gamma: t must be >= 0");
    if (t == 0.0) return std::exp(detail::log_factorial(m - 1));

    // log sum_{k<m} t^k/k! via shifted accumulation around the largest term.
    const double logt = std::log(t);
    double maxlog = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(m);
    for (int k = 0; k < m; ++k) {
        logs[k] = k * logt - detail::log_factorial(k);
        maxlog = std::max(maxlog, logs[k]);
    }
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += std::exp(logs[k] - maxlog);
    const double log_val = detail::log_factorial(m - 1) - t + maxlog + std::log(acc);
    return std::exp(log_val);
}

/// Regularized lower incomplete gamma P(m, t) = gamma(m, t) / (m-1)! for
/// integer m >= 1, computed from whichever side of the recurrence is stable.
inline double reg_lower_gamma(int m, double t) {
    if (m < 1) throw DomainError("reg_lower_gamma: order must be >= 1");
    if (t < 0.0) throw DomainError("reg_lower_gamma: t must be >= 0");
    if (t == 0.0) return 0.0;
    if (t >= double(m)) {
        // Complement of the Poisson tail; no cancellation for t >= m.
        return 1.0 - upper_incomplete_gamma(m, t) / std::exp(detail::log_factorial(m - 1));
    }
    // Small-t series: P(m,t) = t^m e^{-t} sum_{i>=0} t^i / (m (m+1) ... (m+i)).
    double term = 1.0 / double(m);
    double sum = term;
    for (int i = 1; i < 10000; ++i) {
        term *= t / double(m + i);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    const double logv = m * std::log(t) - t + std::log(sum) - detail::log_factorial(m - 1);
    return std::exp(logv);
}

/// Adaptive Simpson quadrature. Used as the in-library fallback for
/// concentration integrals whose exact expansion would overflow; the test
/// suite carries its own independent copy.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 40) {
    struct Rec {
        static double run(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return run(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
                   run(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
        }
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec::run(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace opsieve::specialfn
