#pragma once

// Concentration bounds for phase-space restriction: the orthogonality
// constants C_{n,m}, the window multipliers A_m and their infimum B, and the
// closed-form / convolution bounds on the restricted Rayleigh quotient.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "opsieve/common.hpp"
#include "opsieve/convolve.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/specialfn.hpp"

namespace opsieve::sieve {

using operators::PolyradialWindow;
using phasespace::DomainMask;
using phasespace::RadialShadow;

enum class Method {
    FaberKrahn,
    RFK,
    Theorem1,
    Theorem2Kernel,
    Theorem2Closed,
    KernelSup,
    MaxNyquist,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::FaberKrahn: return "FaberKrahn";
        case Method::RFK: return "RFK";
        case Method::Theorem1: return "Theorem1";
        case Method::Theorem2Kernel: return "Theorem2Kernel";
        case Method::Theorem2Closed: return "Theorem2Closed";
        case Method::KernelSup: return "KernelSup";
        case Method::MaxNyquist: return "MaxNyquist";
    }
    return "?";
}

/// One bound on the restricted Rayleigh quotient. `certificate` is the
/// L1-recovery condition value < 1/2.
struct SieveBound {
    double value = 0.0;
    Method method = Method::FaberKrahn;
    bool certificate = false;
    std::string inputs_digest;

    nlohmann::json to_json() const {
        return {{"method", method_name(method)},
                {"value", value},
                {"certificate", certificate},
                {"params", inputs_digest}};
    }
};

inline SieveBound make_bound(double value, Method m, std::string digest) {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw DegenerateWindowError("bound is not a finite nonnegative number");
    return {value, m, value < 0.5, std::move(digest)};
}

namespace detail {

/// log of the lower incomplete gamma at positive integer order.
inline double log_lower_gamma(int m, double t) {
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    if (t >= double(m)) {
        const double p = specialfn::reg_lower_gamma(m, t);  // in (0.5, 1], stable here
        return specialfn::detail::log_factorial(m - 1) + std::log(p);
    }
    double term = 1.0 / double(m), sum = term;
    for (int i = 1; i < 10000; ++i) {
        term *= t / double(m + i);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return m * std::log(t) - t + std::log(sum);
}

/// Exact expansion of C at disk "area coordinate" t0 = pi R^2:
///   C = (lo!/hi!) * int_0^{t0} t^{hi-lo} (L_lo^{hi-lo}(t))^2 e^{-t} dt,
/// with the squared polynomial expanded into monomials and each moment an
/// incomplete gamma. Signs tracked, magnitudes kept in log space.
inline double c_exact(int lo, int hi, double t0) {
    const int d = hi - lo;
    // Coefficients of L_lo^{d}: c_j = (-1)^j binom(hi, lo-j) / j!.
    std::vector<double> logc(std::size_t(lo) + 1);
    for (int j = 0; j <= lo; ++j)
        logc[std::size_t(j)] = specialfn::detail::log_binomial(hi, lo - j) -
                               specialfn::detail::log_factorial(j);
    const double logpref =
        specialfn::detail::log_factorial(lo) - specialfn::detail::log_factorial(hi);

    // Two-pass shifted accumulation of the signed terms.
    double maxlog = -std::numeric_limits<double>::infinity();
    std::vector<double> logterm(std::size_t(lo + 1) * std::size_t(lo + 1));
    for (int j = 0; j <= lo; ++j)
        for (int l = 0; l <= lo; ++l) {
            const double lt = logpref + logc[std::size_t(j)] + logc[std::size_t(l)] +
                              log_lower_gamma(d + j + l + 1, t0);
            logterm[std::size_t(j) * (lo + 1) + l] = lt;
            maxlog = std::max(maxlog, lt);
        }
    if (!std::isfinite(maxlog)) return 0.0;
    long double acc = 0.0L;
    for (int j = 0; j <= lo; ++j)
        for (int l = 0; l <= lo; ++l) {
            const double sign = ((j + l) % 2 == 0) ? 1.0 : -1.0;
            acc += (long double)(sign) *
                   std::exp((long double)(logterm[std::size_t(j) * (lo + 1) + l] - maxlog));
        }
    double v = double(acc * std::exp((long double)maxlog));
    return std::clamp(v, 0.0, 1.0);
}

/// Quadrature fallback for very large index sums.
inline double c_quadrature(int lo, int hi, double t0) {
    const int d = hi - lo;
    const double logpref =
        specialfn::detail::log_factorial(lo) - specialfn::detail::log_factorial(hi);
    auto f = [&](double t) {
        if (t <= 0.0) return d == 0 ? std::exp(logpref) : 0.0;
        const double lg = specialfn::laguerre_eval(lo, d, t);
        const double logmag = logpref + d * std::log(t) - t;
        return lg * lg * std::exp(logmag);
    };
    return specialfn::adaptive_simpson(f, 0.0, t0, 1e-13);
}

inline double c_value(int n, int m, double t0) {
    if (t0 < 0.0) throw DomainError("concentration constant: negative area coordinate");
    if (t0 == 0.0) return 0.0;
    const int lo = std::min(n, m), hi = std::max(n, m);
    if (n + m > 120) return c_quadrature(lo, hi, t0);
    return c_exact(lo, hi, t0);
}

}  // namespace detail

/// Orthogonality constant of the Hermite cross-STFTs over a disk of radius R:
/// C_{n,m}(D_R(0)) = int_{D_R(0)} |V_{h_m} h_n|^2 dz, symmetric in (n, m).
inline double c_nm_disk(int n, int m, double R) {
    if (n < 0 || m < 0) throw DomainError("c_nm_disk: negative index");
    if (R <= 0.0) throw DomainError("c_nm_disk: R must be positive");
    return detail::c_value(n, m, kPi * R * R);
}

/// Same constant with the disk replaced by a rotation-invariant set given by
/// its radial shadow; per-interval differences of the disk closed form.
inline double c_nm_shadow(int n, int m, const RadialShadow& shadow) {
    if (n < 0 || m < 0) throw DomainError("c_nm_shadow: negative index");
    double s = 0.0;
    for (auto& [r0, r1] : shadow.intervals) {
        if (r0 < 0.0 || r1 < r0) throw DomainError("c_nm_shadow: bad interval");
        s += detail::c_value(n, m, kPi * r1 * r1) - detail::c_value(n, m, kPi * r0 * r0);
    }
    return s;
}

/// Multipliers of the local reproducing formula for one window:
/// A_m = sum_n |lambda_n|^2 C_{m,n}, B = min A_m over active indices, and the
/// resulting theta upper bound 1/B.
struct ConcentrationConstants {
    Eigen::MatrixXd C;       ///< C(m, n) for m, n <= rank bound
    Eigen::VectorXd A;       ///< A_m
    double B = 0.0;          ///< min over m with lambda_m A_m != 0
    double theta_upper = 0.0;
};

namespace detail {

inline ConcentrationConstants concentration_from_shadow_fn(
    const PolyradialWindow& gamma, const std::function<double(int, int)>& c_of) {
    gamma.require_normalized();
    const int N = gamma.rank_bound();
    ConcentrationConstants cc;
    cc.C.resize(N + 1, N + 1);
    for (int m = 0; m <= N; ++m)
        for (int n = m; n <= N; ++n) {
            const double v = c_of(m, n);
            cc.C(m, n) = v;
            cc.C(n, m) = v;
        }
    cc.A.resize(N + 1);
    for (int m = 0; m <= N; ++m) {
        double a = 0.0;
        for (int n = 0; n <= N; ++n) a += std::norm(gamma.lambda[std::size_t(n)]) * cc.C(m, n);
        cc.A(m) = a;
    }
    double b = std::numeric_limits<double>::infinity();
    for (int m = 0; m <= N; ++m)
        if (std::abs(gamma.lambda[std::size_t(m)]) > 0.0 && cc.A(m) != 0.0)
            b = std::min(b, cc.A(m));
    if (!std::isfinite(b) || b < 1e-14)
        throw DegenerateWindowError("concentration_constants: B vanishes, theta bound unavailable");
    cc.B = b;
    cc.theta_upper = 1.0 / b;
    return cc;
}

}  // namespace detail

inline ConcentrationConstants concentration_constants(const PolyradialWindow& gamma, double R) {
    return detail::concentration_from_shadow_fn(
        gamma, [R](int m, int n) { return c_nm_disk(m, n, R); });
}

inline ConcentrationConstants concentration_constants(const PolyradialWindow& gamma,
                                                      const RadialShadow& shadow) {
    return detail::concentration_from_shadow_fn(
        gamma, [&shadow](int m, int n) { return c_nm_shadow(m, n, shadow); });
}

/// Fully explicit bound nu / (1 - alpha^{2N} e^{N(2-alpha)} / 2) for a rank
/// bound N window on the disk pi R^2 = alpha N.
inline SieveBound theorem1_bound(double nu, int N, double alpha) {
    if (alpha < 5.0) throw DomainError("theorem1_bound: requires alpha >= 5");
    if (N < 1) throw DomainError("theorem1_bound: requires N >= 1");
    if (nu < 0.0) throw DomainError("theorem1_bound: nu must be >= 0");
    const double log_term = 2.0 * N * std::log(alpha) + N * (2.0 - alpha) - std::log(2.0);
    const double denom = 1.0 - std::exp(log_term);
    char buf[128];
    std::snprintf(buf, sizeof buf, "nu=%.17g N=%d alpha=%.17g", nu, N, alpha);
    if (denom <= 0.0)
        throw DegenerateWindowError(std::string("theorem1_bound: denominator non-positive for ") +
                                    buf);
    return make_bound(nu / denom, Method::Theorem1, buf);
}

/// The sharper variant nu / B(D_R(0)) with the exact constants of a concrete
/// window, pi R^2 = alpha N.
inline SieveBound theorem1_direct_bound(double nu, const PolyradialWindow& gamma, double alpha) {
    const int N = gamma.rank_bound();
    const double R = std::sqrt(alpha * std::max(N, 1) / kPi);
    const auto cc = concentration_constants(gamma, R);
    char buf[128];
    std::snprintf(buf, sizeof buf, "nu=%.17g N=%d alpha=%.17g exact-B=%.17g", nu, N, alpha, cc.B);
    return make_bound(nu / cc.B, Method::Theorem1, buf);
}

/// Large sieve bound 2 (1 - e^{-nu/2}) / (1 - e^{-pi R^2}) for the rank-one
/// Gaussian window.
inline SieveBound rfk_bound(double nu, double R) {
    if (nu < 0.0) throw DomainError("rfk_bound: nu must be >= 0");
    if (R <= 0.0) throw DomainError("rfk_bound: R must be positive");
    const double v = 2.0 * (-std::expm1(-0.5 * nu)) / (-std::expm1(-kPi * R * R));
    char buf[96];
    std::snprintf(buf, sizeof buf, "nu=%.17g R=%.17g", nu, R);
    return make_bound(v, Method::RFK, buf);
}

/// Sharp area-only bound 1 - e^{-p |Omega| / 2} for the Gaussian window.
inline SieveBound faber_krahn_bound(double area, double p = 1.0) {
    if (area < 0.0) throw DomainError("faber_krahn_bound: area must be >= 0");
    if (p < 1.0) throw DomainError("faber_krahn_bound: p must be >= 1");
    char buf[96];
    std::snprintf(buf, sizeof buf, "area=%.17g p=%.17g", area, p);
    return make_bound(-std::expm1(-0.5 * p * area), Method::FaberKrahn, buf);
}

enum class Theorem2Form { KernelSup, Closed };

/// Thermal-window bound. KernelSup evaluates
///   (1+2a)^{-1/2} sup_w int_Omega e^{-pi |z-w|^2 / (2(1+2a))} dz
/// by Gaussian convolution over the grid; Closed uses the area-only form
///   2 sqrt(1+2a) (1 - e^{-|Omega| / (2(1+2a))}).
inline SieveBound theorem2_bound(const DomainMask& mask, double a, Theorem2Form form,
                                 bool use_fft = true) {
    if (a < 0.0) throw DomainError("theorem2_bound: a must be >= 0");
    const double s = 2.0 * (1.0 + 2.0 * a);
    const double area = phasespace::measure(mask);
    char buf[96];
    std::snprintf(buf, sizeof buf, "a=%.17g |Omega|=%.17g", a, area);

    if (form == Theorem2Form::Closed)
        return make_bound(2.0 * std::sqrt(1.0 + 2.0 * a) * (-std::expm1(-area / s)),
                          Method::Theorem2Closed, buf);

    const auto& g = mask.grid();
    // Gaussian mass beyond the window must be negligible for the grid sup.
    const double reach = 2.0 * g.half_width;
    if (s * std::exp(-kPi * reach * reach / s) > 1e-12)
        throw WindowError("theorem2_bound: Gaussian mass outside grid exceeds 1e-12");
    if (mask.is_empty()) return make_bound(0.0, Method::Theorem2Kernel, buf);

    const double cut_r = std::sqrt(s * 40.0 / kPi);  // kernel below ~4e-18 past here
    auto kern = convolve::radial_kernel(
        [s](double r) { return std::exp(-kPi * r * r / s); }, g.spacing,
        std::min(cut_r, reach * 1.5));
    std::vector<double> field(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) field[i] = mask.raster()[i] ? 1.0 : 0.0;
    const auto conv = convolve::full(field, g.n, kern, use_fft);
    const double sup = *std::max_element(conv.begin(), conv.end()) * g.cell_weight();
    return make_bound(sup / std::sqrt(1.0 + 2.0 * a), Method::Theorem2Kernel, buf);
}

enum class KernelNorm { HS, Op };

namespace detail {

/// Radial Hilbert-Schmidt profile of the window's reproducing kernel,
///   k(r)^2 = sum_{m,n} |lambda_m|^2 |lambda_n|^2 |sigma_{n,m}(r)|^2.
inline double kernel_hs_profile(const PolyradialWindow& gamma, double r) {
    const int N = gamma.rank_bound();
    double s = 0.0;
    for (int m = 0; m <= N; ++m) {
        const double wm = std::norm(gamma.lambda[std::size_t(m)]);
        if (wm == 0.0) continue;
        for (int n = 0; n <= N; ++n) {
            const double wn = std::norm(gamma.lambda[std::size_t(n)]);
            if (wn == 0.0) continue;
            const double sig = specialfn::stft_hermite_radial(n, m, r);
            s += wm * wn * sig * sig;
        }
    }
    return std::sqrt(s);
}

/// Spectral-norm profile of the kernel matrix at offset radius r.
inline double kernel_op_profile(const PolyradialWindow& gamma, double r) {
    const int N = gamma.rank_bound();
    Eigen::MatrixXd K(N + 1, N + 1);
    for (int m = 0; m <= N; ++m)
        for (int n = 0; n <= N; ++n)
            K(m, n) = std::abs(gamma.lambda[std::size_t(m)]) *
                      std::abs(gamma.lambda[std::size_t(n)]) *
                      specialfn::stft_hermite_radial(m, n, r);
    return K.jacobiSvd().singularValues()(0);
}

/// Tabulates a radial profile on [0, r_max] for cheap interpolation.
struct RadialProfileTable {
    double dr = 0.0;
    std::vector<double> vals;

    double operator()(double r) const {
        const double u = r / dr;
        const auto i = std::size_t(u);
        if (i + 1 >= vals.size()) return vals.empty() ? 0.0 : vals.back();
        const double f = u - double(i);
        return (1.0 - f) * vals[i] + f * vals[i + 1];
    }
};

inline RadialProfileTable tabulate_profile(const std::function<double(double)>& f, double r_max,
                                           double dr) {
    RadialProfileTable t;
    t.dr = dr;
    const int n = int(std::ceil(r_max / dr)) + 2;
    t.vals.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) t.vals[std::size_t(i)] = f(i * dr);
    return t;
}

/// Radius past which the profile stays below `cutoff`.
inline double profile_support(const std::function<double(double)>& f, double r_cap,
                              double cutoff) {
    double r = 0.5;
    while (r < r_cap && std::abs(f(r)) > cutoff) r += 0.25;
    return std::min(r + 0.5, r_cap);
}

}  // namespace detail

/// sup_w int_Omega ||K_gamma(z, w)|| dz with the chosen norm of the kernel,
/// computed by convolving the mask raster with the radial kernel profile.
inline double kernel_sup_integral(const DomainMask& mask, const PolyradialWindow& gamma,
                                  KernelNorm norm, bool use_fft = true) {
    gamma.require_normalized();
    if (norm == KernelNorm::Op && gamma.rank_bound() > 8)
        throw TruncationError("kernel_sup_integral: Op norm limited to rank bound 8");
    if (mask.is_empty()) return 0.0;
    const auto& g = mask.grid();

    std::function<double(double)> prof;
    if (norm == KernelNorm::HS)
        prof = [&gamma](double r) { return detail::kernel_hs_profile(gamma, r); };
    else
        prof = [&gamma](double r) { return detail::kernel_op_profile(gamma, r); };

    const double r_cap = 2.0 * g.half_width * 1.5;
    const double support = detail::profile_support(prof, r_cap, 1e-15);
    const auto table = detail::tabulate_profile(prof, support + 1.0, 0.5 * g.spacing);
    auto kern = convolve::radial_kernel([&table](double r) { return table(r); }, g.spacing,
                                        support);
    std::vector<double> field(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) field[i] = mask.raster()[i] ? 1.0 : 0.0;
    const auto conv = convolve::full(field, g.n, kern, use_fft);
    return *std::max_element(conv.begin(), conv.end()) * g.cell_weight();
}

/// The three lines of the maximum-Nyquist sieve chain for one (Omega, gamma, R):
/// theta * sup int_{Omega ∩ D_R(z)} ||K||_op <= theta * (HS-restricted sup)
/// <= theta * nu(Omega, R).
struct MaxNyquistBound {
    SieveBound bound;              ///< theta * nu (the quotable bound)
    double nu = 0.0;
    double theta = 0.0;
    double restricted_hs = 0.0;    ///< theta * sup of disk-windowed HS-kernel integral
    std::optional<double> restricted_op;  ///< same with spectral norm (rank <= 8)
};

inline MaxNyquistBound max_nyquist_bound(const DomainMask& mask, const PolyradialWindow& gamma,
                                         double R, bool use_fft = true) {
    gamma.require_normalized();
    const auto cc = concentration_constants(gamma, R);
    const auto rep = phasespace::nyquist_density(mask, R, use_fft);

    MaxNyquistBound out;
    out.nu = rep.value;
    out.theta = cc.theta_upper;
    char buf[128];
    std::snprintf(buf, sizeof buf, "R=%.17g nu=%.17g theta=%.17g rank=%d", R, rep.value,
                  cc.theta_upper, gamma.rank_bound());
    out.bound = make_bound(cc.theta_upper * rep.value, Method::MaxNyquist, buf);

    if (!mask.is_empty()) {
        const auto& g = mask.grid();
        std::vector<double> field(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) field[i] = mask.raster()[i] ? 1.0 : 0.0;

        auto run_windowed = [&](const std::function<double(double)>& prof) {
            const auto table = detail::tabulate_profile(prof, R + 1.0, 0.5 * g.spacing);
            auto kern = convolve::windowed_radial_kernel(
                [&table](double r) { return table(r); }, R, g.spacing);
            const auto conv = convolve::full(field, g.n, kern, use_fft);
            return *std::max_element(conv.begin(), conv.end()) * g.cell_weight();
        };
        out.restricted_hs = cc.theta_upper * run_windowed([&gamma](double r) {
            return detail::kernel_hs_profile(gamma, r);
        });
        if (gamma.rank_bound() <= 8)
            out.restricted_op = cc.theta_upper * run_windowed([&gamma](double r) {
                return detail::kernel_op_profile(gamma, r);
            });
    }
    return out;
}

/// Smallest rank count N such that the tail sum_{n >= N} C_{m,n}(D_R(0)) is at
/// most pi R^2 / 2 (linear search in N; the full sum over n equals pi R^2).
inline int projection_rank_for_tail(double R, int m, int max_rank = 512) {
    const double t0 = kPi * R * R;
    double head = 0.0;
    for (int n = 0; n < max_rank; ++n) {
        head += detail::c_value(m, n, t0);
        if (t0 - head <= 0.5 * t0) return n + 1;
    }
    throw TruncationError("projection_rank_for_tail: no rank within limit");
}

}  // namespace opsieve::sieve
