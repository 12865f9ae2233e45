#pragma once

// Desk-scale verification checks covering every advertised identity and
// bound at pinned tolerances. The acceptance binary and the CLI `reproduce`
// command both run these.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "opsieve/locop.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/opstft.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/recovery.hpp"
#include "opsieve/sieve.hpp"

namespace opsieve::selfcheck {

using operators::HermiteOperator;
using operators::PolyradialWindow;
using phasespace::DomainMask;
using phasespace::PhaseGrid;

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

inline PolyradialWindow rank_two_window() {
    PolyradialWindow w;
    w.lambda = {Complex{1.0 / std::sqrt(2.0), 0.0}, Complex{1.0 / std::sqrt(2.0), 0.0}};
    w.normalized = true;
    return w;
}

inline std::vector<phasespace::Disk> random_disk_union(std::mt19937_64& rng, int count,
                                                       double span, double rmin, double rmax) {
    std::uniform_real_distribution<double> U(-span, span), Ur(rmin, rmax);
    std::vector<phasespace::Disk> out;
    for (int i = 0; i < count; ++i) out.push_back({U(rng), U(rng), Ur(rng)});
    return out;
}

}  // namespace detail

/// Closed-form constants at 1e-12: the Gaussian disk constant and the
/// rank-two window multipliers.
inline CheckResult criterion1() {
    CheckResult r{1, "closed-form concentration constants", true, ""};
    double worst = 0.0;
    const auto g2 = detail::rank_two_window();
    for (int i = 1; i <= 20; ++i) {
        const double R = 0.1 * i;
        const double t0 = kPi * R * R;
        worst = std::max(worst, std::abs(sieve::c_nm_disk(0, 0, R) - (-std::expm1(-t0))));
        const auto cc = sieve::concentration_constants(g2, R);
        const double a0 = 1.0 - 0.5 * (2.0 + t0) * std::exp(-t0);
        const double a1 = 1.0 - 0.5 * (2.0 + t0 + t0 * t0) * std::exp(-t0);
        worst = std::max({worst, std::abs(cc.A(0) - a0), std::abs(cc.A(1) - a1)});
    }
    r.pass = worst < 1e-12;
    r.detail = detail::fmt("max closed-form deviation %.3e (tol 1e-12)", worst);
    return r;
}

/// Exact B against the explicit lower bound, and positivity of that bound.
/// The positivity leg fails for alpha = 5 with N >= 4: the per-rank factor
/// alpha^2 e^{2-alpha} = 25 e^{-3} ~ 1.245 exceeds 1, so the bound tends to
/// -infinity; alpha in {6, 8} passes for every rank.
inline CheckResult criterion2() {
    CheckResult r{2, "rank-bound denominator positivity", true, ""};
    std::string bad;
    double margin = 1.0;
    for (int N = 1; N <= 6; ++N)
        for (double alpha : {5.0, 6.0, 8.0}) {
            const double lb =
                1.0 - std::exp(2.0 * N * std::log(alpha) + N * (2.0 - alpha) - std::log(2.0));
            const double R = std::sqrt(alpha * N / kPi);
            const auto cc =
                sieve::concentration_constants(PolyradialWindow::uniform_projection(N + 1), R);
            if (!(cc.B >= lb)) {
                r.pass = false;
                bad += detail::fmt(" [B<lb at N=%d a=%g]", N, alpha);
            }
            if (!(lb >= 0.0)) {
                r.pass = false;
                bad += detail::fmt(" [lb=%.3f<0 at N=%d alpha=%g]", lb, N, alpha);
            }
            margin = std::min(margin, cc.B - lb);
        }
    r.detail = detail::fmt("min(B - bound) = %.3e;%s", margin,
                           bad.empty() ? " all 18 combos hold" : bad.c_str());
    return r;
}

/// Local reproducing formula at h = 0.02 with >= 3x decay under refinement.
inline CheckResult criterion3() {
    CheckResult r{3, "local reproducing formula", true, ""};
    std::mt19937_64 rng(3003);
    const auto rho = operators::random_rank(6, 3, rng);
    const double nr = rho.frobenius_norm();
    const PhasePoint z{0.3, -0.2};
    double worst_ratio = 1e9, worst_defect = 0.0;
    for (const auto& gamma : {PolyradialWindow::gaussian(), detail::rank_two_window()}) {
        for (double t0 : {1.0, 2.0, 4.0}) {
            const double R = std::sqrt(t0 / kPi);
            const PhaseGrid g1(5.0, 0.02), g2(5.0, 0.01);
            const double d1 = opstft::local_reproduce_defect(gamma, rho, R, z, g1);
            const double d2 = opstft::local_reproduce_defect(gamma, rho, R, z, g2);
            if (!(d1 < 5.0 * 0.02 * nr)) r.pass = false;
            if (!(d2 <= std::max(d1 / 3.0, 1e-13))) r.pass = false;
            worst_defect = std::max(worst_defect, d1 / nr);
            if (d2 > 0.0) worst_ratio = std::min(worst_ratio, d1 / d2);
        }
    }
    r.detail = detail::fmt("max defect/||rho|| %.3e (tol %.1e), min refinement ratio %.2f",
                           worst_defect, 5.0 * 0.02, worst_ratio);
    return r;
}

/// Sparse-set vs area-bound trade-off in exact formula arithmetic.
inline CheckResult criterion4() {
    CheckResult r{4, "sparse vs concentrated trade-off", true, ""};
    const double R = 0.1, t0 = kPi * R * R;
    const double rfk = sieve::rfk_bound(t0 / 4.0, R).value;  // nu = pi R^2 / 4, any N
    const double rfk_closed = 2.0 * (-std::expm1(-t0 / 8.0)) / (-std::expm1(-t0));
    if (std::abs(rfk - rfk_closed) > 1e-12) r.pass = false;
    if (!(rfk < 0.5)) r.pass = false;

    const double fk10 = sieve::faber_krahn_bound(10.0 * t0 / 4.0, 1.0).value;
    if (std::abs(fk10 - (-std::expm1(-10.0 * t0 / 8.0))) > 1e-12) r.pass = false;
    const double fk200 = sieve::faber_krahn_bound(200.0 * t0 / 4.0, 1.0).value;
    if (!(fk200 > 0.5 && rfk < 0.5)) r.pass = false;

    bool reversal = true;
    for (double Rd : {0.3, 0.7, 1.2, 2.0}) {
        const double area = kPi * Rd * Rd;
        if (!(sieve::faber_krahn_bound(area, 1.0).value < sieve::rfk_bound(area, Rd).value))
            reversal = false;
    }
    if (!reversal) r.pass = false;
    r.detail = detail::fmt("chain RFK=%.6f < 1/2 < FK(N=200)=%.6f; FK(N=10)=%.6f; "
                           "reversal on centered disks %s",
                           rfk, fk200, fk10, reversal ? "holds" : "fails");
    return r;
}

/// Thermal kernel profile against the closed form, and the two bound forms'
/// ordering on random unions.
inline CheckResult criterion5() {
    CheckResult r{5, "thermal kernel", true, ""};
    double worst = 0.0;
    for (double a : {0.5, 1.0, 2.0}) {
        const auto gamma = PolyradialWindow::thermal(a);
        const double s = 1.0 + 2.0 * a;
        for (double rr = 0.0; rr <= 4.0; rr += 0.05) {
            const double expect = std::exp(-kPi * rr * rr / (2.0 * s)) / std::sqrt(s);
            worst = std::max(worst,
                             std::abs(sieve::detail::kernel_hs_profile(gamma, rr) - expect));
        }
    }
    if (!(worst < 1e-8)) r.pass = false;

    PhaseGrid g(5.0, 0.02);
    std::mt19937_64 rng(505);
    bool ordered = true;
    for (int rep = 0; rep < 10; ++rep) {
        const auto om =
            DomainMask::disk_union(detail::random_disk_union(rng, 2 + rep % 3, 2.5, 0.3, 0.8), g);
        for (double a : {0.5, 1.0, 2.0}) {
            const double ks = sieve::theorem2_bound(om, a, sieve::Theorem2Form::KernelSup).value;
            const double cl = sieve::theorem2_bound(om, a, sieve::Theorem2Form::Closed).value;
            if (!(ks <= cl + 1e-9)) ordered = false;
        }
    }
    if (!ordered) r.pass = false;
    r.detail = detail::fmt("max profile deviation %.3e (tol 1e-8); ordering %s", worst,
                           ordered ? "holds on 10 random unions" : "violated");
    return r;
}

/// Localization spectra: the Gaussian disk eigenvalue and domination by
/// every applicable bound on random unions.
inline CheckResult criterion6() {
    CheckResult r{6, "localization spectra", true, ""};
    PhaseGrid g(5.0, 0.02);
    const double R1 = std::sqrt(1.0 / kPi);
    const auto disk = DomainMask::disk_union({{0.0, 0.0, R1}}, g);
    const auto loc = locop::build_localization_matrix(disk, PolyradialWindow::gaussian(), 24);
    const double l1 = locop::top_eigenvalue(loc).first;
    const double err = std::abs(l1 - (-std::expm1(-1.0)));
    if (!(err < 1e-5)) r.pass = false;

    std::mt19937_64 rng(606);
    double min_slack = 1.0;
    for (int rep = 0; rep < 10; ++rep) {
        const auto om =
            DomainMask::disk_union(detail::random_disk_union(rng, 2 + rep % 2, 2.0, 0.35, 0.7), g);
        const auto lm = locop::build_localization_matrix(om, PolyradialWindow::gaussian(), 16);
        const double lam = locop::top_eigenvalue(lm).first;
        double best = sieve::faber_krahn_bound(phasespace::measure(om), 2.0).value;
        best = std::min(best,
                        sieve::theorem2_bound(om, 0.0, sieve::Theorem2Form::KernelSup).value);
        best = std::min(best, sieve::theorem2_bound(om, 0.0, sieve::Theorem2Form::Closed).value);
        for (double t0 : {2.0, 4.0, 6.0}) {
            const double Rr = std::sqrt(t0 / kPi);
            const auto mn = sieve::max_nyquist_bound(om, PolyradialWindow::gaussian(), Rr);
            best = std::min({best, mn.bound.value, mn.restricted_hs});
            best = std::min(best, sieve::rfk_bound(mn.nu, Rr).value);
        }
        min_slack = std::min(min_slack, best - lam);
        if (!(lam <= best + 1e-6)) r.pass = false;
    }
    r.detail = detail::fmt("disk eigenvalue error %.3e (tol 1e-5); min bound slack %.3e", err,
                           min_slack);
    return r;
}

/// Operator and function Rayleigh quotients coincide.
inline CheckResult criterion7() {
    CheckResult r{7, "operator-function spectrum equivalence", true, ""};
    PhaseGrid g(5.0, 0.02);
    const auto disk = DomainMask::disk_union({{0.0, 0.0, 0.9}}, g);
    const auto rep = locop::s2_equals_l2_check(disk, detail::rank_two_window(), 12, 200, 7007);
    if (!(rep.max_quotient <= rep.lambda1 + 1e-8)) r.pass = false;
    if (!(std::abs(rep.max_quotient - rep.lambda1) < 1e-8)) r.pass = false;
    if (!rep.rank_one_attains) r.pass = false;
    r.detail = detail::fmt("lambda1 %.9f, max quotient %.9f, rank-one attainer %s", rep.lambda1,
                           rep.max_quotient, rep.rank_one_attains ? "found" : "missing");
    return r;
}

/// L1 recovery: exactness on a certified instance, the noisy a-posteriori
/// bound, and the documented failure on an uncertified region.
inline CheckResult criterion8() {
    CheckResult r{8, "L1 recovery", true, ""};
    const PhaseGrid g(5.0, 0.05);
    const auto gamma = detail::rank_two_window();
    const auto omega = DomainMask::disk_union(
        {{-1.7, -1.7, 0.3}, {1.7, 1.7, 0.3}, {-1.7, 1.7, 0.3}}, g);
    std::mt19937_64 rng(808);
    const auto truth = operators::random_rank(6, 2, rng);

    const recovery::ForwardMap A(gamma, g, 6);
    opstft::StftField clean;
    A.apply(truth.coeff, clean);
    const std::size_t bs = std::size_t(clean.rows) * clean.cols;

    const auto cert = recovery::certificate(omega, gamma, recovery::Variant::Logan);
    if (!(cert.alpha <= 0.3)) r.pass = false;

    // Logan: erased region zeroed
    double logan_err = 0.0;
    {
        opstft::StftField obs = clean;
        for (std::size_t node = 0; node < g.size(); ++node)
            if (omega.raster()[node])
                std::fill_n(obs.data.data() + node * bs, bs, Complex{0.0, 0.0});
        recovery::RecoveryProblem p(gamma, g, omega, obs, 0.0, recovery::Variant::Logan);
        recovery::SolverConfig cfg;
        cfg.max_iterations = 6000;
        const auto rep = recovery::solve(p, cfg);
        logan_err = (rep.solution.coeff - truth.coeff).norm();
        if (!(logan_err < 1e-3)) r.pass = false;
    }

    // noisy variant: noise of L1 mass eps leaks outside the region
    double worst_gap = -1.0;
    for (double eps : {1e-3, 1e-2}) {
        opstft::StftField obs = clean;
        std::normal_distribution<double> nd(0.0, 1.0);
        // big noise inside Omega
        for (std::size_t node = 0; node < g.size(); ++node)
            if (omega.raster()[node])
                for (std::size_t i = 0; i < bs; ++i)
                    obs.data[node * bs + i] += 0.3 * Complex{nd(rng), nd(rng)};
        // small leakage outside, scaled to exact L1 mass eps
        std::vector<Complex> leak(g.size() * bs, Complex{0, 0});
        double mass = 0.0;
        for (std::size_t node = 0; node < g.size(); ++node) {
            if (omega.raster()[node]) continue;
            if ((node * 2654435761u) % 97 != 0) continue;  // sparse leakage
            for (std::size_t i = 0; i < bs; ++i) leak[node * bs + i] = Complex{nd(rng), nd(rng)};
            mass += recovery::detail::block_norm(leak.data() + node * bs, bs);
        }
        mass *= g.cell_weight();
        const double scale = eps / mass;
        for (std::size_t i = 0; i < leak.size(); ++i) obs.data[i] += scale * leak[i];

        recovery::RecoveryProblem p(gamma, g, omega, obs, eps,
                                    recovery::Variant::NoisySupported);
        recovery::SolverConfig cfg;
        cfg.max_iterations = 8000;
        const auto rep = recovery::solve(p, cfg);
        opstft::StftField rec;
        A.apply(rep.solution.coeff, rec);
        const double err = recovery::field_l1_diff(rec, clean);
        const double apriori = recovery::error_bound(cert.alpha, recovery::Variant::NoisySupported,
                                                     eps);
        worst_gap = std::max(worst_gap, err - apriori);
        if (!(err <= apriori + 1e-3)) r.pass = false;
    }

    // documented failure: uncertified region swallows the distinction
    bool failure_seen = false;
    {
        PhaseGrid gb(6.0, 0.1);
        const auto gbig = PolyradialWindow::gaussian();
        const auto ob = DomainMask::disk_union({{0.0, 0.0, 4.0}}, gb);
        const auto cb = recovery::certificate(ob, gbig, recovery::Variant::Logan);
        const auto t2 = HermiteOperator::basis(0, 0, 2);
        const recovery::ForwardMap Ab(gbig, gb, 2);
        opstft::StftField obs;
        Ab.apply(t2.coeff, obs);
        for (std::size_t node = 0; node < gb.size(); ++node)
            if (ob.raster()[node])
                std::fill_n(obs.data.data() + node * 4, 4, Complex{0.0, 0.0});
        recovery::RecoveryProblem p(gbig, gb, ob, obs, 0.0, recovery::Variant::Logan);
        recovery::SolverConfig cfg;
        cfg.max_iterations = 1500;
        const auto rep = recovery::solve(p, cfg);
        failure_seen = !cb.certified && (rep.solution.coeff - t2.coeff).norm() > 0.5;
        if (!failure_seen) r.pass = false;
    }

    r.detail = detail::fmt("alpha %.4f; certified error %.2e (tol 1e-3); noisy gap %.2e; "
                           "uncertified failure %s",
                           cert.alpha, logan_err, worst_gap,
                           failure_seen ? "documented" : "NOT seen");
    return r;
}

/// Husimi normalization and concentration.
inline CheckResult criterion9() {
    CheckResult r{9, "husimi normalization and concentration", true, ""};
    PhaseGrid g(6.0, 0.04);
    std::mt19937_64 rng(909);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto rho = operators::random_positive(10, rng);
        const auto f = locop::husimi_field(rho, g);
        worst = std::max(worst, std::abs(f.integral() - rho.coeff.trace().real()));
    }
    if (!(worst < 1e-6)) r.pass = false;

    const double R = 1.0, c00 = sieve::c_nm_disk(0, 0, R);
    double min_slack = 1.0;
    bool conc = true;
    for (int rep = 0; rep < 10; ++rep) {
        const auto om =
            DomainMask::disk_union(detail::random_disk_union(rng, 2, 2.0, 0.3, 0.7), g);
        const auto rho = operators::random_positive(8, rng);
        const auto f = locop::husimi_field(rho, g);
        const double lhs = f.integral_over(om);
        const double rhs = phasespace::nyquist_density(om, R).value / c00 *
                           rho.coeff.trace().real();
        min_slack = std::min(min_slack, rhs - lhs);
        if (!(lhs <= rhs + 1e-9)) conc = false;
    }
    if (!conc) r.pass = false;
    r.detail = detail::fmt("max normalization defect %.3e (tol 1e-6); min concentration slack %.3e",
                           worst, min_slack);
    return r;
}

/// Projection identity: the full row sum of the constants recovers the area.
inline CheckResult criterion10() {
    CheckResult r{10, "projection-window identity", true, ""};
    double worst = 0.0;
    for (double t0 : {1.0, 2.0, 4.0})
        for (int m = 0; m <= 4; ++m) {
            const double R = std::sqrt(t0 / kPi);
            double s = 0.0;
            int quiet = 0;
            for (int n = 0; n < 400 && quiet < 8; ++n) {
                const double c = sieve::c_nm_disk(m, n, R);
                s += c;
                quiet = (c < 1e-13) ? quiet + 1 : 0;
            }
            worst = std::max(worst, std::abs(s - t0));
        }
    r.pass = worst < 1e-6;
    r.detail = detail::fmt("max row-sum deviation %.3e (tol 1e-6)", worst);
    return r;
}

inline CheckResult run_criterion(int id) {
    switch (id) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4();
        case 5: return criterion5();
        case 6: return criterion6();
        case 7: return criterion7();
        case 8: return criterion8();
        case 9: return criterion9();
        case 10: return criterion10();
    }
    throw DomainError("no such criterion: " + std::to_string(id));
}

inline std::vector<CheckResult> run_all() {
    std::vector<CheckResult> out;
    for (int id = 1; id <= 10; ++id) out.push_back(run_criterion(id));
    return out;
}

}  // namespace opsieve::selfcheck
