#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "opsieve/sieve.hpp"
#include "oracles.hpp"

using namespace opsieve;
using namespace opsieve::sieve;
using operators::PolyradialWindow;
using phasespace::DomainMask;
using phasespace::PhaseGrid;

TEST_CASE("concentration constants: closed forms", "[sieve]") {
    for (double R : {0.2, 0.5, 1.0, 1.7}) {
        CHECK(c_nm_disk(0, 0, R) ==
              Catch::Approx(-std::expm1(-kPi * R * R)).epsilon(1e-13));
    }
    const double t0 = 2.0, R2 = std::sqrt(t0 / kPi);
    CHECK(c_nm_disk(0, 1, R2) == Catch::Approx(1.0 - 3.0 * std::exp(-2.0)).epsilon(1e-13));
    CHECK(c_nm_disk(1, 1, R2) == Catch::Approx(1.0 - 5.0 * std::exp(-2.0)).epsilon(1e-13));
    CHECK(c_nm_disk(1, 0, R2) == Catch::Approx(c_nm_disk(0, 1, R2)).epsilon(1e-14));
    CHECK_THROWS_AS(c_nm_disk(0, 0, -1.0), DomainError);
    CHECK_THROWS_AS(c_nm_disk(-1, 0, 1.0), DomainError);
}

TEST_CASE("concentration constants: quadrature oracle", "[sieve]") {
    // independent Simpson quadrature of (lo!/hi!) t^d L_lo^d(t)^2 e^{-t}
    for (int n : {0, 2, 5, 9})
        for (int m : {0, 3, 8})
            for (double t0 : {0.7, 2.0, 11.0}) {
                const int lo = std::min(n, m), hi = std::max(n, m), d = hi - lo;
                const double pref =
                    std::exp(std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0));
                const double q = oracles::simpson(
                    [&](double t) {
                        const double l = specialfn::laguerre_eval(lo, d, t);
                        return pref * std::pow(t, d) * l * l * std::exp(-t);
                    },
                    0.0, t0, 1e-14);
                const double R = std::sqrt(t0 / kPi);
                INFO("n=" << n << " m=" << m << " t0=" << t0);
                CHECK(c_nm_disk(n, m, R) == Catch::Approx(q).margin(1e-11));
            }
}

TEST_CASE("concentration constants: range and saturation", "[sieve]") {
    const double Rbig = std::sqrt(50.0 / kPi);
    for (int n = 0; n <= 6; ++n)
        for (int m = 0; m <= 6; ++m) {
            const double c = c_nm_disk(n, m, Rbig);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
            CHECK(c == Catch::Approx(1.0).margin(1e-8));  // C -> 1 as R -> infinity
        }
}

TEST_CASE("shadow constants", "[sieve]") {
    const double R = 0.9;
    CHECK(c_nm_shadow(2, 4, phasespace::RadialShadow{{{0.0, R}}}) ==
          Catch::Approx(c_nm_disk(2, 4, R)).epsilon(1e-14));
    // full space recovers orthonormality
    CHECK(c_nm_shadow(3, 3, phasespace::RadialShadow{{{0.0, std::sqrt(50.0 / kPi)}}}) ==
          Catch::Approx(1.0).margin(1e-8));
    // annulus pi r^2 in [1, 2], n = m = 0: e^{-1} - e^{-2}
    const phasespace::RadialShadow ann{{{std::sqrt(1.0 / kPi), std::sqrt(2.0 / kPi)}}};
    CHECK(c_nm_shadow(0, 0, ann) ==
          Catch::Approx(std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-13));

    // two-interval shadow, mixed indices, against a 30-digit quadrature oracle
    const phasespace::RadialShadow two{{{std::sqrt(1.0 / kPi), std::sqrt(2.0 / kPi)},
                                        {std::sqrt(4.0 / kPi), std::sqrt(7.0 / kPi)}}};
    CHECK(c_nm_shadow(2, 5, two) == Catch::Approx(0.321885951261469661).epsilon(1e-12));
    CHECK(c_nm_shadow(5, 2, two) == Catch::Approx(0.321885951261469661).epsilon(1e-12));
}

TEST_CASE("window multipliers of the rank-two example", "[sieve]") {
    PolyradialWindow g2;
    g2.lambda = {Complex{1.0 / std::sqrt(2.0), 0.0}, Complex{1.0 / std::sqrt(2.0), 0.0}};
    g2.normalized = true;

    const double t0 = 2.0, R = std::sqrt(t0 / kPi);
    const auto cc = concentration_constants(g2, R);
    const double e = std::exp(-t0);
    CHECK(cc.A(0) == Catch::Approx(1.0 - 0.5 * (2.0 + t0) * e).epsilon(1e-13));
    CHECK(cc.A(1) == Catch::Approx(1.0 - 0.5 * (2.0 + t0 + t0 * t0) * e).epsilon(1e-13));
    CHECK(cc.B == Catch::Approx(cc.A(1)).epsilon(1e-15));
    CHECK(cc.theta_upper * cc.B == Catch::Approx(1.0).epsilon(1e-15));

    // A_0 - A_1 = pi^2 R^4 / 2 e^{-pi R^2} > 0 for all tested R
    for (double Rt : {0.3, 0.8, 1.5, 2.5}) {
        const auto c = concentration_constants(g2, Rt);
        const double u = kPi * Rt * Rt;
        CHECK(c.A(0) - c.A(1) == Catch::Approx(0.5 * u * u * std::exp(-u)).epsilon(1e-10));
        CHECK(c.A(0) > c.A(1));
    }

    // rank-one reduction
    const auto c1 = concentration_constants(PolyradialWindow::gaussian(), R);
    CHECK(c1.A(0) == Catch::Approx(-std::expm1(-t0)).epsilon(1e-14));
    CHECK(c1.B == c1.A(0));

    // degenerate window: measure-zero shadow
    CHECK_THROWS_AS(
        concentration_constants(g2, phasespace::RadialShadow{{{1.0, 1.0}}}),
        DegenerateWindowError);
}

TEST_CASE("explicit rank-bound estimate", "[sieve]") {
    // frozen oracle values (30-digit arithmetic)
    const auto b1 = theorem1_bound(0.1, 1, 5.0);
    CHECK(b1.value == Catch::Approx(0.264787280407134701).epsilon(1e-14));
    CHECK(b1.certificate);
    const auto b2 = theorem1_bound(0.1, 2, 5.0);
    CHECK(b2.value == Catch::Approx(0.443675515748449477).epsilon(1e-14));
    CHECK(theorem1_bound(0.0, 3, 6.0).value == 0.0);

    CHECK_THROWS_AS(theorem1_bound(0.1, 1, 4.9), DomainError);
    // denominator goes non-positive at alpha = 5 from N = 4 on
    CHECK_THROWS_AS(theorem1_bound(0.1, 4, 5.0), DegenerateWindowError);

    // the exact-B variant is at least as sharp where both exist
    for (int N : {1, 2, 3})
        for (double alpha : {5.0, 6.0, 8.0}) {
            const auto loose = theorem1_bound(0.2, N, alpha);
            const auto sharp =
                theorem1_direct_bound(0.2, PolyradialWindow::uniform_projection(N + 1), alpha);
            CHECK(sharp.value <= loose.value + 1e-12);
        }
}

TEST_CASE("lower bound on B from the explicit chain", "[sieve]") {
    // exact B >= 1 - (alpha^{2N}/2) e^{N(2-alpha)} wherever that bound is positive
    for (int N : {1, 2, 3, 4, 5, 6})
        for (double alpha : {5.0, 6.0, 8.0}) {
            const double lb =
                1.0 - std::exp(2.0 * N * std::log(alpha) + N * (2.0 - alpha) - std::log(2.0));
            const double R = std::sqrt(alpha * N / kPi);
            const auto cc = concentration_constants(PolyradialWindow::uniform_projection(N + 1), R);
            INFO("N=" << N << " alpha=" << alpha << " B=" << cc.B << " lb=" << lb);
            CHECK(cc.B >= lb);
        }
}

TEST_CASE("sparse-set large sieve bound", "[sieve]") {
    const double R = 0.1;
    const auto b = rfk_bound(kPi * R * R / 4.0, R);
    CHECK(b.value == Catch::Approx(0.253449579360074633).epsilon(1e-14));
    CHECK(b.certificate);
    CHECK(rfk_bound(0.0, 1.0).value == 0.0);
    // nu = pi R^2 (the full disk): 2(1-u)/(1-u^2) = 2/(1+u) <= 2, -> 2
    for (double Rr : {0.5, 1.5, 3.0}) {
        const double u = std::exp(-kPi * Rr * Rr / 2.0);
        const auto bb = rfk_bound(kPi * Rr * Rr, Rr);
        CHECK(bb.value == Catch::Approx(2.0 / (1.0 + u)).epsilon(1e-12));
        CHECK(bb.value <= 2.0);
    }
    CHECK(rfk_bound(kPi * 9.0, 3.0).value == Catch::Approx(2.0).margin(1e-5));
}

TEST_CASE("area-only bound", "[sieve]") {
    const auto half = faber_krahn_bound(2.0 * std::log(2.0), 1.0);
    CHECK(half.value == Catch::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(half.certificate);
    CHECK(faber_krahn_bound(0.0).value == 0.0);
    CHECK(faber_krahn_bound(1.3, 2.0).value == Catch::Approx(-std::expm1(-1.3)).epsilon(1e-14));
}

TEST_CASE("bound trade-off between sparse and concentrated sets", "[sieve]") {
    // concentrated: for nu = |Omega| the sieve is never better than the area bound
    for (double area : {0.3, 1.0, 2.5})
        for (double R : {0.5, 1.0, 2.0})
            CHECK(rfk_bound(area, R).value >= faber_krahn_bound(area, 1.0).value);

    // sparse: the chain at R=0.1 beats the area bound once enough disks pile up
    const double R = 0.1;
    const double rfk = rfk_bound(kPi * R * R / 4.0, R).value;
    const double fk200 = faber_krahn_bound(200.0 * kPi * R * R / 4.0, 1.0).value;
    CHECK(rfk < 0.5);
    CHECK(fk200 > 0.5);
    CHECK(rfk < fk200);
}

TEST_CASE("thermal window bound", "[sieve]") {
    PhaseGrid g(5.0, 0.02);
    const auto disk = DomainMask::disk_union({{0.0, 0.0, 1.0}}, g);

    // closed form at a = 0
    const auto c0 = theorem2_bound(disk, 0.0, Theorem2Form::Closed);
    CHECK(c0.value ==
          Catch::Approx(2.0 * (-std::expm1(-phasespace::measure(disk) / 2.0))).epsilon(1e-13));

    // for a centered disk the sup-integral saturates the closed form (frozen oracle)
    const auto ks = theorem2_bound(disk, 1.0, Theorem2Form::KernelSup);
    const auto cl = theorem2_bound(disk, 1.0, Theorem2Form::Closed);
    CHECK(ks.value == Catch::Approx(1.41202030920932437).margin(5e-3));
    CHECK(cl.value == Catch::Approx(1.41202030920932437).margin(5e-3));
    CHECK(ks.value <= cl.value + 1e-9);

    // empty set
    const auto e = DomainMask::empty(g);
    CHECK(theorem2_bound(e, 1.0, Theorem2Form::KernelSup).value == 0.0);
    CHECK(theorem2_bound(e, 1.0, Theorem2Form::Closed).value == 0.0);

    // ordering on scattered unions
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-2.5, 2.5), Ur(0.2, 0.8);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<phasespace::Disk> disks;
        for (int i = 0; i < 3; ++i) disks.push_back({U(rng), U(rng), Ur(rng)});
        const auto om = DomainMask::disk_union(disks, g);
        for (double a : {0.5, 2.0}) {
            const auto k2 = theorem2_bound(om, a, Theorem2Form::KernelSup);
            const auto c2 = theorem2_bound(om, a, Theorem2Form::Closed);
            CHECK(k2.value <= c2.value + 1e-9);
        }
    }

    CHECK_THROWS_AS(theorem2_bound(disk, -0.1, Theorem2Form::Closed), DomainError);
    // tiny window cannot hold the thermal Gaussian tail
    PhaseGrid tiny(0.5, 0.05);
    const auto td = DomainMask::disk_union({{0.0, 0.0, 0.2}}, tiny);
    CHECK_THROWS_AS(theorem2_bound(td, 2.0, Theorem2Form::KernelSup), WindowError);
}

TEST_CASE("thermal kernel profile matches the closed form", "[sieve]") {
    for (double a : {0.5, 1.0, 2.0}) {
        const auto gamma = PolyradialWindow::thermal(a);
        const double s = 1.0 + 2.0 * a;
        for (double r = 0.0; r <= 4.0; r += 0.37) {
            const double expect = std::exp(-kPi * r * r / (2.0 * s)) / std::sqrt(s);
            INFO("a=" << a << " r=" << r);
            CHECK(sieve::detail::kernel_hs_profile(gamma, r) ==
                  Catch::Approx(expect).margin(1e-8));
        }
    }
}

TEST_CASE("kernel sup integral", "[sieve]") {
    PhaseGrid g(5.0, 0.04);
    const auto gamma = PolyradialWindow::gaussian();
    const auto disk = DomainMask::disk_union({{0.0, 0.0, 1.0}}, g);

    // rank-one window: both norms coincide; value = sup int_Omega e^{-pi|z-w|^2/2}
    const double hs = kernel_sup_integral(disk, gamma, KernelNorm::HS);
    const double op = kernel_sup_integral(disk, gamma, KernelNorm::Op);
    CHECK(hs == Catch::Approx(op).epsilon(1e-10));
    const double exact = 2.0 * (-std::expm1(-kPi / 2.0));  // centered-disk closed form
    CHECK(hs == Catch::Approx(exact).margin(5e-3));

    CHECK(kernel_sup_integral(DomainMask::empty(g), gamma, KernelNorm::HS) == 0.0);
    CHECK_THROWS_AS(
        kernel_sup_integral(disk, PolyradialWindow::uniform_projection(10), KernelNorm::Op),
        TruncationError);

    // FFT and direct convolution agree on the kernel integral too
    PhaseGrid gs(2.0, 0.1);
    const auto small = DomainMask::disk_union({{0.3, -0.2, 0.6}}, gs);
    PolyradialWindow g2;
    g2.lambda = {Complex{1.0 / std::sqrt(2.0), 0.0}, Complex{1.0 / std::sqrt(2.0), 0.0}};
    g2.normalized = true;
    CHECK(kernel_sup_integral(small, g2, KernelNorm::HS, true) ==
          Catch::Approx(kernel_sup_integral(small, g2, KernelNorm::HS, false)).epsilon(1e-9));
}

TEST_CASE("max-nyquist chain ordering", "[sieve]") {
    PhaseGrid g(5.0, 0.04);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(-2.0, 2.0), Ur(0.25, 0.6);

    PolyradialWindow g2;
    g2.lambda = {Complex{1.0 / std::sqrt(2.0), 0.0}, Complex{1.0 / std::sqrt(2.0), 0.0}};
    g2.normalized = true;

    for (int rep = 0; rep < 4; ++rep) {
        std::vector<phasespace::Disk> disks;
        for (int i = 0; i < 2 + rep % 2; ++i) disks.push_back({U(rng), U(rng), Ur(rng)});
        const auto om = DomainMask::disk_union(disks, g);
        for (double R : {0.8, 1.4}) {
            const auto mn = max_nyquist_bound(om, g2, R);
            REQUIRE(mn.restricted_op.has_value());
            INFO("rep=" << rep << " R=" << R);
            CHECK(*mn.restricted_op <= mn.restricted_hs + 1e-9);
            CHECK(mn.restricted_hs <= mn.bound.value + 1e-9);
        }
    }

    // rank-one window reproduces the classical sieve constant
    const auto om = make_sparse_disk_chain(0.5, 3, g);
    const double R = 0.5;
    const auto mn = max_nyquist_bound(om, PolyradialWindow::gaussian(), R);
    const double nu = phasespace::nyquist_density(om, R).value;
    CHECK(mn.bound.value == Catch::Approx(nu / -std::expm1(-kPi * R * R)).epsilon(1e-12));

    CHECK(max_nyquist_bound(DomainMask::empty(g), g2, 1.0).bound.value == 0.0);
}

TEST_CASE("projection identity: row sums reach the disk area", "[sieve]") {
    for (double t0 : {1.0, 2.0, 4.0})
        for (int m = 0; m <= 4; ++m) {
            const double R = std::sqrt(t0 / kPi);
            double s = 0.0;
            for (int n = 0; n < 160; ++n) s += c_nm_disk(m, n, R);
            INFO("m=" << m << " t0=" << t0);
            CHECK(s == Catch::Approx(t0).margin(1e-6));
        }
}

TEST_CASE("projection window rank search", "[sieve]") {
    for (double R : {0.6, 1.0}) {
        const int N = projection_rank_for_tail(R, 0);
        REQUIRE(N >= 1);
        // head sum at N reaches half the area, at N-1 it does not
        const double t0 = kPi * R * R;
        double head = 0.0;
        for (int n = 0; n < N; ++n) head += c_nm_disk(0, n, R);
        CHECK(t0 - head <= 0.5 * t0 + 1e-12);
        if (N > 1) {
            head -= c_nm_disk(0, N - 1, R);
            CHECK(t0 - head > 0.5 * t0);
        }
    }
}

TEST_CASE("quadrature fallback for very large index sums", "[sieve]") {
    // n + m > 120 switches to adaptive quadrature; spot-check against the
    // orthonormality limit at a huge disk
    const double R = std::sqrt(400.0 / kPi);
    CHECK(c_nm_disk(60, 61, R) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("bound JSON shape", "[sieve]") {
    const auto b = rfk_bound(0.05, 0.4);
    const auto j = b.to_json();
    CHECK(j["method"] == "RFK");
    CHECK(j["value"].get<double>() == b.value);
    CHECK(j["certificate"].get<bool>() == b.certificate);
}
