#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "opsieve/phasespace.hpp"
#include "oracles.hpp"

using namespace opsieve;
using namespace opsieve::phasespace;

TEST_CASE("grid geometry", "[phasespace]") {
    PhaseGrid g(4.0, 0.01);
    CHECK(g.n == 800);
    for (int i : {0, 10, 799}) {
        CHECK(std::abs(g.coord(i)) <= g.half_width);
    }
    CHECK(g.cell_weight() == Catch::Approx(1e-4));
    CHECK(g.cell_of(g.coord(123)) == 123);
}

TEST_CASE("disk measures", "[phasespace]") {
    PhaseGrid g(4.0, 0.01);
    const auto disk = DomainMask::disk_union({{0.0, 0.0, 1.0}}, g);
    CHECK(measure(disk) == Catch::Approx(kPi).margin(2.0 * kPi * 0.01));

    const auto none = DomainMask::disk_union({}, g);
    CHECK(measure(none) == 0.0);

    const auto full = DomainMask::full(g);
    CHECK(measure(full) == Catch::Approx(4.0 * g.half_width * g.half_width).epsilon(1e-2));

    // annulus 1 <= r <= 2 has area 3 pi
    const auto ann = DomainMask::radial_shadow(RadialShadow{{{1.0, 2.0}}}, g);
    CHECK(measure(ann) == Catch::Approx(3.0 * kPi).margin(2.0 * kPi * 3.0 * 0.01));

    CHECK_THROWS_AS(DomainMask::disk_union({{3.8, 0.0, 0.5}}, g), WindowError);
    CHECK_THROWS_AS(DomainMask::disk_union({{0.0, 0.0, -1.0}}, g), DomainError);
}

TEST_CASE("sparse disk chain measure", "[phasespace]") {
    PhaseGrid g(4.0, 0.005);
    const double R = 0.5;
    const auto omega = make_sparse_disk_chain(R, 3, g);
    CHECK(measure(omega) ==
          Catch::Approx(3.0 * kPi * R * R / 4.0).margin(3.0 * 2.0 * kPi * (R / 2) * 0.005));
}

TEST_CASE("radial shadow raster is rotation invariant up to one cell", "[phasespace]") {
    PhaseGrid g(3.0, 0.02);
    const auto ann = DomainMask::radial_shadow(RadialShadow{{{0.7, 1.9}}}, g);
    // sample nodes; rotating any inside node by 90 degrees stays inside
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (!ann.contains(i, j)) continue;
            const auto z = g.node(i, j);
            const int ri = g.cell_of(-z.w), rj = g.cell_of(z.x);
            CHECK(ann.contains(ri, rj));
        }
}

TEST_CASE("domain JSON round trip", "[phasespace]") {
    const auto j = nlohmann::json::parse(R"({
        "grid": {"L": 3.0, "h": 0.05},
        "disks": [{"cx": 0.5, "cy": -0.25, "r": 0.8}, {"cx": -1.0, "cy": 1.0, "r": 0.4}]
    })");
    const auto mask = DomainMask::from_json(j);
    CHECK(mask.grid().half_width == 3.0);
    CHECK(measure(mask) ==
          Catch::Approx(kPi * (0.64 + 0.16)).margin(2.0 * kPi * 1.2 * 0.05));
    const auto j2 = mask.to_json();
    CHECK(j2["disks"].size() == 2);

    const auto shadow = DomainMask::from_json(nlohmann::json::parse(
        R"({"grid": {"L": 3.0, "h": 0.05}, "radial_shadow": [[0.0, 1.0]]})"));
    CHECK(measure(shadow) == Catch::Approx(kPi).margin(2.0 * kPi * 0.05));

    CHECK_THROWS_AS(DomainMask::from_json(nlohmann::json::object()), DomainError);
}

TEST_CASE("nyquist density basic values", "[phasespace]") {
    PhaseGrid g(4.0, 0.02);
    const double R = 1.0;

    // Omega = D_R(0): nu = pi R^2 (Omega fits in one window position)
    const auto disk = DomainMask::disk_union({{0.0, 0.0, R}}, g);
    auto rep = nyquist_density(disk, R);
    CHECK(rep.value == Catch::Approx(kPi * R * R).margin(2.0 * kPi * R * 0.02 + 1e-9));
    CHECK(rep.argmax_center.radius() < 0.1);

    // full window, small R: nu = pi R^2
    const auto full = DomainMask::full(g);
    auto rep2 = nyquist_density(full, 0.5);
    CHECK(rep2.value == Catch::Approx(kPi * 0.25).margin(2.0 * kPi * 0.5 * 0.02 + 1e-9));

    // empty
    CHECK(nyquist_density(DomainMask::empty(g), 1.0).value == 0.0);
    CHECK_THROWS_AS(nyquist_density(disk, -1.0), DomainError);
}

TEST_CASE("nyquist density of the sparse chain", "[phasespace]") {
    PhaseGrid g(4.0, 0.01);
    const double R = 0.5;
    const auto omega = make_sparse_disk_chain(R, 3, g);
    const auto rep = nyquist_density(omega, R);
    // disks of radius R/2 spaced 2R: a window of radius R sees one disk
    CHECK(rep.value == Catch::Approx(kPi * R * R / 4.0).margin(2.0 * kPi * (R / 2) * 0.01 + 1e-9));
}

TEST_CASE("nyquist properties", "[phasespace]") {
    // radius chosen so no node-center distance ties the boundary exactly
    PhaseGrid g(4.0, 0.04);
    const auto small = DomainMask::disk_union({{-0.5, 0.3, 0.61}}, g);
    const auto big = DomainMask::disk_union({{-0.5, 0.3, 0.61}, {1.2, -0.8, 0.9}}, g);

    for (double R : {0.3, 0.8, 1.5}) {
        const auto a = nyquist_density(small, R);
        const auto b = nyquist_density(big, R);
        CHECK(a.value <= b.value + 1e-12);  // monotone in Omega
        CHECK(a.value <= std::min(measure(small), kPi * R * R) + 1e-12);
        CHECK(b.value <= std::min(measure(big), kPi * R * R) + 1e-12);
    }

    // translation invariance for a grid-aligned shift
    const double s = 16 * g.spacing;
    const auto shifted = DomainMask::disk_union({{-0.5 + s, 0.3 + s, 0.61}}, g);
    for (double R : {0.4, 1.1}) {
        CHECK(nyquist_density(small, R).value ==
              Catch::Approx(nyquist_density(shifted, R).value).margin(1e-12));
    }
}

TEST_CASE("disjoint small disks: nu equals the largest disk", "[phasespace]") {
    PhaseGrid g(4.0, 0.01);
    const double R = 0.7;
    // radii <= R/2, centers >= 2R apart: a window of radius R sees at most one
    const auto omega =
        DomainMask::disk_union({{-2.0, 0.0, 0.30}, {0.0, 1.5, 0.35}, {1.9, -1.2, 0.25}}, g);
    const auto rep = nyquist_density(omega, R);
    const auto biggest = DomainMask::disk_union({{0.0, 1.5, 0.35}}, g);
    CHECK(rep.value == Catch::Approx(measure(biggest)).margin(2.0 * kPi * 0.35 * 0.01 + 1e-9));
}

TEST_CASE("fft and direct convolution agree", "[phasespace]") {
    PhaseGrid g(2.0, 0.05);
    const auto omega = DomainMask::disk_union({{0.4, -0.3, 0.7}, {-0.8, 0.6, 0.5}}, g);
    for (double R : {0.3, 0.9}) {
        const auto fft = nyquist_density(omega, R, true);
        const auto direct = nyquist_density(omega, R, false);
        CHECK(fft.value == Catch::Approx(direct.value).epsilon(1e-9));
    }
}
