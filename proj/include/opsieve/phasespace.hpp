#pragma once

// Phase-plane grids, rasterized measurable domains, and the maximum Nyquist
// density nu(Omega, R) = sup_z |Omega ∩ D_R(z)|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "opsieve/common.hpp"
#include "opsieve/convolve.hpp"

namespace opsieve::phasespace {

/// Uniform square grid of cell centers covering [-L, L]^2 with spacing h.
/// Node (ix, iy) sits at (-L + (ix+1/2)h, -L + (iy+1/2)h); each node carries
/// quadrature weight h^2.
struct PhaseGrid {
    double half_width = 6.0;
    double spacing = 0.02;
    int n = 0;

    PhaseGrid() : PhaseGrid(6.0, 0.02) {}
    PhaseGrid(double L, double h) : half_width(L), spacing(h) {
        if (L <= 0.0 || h <= 0.0) throw DomainError("PhaseGrid: L and h must be positive");
        n = int(std::ceil(2.0 * L / h));
    }

    double coord(int i) const { return -half_width + (double(i) + 0.5) * spacing; }
    PhasePoint node(int ix, int iy) const { return {coord(ix), coord(iy)}; }
    std::size_t size() const { return std::size_t(n) * n; }
    std::size_t index(int ix, int iy) const { return std::size_t(ix) * n + iy; }
    double cell_weight() const { return spacing * spacing; }

    /// Index of the node whose cell contains coordinate c (clamped to range).
    int cell_of(double c) const {
        int i = int(std::floor((c + half_width) / spacing));
        return std::clamp(i, 0, n - 1);
    }

    bool operator==(const PhaseGrid& o) const {
        return half_width == o.half_width && spacing == o.spacing;
    }
};

struct Disk {
    double cx = 0.0, cy = 0.0, r = 1.0;
};

struct DiskList {
    std::vector<Disk> disks;
};

/// Rotation-invariant set described by its radial intervals {r : r0 <= r <= r1}.
struct RadialShadow {
    std::vector<std::pair<double, double>> intervals;

    bool contains(double r) const {
        for (auto& [a, b] : intervals)
            if (r >= a && r <= b) return true;
        return false;
    }
};

using Descriptor = std::variant<DiskList, RadialShadow>;

/// Boolean raster of a measurable set over a PhaseGrid (node-center rule),
/// plus the analytic descriptor when one exists. Immutable after construction.
class DomainMask {
  public:
    DomainMask(PhaseGrid grid, std::vector<std::uint8_t> raster,
               std::optional<Descriptor> descriptor = std::nullopt)
        : grid_(grid), raster_(std::move(raster)), descriptor_(std::move(descriptor)) {
        if (raster_.size() != grid_.size()) throw DomainError("DomainMask: raster size mismatch");
    }

    static DomainMask empty(const PhaseGrid& g) {
        return DomainMask(g, std::vector<std::uint8_t>(g.size(), 0), DiskList{});
    }

    static DomainMask full(const PhaseGrid& g) {
        return DomainMask(g, std::vector<std::uint8_t>(g.size(), 1));
    }

    static DomainMask disk_union(const std::vector<Disk>& disks, const PhaseGrid& g) {
        for (const auto& d : disks) {
            if (d.r <= 0.0) throw DomainError("disk_union: radius must be positive");
            if (std::max(std::abs(d.cx), std::abs(d.cy)) + d.r > g.half_width)
                throw WindowError("disk_union: disk exceeds the grid window");
        }
        std::vector<std::uint8_t> raster(g.size(), 0);
        for (const auto& d : disks) {
            const int i0 = g.cell_of(d.cx - d.r), i1 = g.cell_of(d.cx + d.r);
            const int j0 = g.cell_of(d.cy - d.r), j1 = g.cell_of(d.cy + d.r);
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j) {
                    const double dx = g.coord(i) - d.cx, dy = g.coord(j) - d.cy;
                    if (dx * dx + dy * dy <= d.r * d.r) raster[g.index(i, j)] = 1;
                }
        }
        return DomainMask(g, std::move(raster), DiskList{disks});
    }

    static DomainMask radial_shadow(const RadialShadow& shadow, const PhaseGrid& g) {
        for (auto& [a, b] : shadow.intervals)
            if (a < 0.0 || b < a) throw DomainError("radial_shadow: bad interval");
        std::vector<std::uint8_t> raster(g.size(), 0);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                if (shadow.contains(g.node(i, j).radius())) raster[g.index(i, j)] = 1;
        return DomainMask(g, std::move(raster), shadow);
    }

    /// Parses {"grid":{"L":..,"h":..}, "disks":[{"cx":..,"cy":..,"r":..}]}
    /// or {..., "radial_shadow":[[r0,r1],...]}.
    static DomainMask from_json(const nlohmann::json& j,
                                std::optional<PhaseGrid> grid_override = std::nullopt) {
        PhaseGrid g = grid_override ? *grid_override : PhaseGrid();
        if (!grid_override && j.contains("grid"))
            g = PhaseGrid(j["grid"].at("L").get<double>(), j["grid"].at("h").get<double>());
        if (j.contains("disks")) {
            std::vector<Disk> disks;
            for (const auto& d : j["disks"])
                disks.push_back({d.at("cx").get<double>(), d.at("cy").get<double>(),
                                 d.at("r").get<double>()});
            return disk_union(disks, g);
        }
        if (j.contains("radial_shadow")) {
            RadialShadow s;
            for (const auto& iv : j["radial_shadow"])
                s.intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
            return radial_shadow(s, g);
        }
        throw DomainError("domain JSON needs \"disks\" or \"radial_shadow\"");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["grid"] = {{"L", grid_.half_width}, {"h", grid_.spacing}};
        if (descriptor_) {
            if (auto* dl = std::get_if<DiskList>(&*descriptor_)) {
                j["disks"] = nlohmann::json::array();
                for (const auto& d : dl->disks)
                    j["disks"].push_back({{"cx", d.cx}, {"cy", d.cy}, {"r", d.r}});
            } else if (auto* rs = std::get_if<RadialShadow>(&*descriptor_)) {
                j["radial_shadow"] = nlohmann::json::array();
                for (auto& [a, b] : rs->intervals) j["radial_shadow"].push_back({a, b});
            }
        }
        return j;
    }

    const PhaseGrid& grid() const { return grid_; }
    const std::vector<std::uint8_t>& raster() const { return raster_; }
    const std::optional<Descriptor>& descriptor() const { return descriptor_; }
    bool contains(int ix, int iy) const { return raster_[grid_.index(ix, iy)] != 0; }

    std::size_t node_count() const {
        std::size_t c = 0;
        for (auto v : raster_) c += v;
        return c;
    }

    bool is_empty() const { return node_count() == 0; }

    /// True when the descriptor is rotation-invariant about the origin
    /// (a radial shadow, or a single origin-centered disk).
    bool is_origin_radial() const {
        if (!descriptor_) return false;
        if (std::holds_alternative<RadialShadow>(*descriptor_)) return true;
        const auto& dl = std::get<DiskList>(*descriptor_);
        return dl.disks.size() == 1 && dl.disks[0].cx == 0.0 && dl.disks[0].cy == 0.0;
    }

    /// Radial intervals of an origin-radial mask.
    RadialShadow shadow() const {
        if (!is_origin_radial()) throw DomainError("shadow: mask is not origin-radial");
        if (std::holds_alternative<RadialShadow>(*descriptor_))
            return std::get<RadialShadow>(*descriptor_);
        return RadialShadow{{{0.0, std::get<DiskList>(*descriptor_).disks[0].r}}};
    }

  private:
    PhaseGrid grid_;
    std::vector<std::uint8_t> raster_;
    std::optional<Descriptor> descriptor_;
};

inline DomainMask make_disk_union(const std::vector<PhasePoint>& centers,
                                  const std::vector<double>& radii, const PhaseGrid& g) {
    if (centers.size() != radii.size())
        throw DomainError("make_disk_union: centers/radii size mismatch");
    std::vector<Disk> disks(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i)
        disks[i] = {centers[i].x, centers[i].w, radii[i]};
    return DomainMask::disk_union(disks, g);
}

/// The disk chain
///   union_{k=0..N-1} D(2kR, R/2)
/// used throughout as the standard sparse test set.
inline DomainMask make_sparse_disk_chain(double R, int N, const PhaseGrid& g) {
    std::vector<Disk> disks;
    for (int k = 0; k < N; ++k) disks.push_back({2.0 * k * R, 0.0, R / 2.0});
    return DomainMask::disk_union(disks, g);
}

/// Lebesgue measure of the raster: h^2 times the number of set nodes.
inline double measure(const DomainMask& m) {
    return m.grid().cell_weight() * double(m.node_count());
}

struct NyquistReport {
    double value = 0.0;         ///< approx sup_z |Omega ∩ D_R(z)|
    PhasePoint argmax_center;   ///< grid point achieving the maximum
    double radius = 0.0;
    double grid_slack = 0.0;    ///< 2*pi*R*h bound on grid-max underestimation
};

/// Maximum Nyquist density of the mask at disk radius R. The raster is
/// convolved with a rasterized disk indicator; candidate centers extend a
/// full kernel half-width beyond the window so off-window suprema are seen.
/// The result is clamped to min(|Omega|, pi R^2), which the exact quantity
/// never exceeds.
inline NyquistReport nyquist_density(const DomainMask& mask, double R, bool use_fft = true) {
    if (R <= 0.0) throw DomainError("nyquist_density: R must be positive");
    const PhaseGrid& g = mask.grid();
    std::vector<double> field(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) field[i] = mask.raster()[i] ? 1.0 : 0.0;

    const auto kernel = convolve::disk_kernel(R, g.spacing);
    const auto conv = convolve::full(field, g.n, kernel, use_fft);
    const int m = g.n + 2 * kernel.hw;

    double best = 0.0;
    int bi = 0, bj = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double v = conv[std::size_t(i) * m + j];
            if (v > best) {
                best = v;
                bi = i;
                bj = j;
            }
        }
    NyquistReport rep;
    rep.value = std::min({best * g.cell_weight(), measure(mask), kPi * R * R});
    rep.argmax_center = {g.coord(bi - kernel.hw), g.coord(bj - kernel.hw)};
    rep.radius = R;
    rep.grid_slack = 2.0 * kPi * R * g.spacing;
    return rep;
}

}  // namespace opsieve::phasespace
