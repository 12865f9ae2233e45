#pragma once

// Operator-valued short-time Fourier transforms of truncated Hermite-matrix
// operators against polyradial windows, sampled on a phase grid, plus the
// identities that validate them (Moyal, the convolution identity, and the
// local reproducing formula).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opsieve/common.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/sieve.hpp"
#include "opsieve/specialfn.hpp"

namespace opsieve::opstft {

using Eigen::MatrixXcd;
using operators::HermiteOperator;
using operators::PolyradialWindow;
using phasespace::PhaseGrid;

/// <pi(w) h_a, pi(z) h_b>, reduced to one Hermite cross-STFT at offset w - z.
inline Complex tf_shift_inner(int a, int b, PhasePoint z, PhasePoint w) {
    const double phase = 2.0 * kPi * z.x * (w.w - z.w);
    const Complex rot{std::cos(phase), std::sin(phase)};
    return rot * std::conj(specialfn::stft_hermite(b, a, w - z));
}

/// Matrix of the window's reproducing kernel at (z, w):
/// K(z,w)_{mn} = conj(lambda_m) lambda_n <pi(w) h_n, pi(z) h_m>.
inline MatrixXcd kernel_matrix(const PolyradialWindow& gamma, PhasePoint z, PhasePoint w) {
    const int N = gamma.rank_bound();
    MatrixXcd K(N + 1, N + 1);
    for (int m = 0; m <= N; ++m)
        for (int n = 0; n <= N; ++n)
            K(m, n) = std::conj(gamma.lambda[std::size_t(m)]) * gamma.lambda[std::size_t(n)] *
                      tf_shift_inner(n, m, z, w);
    return K;
}

/// One node block of the transform:
/// M(z)_{nk} = conj(lambda_n) sum_m rho_{mk} V_{h_n} h_m(z).
inline MatrixXcd field_block(const PolyradialWindow& gamma, const HermiteOperator& rho,
                             PhasePoint z) {
    const int N = gamma.rank_bound();
    const int M = rho.truncation();
    MatrixXcd W(N + 1, M);
    for (int n = 0; n <= N; ++n)
        for (int m = 0; m < M; ++m) W(n, m) = specialfn::stft_hermite(m, n, z);
    MatrixXcd out = W * rho.coeff;
    for (int n = 0; n <= N; ++n) out.row(n) *= std::conj(gamma.lambda[std::size_t(n)]);
    return out;
}

/// Grid-sampled transform with flat node-major storage; node (ix, iy) owns a
/// rows-by-cols complex block at index ix * n + iy.
struct StftField {
    PhaseGrid grid;
    int rows = 0;
    int cols = 0;
    std::vector<Complex> data;
    std::vector<double> hs_norm;

    std::size_t block_offset(int ix, int iy) const {
        return grid.index(ix, iy) * std::size_t(rows) * cols;
    }
    Eigen::Map<const MatrixXcd> block(int ix, int iy) const {
        return {data.data() + block_offset(ix, iy), rows, cols};
    }
    Eigen::Map<MatrixXcd> block(int ix, int iy) {
        return {data.data() + block_offset(ix, iy), rows, cols};
    }

    /// CSV rows "x,y,hs_norm", full precision.
    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open " + path);
        out << "x,y,hs_norm\n";
        char buf[128];
        for (int ix = 0; ix < grid.n; ++ix)
            for (int iy = 0; iy < grid.n; ++iy) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.coord(ix),
                              grid.coord(iy), hs_norm[grid.index(ix, iy)]);
                out << buf;
            }
    }

    /// Binary dump: per node block an 8-byte header {u32 rows, u32 cols}
    /// followed by the row-major complex entries (re, im doubles). Node order
    /// is ix-major, matching the in-memory layout.
    void write_binary(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path);
        const std::uint32_t r = std::uint32_t(rows), c = std::uint32_t(cols);
        for (std::size_t node = 0; node < grid.size(); ++node) {
            out.write(reinterpret_cast<const char*>(&r), 4);
            out.write(reinterpret_cast<const char*>(&c), 4);
            out.write(reinterpret_cast<const char*>(data.data() + node * std::size_t(rows) * cols),
                      std::streamsize(sizeof(Complex)) * rows * cols);
        }
    }

    static StftField read_binary(const std::string& path, const PhaseGrid& grid) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path);
        StftField f;
        f.grid = grid;
        std::uint32_t r = 0, c = 0;
        for (std::size_t node = 0; node < grid.size(); ++node) {
            if (!in.read(reinterpret_cast<char*>(&r), 4) ||
                !in.read(reinterpret_cast<char*>(&c), 4))
                throw Error("field dump truncated");
            if (node == 0) {
                f.rows = int(r);
                f.cols = int(c);
                f.data.resize(grid.size() * std::size_t(r) * c);
            } else if (int(r) != f.rows || int(c) != f.cols) {
                throw Error("field dump has inconsistent block shapes");
            }
            in.read(reinterpret_cast<char*>(f.data.data() + node * std::size_t(r) * c),
                    std::streamsize(sizeof(Complex)) * r * c);
            if (!in) throw Error("field dump truncated");
        }
        f.refresh_norms();
        return f;
    }

    void refresh_norms() {
        hs_norm.resize(grid.size());
        const std::size_t bs = std::size_t(rows) * cols;
        for (std::size_t node = 0; node < grid.size(); ++node) {
            double s = 0.0;
            for (std::size_t t = 0; t < bs; ++t) s += std::norm(data[node * bs + t]);
            hs_norm[node] = std::sqrt(s);
        }
    }
};

/// Samples the transform of rho against gamma on every grid node.
inline StftField opstft_field(const PolyradialWindow& gamma, const HermiteOperator& rho,
                              const PhaseGrid& grid) {
    gamma.require_normalized();
    const int N = gamma.rank_bound();
    const int M = rho.truncation();
    if (N > specialfn::kMaxHermiteIndex || M - 1 > specialfn::kMaxHermiteIndex)
        throw IndexOverflowError("opstft_field: indices exceed the Hermite maximum");

    StftField f;
    f.grid = grid;
    f.rows = N + 1;
    f.cols = M;
    f.data.resize(grid.size() * std::size_t(N + 1) * M);
    f.hs_norm.resize(grid.size());

#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < grid.n; ++ix) {
        for (int iy = 0; iy < grid.n; ++iy) {
            const MatrixXcd blk = field_block(gamma, rho, grid.node(ix, iy));
            std::copy_n(blk.data(), blk.size(), f.data.data() + f.block_offset(ix, iy));
            f.hs_norm[grid.index(ix, iy)] = blk.norm();
        }
    }
    return f;
}

/// Relative defect of the quadrature against the energy identity
/// h^2 sum_z ||M(z)||^2 = ||gamma||^2 ||rho||^2.
inline double moyal_defect(const StftField& field, const PolyradialWindow& gamma,
                           const HermiteOperator& rho) {
    const double target = gamma.norm_sq() * rho.frobenius_norm() * rho.frobenius_norm();
    if (target == 0.0) throw DomainError("moyal_defect: zero-norm operator");
    double s = 0.0;
    for (double v : field.hs_norm) s += v * v;
    s *= field.grid.cell_weight();
    return std::abs(s - target) / target;
}

/// Difference between the pointwise Hilbert-Schmidt norm of the transform and
/// the convolution route sqrt(tr(rho rho* alpha_z(gamma gamma*))); the two are
/// equal in exact arithmetic.
inline double lemma_identity_defect(const PolyradialWindow& gamma, const HermiteOperator& rho,
                                    PhasePoint z) {
    const double left = field_block(gamma, rho, z).norm();

    const int N = gamma.rank_bound();
    const int M = rho.truncation();
    MatrixXcd A = MatrixXcd::Zero(M, M);
    for (int n = 0; n <= N; ++n) {
        const double wn = std::norm(gamma.lambda[std::size_t(n)]);
        if (wn == 0.0) continue;
        Eigen::VectorXcd v(M);
        for (int i = 0; i < M; ++i) v(i) = specialfn::stft_hermite(i, n, z);
        A += wn * v.conjugate() * v.transpose();
    }
    const MatrixXcd Q = rho.coeff * rho.coeff.adjoint();
    const double right = std::sqrt(std::max(0.0, (Q * A).trace().real()));
    return std::abs(left - right);
}

/// Reconstructs operator coefficients from a sampled field by the inversion
/// quadrature sum_z h^2 pi(z) gamma F(z); this is also the adjoint of the
/// sampled transform.
inline MatrixXcd invert_field(const StftField& field, const PolyradialWindow& gamma, int M) {
    const int N = gamma.rank_bound();
    if (field.rows != N + 1) throw DomainError("invert_field: window rank mismatch");
    const PhaseGrid& g = field.grid;
    MatrixXcd acc = MatrixXcd::Zero(M, field.cols);
#pragma omp parallel
    {
        MatrixXcd local = MatrixXcd::Zero(M, field.cols);
#pragma omp for schedule(static) nowait
        for (int ix = 0; ix < g.n; ++ix)
            for (int iy = 0; iy < g.n; ++iy) {
                const auto blk = field.block(ix, iy);
                const PhasePoint z = g.node(ix, iy);
                MatrixXcd W(M, N + 1);
                for (int m = 0; m < M; ++m)
                    for (int n = 0; n <= N; ++n)
                        W(m, n) = gamma.lambda[std::size_t(n)] *
                                  std::conj(specialfn::stft_hermite(m, n, z));
                local += W * blk;
            }
#pragma omp critical
        acc += local;
    }
    return acc * g.cell_weight();
}

/// Coefficient matrix of the time-frequency shift pi(z0) truncated to
/// rows-by-cols: S_{im} = <pi(z0) h_m, h_i>.
inline MatrixXcd shift_matrix(PhasePoint z0, int rows, int cols) {
    MatrixXcd S(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int m = 0; m < cols; ++m) S(i, m) = std::conj(specialfn::stft_hermite(i, m, z0));
    return S;
}

namespace detail {

/// Fraction of the grid cell centered at (cx, cy) covered by the disk of
/// radius R about the origin. Interior and exterior cells short-circuit; the
/// boundary ring integrates the clipped slice length exactly enough that the
/// disk quadrature keeps its second-order midpoint error.
inline double disk_cell_fraction(double cx, double cy, double half, double R) {
    const double d = std::hypot(cx, cy);
    const double corner = half * std::sqrt(2.0);
    if (d + corner <= R) return 1.0;
    if (d - corner >= R) return 0.0;
    const double x0 = cx - half, x1 = cx + half;
    const double y0 = cy - half, y1 = cy + half;
    auto slice = [&](double x) {
        const double c2 = R * R - x * x;
        if (c2 <= 0.0) return 0.0;
        const double c = std::sqrt(c2);
        const double lo = std::max(y0, -c), hi = std::min(y1, c);
        return std::max(0.0, hi - lo);
    };
    const double a = std::max(x0, -R), b = std::min(x1, R);
    if (a >= b) return 0.0;
    const double area = specialfn::adaptive_simpson(slice, a, b, 1e-14);
    return area / (4.0 * half * half);
}

}  // namespace detail

/// Frobenius defect of the local reproducing formula at z for the disk of
/// radius R: quadrature of K(z, w) M(w) over z + D_R against the multiplier
/// route A_n M(z)_{nk}. Cells straddling the disk boundary are weighted by
/// their exact covered fraction, keeping the quadrature second order.
inline double local_reproduce_defect(const PolyradialWindow& gamma, const HermiteOperator& rho,
                                     double R, PhasePoint z, const PhaseGrid& grid) {
    gamma.require_normalized();
    if (std::max(std::abs(z.x), std::abs(z.w)) + R > grid.half_width)
        throw WindowError("local_reproduce_defect: disk exceeds the grid window");

    const int N = gamma.rank_bound();
    const int M = rho.truncation();
    const auto cc = sieve::concentration_constants(gamma, R);

    const int i0 = grid.cell_of(z.x - R - grid.spacing), i1 = grid.cell_of(z.x + R + grid.spacing);
    const int j0 = grid.cell_of(z.w - R - grid.spacing), j1 = grid.cell_of(z.w + R + grid.spacing);

    MatrixXcd lhs = MatrixXcd::Zero(N + 1, M);
#pragma omp parallel
    {
        MatrixXcd local = MatrixXcd::Zero(N + 1, M);
#pragma omp for schedule(static) nowait
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) {
                const PhasePoint w = grid.node(i, j);
                const double frac = detail::disk_cell_fraction(w.x - z.x, w.w - z.w,
                                                               0.5 * grid.spacing, R);
                if (frac == 0.0) continue;
                local += frac * (kernel_matrix(gamma, z, w) * field_block(gamma, rho, w));
            }
#pragma omp critical
        lhs += local;
    }
    lhs *= grid.cell_weight();

    MatrixXcd rhs = field_block(gamma, rho, z);
    for (int n = 0; n <= N; ++n) rhs.row(n) *= cc.A(n);
    return (lhs - rhs).norm();
}

}  // namespace opsieve::opstft
