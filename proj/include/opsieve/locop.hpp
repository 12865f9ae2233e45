#pragma once

// Mixed-state localization operators as truncated Hermite matrices, their
// spectra, and the Husimi / Cohen-class scalar fields with their
// concentration estimates.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opsieve/common.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/sieve.hpp"
#include "opsieve/specialfn.hpp"

namespace opsieve::locop {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using operators::HermiteOperator;
using operators::PolyradialWindow;
using phasespace::DomainMask;
using phasespace::PhaseGrid;

/// Truncated matrix <A_Omega h_j, h_i> of the localization operator of a
/// window, positive with spectrum in [0, 1].
struct LocalizationMatrix {
    MatrixXcd entries;
    std::string omega_digest;
    std::string gamma_digest;
    int truncation = 0;
    double quadrature_step = 0.0;  ///< 0 marks the exact radial reduction

    double trace() const { return entries.trace().real(); }
};

/// Assembles the localization matrix. Origin-radial masks (centered disk or
/// radial shadow) go through the exact angular reduction: the matrix is
/// diagonal with the window multipliers on the diagonal. Everything else is
/// integrated over the raster with the node-center rule.
inline LocalizationMatrix build_localization_matrix(const DomainMask& mask,
                                                    const PolyradialWindow& gamma, int M) {
    gamma.require_normalized();
    if (M < 1 || M - 1 > specialfn::kMaxHermiteIndex)
        throw IndexOverflowError("build_localization_matrix: bad truncation");
    if (gamma.tail_mass > 1e-10)
        throw TruncationError("build_localization_matrix: window tail mass exceeds 1e-10");

    const int N = gamma.rank_bound();
    LocalizationMatrix out;
    out.truncation = M;
    out.gamma_digest = gamma.digest();
    out.omega_digest = mask.to_json().dump();

    if (mask.is_origin_radial()) {
        const auto shadow = mask.shadow();
        out.entries = MatrixXcd::Zero(M, M);
        for (int i = 0; i < M; ++i) {
            double a = 0.0;
            for (int n = 0; n <= N; ++n) {
                const double wn = std::norm(gamma.lambda[std::size_t(n)]);
                if (wn > 0.0) a += wn * sieve::c_nm_shadow(i, n, shadow);
            }
            out.entries(i, i) = a;
        }
        out.quadrature_step = 0.0;
        return out;
    }

    const PhaseGrid& g = mask.grid();
    out.quadrature_step = g.spacing;
    MatrixXcd acc = MatrixXcd::Zero(M, M);
#pragma omp parallel
    {
        MatrixXcd local = MatrixXcd::Zero(M, M);
        VectorXcd v(M);
#pragma omp for schedule(static) nowait
        for (int ix = 0; ix < g.n; ++ix)
            for (int iy = 0; iy < g.n; ++iy) {
                if (!mask.contains(ix, iy)) continue;
                const PhasePoint z = g.node(ix, iy);
                for (int n = 0; n <= N; ++n) {
                    const double wn = std::norm(gamma.lambda[std::size_t(n)]);
                    if (wn == 0.0) continue;
                    for (int i = 0; i < M; ++i) v(i) = specialfn::stft_hermite(i, n, z);
                    local.noalias() += wn * (v.conjugate() * v.transpose());
                }
            }
#pragma omp critical
        acc += local;
    }
    acc *= g.cell_weight();
    out.entries = 0.5 * (acc + acc.adjoint());
    return out;
}

/// Largest eigenvalue and its eigenvector, with the eigenvector's first
/// sizable component rotated to the positive real axis for reproducibility.
inline std::pair<double, VectorXcd> top_eigenvalue(const LocalizationMatrix& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m.entries);
    if (es.info() != Eigen::Success) throw SolverError("top_eigenvalue: eigensolve failed");
    const int last = int(es.eigenvalues().size()) - 1;
    VectorXcd v = es.eigenvectors().col(last);
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > 1e-12) {
            v *= std::conj(v(i)) / std::abs(v(i));
            break;
        }
    return {es.eigenvalues()(last), v};
}

inline void write_spectrum_csv(const LocalizationMatrix& m, const std::string& path) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m.entries);
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "index,eigenvalue\n";
    char buf[64];
    // descending order
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", i,
                      es.eigenvalues()(es.eigenvalues().size() - 1 - i));
        out << buf;
    }
}

struct S2L2Report {
    double lambda1 = 0.0;        ///< top eigenvalue of the truncated matrix
    double max_quotient = 0.0;   ///< best Rayleigh quotient over sampled operators
    double rank_one_quotient = 0.0;  ///< quotient of the rank-one attainer
    bool rank_one_attains = false;
    int trials = 0;
};

/// Samples random Hermite-matrix operators and confirms that the operator
/// Rayleigh quotient <A rho, rho> / ||rho||^2 never exceeds the top
/// eigenvalue of the function-level operator, and that a rank-one operator
/// built from the top eigenvector attains it. The matrix acts column-wise.
inline S2L2Report s2_equals_l2_check(const DomainMask& mask, const PolyradialWindow& gamma, int M,
                                     int trials, std::uint64_t seed = 1) {
    const auto loc = build_localization_matrix(mask, gamma, M);
    const auto [l1, vec] = top_eigenvalue(loc);

    S2L2Report rep;
    rep.lambda1 = l1;
    rep.trials = trials;

    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        const auto rho = operators::random_operator(M, rng);
        const double q = (rho.coeff.adjoint() * (loc.entries * rho.coeff)).trace().real() /
                         (rho.coeff.squaredNorm());
        rep.max_quotient = std::max(rep.max_quotient, q);
    }

    double worst_rank_one = 1.0;
    for (int t = 0; t < 5; ++t) {
        const auto gvec = operators::random_complex_gaussian(M, 1, rng);
        MatrixXcd r1 = vec * gvec.adjoint();
        const double q = (r1.adjoint() * (loc.entries * r1)).trace().real() / r1.squaredNorm();
        worst_rank_one = std::min(worst_rank_one, q / std::max(l1, 1e-300));
        rep.rank_one_quotient = q;
    }
    rep.rank_one_attains = std::abs(worst_rank_one - 1.0) < 1e-8;
    rep.max_quotient = std::max(rep.max_quotient, rep.rank_one_quotient);
    return rep;
}

enum class FieldKind { Husimi, Cohen };

/// Real scalar field over the grid (a phase-space density).
struct ScalarField {
    PhaseGrid grid;
    std::vector<double> values;
    FieldKind kind = FieldKind::Husimi;

    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.cell_weight();
    }

    double integral_over(const DomainMask& mask) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (mask.raster()[i]) s += values[i];
        return s * grid.cell_weight();
    }

    /// L^q norm of the field under the grid quadrature.
    double lq_norm(double q) const {
        double s = 0.0;
        for (double v : values) s += std::pow(std::abs(v), q);
        return std::pow(s * grid.cell_weight(), 1.0 / q);
    }

    double min_value() const { return *std::min_element(values.begin(), values.end()); }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open " + path);
        out << "x,y,value\n";
        char buf[128];
        for (int ix = 0; ix < grid.n; ++ix)
            for (int iy = 0; iy < grid.n; ++iy) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.coord(ix),
                              grid.coord(iy), values[grid.index(ix, iy)]);
                out << buf;
            }
    }
};

/// Husimi density <rho pi(z) h_0, pi(z) h_0> of a positive operator,
/// evaluated through the Gaussian-window coefficient vector; exact for
/// truncated rho.
inline ScalarField husimi_field(const HermiteOperator& rho, const PhaseGrid& grid) {
    if (!rho.positive) throw DomainError("husimi_field: operator must be flagged positive");
    const int M = rho.truncation();
    ScalarField f;
    f.grid = grid;
    f.kind = FieldKind::Husimi;
    f.values.resize(grid.size());
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < grid.n; ++ix) {
        VectorXcd a(M);
        for (int iy = 0; iy < grid.n; ++iy) {
            const PhasePoint z = grid.node(ix, iy);
            for (int m = 0; m < M; ++m) a(m) = std::conj(specialfn::stft_hermite(m, 0, z));
            f.values[grid.index(ix, iy)] = (a.adjoint() * rho.coeff * a)(0, 0).real();
        }
    }
    return f;
}

/// Covariant quadratic distribution of a function given by Hermite
/// coefficients: Q(z) = sum_n |lambda_n|^2 |sum_m f_m V_{h_n} h_m(z)|^2.
inline ScalarField cohen_field(const PolyradialWindow& gamma, const VectorXcd& fcoef,
                               const PhaseGrid& grid) {
    gamma.require_normalized();
    const int N = gamma.rank_bound();
    const int M = int(fcoef.size());
    ScalarField f;
    f.grid = grid;
    f.kind = FieldKind::Cohen;
    f.values.resize(grid.size());
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < grid.n; ++ix) {
        for (int iy = 0; iy < grid.n; ++iy) {
            const PhasePoint z = grid.node(ix, iy);
            double q = 0.0;
            for (int n = 0; n <= N; ++n) {
                const double wn = std::norm(gamma.lambda[std::size_t(n)]);
                if (wn == 0.0) continue;
                Complex s{0.0, 0.0};
                for (int m = 0; m < M; ++m) s += fcoef(m) * specialfn::stft_hermite(m, n, z);
                q += wn * std::norm(s);
            }
            f.values[grid.index(ix, iy)] = q;
        }
    }
    return f;
}

struct PointwiseBoundReport {
    double max_ratio = 0.0;  ///< sup over grid of |Q| / (HS-field * ||f||)
    bool holds = false;
};

/// For a self-adjoint (not necessarily positive) diagonal window with
/// eigenvalues mu_n, compares the Cohen-class magnitude |Q_eta f(z)| =
/// |sum_n mu_n |V_{h_n} f(z)|^2| against the dominating field
/// ||eta pi(z)* f||_2 ||f||_2 node by node.
inline PointwiseBoundReport cohen_pointwise_bound(const std::vector<double>& mu,
                                                  const VectorXcd& fcoef,
                                                  const PhaseGrid& grid) {
    const int N = int(mu.size()) - 1;
    const int M = int(fcoef.size());
    const double fnorm = fcoef.norm();
    if (fnorm == 0.0) throw DomainError("cohen_pointwise_bound: zero function");
    PointwiseBoundReport rep;
    for (int ix = 0; ix < grid.n; ++ix)
        for (int iy = 0; iy < grid.n; ++iy) {
            const PhasePoint z = grid.node(ix, iy);
            double q = 0.0, hs2 = 0.0;
            for (int n = 0; n <= N; ++n) {
                Complex s{0.0, 0.0};
                for (int m = 0; m < M; ++m) s += fcoef(m) * specialfn::stft_hermite(m, n, z);
                const double a2 = std::norm(s);
                q += mu[std::size_t(n)] * a2;
                hs2 += mu[std::size_t(n)] * mu[std::size_t(n)] * a2;
            }
            const double denom = std::sqrt(hs2) * fnorm;
            if (denom > 1e-300)
                rep.max_ratio = std::max(rep.max_ratio, std::abs(q) / denom);
        }
    rep.holds = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

struct UncertaintyReport {
    double concentration = 0.0;   ///< int_Omega (Q / ||Q||_{p/2})^{p/2}
    double kernel_bound = 0.0;    ///< sup_w int_Omega ||sqrt(eta) pi(z)* pi(w) sqrt(eta)||_op dz
    double op_norm_area = 0.0;    ///< ||eta||_op |Omega|
    double area = 0.0;            ///< |Omega|
    bool chain_holds = false;
};

/// Checks the uncertainty chain: concentration <= kernel bound <= ||eta||_op
/// |Omega| <= |Omega| for eta = gamma gamma* (so sqrt(eta) has the window's
/// singular values).
inline UncertaintyReport uncertainty_check(const DomainMask& mask, const PolyradialWindow& gamma,
                                           const VectorXcd& fcoef, double p) {
    if (p < 1.0) throw DomainError("uncertainty_check: p must be >= 1");
    const auto q = cohen_field(gamma, fcoef, mask.grid());
    const double qnorm = q.lq_norm(p / 2.0);
    if (qnorm == 0.0) throw DomainError("uncertainty_check: zero distribution");

    UncertaintyReport rep;
    {
        double s = 0.0;
        for (std::size_t i = 0; i < q.values.size(); ++i)
            if (mask.raster()[i]) s += std::pow(q.values[i], p / 2.0);
        rep.concentration = s * mask.grid().cell_weight() / std::pow(qnorm, p / 2.0);
    }
    rep.kernel_bound = sieve::kernel_sup_integral(mask, gamma, sieve::KernelNorm::Op);
    double lam_op = 0.0;
    for (auto& l : gamma.lambda) lam_op = std::max(lam_op, std::norm(l));
    rep.area = phasespace::measure(mask);
    rep.op_norm_area = lam_op * rep.area;
    const double tol = 1e-9;
    rep.chain_holds = rep.concentration <= rep.kernel_bound + tol &&
                      rep.kernel_bound <= rep.op_norm_area + tol &&
                      rep.op_norm_area <= rep.area + tol;
    return rep;
}

}  // namespace opsieve::locop
