#pragma once

// Operator recovery from incomplete or noisy phase-space data: group-L1
// minimization over Hermite coefficients with per-node matrix blocks, solved
// by a primal-dual first-order method. The feasible set is the range of the
// sampled transform, so the program stays finite-dimensional.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "opsieve/common.hpp"
#include "opsieve/locop.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/opstft.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/sieve.hpp"

namespace opsieve::recovery {

using Eigen::MatrixXcd;
using operators::HermiteOperator;
using operators::PolyradialWindow;
using opstft::StftField;
using phasespace::DomainMask;
using phasespace::PhaseGrid;

enum class Variant { Logan, NoisySupported, MissingData };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Logan: return "logan";
        case Variant::NoisySupported: return "noisy";
        case Variant::MissingData: return "missing";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "logan") return Variant::Logan;
    if (s == "noisy") return Variant::NoisySupported;
    if (s == "missing") return Variant::MissingData;
    throw DomainError("unknown recovery variant: " + s);
}

/// Matrix-free sampled transform: coefficients sigma (M x M) to per-node
/// blocks diag(conj lambda) V(z) sigma, with V tabulated once. The field
/// space carries the quadrature-weighted inner product, under which the
/// adjoint is the inversion-formula quadrature.
class ForwardMap {
  public:
    ForwardMap(const PolyradialWindow& gamma, const PhaseGrid& grid, int M,
               std::size_t memory_budget = std::size_t(1) << 31)
        : gamma_(gamma), grid_(grid), M_(M), rows_(gamma.rank_bound() + 1) {
        gamma_.require_normalized();
        const std::size_t need = grid.size() * std::size_t(rows_) * M_ * sizeof(Complex);
        if (need > memory_budget)
            throw Error("forward map table exceeds the memory budget (" + std::to_string(need) +
                        " bytes)");
        table_.resize(grid.size() * std::size_t(rows_) * M_);
#pragma omp parallel for schedule(static)
        for (int ix = 0; ix < grid.n; ++ix)
            for (int iy = 0; iy < grid.n; ++iy) {
                const PhasePoint z = grid.node(ix, iy);
                Complex* blk = table_.data() + grid.index(ix, iy) * std::size_t(rows_) * M_;
                for (int m = 0; m < M_; ++m)
                    for (int n = 0; n < rows_; ++n)
                        blk[std::size_t(m) * rows_ + n] = specialfn::stft_hermite(m, n, z);
            }
    }

    const PhaseGrid& grid() const { return grid_; }
    int truncation() const { return M_; }
    int rows() const { return rows_; }
    const PolyradialWindow& window() const { return gamma_; }

    Eigen::Map<const MatrixXcd> v_block(std::size_t node) const {
        return {table_.data() + node * std::size_t(rows_) * M_, rows_, M_};
    }

    /// Applies the map; out is resized to a rows x M block per node.
    void apply(const MatrixXcd& sigma, StftField& out) const {
        out.grid = grid_;
        out.rows = rows_;
        out.cols = M_;
        out.data.resize(grid_.size() * std::size_t(rows_) * M_);
#pragma omp parallel for schedule(static)
        for (std::int64_t node = 0; node < std::int64_t(grid_.size()); ++node) {
            MatrixXcd blk = v_block(std::size_t(node)) * sigma;
            for (int n = 0; n < rows_; ++n)
                blk.row(n) *= std::conj(gamma_.lambda[std::size_t(n)]);
            std::copy_n(blk.data(), blk.size(),
                        out.data.data() + std::size_t(node) * rows_ * M_);
        }
    }

    /// Adjoint under the weighted metric: sum_z h^2 V(z)^* diag(lambda) Y(z).
    MatrixXcd adjoint(const StftField& y) const {
        MatrixXcd acc = MatrixXcd::Zero(M_, M_);
#pragma omp parallel
        {
            MatrixXcd local = MatrixXcd::Zero(M_, M_);
#pragma omp for schedule(static) nowait
            for (std::int64_t node = 0; node < std::int64_t(grid_.size()); ++node) {
                MatrixXcd blk = y.block(int(node / grid_.n), int(node % grid_.n));
                for (int n = 0; n < rows_; ++n) blk.row(n) *= gamma_.lambda[std::size_t(n)];
                local.noalias() += v_block(std::size_t(node)).adjoint() * blk;
            }
#pragma omp critical
            acc += local;
        }
        return acc * grid_.cell_weight();
    }

    /// Gram matrix of the map restricted to a node subset (weighted metric):
    /// G_{m m'} = sum_nodes h^2 sum_n |lambda_n|^2 conj(V_{nm}) V_{nm'}.
    MatrixXcd gram(const std::vector<std::uint8_t>* subset = nullptr) const {
        MatrixXcd acc = MatrixXcd::Zero(M_, M_);
#pragma omp parallel
        {
            MatrixXcd local = MatrixXcd::Zero(M_, M_);
#pragma omp for schedule(static) nowait
            for (std::int64_t node = 0; node < std::int64_t(grid_.size()); ++node) {
                if (subset && !(*subset)[std::size_t(node)]) continue;
                MatrixXcd v = v_block(std::size_t(node));
                for (int n = 0; n < rows_; ++n) v.row(n) *= std::abs(gamma_.lambda[std::size_t(n)]);
                local.noalias() += v.adjoint() * v;
            }
#pragma omp critical
            acc += local;
        }
        acc *= grid_.cell_weight();
        return 0.5 * (acc + acc.adjoint());
    }

    /// Power-iteration estimate of the operator norm (weighted metric),
    /// deterministic under the seed. Iterates the small Gram matrix.
    double norm_estimate(std::uint64_t seed = 1, int iterations = 60) const {
        const MatrixXcd G = gram();
        std::mt19937_64 rng(seed);
        Eigen::VectorXcd v = operators::random_complex_gaussian(M_, 1, rng);
        v.normalize();
        double lam = 0.0;
        for (int it = 0; it < iterations; ++it) {
            Eigen::VectorXcd w = G * v;
            lam = w.norm();
            if (lam == 0.0) return 0.0;
            v = w / lam;
        }
        return std::sqrt(lam);
    }

  private:
    PolyradialWindow gamma_;
    PhaseGrid grid_;
    int M_;
    int rows_;
    std::vector<Complex> table_;
};

struct RecoveryProblem {
    PolyradialWindow gamma;
    PhaseGrid grid;
    DomainMask omega;        ///< erased / corrupted region
    StftField observed;      ///< per variant: meaningful on Omega^c or everywhere
    double epsilon = 0.0;    ///< noise budget outside Omega
    Variant variant = Variant::Logan;

    RecoveryProblem(PolyradialWindow g, PhaseGrid gr, DomainMask om, StftField obs,
                    double eps, Variant var)
        : gamma(std::move(g)), grid(gr), omega(std::move(om)), observed(std::move(obs)),
          epsilon(eps), variant(var) {
        if (!(epsilon >= 0.0)) throw DomainError("RecoveryProblem: epsilon must be >= 0");
        if (observed.rows != gamma.rank_bound() + 1)
            throw DomainError("RecoveryProblem: observed field rows do not match the window");
        if (!(omega.grid() == grid)) throw DomainError("RecoveryProblem: grid mismatch");
    }

    /// {"variant":..., "gamma":{"lambda":[...]}, "omega":..., "epsilon":...,
    ///  "observed": "<path to binary field dump>"}
    static RecoveryProblem from_json(const nlohmann::json& j,
                                     std::optional<PhaseGrid> grid_override = std::nullopt) {
        PolyradialWindow gamma;
        for (const auto& l : j.at("gamma").at("lambda")) {
            if (l.is_array())
                gamma.lambda.push_back(Complex{l.at(0).get<double>(), l.at(1).get<double>()});
            else
                gamma.lambda.push_back(Complex{l.get<double>(), 0.0});
        }
        gamma.normalized = true;
        gamma.require_normalized(1e-6);
        auto omega = DomainMask::from_json(j.at("omega"), grid_override);
        auto field = StftField::read_binary(j.at("observed").get<std::string>(), omega.grid());
        const double eps = j.value("epsilon", 0.0);
        return RecoveryProblem(std::move(gamma), omega.grid(), std::move(omega),
                               std::move(field), eps,
                               variant_from_string(j.at("variant").get<std::string>()));
    }
};

struct SolverConfig {
    int max_iterations = 50000;
    double tolerance = 1e-6;          ///< relative objective-change stopping rule
    double feasibility_tol = 1e-8;    ///< equality residual target (Logan)
    double null_space_tol = 1e-10;    ///< Gram eigenvalue cut in the affine projection
    std::uint64_t seed = 1;
    int check_every = 25;
};

struct RecoveryReport {
    HermiteOperator solution;
    double objective = 0.0;            ///< sum_z h^2 ||(A sigma)(z)||_F
    double residual_l1 = 0.0;          ///< data residual in the variant's L1 norm
    double constraint_residual = 0.0;  ///< max node violation of equality constraints
    double certificate_value = std::numeric_limits<double>::quiet_NaN();
    double guaranteed_error = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["objective"] = objective;
        j["residual_l1"] = residual_l1;
        j["constraint_residual"] = constraint_residual;
        j["certificate_value"] = certificate_value;
        j["guaranteed_error"] = guaranteed_error;
        j["iterations"] = iterations;
        j["converged"] = converged;
        auto& sol = j["solution"];
        sol["truncation"] = solution.truncation();
        sol["re"] = nlohmann::json::array();
        sol["im"] = nlohmann::json::array();
        for (int i = 0; i < solution.truncation(); ++i) {
            nlohmann::json re_row = nlohmann::json::array(), im_row = nlohmann::json::array();
            for (int k = 0; k < solution.truncation(); ++k) {
                re_row.push_back(solution.coeff(i, k).real());
                im_row.push_back(solution.coeff(i, k).imag());
            }
            sol["re"].push_back(re_row);
            sol["im"].push_back(im_row);
        }
        return j;
    }
};

namespace detail {

/// Least-squares coefficients fitting the observed field over a node subset,
/// through the (small) Gram system; eigendirections below the null tolerance
/// are dropped rather than amplified.
inline MatrixXcd affine_projection_target(const ForwardMap& A, const StftField& g,
                                          const std::vector<std::uint8_t>* subset,
                                          double null_tol) {
    StftField masked = g;
    if (subset) {
        const std::size_t bs = std::size_t(g.rows) * g.cols;
        for (std::size_t node = 0; node < g.grid.size(); ++node)
            if (!(*subset)[node])
                std::fill_n(masked.data.data() + node * bs, bs, Complex{0.0, 0.0});
    }
    const MatrixXcd rhs = A.adjoint(masked);
    const MatrixXcd G = A.gram(subset);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(G);
    const auto& d = es.eigenvalues();
    MatrixXcd out = MatrixXcd::Zero(A.truncation(), A.truncation());
    const MatrixXcd coeffs = es.eigenvectors().adjoint() * rhs;
    for (int i = 0; i < d.size(); ++i)
        if (d(i) > null_tol) out.noalias() += es.eigenvectors().col(i) * (coeffs.row(i) / d(i));
    return out;
}

inline double block_norm(const Complex* p, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::norm(p[i]);
    return std::sqrt(s);
}

}  // namespace detail

/// Group-L1 objective of a field under the grid quadrature.
inline double field_l1(const StftField& f) {
    double s = 0.0;
    const std::size_t bs = std::size_t(f.rows) * f.cols;
    for (std::size_t node = 0; node < f.grid.size(); ++node)
        s += detail::block_norm(f.data.data() + node * bs, bs);
    return s * f.grid.cell_weight();
}

/// L1 distance between two fields restricted to a node subset (1 = keep).
inline double field_l1_diff(const StftField& a, const StftField& b,
                            const std::vector<std::uint8_t>* subset = nullptr,
                            bool complement = false) {
    double s = 0.0;
    const std::size_t bs = std::size_t(a.rows) * a.cols;
    std::vector<Complex> tmp(bs);
    for (std::size_t node = 0; node < a.grid.size(); ++node) {
        if (subset) {
            const bool in = (*subset)[node] != 0;
            if (in == complement) continue;
        }
        for (std::size_t i = 0; i < bs; ++i)
            tmp[i] = a.data[node * bs + i] - b.data[node * bs + i];
        s += detail::block_norm(tmp.data(), bs);
    }
    return s * a.grid.cell_weight();
}

/// Primal-dual solve of the variant's program. Per-node dual blocks are
/// projected onto the unit Frobenius ball (the conjugate of the group norm);
/// equality constraints enter through their linear conjugate and a final
/// exact projection onto the affine set.
inline RecoveryReport solve(const RecoveryProblem& problem, const SolverConfig& config = {}) {
    const ForwardMap A(problem.gamma, problem.grid, problem.observed.cols);
    const std::size_t nodes = problem.grid.size();
    const std::size_t bs = std::size_t(A.rows()) * A.truncation();
    const auto& in_omega = problem.omega.raster();

    const double anorm = A.norm_estimate(config.seed);
    if (anorm == 0.0) throw SolverError("solve: forward map is zero");
    const double step = 0.95 / anorm;

    // Warm start on the variant's natural least-squares fit.
    std::vector<std::uint8_t> complement(nodes);
    for (std::size_t i = 0; i < nodes; ++i) complement[i] = in_omega[i] ? 0 : 1;
    MatrixXcd x;
    if (problem.variant == Variant::NoisySupported)
        x = detail::affine_projection_target(A, problem.observed, nullptr,
                                             config.null_space_tol);
    else
        x = detail::affine_projection_target(A, problem.observed, &complement,
                                             config.null_space_tol);

    StftField y;  // dual field
    y.grid = problem.grid;
    y.rows = A.rows();
    y.cols = A.truncation();
    y.data.assign(nodes * bs, Complex{0.0, 0.0});

    MatrixXcd x_prev = x;
    StftField ax;
    A.apply(x, ax);
    auto objective_of = [&](const StftField& f) { return field_l1(f); };
    double obj = objective_of(ax);
    double last_obj = obj;
    bool converged = false;
    int iters = 0;

    StftField axbar = ax;
    for (int it = 1; it <= config.max_iterations; ++it) {
        iters = it;
        // y <- prox of the conjugate at y + step * A(2x - x_prev)
        {
            MatrixXcd xbar = 2.0 * x - x_prev;
            A.apply(xbar, axbar);
        }
        const auto& G = problem.observed;
#pragma omp parallel for schedule(static)
        for (std::int64_t node = 0; node < std::int64_t(nodes); ++node) {
            Complex* yb = y.data.data() + std::size_t(node) * bs;
            const Complex* ab = axbar.data.data() + std::size_t(node) * bs;
            const Complex* gb = G.data.data() + std::size_t(node) * bs;
            const bool inside = in_omega[std::size_t(node)] != 0;

            const bool l1_node = (problem.variant == Variant::Logan && inside) ||
                                 problem.variant == Variant::NoisySupported ||
                                 (problem.variant == Variant::MissingData && !inside);
            const bool shift_by_data = problem.variant != Variant::Logan || !inside;

            if (problem.variant == Variant::MissingData && inside) {
                for (std::size_t i = 0; i < bs; ++i) yb[i] = Complex{0.0, 0.0};
                continue;
            }
            for (std::size_t i = 0; i < bs; ++i) {
                yb[i] += step * ab[i];
                if (shift_by_data) yb[i] -= step * gb[i];
            }
            if (l1_node) {
                const double nrm = detail::block_norm(yb, bs);
                if (nrm > 1.0)
                    for (std::size_t i = 0; i < bs; ++i) yb[i] /= nrm;
            }
        }
        // x <- x - step * A* y
        x_prev = x;
        x -= step * A.adjoint(y);

        if (it % config.check_every == 0 || it == config.max_iterations) {
            A.apply(x, ax);
            obj = objective_of(ax);
            const double rel = std::abs(obj - last_obj) / std::max(1e-300, std::abs(obj));
            bool feasible = true;
            if (problem.variant == Variant::Logan) {
                double worst = 0.0;
                std::vector<Complex> tmp(bs);
                for (std::size_t node = 0; node < nodes; ++node) {
                    if (in_omega[node]) continue;
                    for (std::size_t i = 0; i < bs; ++i)
                        tmp[i] = ax.data[node * bs + i] - problem.observed.data[node * bs + i];
                    worst = std::max(worst, detail::block_norm(tmp.data(), bs));
                }
                feasible = worst < config.feasibility_tol * 100.0;
            }
            if (rel < config.tolerance && feasible && it > 50) {
                converged = true;
                break;
            }
            last_obj = obj;
        }
    }

    // Exact projection onto the equality set for the Logan variant.
    if (problem.variant == Variant::Logan) {
        const MatrixXcd target = detail::affine_projection_target(
            A, problem.observed, &complement, config.null_space_tol);
        const MatrixXcd Gc = A.gram(&complement);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Gc);
        // x <- target + (null-space component of x)
        MatrixXcd xn = MatrixXcd::Zero(x.rows(), x.cols());
        const MatrixXcd cx = es.eigenvectors().adjoint() * x;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) <= config.null_space_tol)
                xn.noalias() += es.eigenvectors().col(i) * cx.row(i);
        x = target + xn;
    }

    RecoveryReport rep;
    rep.solution.coeff = x;
    A.apply(x, ax);
    rep.objective = objective_of(ax);
    rep.iterations = iters;
    rep.converged = converged;

    switch (problem.variant) {
        case Variant::Logan: {
            double worst = 0.0;
            std::vector<Complex> tmp(bs);
            for (std::size_t node = 0; node < nodes; ++node) {
                if (in_omega[node]) continue;
                for (std::size_t i = 0; i < bs; ++i)
                    tmp[i] = ax.data[node * bs + i] - problem.observed.data[node * bs + i];
                worst = std::max(worst, detail::block_norm(tmp.data(), bs));
            }
            rep.constraint_residual = worst;
            rep.residual_l1 = field_l1_diff(ax, problem.observed, &complement, false);
            break;
        }
        case Variant::NoisySupported:
            rep.residual_l1 = field_l1_diff(ax, problem.observed);
            break;
        case Variant::MissingData:
            rep.residual_l1 = field_l1_diff(ax, problem.observed, &complement, false);
            break;
    }
    return rep;
}

struct Certificate {
    double alpha = std::numeric_limits<double>::infinity();
    double threshold = 0.5;
    bool certified = false;
    std::string method;
    double radius = 0.0;  ///< disk radius behind the winning bound, 0 if none
};

/// Tightest available concentration bound alpha(Omega) for the problem's
/// window, minimized over a grid of disk radii; the threshold is 1/2 for the
/// equality-constrained variants and 1 for the missing-data variant.
inline Certificate certificate(const DomainMask& omega, const PolyradialWindow& gamma,
                               Variant variant, const std::vector<double>& radii = {}) {
    Certificate cert;
    cert.threshold = (variant == Variant::MissingData) ? 1.0 : 0.5;
    if (omega.is_empty()) {
        cert.alpha = 0.0;
        cert.certified = true;
        cert.method = "empty";
        return cert;
    }

    std::vector<double> rs = radii;
    if (rs.empty())
        for (double t0 : {1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0}) rs.push_back(std::sqrt(t0 / kPi));

    const bool gaussian = gamma.rank_bound() == 0 && std::abs(gamma.lambda[0]) == 1.0;
    auto consider = [&cert](double v, const std::string& m, double R) {
        if (v < cert.alpha) {
            cert.alpha = v;
            cert.method = m;
            cert.radius = R;
        }
    };

    for (double R : rs) {
        try {
            const auto mn = sieve::max_nyquist_bound(omega, gamma, R);
            consider(mn.bound.value, "MaxNyquist", R);
            consider(mn.restricted_hs, "KernelSupRestrictedHS", R);
            if (mn.restricted_op) consider(*mn.restricted_op, "KernelSupRestrictedOp", R);
            if (gaussian) {
                const double nu = mn.nu;
                consider(sieve::rfk_bound(nu, R).value, "RFK", R);
            }
        } catch (const DegenerateWindowError&) {
            // B(D_R) can vanish for small R against high-index windows
        }
    }
    if (gaussian)
        consider(sieve::theorem2_bound(omega, 0.0, sieve::Theorem2Form::KernelSup).value,
                 "Theorem2Kernel", 0.0);
    cert.certified = cert.alpha < cert.threshold;
    return cert;
}

inline Certificate certificate(const RecoveryProblem& problem,
                               const std::vector<double>& radii = {}) {
    return certificate(problem.omega, problem.gamma, problem.variant, radii);
}

/// A-priori reconstruction error from the concentration bound:
/// 2 eps / (1 - 2 alpha) for noise outside Omega under alpha < 1/2, and
/// 2 ||N|| / (1 - alpha) for the missing-data program under alpha < 1.
inline double error_bound(double alpha, Variant variant, double noise_l1) {
    if (noise_l1 < 0.0) throw DomainError("error_bound: negative noise norm");
    if (variant == Variant::MissingData) {
        if (alpha >= 1.0) throw DegenerateWindowError("error_bound: needs alpha < 1");
        return 2.0 * noise_l1 / (1.0 - alpha);
    }
    if (alpha >= 0.5) throw DegenerateWindowError("error_bound: needs alpha < 1/2");
    return 2.0 * noise_l1 / (1.0 - 2.0 * alpha);
}

}  // namespace opsieve::recovery
