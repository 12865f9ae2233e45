#pragma once

// Window and signal operators in the Hermite basis: diagonal (polyradial)
// windows gamma = sum_n lambda_n (h_n ⊗ h_n) and truncated M-by-M operator
// coefficient matrices.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opsieve/common.hpp"
#include "opsieve/specialfn.hpp"

namespace opsieve::operators {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Diagonal window operator given by its Hermite eigenvalue sequence
/// lambda_0..lambda_N. The library's standing assumption is unit
/// Hilbert-Schmidt norm: sum |lambda_n|^2 = 1 (up to a stored thermal tail).
struct PolyradialWindow {
    std::vector<Complex> lambda;
    bool normalized = false;
    double tail_mass = 0.0;  ///< sum of |lambda_n|^2 beyond the stored rank

    int rank_bound() const { return int(lambda.size()) - 1; }

    double norm_sq() const {
        double s = 0.0;
        for (auto& l : lambda) s += std::norm(l);
        return s;
    }

    PolyradialWindow& normalize() {
        const double n = std::sqrt(norm_sq());
        if (n == 0.0) throw DegenerateWindowError("normalize: zero window");
        for (auto& l : lambda) l /= n;
        normalized = true;
        return *this;
    }

    void require_normalized(double tol = 1e-9) const {
        if (std::abs(norm_sq() + tail_mass - 1.0) > tol)
            throw DomainError("window is not normalized");
    }

    /// Rank-one Gaussian window h_0 ⊗ h_0.
    static PolyradialWindow gaussian() { return {{Complex{1.0, 0.0}}, true, 0.0}; }

    /// Rank-one window h_n ⊗ h_n.
    static PolyradialWindow hermite_projector(int n) {
        PolyradialWindow w;
        w.lambda.assign(std::size_t(n) + 1, Complex{0.0, 0.0});
        w.lambda[std::size_t(n)] = 1.0;
        w.normalized = true;
        return w;
    }

    /// Equal-weight window over h_0..h_{count-1}, lambda_n = 1/sqrt(count).
    static PolyradialWindow uniform_projection(int count) {
        if (count < 1) throw DomainError("uniform_projection: count must be >= 1");
        PolyradialWindow w;
        w.lambda.assign(std::size_t(count), Complex{1.0 / std::sqrt(double(count)), 0.0});
        w.normalized = true;
        return w;
    }

    /// Square root of the Gaussian-Weyl-symbol state:
    /// lambda_n = (1+a)^{-1/2} (a/(a+1))^{n/2}, truncated at max_index with
    /// the discarded mass recorded in tail_mass.
    static PolyradialWindow thermal(double a, int max_index = specialfn::kMaxHermiteIndex) {
        if (a < 0.0) throw DomainError("thermal: a must be >= 0");
        PolyradialWindow w;
        if (a == 0.0) return gaussian();
        const double q = a / (a + 1.0);
        w.lambda.resize(std::size_t(max_index) + 1);
        for (int n = 0; n <= max_index; ++n)
            w.lambda[std::size_t(n)] = std::pow(q, 0.5 * n) / std::sqrt(1.0 + a);
        w.tail_mass = std::pow(q, double(max_index) + 1.0);
        w.normalized = true;
        return w;
    }

    std::string digest() const {
        std::string s = "lambda[";
        char buf[64];
        for (auto& l : lambda) {
            std::snprintf(buf, sizeof buf, "%.6g%+.6gi,", l.real(), l.imag());
            s += buf;
        }
        s += "]";
        return s;
    }
};

/// Operator coefficients rho_{mn} = <rho h_n, h_m> on the first M Hermite
/// functions, with structural flags used by consumers for validation.
struct HermiteOperator {
    MatrixXcd coeff;
    bool self_adjoint = false;
    bool positive = false;

    int truncation() const { return int(coeff.rows()); }
    double frobenius_norm() const { return coeff.norm(); }

    bool check_self_adjoint(double tol = 1e-12) const {
        return (coeff - coeff.adjoint()).cwiseAbs().maxCoeff() <= tol;
    }

    double smallest_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(coeff);
        return es.eigenvalues().minCoeff();
    }

    static HermiteOperator zero(int M) { return {MatrixXcd::Zero(M, M), true, true}; }

    static HermiteOperator identity(int M) { return {MatrixXcd::Identity(M, M), true, true}; }

    /// f ⊗ g with coefficient vectors f, g: (f ⊗ g) h_n = <h_n, g> f.
    static HermiteOperator rank_one(const VectorXcd& f, const VectorXcd& g) {
        HermiteOperator op;
        op.coeff = f * g.adjoint();
        op.self_adjoint = false;
        op.positive = false;
        return op;
    }

    /// Basis operator h_m ⊗ h_n.
    static HermiteOperator basis(int m, int n, int M) {
        HermiteOperator op = zero(M);
        op.coeff(m, n) = 1.0;
        op.self_adjoint = (m == n);
        op.positive = (m == n);
        return op;
    }
};

/// Complex matrix with iid standard complex Gaussian entries.
inline MatrixXcd random_complex_gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXcd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = Complex{g(rng), g(rng)};
    return m;
}

/// Random Hilbert-Schmidt operator, unit Frobenius norm.
inline HermiteOperator random_operator(int M, std::mt19937_64& rng) {
    HermiteOperator op;
    op.coeff = random_complex_gaussian(M, M, rng);
    op.coeff /= op.coeff.norm();
    return op;
}

/// Random self-adjoint operator (Gaussian entries, Hermitian-symmetrized).
inline HermiteOperator random_self_adjoint(int M, std::mt19937_64& rng) {
    MatrixXcd a = random_complex_gaussian(M, M, rng);
    HermiteOperator op;
    op.coeff = 0.5 * (a + a.adjoint());
    op.coeff /= op.coeff.norm();
    op.self_adjoint = true;
    return op;
}

/// Random positive operator built as B* B, normalized to unit trace.
inline HermiteOperator random_positive(int M, std::mt19937_64& rng) {
    MatrixXcd b = random_complex_gaussian(M, M, rng);
    HermiteOperator op;
    op.coeff = b.adjoint() * b;
    op.coeff /= op.coeff.trace().real();
    op.self_adjoint = true;
    op.positive = true;
    return op;
}

/// Random operator of fixed rank r (sum of r random rank-one terms),
/// unit Frobenius norm.
inline HermiteOperator random_rank(int M, int r, std::mt19937_64& rng) {
    MatrixXcd sum = MatrixXcd::Zero(M, M);
    for (int i = 0; i < r; ++i) {
        MatrixXcd f = random_complex_gaussian(M, 1, rng);
        MatrixXcd g = random_complex_gaussian(M, 1, rng);
        sum += f * g.adjoint();
    }
    HermiteOperator op;
    op.coeff = sum / sum.norm();
    return op;
}

}  // namespace opsieve::operators
