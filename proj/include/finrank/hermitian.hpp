#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "finrank/errors.hpp"
#include "finrank/tolerances.hpp"

namespace finrank {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// A d x d complex self-adjoint matrix. Construction symmetrizes
/// (H <- (H + H*)/2) rather than rejecting asymmetric input: numerical
/// pipelines produce O(1e-15) asymmetry and rejection would poison every
/// downstream call.
class Hermitian {
  public:
    Hermitian() = default;

    explicit Hermitian(const Matrix& raw) {
        if (raw.rows() != raw.cols())
            throw DimensionMismatch("Hermitian: matrix must be square");
        m_ = 0.5 * (raw + raw.adjoint());
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& mat() const { return m_; }

    static Hermitian Zero(Eigen::Index d) { return Hermitian(Matrix::Zero(d, d)); }
    static Hermitian Identity(Eigen::Index d) { return Hermitian(Matrix::Identity(d, d)); }
    static Hermitian FromDiagonal(const RealVector& diag) {
        Matrix m = Matrix::Zero(diag.size(), diag.size());
        m.diagonal() = diag.cast<Complex>();
        return Hermitian(m);
    }

  private:
    Matrix m_;
};

inline Eigen::SelfAdjointEigenSolver<Matrix> eigensystem(const Hermitian& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat());
    if (es.info() != Eigen::Success)
        throw EigensolverFailure("self-adjoint eigensolver did not converge");
    return es;
}

/// Operator (spectral) norm of a Hermitian matrix.
inline double operator_norm(const Hermitian& h) {
    if (h.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw EigensolverFailure("self-adjoint eigensolver did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value of a general complex matrix.
inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

inline bool is_positive_definite(const Hermitian& h, const Tolerances& tol = {}) {
    const auto es = eigensystem(h);
    const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
    const double floor = static_cast<double>(h.dim()) * tol.eig_residual * norm;
    return es.eigenvalues()(0) > floor;
}

/// PSD square root via eigendecomposition. Eigenvalues within the slack
/// -dim*eig_residual*||H|| are clamped to zero; more negative raises NotPSD.
inline Hermitian psd_sqrt(const Hermitian& h, const Tolerances& tol = {}) {
    const auto es = eigensystem(h);
    const double norm = es.eigenvalues().size() == 0 ? 0.0 : es.eigenvalues().cwiseAbs().maxCoeff();
    const double slack = static_cast<double>(h.dim()) * tol.eig_residual * norm;
    RealVector roots(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        const double lam = es.eigenvalues()(i);
        if (lam < -slack)
            throw NotPSD("psd_sqrt: eigenvalue " + std::to_string(lam) + " below PSD slack");
        roots(i) = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    const Matrix s = es.eigenvectors() * roots.cast<Complex>().asDiagonal() *
                     es.eigenvectors().adjoint();
    return Hermitian(s);
}

/// Orthonormal eigenvectors spanning the numerical range of H
/// (eigenvalues with |lambda| > rank_rel * max|lambda|).
inline std::vector<Vector> range_basis(const Hermitian& h, const Tolerances& tol = {}) {
    const auto es = eigensystem(h);
    std::vector<Vector> basis;
    if (es.eigenvalues().size() == 0) return basis;
    const double maxabs = es.eigenvalues().cwiseAbs().maxCoeff();
    if (maxabs == 0.0) return basis;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i)) > tol.rank_rel * maxabs)
            basis.push_back(es.eigenvectors().col(i));
    }
    return basis;
}

/// Checks Ran W ⊥ alpha Ran W_alpha for PSD W, W_alpha via the defect
/// ||sqrt(W) sqrt(alpha W_alpha alpha)||. The threshold scales with the
/// operand norms so the test stays meaningful for tiny atoms.
inline std::pair<bool, double> ranges_alpha_orthogonal(const Hermitian& w,
                                                       const Hermitian& w_alpha,
                                                       const Hermitian& alpha,
                                                       const Tolerances& tol = {}) {
    if (w.dim() != w_alpha.dim() || w.dim() != alpha.dim())
        throw DimensionMismatch("ranges_alpha_orthogonal: operand dimensions differ");
    const Hermitian weighted(alpha.mat() * w_alpha.mat() * alpha.mat());
    const Hermitian s1 = psd_sqrt(w, tol);
    const Hermitian s2 = psd_sqrt(weighted, tol);
    const double defect = spectral_norm(s1.mat() * s2.mat());
    const double threshold =
        1e-7 * (1.0 + operator_norm(w)) * (1.0 + operator_norm(weighted));
    return {defect <= threshold, defect};
}

/// Sampled upper estimate of the constant c(A) in
/// (Ax,y)=0  =>  ||x-y||^2 >= c(A) (||x||^2 + ||y||^2),  A positive definite:
/// minimum of the ratio over seeded random pairs with x uniform on the unit
/// sphere and y drawn in the A-orthogonal complement of x with uniform
/// direction and log-uniform magnitude in [1e-3, 1e3].
inline double ort_distance_constant(const Hermitian& a, long n_samples, std::uint64_t seed,
                                    const Tolerances& tol = {}) {
    if (!is_positive_definite(a, tol))
        throw NotPositiveDefinite("ort_distance_constant: A must be positive definite");
    if (n_samples < 1000)
        throw std::invalid_argument("ort_distance_constant: n_samples must be >= 1000");
    const Eigen::Index d = a.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> logmag(std::log(1e-3), std::log(1e3));
    auto random_vec = [&]() {
        Vector v(d);
        for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(gauss(rng), gauss(rng));
        return v;
    };

    double best = std::numeric_limits<double>::infinity();
    for (long s = 0; s < n_samples; ++s) {
        Vector x = random_vec();
        const double xn = x.norm();
        if (xn == 0.0) continue;
        x /= xn;
        if (d == 1) {
            // (Ax,y)=0 forces y=0; the ratio is exactly 1.
            best = std::min(best, 1.0);
            continue;
        }
        const Vector u = a.mat() * x;
        Vector g = random_vec();
        Vector ydir = g - u * (u.dot(g) / u.squaredNorm());
        const double yn = ydir.norm();
        if (yn <= 1e-12) continue;
        ydir /= yn;
        const double r = std::exp(logmag(rng));
        const Vector y = r * ydir;
        const double ratio = (x - y).squaredNorm() / (1.0 + r * r);
        best = std::min(best, ratio);
    }
    return best;
}

/// Seeded GUE-style sample of H(d): independent Gaussian real diagonal and
/// complex off-diagonal entries, scaled.
inline Hermitian random_hermitian(Eigen::Index d, std::uint64_t seed, double scale) {
    if (d < 1) throw std::invalid_argument("random_hermitian: d must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        m(i, i) = Complex(gauss(rng), 0.0);
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double re = gauss(rng), im = gauss(rng);
            m(i, j) = Complex(re, im) / std::sqrt(2.0);
            m(j, i) = std::conj(m(i, j));
        }
    }
    return Hermitian(scale * m);
}

}  // namespace finrank
