#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finrank/hermitian.hpp"
#include "finrank/matrix_measure.hpp"

namespace finrank {

/// True iff the Krylov block matrix [B, AB, A^2 B, ..., A^{n-1} B] has
/// numerical rank n (relative singular-value cutoff rank_rel). Blocks are
/// normalized before the SVD so large ||A|| cannot overflow the test.
inline bool check_cyclic(const Hermitian& a, const Matrix& b, const Tolerances& tol = {}) {
    const Eigen::Index n = a.dim();
    if (b.rows() != n) throw DimensionMismatch("check_cyclic: B row count must equal dim A");
    const Eigen::Index d = b.cols();
    Matrix krylov(n, n * d);
    Matrix block = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double bn = block.norm();
        if (bn > 0.0) block /= bn;
        krylov.middleCols(k * d, d) = block;
        block = a.mat() * block;
    }
    Eigen::JacobiSVD<Matrix> svd(krylov);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return false;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol.rank_rel * sv(0)) ++rank;
    return rank == n;
}

/// Quantitative eigenspace criterion for cyclicity: for every eigenvalue
/// cluster with orthonormal basis V, B* restricted to the eigenspace must
/// have full rank, so the margin is the smallest singular value of B*V over
/// all clusters (relative to ||B||). Zero iff some eigenVECTOR in a possibly
/// degenerate eigenspace is orthogonal to Ran B.
inline double cyclicity_margin(const Hermitian& a, const Matrix& b,
                               const Tolerances& tol = {}) {
    const auto es = eigensystem(a);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return 0.0;
    const Eigen::Index n = a.dim();
    double margin = std::numeric_limits<double>::infinity();
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index stop = start + 1;
        while (stop < n &&
               es.eigenvalues()(stop) - es.eigenvalues()(stop - 1) <= tol.atom_merge)
            ++stop;
        const Eigen::Index k = stop - start;
        if (k > b.cols()) return 0.0;
        const Matrix m = b.adjoint() * es.eigenvectors().middleCols(start, k);
        Eigen::JacobiSVD<Matrix> svd(m);
        margin = std::min(margin, svd.singularValues()(k - 1) / bnorm);
        start = stop;
    }
    return margin;
}

/// The pair (A, B) generating the family A_alpha = A + B alpha B*.
/// B must be injective and Ran B cyclic for A (the latter optionally waived
/// for negative-control models; cyclicity status is kept either way).
class PerturbationModel {
  public:
    PerturbationModel(Hermitian a, Matrix b, const Tolerances& tol = {},
                      bool require_cyclic = true)
        : a_(std::move(a)), b_(std::move(b)), tol_(tol) {
        tol_.validate();
        n_ = a_.dim();
        d_ = b_.cols();
        if (b_.rows() != n_) throw DimensionMismatch("PerturbationModel: B rows != dim A");
        if (d_ < 1) throw DimensionMismatch("PerturbationModel: B needs at least one column");
        Eigen::JacobiSVD<Matrix> svd(b_);
        const auto& sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > tol_.rank_rel * sv(0)))
            throw Error("PerturbationModel: B must be injective");
        b_spectral_norm_ = sv(0);
        cyclic_ = check_cyclic(a_, b_, tol_);
        if (require_cyclic && !cyclic_)
            throw Error("PerturbationModel: Ran B is not cyclic for A");
        m0_ = std::make_shared<const MatrixMeasure>(build_measure(Hermitian::Zero(d_)));
    }

    Eigen::Index n() const { return n_; }
    Eigen::Index d() const { return d_; }
    const Hermitian& a() const { return a_; }
    const Matrix& b() const { return b_; }
    const Tolerances& tolerances() const { return tol_; }
    bool is_cyclic() const { return cyclic_; }
    double b_spectral_norm() const { return b_spectral_norm_; }

    /// Exact atomic spectral measure of the unperturbed pair (A, B), built on
    /// construction; the independent input for the resolvent-relation path.
    const MatrixMeasure& unperturbed_measure() const { return *m0_; }

    /// A + B alpha B*, symmetrized.
    Hermitian perturbed(const Hermitian& alpha) const {
        if (alpha.dim() != d_)
            throw DimensionMismatch("perturbed_operator: alpha must be d x d");
        return Hermitian(a_.mat() + b_ * alpha.mat() * b_.adjoint());
    }

    /// Eigendecomposes A_alpha, clusters eigenvalues within atom_merge, and
    /// emits one atom (mean eigenvalue, B* P B) per cluster. Clusters whose
    /// trace falls below rank_rel*||B||^2 cannot occur for cyclic Ran B; they
    /// are dropped and reported through `warnings` when supplied.
    MatrixMeasure spectral_measure(const Hermitian& alpha,
                                   std::vector<std::string>* warnings = nullptr) const {
        return build_measure(alpha, warnings);
    }

  private:
    MatrixMeasure build_measure(const Hermitian& alpha,
                                std::vector<std::string>* warnings = nullptr) const {
        const Hermitian op = perturbed(alpha);
        const auto es = eigensystem(op);
        const RealVector& lam = es.eigenvalues();
        std::vector<MatrixAtom> atoms;
        Eigen::Index start = 0;
        while (start < n_) {
            Eigen::Index stop = start + 1;
            while (stop < n_ && lam(stop) - lam(stop - 1) <= tol_.atom_merge) ++stop;
            Matrix pb = Matrix::Zero(n_, d_);
            double mean = 0.0;
            for (Eigen::Index k = start; k < stop; ++k) {
                const Vector v = es.eigenvectors().col(k);
                pb += v * (v.adjoint() * b_);
                mean += lam(k);
            }
            mean /= static_cast<double>(stop - start);
            Hermitian weight(b_.adjoint() * pb);
            const double tr = weight.mat().real().trace();
            if (tr > tol_.rank_rel * b_spectral_norm_ * b_spectral_norm_) {
                atoms.push_back({mean, std::move(weight)});
            } else if (warnings) {
                warnings->push_back("dropped spectral cluster at " + std::to_string(mean) +
                                    " with trace " + std::to_string(tr));
            }
            start = stop;
        }
        return MatrixMeasure(d_, std::move(atoms), {}, tol_);
    }

    Hermitian a_;
    Matrix b_;
    Tolerances tol_;
    Eigen::Index n_ = 0, d_ = 0;
    double b_spectral_norm_ = 0.0;
    bool cyclic_ = false;
    std::shared_ptr<const MatrixMeasure> m0_;
};

inline Hermitian perturbed_operator(const PerturbationModel& model, const Hermitian& alpha) {
    return model.perturbed(alpha);
}

inline MatrixMeasure spectral_matrix_measure(const PerturbationModel& model,
                                             const Hermitian& alpha,
                                             std::vector<std::string>* warnings = nullptr) {
    return model.spectral_measure(alpha, warnings);
}

struct PerturbedCauchy {
    Matrix value;              ///< CM(z) (I + alpha CM(z))^{-1}
    double order_discrepancy;  ///< ||value - (I + CM(z) alpha)^{-1} CM(z)||
};

/// CM_alpha(z) from the unperturbed measure via the resolvent relation.
/// Both factorization orders are evaluated; their discrepancy is returned as
/// a diagnostic. Throws NearSingular when cond(I + alpha CM(z)) > 1e12 —
/// beyond that the inversion has no digits left in double precision and the
/// caller should use the spectral path or raise Im z.
inline PerturbedCauchy perturbed_cauchy(const PerturbationModel& model, const Hermitian& alpha,
                                        Complex z) {
    if (alpha.dim() != model.d())
        throw DimensionMismatch("perturbed_cauchy: alpha must be d x d");
    const Matrix cm = cauchy_transform(model.unperturbed_measure(), z);
    const Eigen::Index d = model.d();
    const Matrix lhs = Matrix::Identity(d, d) + alpha.mat() * cm;
    Eigen::JacobiSVD<Matrix> svd(lhs);
    const auto& sv = svd.singularValues();
    // Effective condition max(1, sigma_max)/sigma_min: a 1x1 near-zero pivot
    // has sigma_max/sigma_min = 1 but still no usable digits.
    if (!(sv(sv.size() - 1) > 0.0) ||
        std::max(1.0, sv(0)) / sv(sv.size() - 1) > 1e12)
        throw NearSingular("perturbed_cauchy: I + alpha CM(z) is numerically singular");
    // CM (I + alpha CM)^{-1}: solve (I + alpha CM)^T X^T = CM^T.
    const Matrix r1 = lhs.transpose().fullPivLu().solve(cm.transpose()).transpose();
    const Matrix rhs = Matrix::Identity(d, d) + cm * alpha.mat();
    const Matrix r2 = rhs.fullPivLu().solve(cm);
    return {r1, (r1 - r2).norm()};
}

/// Max over the grid of || resolvent-path CM_alpha(z) - spectral-path CM_alpha(z) ||.
/// The two paths are genuinely independent: one uses the exact atomic measure
/// of A, the other eigendecomposes A_alpha.
inline double verify_resolvent_relation(const PerturbationModel& model, const Hermitian& alpha,
                                        const std::vector<Complex>& z_grid) {
    for (Complex z : z_grid)
        if (!(z.imag() >= 1e-6))
            throw NotUpperHalfPlane("verify_resolvent_relation: need Im z >= 1e-6");
    const MatrixMeasure m_alpha = model.spectral_measure(alpha);
    double worst = 0.0;
    for (Complex z : z_grid) {
        const Matrix direct = cauchy_transform(m_alpha, z);
        const Matrix via_relation = perturbed_cauchy(model, alpha, z).value;
        worst = std::max(worst, spectral_norm(direct - via_relation));
    }
    return worst;
}

namespace detail {

/// Samples a unit vector cyclic for `a` with a quantitative margin:
/// min_k |<v_k, b>| >= margin. Deterministic given the RNG state.
inline Vector cyclic_vector_with_margin(const Hermitian& a, std::mt19937_64& rng,
                                        double margin = 3e-3, int max_tries = 200) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto es = eigensystem(a);
    for (int t = 0; t < max_tries; ++t) {
        Vector b(a.dim());
        for (Eigen::Index i = 0; i < a.dim(); ++i) b(i) = Complex(gauss(rng), gauss(rng));
        b /= b.norm();
        double worst = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < a.dim(); ++k)
            worst = std::min(worst, std::abs(es.eigenvectors().col(k).dot(b)));
        if (worst >= margin) return b;
    }
    throw Error("cyclic_vector_with_margin: could not sample a margin-cyclic vector");
}

/// Random Hermitian with operator norm 1 and simple spectrum
/// (min eigen-gap >= gap_floor), resampled deterministically from `rng`.
inline Hermitian normalized_simple_hermitian(Eigen::Index n, std::mt19937_64& rng,
                                             double gap_floor = 1e-5, int max_tries = 200) {
    for (int t = 0; t < max_tries; ++t) {
        Hermitian a = random_hermitian(n, rng(), 1.0);
        const double norm = operator_norm(a);
        if (norm == 0.0) continue;
        a = Hermitian(a.mat() / norm);
        if (n == 1) return a;
        const auto es = eigensystem(a);
        double gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 1; i < n; ++i)
            gap = std::min(gap, es.eigenvalues()(i) - es.eigenvalues()(i - 1));
        if (gap >= gap_floor) return a;
    }
    throw Error("normalized_simple_hermitian: could not sample a simple-spectrum matrix");
}

}  // namespace detail

/// Random cyclic model with ||A|| = 1, simple spectrum, and a cyclicity
/// margin on every column of B. The margins are the generator's contract:
/// desk-scale claims (interlacing separation, exact root finiteness) rely on
/// quantitatively cyclic models.
inline PerturbationModel random_model(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                                      const Tolerances& tol = {}) {
    if (d < 1 || d > n) throw std::invalid_argument("random_model: need 1 <= d <= n");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        const Hermitian a = detail::normalized_simple_hermitian(n, rng);
        Matrix b(n, d);
        for (Eigen::Index j = 0; j < d; ++j)
            b.col(j) = detail::cyclic_vector_with_margin(a, rng);
        b /= b.norm();  // total mass tr B*B = 1
        PerturbationModel model{a, b, tol, /*require_cyclic=*/false};
        if (model.is_cyclic()) return model;
    }
    throw Error("random_model: could not generate a cyclic model");
}

inline PerturbationModel rank_one_model(Eigen::Index n, std::uint64_t seed,
                                        const Tolerances& tol = {}) {
    return random_model(n, 1, seed, tol);
}

/// The canonical counterexample family: A = A0 ⊕ ... ⊕ A0 (d copies), column
/// k of B carries the cyclic b0 in slot k. For diagonal alpha the family
/// decouples into rank-one perturbed blocks A0 + a_k b0 b0*.
inline PerturbationModel direct_sum_model(Eigen::Index base_dim, Eigen::Index copies,
                                          std::uint64_t seed, const Tolerances& tol = {}) {
    if (copies < 2) throw std::invalid_argument("direct_sum_model: copies must be >= 2");
    std::mt19937_64 rng(seed);
    const Hermitian a0 = detail::normalized_simple_hermitian(base_dim, rng);
    const Vector b0 = detail::cyclic_vector_with_margin(a0, rng);
    const Eigen::Index n = base_dim * copies;
    Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, copies);
    for (Eigen::Index k = 0; k < copies; ++k) {
        a.block(k * base_dim, k * base_dim, base_dim, base_dim) = a0.mat();
        b.block(k * base_dim, k, base_dim, 1) = b0;
    }
    return PerturbationModel{Hermitian(a), b, tol};
}

struct BlockSwapModel {
    PerturbationModel model;  ///< A = A0 ⊕ A1, A1 = A0 + s b0 b0*
    Hermitian alpha_swap;     ///< diag(s, -s): A_alpha = A1 ⊕ A0, full spectrum shared
    double shift;
};

/// Engineered common-atom family: perturbing A = A0 ⊕ (A0 + s b0 b0*) by
/// alpha = diag(s, -s) swaps the blocks, so A and A_alpha share every
/// eigenvalue while the densities live in swapped coordinate slots.
inline BlockSwapModel block_swap_model(Eigen::Index base_dim, double shift, std::uint64_t seed,
                                       const Tolerances& tol = {}) {
    std::mt19937_64 rng(seed);
    const Hermitian a0 = detail::normalized_simple_hermitian(base_dim, rng);
    const Vector b0 = detail::cyclic_vector_with_margin(a0, rng);
    const Matrix a1 = a0.mat() + shift * (b0 * b0.adjoint());
    const Eigen::Index n = 2 * base_dim;
    Matrix a = Matrix::Zero(n, n);
    a.topLeftCorner(base_dim, base_dim) = a0.mat();
    a.bottomRightCorner(base_dim, base_dim) = a1;
    Matrix b = Matrix::Zero(n, 2);
    b.block(0, 0, base_dim, 1) = b0;
    b.block(base_dim, 1, base_dim, 1) = b0;
    RealVector diag(2);
    diag << shift, -shift;
    return {PerturbationModel{Hermitian(a), b, tol}, Hermitian::FromDiagonal(diag), shift};
}

/// Negative-control model: A = A0 ⊕ A0 with the single column (b0 ⊕ b0)/√2.
/// Ran B is not cyclic — the antisymmetric copy of every A0-eigenvector is
/// invisible to B, so the operators A and A_a share spec(A0) for every a
/// while the compressed measures cannot see it.
inline PerturbationModel noncyclic_duplicate_model(Eigen::Index base_dim, std::uint64_t seed,
                                                   const Tolerances& tol = {}) {
    std::mt19937_64 rng(seed);
    const Hermitian a0 = detail::normalized_simple_hermitian(base_dim, rng);
    const Vector b0 = detail::cyclic_vector_with_margin(a0, rng);
    const Eigen::Index n = 2 * base_dim;
    Matrix a = Matrix::Zero(n, n);
    a.topLeftCorner(base_dim, base_dim) = a0.mat();
    a.bottomRightCorner(base_dim, base_dim) = a0.mat();
    Matrix b = Matrix::Zero(n, 1);
    b.block(0, 0, base_dim, 1) = b0 / std::sqrt(2.0);
    b.block(base_dim, 0, base_dim, 1) = b0 / std::sqrt(2.0);
    return PerturbationModel{Hermitian(a), b, tol, /*require_cyclic=*/false};
}

}  // namespace finrank
