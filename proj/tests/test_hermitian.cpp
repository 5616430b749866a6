#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "finrank/hermitian.hpp"

using namespace finrank;

namespace {

Hermitian diag2(double a, double b) {
    RealVector v(2);
    v << a, b;
    return Hermitian::FromDiagonal(v);
}

Hermitian random_psd(Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
    return Hermitian(g.adjoint() * g);
}

/// Independent oracle for c(A), A = diag(a1, a2) real positive: dense grid
/// over the angle of a real unit vector x; y is the unit vector of the real
/// orthogonal complement of Ax, with the magnitude optimized exactly
/// (min_r (1 + r^2 - 2 r cos)/(1 + r^2) is attained at r = 1).
double grid_search_c(double a1, double a2, double step) {
    double best = 1.0;
    for (double phi = 0.0; phi < M_PI; phi += step) {
        const double x1 = std::cos(phi), x2 = std::sin(phi);
        const double u1 = a1 * x1, u2 = a2 * x2;
        const double un = std::hypot(u1, u2);
        const double y1 = -u2 / un, y2 = u1 / un;
        const double cosang = std::abs(x1 * y1 + x2 * y2);
        best = std::min(best, 1.0 - cosang);
    }
    return best;
}

}  // namespace

TEST_CASE("Hermitian construction symmetrizes exactly") {
    Matrix raw(2, 2);
    raw << Complex(1.0, 0.5), Complex(2.0, 3.0), Complex(-1.0, 0.25), Complex(4.0, -0.125);
    Hermitian h(raw);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
            REQUIRE(h.mat()(i, j) == std::conj(h.mat()(j, i)));
    Matrix tall(3, 2);
    REQUIRE_THROWS_AS(Hermitian(tall), DimensionMismatch);
}

TEST_CASE("eigensolver residuals meet the type invariant") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const Hermitian h = random_hermitian(6, rng(), 2.0);
        const auto es = eigensystem(h);
        const double norm = operator_norm(h);
        for (Eigen::Index k = 0; k < 6; ++k) {
            const double resid =
                (h.mat() * es.eigenvectors().col(k) -
                 es.eigenvalues()(k) * es.eigenvectors().col(k))
                    .norm();
            REQUIRE(resid <= 1e-10 * std::max(norm, 1.0));
        }
    }
}

TEST_CASE("Tolerances validation") {
    Tolerances bad;
    bad.atom_merge = 1e-12;  // below eig_residual
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = Tolerances{};
    bad.rank_rel = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    REQUIRE_NOTHROW(Tolerances{}.validate());
}

TEST_CASE("is_positive_definite") {
    REQUIRE(is_positive_definite(Hermitian::Identity(2)));
    REQUIRE_FALSE(is_positive_definite(diag2(1.0, 0.0)));
    REQUIRE_FALSE(is_positive_definite(diag2(1.0, -1e-3)));
}

TEST_CASE("psd_sqrt on diagonal and identity") {
    const Hermitian s = psd_sqrt(Hermitian::Identity(3));
    REQUIRE((s.mat() - Matrix::Identity(3, 3)).norm() <= 1e-14);
    const Hermitian d = psd_sqrt(diag2(4.0, 9.0));
    REQUIRE((d.mat() - diag2(2.0, 3.0).mat()).norm() <= 1e-13);
    REQUIRE_THROWS_AS(psd_sqrt(diag2(1.0, -0.5)), NotPSD);
}

TEST_CASE("psd_sqrt construct-and-check oracle") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dims(1, 8);
    for (int rep = 0; rep < 1000; ++rep) {
        const Hermitian h = random_psd(dims(rng), rng);
        const Hermitian s = psd_sqrt(h);
        REQUIRE(spectral_norm(s.mat() * s.mat() - h.mat()) <=
                1e-8 * (1.0 + operator_norm(h)));
    }
}

TEST_CASE("range_basis") {
    REQUIRE(range_basis(Hermitian::Zero(3)).empty());

    const auto e1 = range_basis(diag2(1.0, 0.0));
    REQUIRE(e1.size() == 1);
    REQUIRE(std::abs(std::abs(e1[0](0)) - 1.0) <= 1e-14);

    Vector v(2);
    v << Complex(1, 0), Complex(1, 0);
    v /= std::sqrt(2.0);
    const Hermitian proj(Matrix(v * v.adjoint()));
    const auto basis = range_basis(proj);
    REQUIRE(basis.size() == 1);
    REQUIRE(std::abs(std::abs(basis[0].dot(v)) - 1.0) <= 1e-12);
}

TEST_CASE("range_basis returns exactly rank(H) vectors") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 5);
        const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng() % d);
        Matrix g(d, r);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < r; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
        const Hermitian h(g * g.adjoint());
        REQUIRE(range_basis(h).size() == static_cast<std::size_t>(r));
    }
}

TEST_CASE("ranges_alpha_orthogonal basics") {
    const auto id = Hermitian::Identity(2);
    {
        const auto [ok, defect] = ranges_alpha_orthogonal(diag2(1, 0), diag2(0, 1), id);
        REQUIRE(ok);
        REQUIRE(defect <= 1e-7);
    }
    {
        const auto [ok, defect] = ranges_alpha_orthogonal(diag2(1, 0), diag2(1, 0), id);
        REQUIRE_FALSE(ok);
        REQUIRE(defect == Catch::Approx(1.0).margin(1e-12));
    }
    {
        const auto [ok, defect] =
            ranges_alpha_orthogonal(Hermitian::Zero(2), diag2(3, 1), diag2(2, 5));
        REQUIRE(ok);
        REQUIRE(defect <= 1e-14);
    }
    REQUIRE_THROWS_AS(
        ranges_alpha_orthogonal(Hermitian::Zero(2), Hermitian::Zero(3), Hermitian::Zero(3)),
        DimensionMismatch);
}

TEST_CASE("ranges_alpha_orthogonal boolean is symmetric in (W, W_alpha)") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 3);
        const Hermitian w = random_psd(d, rng);
        const Hermitian wa = random_psd(d, rng);
        const Hermitian alpha = random_hermitian(d, rng(), 1.0);
        const auto fwd = ranges_alpha_orthogonal(w, wa, alpha);
        const auto rev = ranges_alpha_orthogonal(wa, w, alpha);
        REQUIRE(fwd.first == rev.first);
    }
}

TEST_CASE("ort_distance_constant identity gives Pythagoras") {
    const double c = ort_distance_constant(Hermitian::Identity(3), 2000, 5);
    REQUIRE(c >= 0.999);
    REQUIRE(c <= 1.0 + 1e-12);
    REQUIRE_THROWS_AS(ort_distance_constant(diag2(1.0, -1.0), 2000, 5), NotPositiveDefinite);
    REQUIRE_THROWS_AS(ort_distance_constant(Hermitian::Identity(2), 10, 5),
                      std::invalid_argument);
}

TEST_CASE("ort_distance_constant is scale invariant") {
    const double c1 = ort_distance_constant(Hermitian::Identity(2), 5000, 17);
    const double c7 = ort_distance_constant(Hermitian(7.0 * Matrix::Identity(2, 2)), 5000, 17);
    REQUIRE(std::abs(c1 - c7) <= 1e-12);
}

TEST_CASE("ort_distance_constant vs dense grid search at d=2") {
    const Hermitian a = diag2(1.0, 4.0);
    const double c_a = ort_distance_constant(a, 4000000, 123);
    const double c_b = ort_distance_constant(a, 4000000, 123);
    REQUIRE(c_a == c_b);  // bit-identical under the same seed

    const double oracle = grid_search_c(1.0, 4.0, 1e-3);
    REQUIRE(std::abs(c_a - oracle) <= 5e-3);
    REQUIRE(c_a >= oracle - 1e-9);  // sampled value upper-estimates the infimum
}

TEST_CASE("random_hermitian determinism and scaling") {
    const Hermitian z = random_hermitian(4, 3, 0.0);
    REQUIRE(z.mat().norm() == 0.0);
    const Hermitian a = random_hermitian(4, 3, 1.0);
    const Hermitian b = random_hermitian(4, 3, 1.0);
    REQUIRE((a.mat() - b.mat()).norm() == 0.0);

    double sum1 = 0.0, sum10 = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        sum1 += operator_norm(random_hermitian(5, 1000 + s, 1.0));
        sum10 += operator_norm(random_hermitian(5, 2000 + s, 10.0));
    }
    const double ratio = sum10 / sum1;
    REQUIRE(ratio >= 8.0);
    REQUIRE(ratio <= 12.0);
}
