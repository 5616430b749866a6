#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "finrank/perturbation.hpp"

using namespace finrank;

namespace {

/// Independent Krylov-rank oracle: unnormalized Krylov block matrix, rank by
/// column-pivoted QR (a different decomposition than the implementation's SVD).
bool krylov_oracle_cyclic(const Hermitian& a, const Matrix& b, double rel_tol = 1e-9) {
    const Eigen::Index n = a.dim(), d = b.cols();
    Matrix k(n, n * d);
    Matrix block = b;
    for (Eigen::Index j = 0; j < n; ++j) {
        k.middleCols(j * d, d) = block;
        block = a.mat() * block;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(k);
    qr.setThreshold(rel_tol);
    return qr.rank() == n;
}

Hermitian diag_alpha(std::initializer_list<double> entries) {
    RealVector v(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (double e : entries) v(i++) = e;
    return Hermitian::FromDiagonal(v);
}

Matrix column(std::initializer_list<double> entries) {
    Matrix b(static_cast<Eigen::Index>(entries.size()), 1);
    Eigen::Index i = 0;
    for (double e : entries) b(i++, 0) = Complex(e, 0);
    return b;
}

}  // namespace

TEST_CASE("check_cyclic on 2x2 examples") {
    const Hermitian a = diag_alpha({0.0, 1.0});
    REQUIRE(check_cyclic(a, column({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)})));
    REQUIRE_FALSE(check_cyclic(a, column({1.0, 0.0})));
}

TEST_CASE("check_cyclic agrees with the QR Krylov oracle and eigenvector criterion") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 60; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 7);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 2);
        const auto model = random_model(n, std::min(n, d), rng());
        REQUIRE(check_cyclic(model.a(), model.b()));
        REQUIRE(krylov_oracle_cyclic(model.a(), model.b()));
        REQUIRE(cyclicity_margin(model.a(), model.b()) > 1e-9);
    }
    // engineered non-cyclic case agrees too
    const auto bad = noncyclic_duplicate_model(3, 4);
    REQUIRE_FALSE(check_cyclic(bad.a(), bad.b()));
    REQUIRE_FALSE(krylov_oracle_cyclic(bad.a(), bad.b()));
    REQUIRE(cyclicity_margin(bad.a(), bad.b()) <= 1e-9);
}

TEST_CASE("perturbed_operator identities") {
    const auto model = random_model(4, 2, 31);
    REQUIRE((model.perturbed(Hermitian::Zero(2)).mat() - model.a().mat()).norm() <= 1e-15);

    // n = d, B = I: A + alpha
    PerturbationModel full{random_hermitian(3, 8, 1.0), Matrix::Identity(3, 3)};
    const Hermitian alpha = random_hermitian(3, 9, 0.5);
    REQUIRE((full.perturbed(alpha).mat() - (full.a().mat() + alpha.mat())).norm() <= 1e-14);

    // d=1, A=[0], B=[1], alpha=[t] -> [t]
    PerturbationModel scalar{Hermitian::Zero(1), Matrix::Identity(1, 1)};
    REQUIRE(scalar.perturbed(diag_alpha({0.7})).mat()(0, 0).real() == Catch::Approx(0.7));

    REQUIRE_THROWS_AS(model.perturbed(Hermitian::Zero(3)), DimensionMismatch);
}

TEST_CASE("spectral_matrix_measure on closed-form models") {
    PerturbationModel scalar{Hermitian::Zero(1), Matrix::Identity(1, 1)};
    const auto m = scalar.spectral_measure(diag_alpha({0.3}));
    REQUIRE(m.atoms().size() == 1);
    REQUIRE(m.atoms()[0].location == Catch::Approx(0.3));
    REQUIRE(m.atoms()[0].weight.mat()(0, 0).real() == Catch::Approx(1.0));

    PerturbationModel two{diag_alpha({0.0, 1.0}),
                          column({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)})};
    const auto m2 = two.spectral_measure(Hermitian::Zero(1));
    REQUIRE(m2.atoms().size() == 2);
    REQUIRE(m2.atoms()[0].location == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(m2.atoms()[1].location == Catch::Approx(1.0));
    REQUIRE(m2.atoms()[0].weight.mat()(0, 0).real() == Catch::Approx(0.5));
    REQUIRE(m2.atoms()[1].weight.mat()(0, 0).real() == Catch::Approx(0.5));
}

TEST_CASE("spectral measure satisfies the defining resolvent identity") {
    const auto model = random_model(8, 2, 55);
    const Hermitian alpha = random_hermitian(2, 56, 0.8);
    const auto m = model.spectral_measure(alpha);
    const Matrix op = model.perturbed(alpha).mat();
    std::mt19937_64 rng(57);
    std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.2, 1.5);
    for (int k = 0; k < 20; ++k) {
        const Complex z(re(rng), im(rng));
        // direct resolvent evaluation as oracle
        const Matrix resolvent =
            (op - z * Matrix::Identity(8, 8)).fullPivLu().solve(model.b());
        const Matrix lhs = model.b().adjoint() * resolvent;
        REQUIRE((lhs - cauchy_transform(m, z)).norm() <= 1e-9);
    }
}

TEST_CASE("total mass equals tr B*B") {
    std::mt19937_64 rng(71);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 8);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
        const auto model = random_model(n, std::min(n, d), rng());
        const Hermitian alpha = random_hermitian(model.d(), rng(), 1.0);
        const double mass = model.spectral_measure(alpha).total_mass();
        const double expected = (model.b().adjoint() * model.b()).real().trace();
        REQUIRE(std::abs(mass - expected) <= 1e-10);
    }
}

TEST_CASE("atom count equals distinct eigenvalue count for cyclic models") {
    std::mt19937_64 rng(81);
    for (int rep = 0; rep < 30; ++rep) {
        const auto model = random_model(6, 2, rng());
        const Hermitian alpha = random_hermitian(2, rng(), 1.0);
        const auto m = model.spectral_measure(alpha);
        const auto es = eigensystem(model.perturbed(alpha));
        std::size_t clusters = 1;
        for (Eigen::Index i = 1; i < 6; ++i)
            if (es.eigenvalues()(i) - es.eigenvalues()(i - 1) >
                model.tolerances().atom_merge)
                ++clusters;
        REQUIRE(m.atoms().size() == clusters);
    }
}

TEST_CASE("perturbed_cauchy closed forms and diagnostics") {
    PerturbationModel scalar{Hermitian::Zero(1), Matrix::Identity(1, 1)};
    const double a = 0.8;
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.1, 1.5);
    for (int k = 0; k < 25; ++k) {
        const Complex z(re(rng), im(rng));
        const auto pc = perturbed_cauchy(scalar, diag_alpha({a}), z);
        REQUIRE(std::abs(pc.value(0, 0) - 1.0 / (Complex(a, 0) - z)) <= 1e-12);
        REQUIRE(pc.order_discrepancy <= 1e-12);
    }
    // alpha = 0 reproduces CM(z)
    const auto model = random_model(6, 2, 101);
    const Complex z(0.4, 0.6);
    const auto pc0 = perturbed_cauchy(model, Hermitian::Zero(2), z);
    REQUIRE((pc0.value - cauchy_transform(model.unperturbed_measure(), z)).norm() <= 1e-13);
}

TEST_CASE("perturbed_cauchy raises NearSingular close to a perturbed pole") {
    PerturbationModel scalar{Hermitian::Zero(1), Matrix::Identity(1, 1)};
    // 1 + a CM(z) = 1 - a/z vanishes at z = a; just above it the inversion
    // has no digits left.
    REQUIRE_THROWS_AS(perturbed_cauchy(scalar, diag_alpha({0.5}), Complex(0.5, 1e-14)),
                      NearSingular);
}

TEST_CASE("verify_resolvent_relation two-path agreement") {
    std::mt19937_64 rng(111);
    std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.1, 1.5);
    std::vector<Complex> grid;
    for (int k = 0; k < 50; ++k) grid.push_back(Complex(re(rng), im(rng)));

    const auto model = random_model(12, 3, 113);
    REQUIRE(verify_resolvent_relation(model, Hermitian::Zero(3), grid) <= 1e-12);
    const Hermitian alpha = random_hermitian(3, 115, 1.0);
    REQUIRE(verify_resolvent_relation(model, alpha, grid) <= 1e-8);

    PerturbationModel scalar{Hermitian::Zero(1), Matrix::Identity(1, 1)};
    REQUIRE(verify_resolvent_relation(scalar, diag_alpha({0.8}), grid) <= 1e-9);

    REQUIRE_THROWS_AS(verify_resolvent_relation(model, alpha, {Complex(0.0, -1.0)}),
                      NotUpperHalfPlane);
}

TEST_CASE("direct_sum_model block structure") {
    const auto model = direct_sum_model(3, 2, 21);
    REQUIRE(model.n() == 6);
    REQUIRE(model.d() == 2);
    REQUIRE(model.is_cyclic());
    REQUIRE(krylov_oracle_cyclic(model.a(), model.b()));

    const Matrix a0 = model.a().mat().topLeftCorner(3, 3);
    const Vector b0 = model.b().col(0).head(3);
    REQUIRE((model.a().mat().bottomRightCorner(3, 3) - a0).norm() == 0.0);
    REQUIRE((model.b().col(1).tail(3) - b0).norm() == 0.0);

    // identical blocks: alpha = diag(c, c) duplicates every eigenvalue and
    // each atom weight carries both slots
    const double c = 0.4;
    const auto m_cc = model.spectral_measure(diag_alpha({c, c}));
    Eigen::SelfAdjointEigenSolver<Matrix> block(a0 + c * b0 * b0.adjoint());
    REQUIRE(m_cc.atoms().size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        REQUIRE(m_cc.atoms()[k].location ==
                Catch::Approx(block.eigenvalues()(static_cast<Eigen::Index>(k))).margin(1e-10));
        const auto es = eigensystem(m_cc.atoms()[k].weight);
        REQUIRE(es.eigenvalues()(0) > 1e-8);  // rank-2 weight structure
    }

    // generic diagonal alpha: blockwise eigendecomposition oracle, disjoint spectra
    const auto m_gen = model.spectral_measure(diag_alpha({0.3, 0.9}));
    Eigen::SelfAdjointEigenSolver<Matrix> b1(a0 + 0.3 * b0 * b0.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> b2(a0 + 0.9 * b0 * b0.adjoint());
    std::vector<double> expected;
    for (Eigen::Index i = 0; i < 3; ++i) {
        expected.push_back(b1.eigenvalues()(i));
        expected.push_back(b2.eigenvalues()(i));
    }
    std::sort(expected.begin(), expected.end());
    REQUIRE(m_gen.atoms().size() == 6);
    for (std::size_t k = 0; k < 6; ++k)
        REQUIRE(m_gen.atoms()[k].location == Catch::Approx(expected[k]).margin(1e-10));
}

TEST_CASE("rank-one Aronszajn-Donoghue separation on random models") {
    std::mt19937_64 rng(131);
    std::uniform_real_distribution<double> logmag(std::log(0.1), std::log(2.0));
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 15);
        const auto model = rank_one_model(n, rng());
        const auto mu0 = trace_measure(model.unperturbed_measure());
        for (int k = 0; k < 5; ++k) {
            const double a = (rng() % 2 ? 1.0 : -1.0) * std::exp(logmag(rng));
            const auto mu_a = trace_measure(model.spectral_measure(diag_alpha({a})));
            for (const auto& p : mu0.atoms())
                for (const auto& q : mu_a.atoms())
                    REQUIRE(std::abs(p.location - q.location) >
                            model.tolerances().atom_merge);
        }
    }
}

TEST_CASE("eigenvalue branches are nondecreasing along positive-definite lines") {
    const auto model = random_model(6, 2, 141);
    const Hermitian alpha0 = random_hermitian(2, 142, 0.5);
    const Hermitian direction(random_hermitian(2, 143, 0.3).mat() +
                              2.0 * Matrix::Identity(2, 2));
    REQUIRE(is_positive_definite(direction));
    RealVector prev;
    for (int i = 0; i <= 40; ++i) {
        const double t = -1.0 + 0.05 * i;
        const Hermitian at(alpha0.mat() + t * direction.mat());
        const auto es = eigensystem(model.perturbed(at));
        if (i > 0)
            for (Eigen::Index k = 0; k < 6; ++k)
                REQUIRE(es.eigenvalues()(k) >= prev(k) - 1e-12);
        prev = es.eigenvalues();
    }
}

TEST_CASE("block_swap_model shares its full spectrum with the swapped operator") {
    const auto bs = block_swap_model(3, 0.6, 151);
    const auto es_a = eigensystem(bs.model.a());
    const auto es_sw = eigensystem(bs.model.perturbed(bs.alpha_swap));
    REQUIRE((es_a.eigenvalues() - es_sw.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("model validation") {
    // non-injective B
    Matrix b(3, 2);
    b.setZero();
    b(0, 0) = 1.0;
    b(0, 1) = 1.0;
    REQUIRE_THROWS_AS(PerturbationModel(random_hermitian(3, 5, 1.0), b), Error);
    // non-cyclic rejected unless waived
    const auto bad = noncyclic_duplicate_model(3, 6);  // waives internally
    REQUIRE_FALSE(bad.is_cyclic());
    REQUIRE_THROWS_AS(PerturbationModel(bad.a(), bad.b()), Error);
}
