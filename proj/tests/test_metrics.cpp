#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"

using namespace dagavg;

namespace {

/// sum(l) - sum(log l) - p over the eigenvalues l of Omega0^{-1} Omega_hat.
double kl_eigen_oracle(const Matrix& omega_hat, const Matrix& omega0) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(omega_hat, omega0);
    const Vector l = ges.eigenvalues();
    return l.sum() - l.array().log().sum() - static_cast<double>(l.size());
}

CandidateSet nested(Index p, const std::vector<std::vector<Edge>>& sets) {
    std::vector<Candidate> models;
    for (const auto& s : sets) {
        models.push_back({Dag(p, s), CoefMatrix(p)});
    }
    return CandidateSet(std::move(models));
}

}  // namespace

TEST_CASE("KL of identical precision matrices is exactly zero") {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const PrecisionMatrix omega(testing::random_spd(rng, 2 + static_cast<Index>(rng.below(9))));
        CHECK(kl_loss(omega, omega) == 0.0);
    }
}

TEST_CASE("KL of 2I against I in two dimensions") {
    const double expected = 4.0 - std::log(4.0) - 2.0;
    const PrecisionMatrix two(2.0 * Matrix::Identity(2, 2));
    const PrecisionMatrix one(Matrix::Identity(2, 2));
    CHECK(std::abs(kl_loss(two, one) - expected) <= 1e-12);
    CHECK(std::abs(expected - 0.6137056388801094) < 1e-15);
}

TEST_CASE("KL matches the eigenvalue oracle and is positive") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Index p = 2 + static_cast<Index>(rng.below(8));
        const Matrix a = testing::random_spd(rng, p);
        const Matrix b = testing::random_spd(rng, p);
        const double kl = kl_loss(PrecisionMatrix(a), PrecisionMatrix(b));
        const double oracle = kl_eigen_oracle(a, b);
        CHECK(kl > 0.0);
        CHECK(oracle > 0.0);
        CHECK(std::abs(kl - oracle) <= 1e-8 * std::max(1.0, oracle));
    }
}

TEST_CASE("KL rejects mismatched dimensions") {
    CHECK_THROWS(kl_loss(PrecisionMatrix(Matrix::Identity(2, 2)), PrecisionMatrix(Matrix::Identity(3, 3))));
}

TEST_CASE("prediction error examples") {
    Rng rng(3);
    const DataMatrix x(testing::gaussian_matrix(rng, 20, 4));
    const auto g = testing::random_dag(rng, 4, 0.6);
    const auto a0 = testing::random_coefs(rng, g);
    CHECK(prediction_error(x, a0, a0) == 0.0);
    const CoefMatrix zero(4);
    const double pe = prediction_error(x, a0, zero);
    CHECK(pe == Catch::Approx((x.values() * a0.values()).norm() / 80.0).epsilon(1e-14));
    const DataMatrix scaled(3.0 * x.values());
    CHECK(prediction_error(scaled, a0, zero) == Catch::Approx(3.0 * pe).epsilon(1e-14));
    const DataMatrix one(testing::gaussian_matrix(rng, 5, 1));
    CHECK(prediction_error(one, CoefMatrix(1), CoefMatrix(1)) == 0.0);
}

TEST_CASE("estimation error examples") {
    const CoefMatrix zero(3);
    const PrecisionMatrix eye(Matrix::Identity(3, 3));
    const auto [ea, eo] = estimation_errors(zero, zero, eye, eye);
    CHECK(ea == 0.0);
    CHECK(eo == 0.0);
    Matrix a = Matrix::Zero(3, 3);
    a(2, 0) = 0.3;
    CHECK(estimation_errors(zero, CoefMatrix(a), eye, eye).first == Catch::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("estimation error of an average is bounded by the average error") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const auto a0 = generate_true_dag({.p = 6, .rho = 0.4, .seed = static_cast<std::uint64_t>(t)});
        const auto omega0 = true_precision(a0, 1.0);
        const DataMatrix x = sample_data(a0, 1.0, 60, 10 + static_cast<std::uint64_t>(t));
        std::vector<Candidate> models;
        std::vector<Edge> edges;
        for (Index k = 1; k < 6 && models.size() < 4; ++k) {
            edges.push_back({k, k - 1});
            const Dag g(6, edges);
            models.push_back({g, fit_edgeset(x, g).a_hat});
        }
        const CandidateSet cs(models);
        const Vector w = testing::random_simplex(rng, static_cast<Index>(cs.size()));
        double bound = 0.0;
        for (std::size_t m = 0; m < cs.size(); ++m) {
            bound += w[static_cast<Index>(m)] * estimation_errors(a0, cs[m].coef, omega0, omega0).first;
        }
        const auto avg = average_estimator(cs, WeightVector(w));
        CHECK(estimation_errors(a0, avg, omega0, omega0).first <= bound + 1e-12);
    }
}

TEST_CASE("estimated precision examples") {
    CHECK(estimated_precision(CoefMatrix(3), 1.0).values() == Matrix::Identity(3, 3));
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto g = testing::random_dag(rng, 6, 0.5);
        const auto a = testing::random_coefs(rng, g);
        const double s2 = 0.3 + rng.uniform();
        CHECK((estimated_precision(a, s2).values() - true_precision(a, std::sqrt(s2)).values()).cwiseAbs().maxCoeff() <
              1e-12);
    }
    CHECK_THROWS(estimated_precision(CoefMatrix(2), 0.0));
}

TEST_CASE("I - A has unit determinant for acyclic support") {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        const auto g = testing::random_dag(rng, 7, 0.5);
        const auto a = testing::random_coefs(rng, g);
        // Reorder rows and columns topologically: I - A becomes unit triangular.
        const auto order = topological_order(g);
        Matrix b(7, 7);
        for (Index r = 0; r < 7; ++r) {
            for (Index c = 0; c < 7; ++c) {
                const Index i = order[static_cast<std::size_t>(r)];
                const Index j = order[static_cast<std::size_t>(c)];
                b(r, c) = (i == j ? 1.0 : 0.0) - a(i, j);
            }
        }
        CHECK(b.isUpperTriangular(0.0));
        CHECK(b.diagonal() == Vector::Ones(7));
        CHECK(std::abs((Matrix::Identity(7, 7) - a.values()).determinant() - 1.0) < 1e-10);
        CHECK_NOTHROW(estimated_precision(a, 0.7));
    }
}

TEST_CASE("taxonomy with an empty truth marks everything correct") {
    const auto cs = nested(3, {{}, {{0, 1}}, {{0, 1}, {0, 2}}});
    const auto tax = classify_candidates(cs, CoefMatrix(3));
    CHECK(tax.m0() == 0);
    CHECK(tax.smallest_correct == std::optional<std::size_t>(0));
    CHECK(tax.overfitted == std::vector<std::size_t>{1, 2});
}

TEST_CASE("taxonomy when only the largest model is correct") {
    const auto cs = nested(3, {{}, {{0, 1}}, {{0, 1}, {0, 2}}});
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(0, 2) = 0.5;
    const auto tax = classify_candidates(cs, CoefMatrix(a));
    CHECK(tax.m0() == 2);
    CHECK(tax.smallest_correct == std::optional<std::size_t>(2));
    CHECK(tax.overfitted.empty());
}

TEST_CASE("taxonomy when no model is correct") {
    const auto cs = nested(3, {{}, {{0, 1}}});
    Matrix a = Matrix::Zero(3, 3);
    a(1, 2) = 0.5;
    const auto tax = classify_candidates(cs, CoefMatrix(a));
    CHECK(tax.m0() == 2);
    CHECK_FALSE(tax.smallest_correct);
}

TEST_CASE("taxonomy classes are contiguous") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        std::vector<Edge> pool;
        for (Index k = 1; k < 5; ++k) {
            for (Index j = 0; j < k; ++j) {
                pool.push_back({k, j});
            }
        }
        std::vector<std::vector<Edge>> sets;
        std::vector<Edge> cur;
        for (const auto& e : pool) {
            cur.push_back(e);
            sets.push_back(cur);
        }
        const auto cs = nested(5, sets);
        const auto a0 = generate_true_dag({.p = 5, .rho = 0.3, .seed = static_cast<std::uint64_t>(t)});
        const auto tax = classify_candidates(cs, a0);
        std::vector<std::size_t> all = tax.underfitted;
        if (tax.smallest_correct) {
            all.push_back(*tax.smallest_correct);
        }
        all.insert(all.end(), tax.overfitted.begin(), tax.overfitted.end());
        for (std::size_t i = 0; i < all.size(); ++i) {
            CHECK(all[i] == i);
        }
        CHECK(all.size() == cs.size());
    }
}

TEST_CASE("model KL divergence examples") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = 0.5;
    const CoefMatrix a0(a);
    CHECK(kl_divergence_model(a0, a0, 1.0, 10) == 0.0);
    CHECK(kl_divergence_model(CoefMatrix(3), CoefMatrix(3), 1.0, 10) == 0.0);
    CHECK(std::abs(kl_divergence_model(CoefMatrix(2), a0, 1.0, 2) - 0.25) < 1e-15);
}

TEST_CASE("model KL divergence matches the trace formula") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto g = testing::random_dag(rng, 6, 0.5);
        const auto a0 = testing::random_coefs(rng, g);
        const auto a = testing::random_coefs(rng, testing::random_dag(rng, 6, 0.5));
        const double sigma = 0.5 + rng.uniform();
        const Index n = 50;
        const Matrix b0i = (Matrix::Identity(6, 6) - a0.values()).inverse();
        const Matrix sigma0 = sigma * sigma * b0i.transpose() * b0i;
        const Matrix b = Matrix::Identity(6, 6) - a.values();
        const double direct = n / (2.0 * sigma * sigma) * (b * b.transpose() * sigma0).trace() - n * 6 / 2.0;
        const double got = kl_divergence_model(a, a0, sigma, n);
        CHECK(got >= 0.0);
        CHECK(std::abs(got - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
}
