#ifndef DAGAVG_METRICS_HPP
#define DAGAVG_METRICS_HPP

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "dagavg/core.hpp"

namespace dagavg {

struct MetricsRecord {
    double kl = 0.0;
    double pe = 0.0;
    double ee_a = 0.0;
    double ee_omega = 0.0;
};

namespace detail {

inline Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        throw NotPositiveDefinite(eig.eigenvalues().minCoeff());
    }
    return llt;
}

}  // namespace detail

/// KL(Omega_hat, Omega0) = tr(Omega0^{-1} Omega_hat) - log|Omega0^{-1} Omega_hat| - p.
///
/// Evaluated through the Cholesky factor L of Omega0 and the whitened
/// difference D = L^{-1} (Omega_hat - Omega0) L^{-T}: the loss equals
/// tr(D) - log det(I + D), with the log-determinant taken from the Cholesky
/// factor of I + D. Identical inputs give D = 0 and an exact zero.
inline double kl_loss(const PrecisionMatrix& omega_hat, const PrecisionMatrix& omega0) {
    if (omega_hat.p() != omega0.p()) {
        throw std::invalid_argument("kl_loss: dimension mismatch");
    }
    const Index p = omega0.p();
    const auto llt0 = detail::cholesky_or_throw(omega0.values());
    detail::cholesky_or_throw(omega_hat.values());
    const Matrix diff = omega_hat.values() - omega0.values();
    const auto l = llt0.matrixL();
    Matrix d = l.solve(diff);
    d = l.solve(d.transpose().eval());
    d = 0.5 * (d + d.transpose()).eval();
    const Matrix shifted = Matrix::Identity(p, p) + d;
    const auto llt = detail::cholesky_or_throw(shifted);
    const Matrix lf = llt.matrixL();
    double logdet = 0.0;
    for (Index i = 0; i < p; ++i) {
        logdet += 2.0 * std::log(lf(i, i));
    }
    return d.trace() - logdet;
}

/// PE = ||X A0 - X A_hat||_F / (n p). The norm is not squared.
inline double prediction_error(const DataMatrix& x, const CoefMatrix& a0, const CoefMatrix& a_hat) {
    if (a0.p() != x.p() || a_hat.p() != x.p()) {
        throw std::invalid_argument("prediction_error: dimension mismatch");
    }
    const double np = static_cast<double>(x.n()) * static_cast<double>(x.p());
    return (x.values() * (a0.values() - a_hat.values())).norm() / np;
}

/// (||A0 - A_hat||_F, ||Omega0 - Omega_hat||_F).
inline std::pair<double, double> estimation_errors(const CoefMatrix& a0, const CoefMatrix& a_hat,
                                                   const PrecisionMatrix& omega0, const PrecisionMatrix& omega_hat) {
    if (a0.p() != a_hat.p() || omega0.p() != omega_hat.p()) {
        throw std::invalid_argument("estimation_errors: dimension mismatch");
    }
    return {(a0.values() - a_hat.values()).norm(), (omega0.values() - omega_hat.values()).norm()};
}

/// (I - A_hat)(I - A_hat)^T / sigma2_hat.
inline PrecisionMatrix estimated_precision(const CoefMatrix& a_hat, double sigma2_hat) {
    if (!(sigma2_hat > 0.0)) {
        throw std::invalid_argument("estimated_precision: sigma2_hat must be positive");
    }
    const Matrix b = Matrix::Identity(a_hat.p(), a_hat.p()) - a_hat.values();
    Matrix omega = (b * b.transpose()) / sigma2_hat;
    return PrecisionMatrix(0.5 * (omega + omega.transpose()));
}

/// Underfitted / smallest correct / overfitted partition of a nested
/// candidate list (0-based indices).
struct CandidateTaxonomy {
    std::vector<std::size_t> underfitted;
    std::optional<std::size_t> smallest_correct;
    std::vector<std::size_t> overfitted;

    [[nodiscard]] std::size_t m0() const noexcept { return underfitted.size(); }
};

/// A candidate is correctly specified when it contains every edge of the
/// truth; by nesting these form a suffix of the list.
inline CandidateTaxonomy classify_candidates(const CandidateSet& cs, const CoefMatrix& a0) {
    const Dag truth = support_dag(a0);
    CandidateTaxonomy out;
    for (std::size_t m = 0; m < cs.size(); ++m) {
        const bool correct = truth.is_subset_of(cs[m].edges);
        if (!correct) {
            if (out.smallest_correct) {
                throw std::logic_error("classify_candidates: candidate list is not nested");
            }
            out.underfitted.push_back(m);
        } else if (!out.smallest_correct) {
            out.smallest_correct = m;
        } else {
            out.overfitted.push_back(m);
        }
    }
    return out;
}

/// Theory quantity, used by tests and trend experiments only:
///   KL^(m) = (n / (2 sigma^2)) tr{(I - A)(I - A)^T Sigma0} - n p / 2,
/// Sigma0 = sigma^2 (I - A0^T)^{-1} (I - A0)^{-1}.
/// With B0 = I - A0 and Delta = B0^{-1}(A0 - A) this is
/// (n / 2)(2 tr(Delta) + ||Delta||_F^2), exactly zero at A = A0.
inline double kl_divergence_model(const CoefMatrix& a, const CoefMatrix& a0, double sigma, Index n) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("kl_divergence_model: sigma must be positive");
    }
    if (a.p() != a0.p()) {
        throw std::invalid_argument("kl_divergence_model: dimension mismatch");
    }
    const Matrix b0 = Matrix::Identity(a0.p(), a0.p()) - a0.values();
    const Matrix delta = b0.partialPivLu().solve(a0.values() - a.values());
    return 0.5 * static_cast<double>(n) * (2.0 * delta.trace() + delta.squaredNorm());
}

}  // namespace dagavg

#endif  // DAGAVG_METRICS_HPP
