#ifndef DAGAVG_FIT_HPP
#define DAGAVG_FIT_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dagavg/core.hpp"

namespace dagavg {

/// Relative threshold on the pivoted-QR diagonal below which a parent design
/// is declared singular.
inline constexpr double kRankTolerance = 1e-10;

/// Least-squares regression of one column on a set of parent columns.
struct NodeFit {
    Vector coef;      // one entry per parent, same order as the parent list
    Vector residual;  // x_j - X_pa coef
    double rss = 0.0;
    bool rank_ok = true;
};

/// Regresses column `child` of `x` on `parents` through a column-pivoted QR of
/// X_pa. An empty parent set gives a zero coefficient vector and the column
/// itself as residual. When the design is singular `rank_ok` is false and the
/// other fields are unspecified.
inline NodeFit fit_node(const Matrix& x, Index child, std::span<const Index> parents) {
    NodeFit out;
    const auto y = x.col(child);
    if (parents.empty()) {
        out.coef = Vector(0);
        out.residual = y;
        out.rss = out.residual.squaredNorm();
        return out;
    }
    Matrix design(x.rows(), static_cast<Index>(parents.size()));
    for (std::size_t c = 0; c < parents.size(); ++c) {
        design.col(static_cast<Index>(c)) = x.col(parents[c]);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    const auto r = qr.matrixR().diagonal().cwiseAbs();
    const double largest = r.maxCoeff();
    if (!(largest > 0.0) || r.minCoeff() < kRankTolerance * largest) {
        out.rank_ok = false;
        return out;
    }
    out.coef = qr.solve(y);
    out.residual = y - design * out.coef;
    out.rss = out.residual.squaredNorm();
    return out;
}

struct FitResult {
    CoefMatrix a_hat;
    /// ||X - X A_hat||_F^2.
    double rss = 0.0;
    std::vector<bool> per_node_rank_ok;
    /// Per-node residual sums of squares; node_rss.sum() == rss.
    Vector node_rss;
    /// Residual matrix X - X A_hat, kept for Gram computations.
    Matrix residuals;
};

/// Per-node OLS under a fixed edge set. Column j of A_hat holds the
/// regression of x_j on its parents, scattered into the parent rows; all
/// other entries are exact zeros.
///
/// Throws TooManyParents when |pa_j| >= n and RankDeficient when X_pa is
/// numerically singular (first offending node in index order).
inline FitResult fit_edgeset(const DataMatrix& data, const Dag& e) {
    const Matrix& x = data.values();
    const Index n = data.n();
    const Index p = data.p();
    if (e.num_nodes() != p) {
        throw std::invalid_argument("fit_edgeset: graph and data disagree on p");
    }
    FitResult out;
    Matrix a = Matrix::Zero(p, p);
    out.residuals.resize(n, p);
    out.node_rss.resize(p);
    out.per_node_rank_ok.assign(static_cast<std::size_t>(p), true);

    std::optional<Index> failed;
    for (Index j = 0; j < p; ++j) {
        const auto pa = e.parents(j);
        if (static_cast<Index>(pa.size()) >= n) {
            throw TooManyParents(j, static_cast<Index>(pa.size()), n);
        }
        auto node = fit_node(x, j, pa);
        if (!node.rank_ok) {
            out.per_node_rank_ok[static_cast<std::size_t>(j)] = false;
            if (!failed) {
                failed = j;
            }
            continue;
        }
        for (std::size_t c = 0; c < pa.size(); ++c) {
            a(pa[c], j) = node.coef[static_cast<Index>(c)];
        }
        out.residuals.col(j) = node.residual;
        out.node_rss[j] = node.rss;
    }
    if (failed) {
        throw RankDeficient(*failed);
    }
    out.a_hat = CoefMatrix(std::move(a));
    out.rss = out.node_rss.sum();
    return out;
}

/// Plug-in noise variance from the largest candidate:
/// ||X - X A^(M)||_F^2 / ((n - k_max) p).
inline double estimate_sigma2(const DataMatrix& x, const FitResult& largest, Index k_max) {
    if (x.n() <= k_max) {
        throw std::invalid_argument("estimate_sigma2: need n > k_max");
    }
    return largest.rss / (static_cast<double>(x.n() - k_max) * static_cast<double>(x.p()));
}

/// Gaussian SEM log-likelihood
///   -(np/2) log(2 pi sigma2) - (n / (2 sigma2)) tr{(I - A)(I - A)^T S},
/// with S = X^T X / n.
inline double profile_loglik(const DataMatrix& data, const CoefMatrix& a, double sigma2) {
    if (!(sigma2 > 0.0)) {
        throw std::invalid_argument("profile_loglik: sigma2 must be positive");
    }
    const Matrix& x = data.values();
    const double n = static_cast<double>(data.n());
    const double p = static_cast<double>(data.p());
    const Matrix s = (x.transpose() * x) / n;
    const Matrix b = Matrix::Identity(data.p(), data.p()) - a.values();
    const double tr = (b * b.transpose() * s).trace();
    return -0.5 * n * p * std::log(2.0 * std::numbers::pi * sigma2) - n / (2.0 * sigma2) * tr;
}

}  // namespace dagavg

#endif  // DAGAVG_FIT_HPP
