#ifndef DAGAVG_AVERAGING_HPP
#define DAGAVG_AVERAGING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dagavg/candidates.hpp"
#include "dagavg/core.hpp"
#include "dagavg/fit.hpp"

namespace dagavg {

// ---------------------------------------------------------------------------
// Penalty rules
// ---------------------------------------------------------------------------

/// lambda_n = ln(n), applied to the raw edge counts.
struct LogN {};
/// Mallows-type criterion: lambda = 2 applied to sigma2_hat * k.
struct Mallows2 {};
struct FixedLambda {
    double value = 0.0;
};

using LambdaRule = std::variant<LogN, Mallows2, FixedLambda>;

inline double lambda_value(const LambdaRule& rule, Index n) {
    if (n < 2) {
        throw std::invalid_argument("lambda_value: n must be >= 2");
    }
    if (std::holds_alternative<LogN>(rule)) {
        return std::log(static_cast<double>(n));
    }
    if (std::holds_alternative<Mallows2>(rule)) {
        return 2.0;
    }
    return std::get<FixedLambda>(rule).value;
}

inline std::string to_string(const LambdaRule& rule) {
    if (std::holds_alternative<LogN>(rule)) {
        return "log_n";
    }
    if (std::holds_alternative<Mallows2>(rule)) {
        return "mallows2";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<FixedLambda>(rule).value);
    return buf;
}

struct AveragingConfig {
    LambdaRule lambda_rule = LogN{};
    double qp_tolerance = 1e-10;
    int qp_max_iters = 100000;

    void validate() const {
        if (const auto* f = std::get_if<FixedLambda>(&lambda_rule); f && !(f->value >= 0.0)) {
            throw std::invalid_argument("AveragingConfig: fixed lambda must be >= 0");
        }
        if (!(qp_tolerance > 0.0)) {
            throw std::invalid_argument("AveragingConfig: qp_tolerance must be positive");
        }
        if (qp_max_iters < 1) {
            throw std::invalid_argument("AveragingConfig: qp_max_iters must be >= 1");
        }
    }
};

// ---------------------------------------------------------------------------
// Gram matrix
// ---------------------------------------------------------------------------

/// G(l, m) = tr(R_l^T R_m) with R_m = X - X A^(m). On the simplex,
/// ||X - X A(w)||_F^2 = w^T G w.
inline Matrix gram_matrix(const DataMatrix& x, const CandidateSet& cs) {
    const Matrix& xv = x.values();
    const Index cells = x.n() * x.p();
    Matrix stacked(cells, static_cast<Index>(cs.size()));
    for (std::size_t m = 0; m < cs.size(); ++m) {
        const Matrix r = xv - xv * cs[m].coef.values();
        stacked.col(static_cast<Index>(m)) = Eigen::Map<const Vector>(r.data(), cells);
    }
    Matrix g = stacked.transpose() * stacked;
    return 0.5 * (g + g.transpose());
}

// ---------------------------------------------------------------------------
// Simplex-constrained QP
// ---------------------------------------------------------------------------

struct WeightSolution {
    WeightVector w;
    /// w^T G w + lambda w^T k.
    double objective = 0.0;
    /// Largest stationarity/complementarity violation, in units of the
    /// problem scale max(|G|, |lambda k|).
    double kkt_residual = 0.0;
    /// Frank-Wolfe duality gap in the same units.
    double duality_gap = 0.0;
    Matrix gram;
    int iterations = 0;
};

namespace detail {

struct KktReport {
    double residual = 0.0;
    double gap = 0.0;
};

/// For min w^T G w + c^T w over the simplex: with g = 2 G w + c and
/// mu = min_i g_i, optimality means g_i == mu wherever w_i > 0.
inline KktReport simplex_kkt(const Matrix& g_mat, const Vector& c, const Vector& w) {
    const Vector grad = 2.0 * g_mat * w + c;
    const double mu = grad.minCoeff();
    KktReport out;
    for (Index i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) {
            out.residual = std::max(out.residual, grad[i] - mu);
        }
    }
    out.gap = w.dot(grad) - mu;
    return out;
}

/// Replaces negative eigenvalues of a symmetric matrix by zero; returns the
/// input untouched when it is already PSD.
inline Matrix psd_floor(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) {
        return sym;
    }
    const Vector lam = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace detail

/// Minimizes w^T G w + lambda w^T k over the probability simplex.
///
/// Primal active-set method in the fully-corrective Frank-Wolfe style: the
/// iterate starts at the best vertex; on the current support the objective
/// is minimized exactly (Newton step in the affine hull, or a descent ray
/// along a flat direction) with a ratio test that drops coordinates hitting
/// zero; once the support is optimal, the coordinate with the most negative
/// reduced gradient (the Frank-Wolfe vertex) joins the support. Ties go to
/// the lowest index. Stops when the Frank-Wolfe gap is within tolerance and
/// certifies the KKT residual separately.
///
/// `k` may be any nonnegative penalty vector (e.g. sigma2_hat * k for the
/// Mallows rule).
inline WeightSolution solve_weights(const Matrix& g_in, const Vector& k, double lambda, const AveragingConfig& cfg) {
    cfg.validate();
    const Index m = g_in.rows();
    if (m < 1 || g_in.cols() != m || k.size() != m) {
        throw std::invalid_argument("solve_weights: dimension mismatch");
    }
    if (!g_in.allFinite() || !k.allFinite() || !(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("solve_weights: non-finite input or negative lambda");
    }
    const Matrix g_sym = 0.5 * (g_in + g_in.transpose());
    const Matrix g_psd = detail::psd_floor(g_sym);
    const Vector c = lambda * k;

    // solve in units of the problem scale; the argmin is scale invariant
    double scale = std::max(g_psd.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff());
    if (!(scale > 0.0)) {
        scale = 1.0;
    }
    const Matrix gs = g_psd / scale;
    const Vector cs = c / scale;
    const double tol = cfg.qp_tolerance;

    auto objective_at = [&](const Vector& w) { return w.dot(gs * w) + cs.dot(w); };

    Vector w = Vector::Zero(m);
    {
        Index best = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < m; ++i) {
            const double v = gs(i, i) + cs[i];
            if (v < best_val) {
                best_val = v;
                best = i;
            }
        }
        w[best] = 1.0;
    }
    std::vector<Index> support;
    for (Index i = 0; i < m; ++i) {
        if (w[i] > 0.0) {
            support.push_back(i);
        }
    }

    int iter = 0;
    for (; iter < cfg.qp_max_iters; ++iter) {
        const Vector grad = 2.0 * gs * w + cs;
        const auto s = static_cast<Index>(support.size());
        bool blocked = false;
        if (s >= 2) {
            // Z = [I_{s-1}; -1^T] spans {d : sum d = 0} on the support.
            Matrix z = Matrix::Zero(s, s - 1);
            z.topRows(s - 1).setIdentity();
            z.row(s - 1).setConstant(-1.0);
            Matrix gss(s, s);
            Vector gr(s);
            for (Index a = 0; a < s; ++a) {
                gr[a] = grad[support[static_cast<std::size_t>(a)]];
                for (Index b = 0; b < s; ++b) {
                    gss(a, b) = gs(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
                }
            }
            const Matrix h = z.transpose() * (2.0 * gss) * z;
            const Vector r = z.transpose() * gr;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.transpose()));
            const Vector& lam = eig.eigenvalues();
            const Matrix& vecs = eig.eigenvectors();
            const double flat = 1e-13 * std::max(1.0, lam.cwiseAbs().maxCoeff());
            Vector y = Vector::Zero(s - 1);
            Vector ray = Vector::Zero(s - 1);
            for (Index i = 0; i < s - 1; ++i) {
                const double proj = vecs.col(i).dot(r);
                if (lam[i] > flat) {
                    y -= (proj / lam[i]) * vecs.col(i);
                } else {
                    ray -= proj * vecs.col(i);
                }
            }
            const bool use_ray = ray.cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, r.cwiseAbs().maxCoeff());
            const Vector d = z * (use_ray ? ray : y);

            double step = use_ray ? std::numeric_limits<double>::infinity() : 1.0;
            Index blocking = -1;
            for (Index a = 0; a < s; ++a) {
                if (d[a] < 0.0) {
                    const double limit = -w[support[static_cast<std::size_t>(a)]] / d[a];
                    if (limit < step) {
                        step = limit;
                        blocking = a;
                    }
                }
            }
            if (d.cwiseAbs().maxCoeff() > 0.0 && std::isfinite(step)) {
                Vector trial = w;
                for (Index a = 0; a < s; ++a) {
                    const Index i = support[static_cast<std::size_t>(a)];
                    trial[i] = std::max(0.0, w[i] + step * d[a]);
                }
                if (blocking >= 0) {
                    trial[support[static_cast<std::size_t>(blocking)]] = 0.0;
                }
                // accept only non-increasing objective (guards round-off on flat faces)
                if (objective_at(trial) <= objective_at(w) + 1e-15 || blocking >= 0) {
                    w = trial;
                }
                if (blocking >= 0) {
                    support.erase(support.begin() + blocking);
                    blocked = true;
                }
            }
        }
        if (blocked) {
            continue;
        }
        // pricing: most negative reduced gradient outside the support
        const Vector g2 = 2.0 * gs * w + cs;
        double mu = 0.0;
        for (Index i : support) {
            mu += w[i] * g2[i];
        }
        Index enter = -1;
        double most_negative = -tol;
        for (Index i = 0; i < m; ++i) {
            if (w[i] == 0.0 && std::find(support.begin(), support.end(), i) == support.end()) {
                if (g2[i] - mu < most_negative) {
                    most_negative = g2[i] - mu;
                    enter = i;
                }
            }
        }
        if (enter < 0) {
            break;
        }
        support.insert(std::upper_bound(support.begin(), support.end(), enter), enter);
    }

    // drop coordinates that ended at zero and renormalize round-off
    for (Index i = 0; i < m; ++i) {
        w[i] = std::max(0.0, w[i]);
    }
    w /= w.sum();

    const auto kkt = detail::simplex_kkt(gs, cs, w);
    if (kkt.residual > tol || kkt.gap > tol) {
        throw NotConverged("solve_weights: KKT residual " + std::to_string(kkt.residual) + " after " +
                           std::to_string(iter) + " iterations");
    }
    WeightSolution out{WeightVector(w), 0.0, kkt.residual, kkt.gap, g_sym, iter};
    out.objective = w.dot(g_sym * w) + c.dot(w);
    return out;
}

/// Convex combination sum_m w_m A^(m). Support stays inside the largest
/// candidate's edge set, so it is acyclic.
inline CoefMatrix average_estimator(const CandidateSet& cs, const WeightVector& w) {
    if (static_cast<std::size_t>(w.size()) != cs.size()) {
        throw std::invalid_argument("average_estimator: weight length does not match candidate count");
    }
    Matrix a = Matrix::Zero(cs.p(), cs.p());
    for (std::size_t m = 0; m < cs.size(); ++m) {
        const double wm = w[static_cast<Index>(m)];
        if (wm != 0.0) {
            a += wm * cs[m].coef.values();
        }
    }
    return CoefMatrix(std::move(a));
}

/// Full penalized negative log-likelihood np log(2 pi sigma2) + C_n(w) / sigma2,
/// reported for display; the weights only depend on C_n.
inline double penalized_criterion(Index n, Index p, double sigma2, double c_n) {
    return static_cast<double>(n) * static_cast<double>(p) * std::log(2.0 * std::numbers::pi * sigma2) + c_n / sigma2;
}

// ---------------------------------------------------------------------------
// One-call estimator
// ---------------------------------------------------------------------------

struct ModelAverage {
    WeightSolution weights;
    CoefMatrix a_hat;
    double sigma2_hat = 0.0;
    double lambda = 0.0;
    /// Penalty vector actually used: k, or sigma2_hat * k under the Mallows rule.
    Vector penalty;
};

/// Weights and averaged coefficients for fitted candidates on data x.
inline ModelAverage average_models(const DataMatrix& x, const CandidateSet& cs, const FitResult& largest_fit,
                                   const AveragingConfig& cfg) {
    cfg.validate();
    const Vector k = cs.edge_counts();
    const auto k_max = static_cast<Index>(cs.largest().edges.num_edges());
    ModelAverage out;
    out.sigma2_hat = estimate_sigma2(x, largest_fit, k_max);
    out.lambda = lambda_value(cfg.lambda_rule, x.n());
    out.penalty = std::holds_alternative<Mallows2>(cfg.lambda_rule) ? Vector(out.sigma2_hat * k) : k;
    out.weights = solve_weights(gram_matrix(x, cs), out.penalty, out.lambda, cfg);
    out.a_hat = average_estimator(cs, out.weights.w);
    return out;
}

}  // namespace dagavg

#endif  // DAGAVG_AVERAGING_HPP
