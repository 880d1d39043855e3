#ifndef DAGAVG_SYNTH_HPP
#define DAGAVG_SYNTH_HPP

#include <cstdint>
#include <stdexcept>

#include "dagavg/core.hpp"
#include "dagavg/rng.hpp"

namespace dagavg {

struct SynthConfig {
    Index p = 10;
    double rho = 0.2;
    double coef = 0.5;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (p < 1) {
            throw std::invalid_argument("SynthConfig: p must be >= 1");
        }
        if (!(rho >= 0.0 && rho <= 1.0)) {
            throw std::invalid_argument("SynthConfig: rho must lie in [0, 1]");
        }
        if (!(sigma > 0.0)) {
            throw std::invalid_argument("SynthConfig: sigma must be positive");
        }
    }
};

/// Random strictly lower-triangular coefficient matrix: every entry (k, j)
/// with k > j is `coef` with probability rho and zero otherwise. The node
/// ordering is the natural one, so edges always point from a higher index to
/// a lower one.
inline CoefMatrix generate_true_dag(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    Matrix a = Matrix::Zero(cfg.p, cfg.p);
    for (Index j = 0; j < cfg.p; ++j) {
        for (Index k = j + 1; k < cfg.p; ++k) {
            if (rng.bernoulli(cfg.rho)) {
                a(k, j) = cfg.coef;
            }
        }
    }
    return CoefMatrix(std::move(a));
}

/// n i.i.d. rows of x = z (I - A0)^{-1}, z ~ N(0, sigma^2 I).
///
/// Rows are produced by propagating z through the structural equations in
/// topological order, x_j = sum_k x_k A0(k, j) + z_j; (I - A0) is never
/// inverted. Noise is drawn row-major, node index order, so the result is a
/// function of (a0, sigma, n, seed) only.
inline DataMatrix sample_data(const CoefMatrix& a0, double sigma, Index n, std::uint64_t seed) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("sample_data: sigma must be positive");
    }
    if (n < 1) {
        throw std::invalid_argument("sample_data: n must be >= 1");
    }
    const Dag support = support_dag(a0);
    if (!validate_dag(support)) {
        // (I - A0) may be singular once the support has a cycle
        throw NumericalError("sample_data: coefficient support is cyclic");
    }
    const auto order = topological_order(support);
    const Index p = a0.p();
    std::vector<std::vector<Index>> parents(static_cast<std::size_t>(p));
    for (const auto& e : support.edges()) {
        parents[static_cast<std::size_t>(e.child)].push_back(e.parent);
    }

    Rng rng(seed);
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) {
            x(i, j) = sigma * rng.normal();
        }
        for (Index j : order) {
            double acc = x(i, j);
            for (Index k : parents[static_cast<std::size_t>(j)]) {
                acc += x(i, k) * a0(k, j);
            }
            x(i, j) = acc;
        }
    }
    return DataMatrix(std::move(x));
}

/// Omega = (I - A0)(I - A0)^T / sigma^2, the inverse of the SEM covariance
/// sigma^2 (I - A0^T)^{-1} (I - A0)^{-1}.
inline PrecisionMatrix true_precision(const CoefMatrix& a0, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("true_precision: sigma must be positive");
    }
    const Matrix b = Matrix::Identity(a0.p(), a0.p()) - a0.values();
    return PrecisionMatrix((b * b.transpose()) / (sigma * sigma));
}

}  // namespace dagavg

#endif  // DAGAVG_SYNTH_HPP
