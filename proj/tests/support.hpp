#ifndef DAGAVG_TESTS_SUPPORT_HPP
#define DAGAVG_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dagavg/dagavg.hpp"

namespace testing {

using dagavg::Index;
using dagavg::Matrix;
using dagavg::Vector;

inline Matrix gaussian_matrix(dagavg::Rng& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

inline std::vector<Index> random_permutation(dagavg::Rng& rng, Index p) {
    std::vector<Index> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
    }
    return perm;
}

/// Acyclic edge set: each pair (perm[a], perm[b]) with a < b is an edge with
/// probability `density`.
inline dagavg::Dag random_dag(dagavg::Rng& rng, Index p, double density) {
    const auto perm = random_permutation(rng, p);
    std::vector<dagavg::Edge> edges;
    for (Index a = 0; a < p; ++a) {
        for (Index b = a + 1; b < p; ++b) {
            if (rng.bernoulli(density)) {
                edges.push_back({perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]});
            }
        }
    }
    return dagavg::Dag(p, std::move(edges));
}

/// Coefficients on the edges of `g`, magnitudes in [0.3, 0.8], random sign.
inline dagavg::CoefMatrix random_coefs(dagavg::Rng& rng, const dagavg::Dag& g) {
    Matrix a = Matrix::Zero(g.num_nodes(), g.num_nodes());
    for (const auto& e : g.edges()) {
        const double mag = 0.3 + 0.5 * rng.uniform();
        a(e.parent, e.child) = rng.bernoulli(0.5) ? mag : -mag;
    }
    return dagavg::CoefMatrix(std::move(a));
}

inline Matrix random_spd(dagavg::Rng& rng, Index p) {
    const Matrix b = gaussian_matrix(rng, p, p);
    return b * b.transpose() + 0.5 * Matrix::Identity(p, p);
}

/// Uniform point of the probability simplex (normalized exponentials).
inline Vector random_simplex(dagavg::Rng& rng, Index m) {
    Vector w(m);
    for (Index i = 0; i < m; ++i) {
        w[i] = -std::log(1.0 - rng.uniform());
    }
    return w / w.sum();
}

/// Data generated from `a0` with unit noise on every node except the
/// non-root ones, which are exact linear functions of their parents.
inline dagavg::DataMatrix noise_free_data(const dagavg::CoefMatrix& a0, Index n, std::uint64_t seed) {
    const Index p = a0.p();
    const auto g = dagavg::support_dag(a0);
    const auto order = dagavg::topological_order(g);
    dagavg::Rng rng(seed);
    Matrix x = Matrix::Zero(n, p);
    for (Index j : order) {
        const auto pa = g.parents(j);
        if (pa.empty()) {
            for (Index i = 0; i < n; ++i) {
                x(i, j) = rng.normal();
            }
        } else {
            for (Index k : pa) {
                x.col(j) += a0(k, j) * x.col(k);
            }
        }
    }
    return dagavg::DataMatrix(std::move(x));
}

}  // namespace testing

#endif
