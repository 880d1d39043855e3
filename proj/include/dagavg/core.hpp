#ifndef DAGAVG_CORE_HPP
#define DAGAVG_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dagavg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
//
// DataError covers malformed inputs (exit code 2 in the CLI), NumericalError
// covers failures inside the estimators (exit code 3).
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class RankDeficient : public NumericalError {
public:
    explicit RankDeficient(Index node)
        : NumericalError("parent design of node " + std::to_string(node) + " is rank deficient"), node_(node) {}
    [[nodiscard]] Index node() const noexcept { return node_; }

private:
    Index node_;
};

class TooManyParents : public NumericalError {
public:
    TooManyParents(Index node, Index parents, Index n)
        : NumericalError("node " + std::to_string(node) + " has " + std::to_string(parents) +
                         " parents but only " + std::to_string(n) + " samples"),
          node_(node) {}
    [[nodiscard]] Index node() const noexcept { return node_; }

private:
    Index node_;
};

class SearchExhausted : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotConverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotPositiveDefinite : public NumericalError {
public:
    explicit NotPositiveDefinite(double smallest_eigenvalue)
        : NumericalError("matrix is not positive definite (smallest eigenvalue " +
                         std::to_string(smallest_eigenvalue) + ")"),
          smallest_(smallest_eigenvalue) {}
    [[nodiscard]] double smallest_eigenvalue() const noexcept { return smallest_; }

private:
    double smallest_;
};

// ---------------------------------------------------------------------------
// Dag
// ---------------------------------------------------------------------------

/// Directed edge parent -> child, 0-based node indices.
struct Edge {
    Index parent = 0;
    Index child = 0;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Node count plus a directed edge list, kept sorted by (parent, child).
///
/// Construction only checks index ranges. Acyclicity, self-loops and
/// duplicates are reported by validate_dag so that invalid graphs can be
/// represented and rejected explicitly.
class Dag {
public:
    Dag() = default;

    explicit Dag(Index p, std::vector<Edge> edges = {}) : p_(p), edges_(std::move(edges)) {
        if (p_ < 1) {
            throw std::invalid_argument("Dag requires at least one node");
        }
        for (const auto& e : edges_) {
            if (e.parent < 0 || e.parent >= p_ || e.child < 0 || e.child >= p_) {
                throw std::invalid_argument("edge endpoint out of range");
            }
        }
        std::sort(edges_.begin(), edges_.end());
    }

    [[nodiscard]] Index num_nodes() const noexcept { return p_; }
    [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
    [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }

    [[nodiscard]] bool contains(Edge e) const { return std::binary_search(edges_.begin(), edges_.end(), e); }

    /// Sorted parent indices of `child`.
    [[nodiscard]] std::vector<Index> parents(Index child) const {
        std::vector<Index> out;
        for (const auto& e : edges_) {
            if (e.child == child) {
                out.push_back(e.parent);
            }
        }
        return out;
    }

    [[nodiscard]] Dag with_edge(Edge e) const {
        auto edges = edges_;
        edges.insert(std::upper_bound(edges.begin(), edges.end(), e), e);
        return Dag(p_, std::move(edges));
    }

    [[nodiscard]] Dag without_edge(Edge e) const {
        auto edges = edges_;
        auto it = std::lower_bound(edges.begin(), edges.end(), e);
        if (it == edges.end() || *it != e) {
            throw std::invalid_argument("edge not present");
        }
        edges.erase(it);
        return Dag(p_, std::move(edges));
    }

    /// True when every edge of this graph is also in `other`.
    [[nodiscard]] bool is_subset_of(const Dag& other) const {
        return p_ == other.p_ && std::includes(other.edges_.begin(), other.edges_.end(), edges_.begin(), edges_.end());
    }

    friend bool operator==(const Dag&, const Dag&) = default;

private:
    Index p_ = 1;
    std::vector<Edge> edges_;
};

namespace detail {

/// Kahn's algorithm over an edge list. Returns an empty vector when a cycle
/// (or a self-loop) prevents a full ordering.
inline std::vector<Index> topological_order(Index p, std::span<const Edge> edges) {
    std::vector<std::vector<Index>> children(static_cast<std::size_t>(p));
    std::vector<Index> indegree(static_cast<std::size_t>(p), 0);
    for (const auto& e : edges) {
        children[static_cast<std::size_t>(e.parent)].push_back(e.child);
        ++indegree[static_cast<std::size_t>(e.child)];
    }
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(p));
    std::vector<Index> ready;
    for (Index j = p - 1; j >= 0; --j) {
        if (indegree[static_cast<std::size_t>(j)] == 0) {
            ready.push_back(j);
        }
    }
    while (!ready.empty()) {
        const Index v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (Index c : children[static_cast<std::size_t>(v)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) {
                ready.push_back(c);
            }
        }
    }
    if (static_cast<Index>(order.size()) != p) {
        return {};
    }
    return order;
}

}  // namespace detail

/// True iff the graph has no self-loops, no duplicate edges and no directed cycle.
inline bool validate_dag(const Dag& d) {
    const auto edges = d.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].parent == edges[i].child) {
            return false;
        }
        if (i > 0 && edges[i] == edges[i - 1]) {
            return false;
        }
    }
    return !detail::topological_order(d.num_nodes(), edges).empty();
}

/// A topological ordering (parents before children) of an acyclic graph.
inline std::vector<Index> topological_order(const Dag& d) {
    auto order = detail::topological_order(d.num_nodes(), d.edges());
    if (order.empty()) {
        throw std::invalid_argument("graph contains a directed cycle");
    }
    return order;
}

/// True when a directed path from `from` to `to` exists (or from == to).
inline bool reachable(const Dag& d, Index from, Index to) {
    if (from == to) {
        return true;
    }
    std::vector<char> seen(static_cast<std::size_t>(d.num_nodes()), 0);
    std::vector<Index> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    const auto edges = d.edges();
    while (!stack.empty()) {
        const Index v = stack.back();
        stack.pop_back();
        // edges are sorted by parent, so the children of v are contiguous
        auto it = std::lower_bound(edges.begin(), edges.end(), Edge{v, 0});
        for (; it != edges.end() && it->parent == v; ++it) {
            if (it->child == to) {
                return true;
            }
            if (!seen[static_cast<std::size_t>(it->child)]) {
                seen[static_cast<std::size_t>(it->child)] = 1;
                stack.push_back(it->child);
            }
        }
    }
    return false;
}

/// Adding `e` keeps an acyclic graph acyclic iff the child cannot already reach the parent.
inline bool addition_keeps_acyclic(const Dag& d, Edge e) {
    return e.parent != e.child && !reachable(d, e.child, e.parent);
}

// ---------------------------------------------------------------------------
// CoefMatrix
// ---------------------------------------------------------------------------

/// p x p weighted adjacency matrix; entry (k, j) is the weight of edge k -> j.
/// Finite entries and a zero diagonal are enforced; acyclicity of the support
/// is checked by callers through support_dag + validate_dag.
class CoefMatrix {
public:
    CoefMatrix() = default;

    explicit CoefMatrix(Index p) : values_(Matrix::Zero(p, p)) {
        if (p < 1) {
            throw std::invalid_argument("CoefMatrix requires p >= 1");
        }
    }

    explicit CoefMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols() || values_.rows() < 1) {
            throw std::invalid_argument("CoefMatrix must be square and non-empty");
        }
        if (!values_.allFinite()) {
            throw std::invalid_argument("CoefMatrix entries must be finite");
        }
        for (Index i = 0; i < values_.rows(); ++i) {
            if (values_(i, i) != 0.0) {
                throw std::invalid_argument("CoefMatrix diagonal must be zero");
            }
        }
    }

    [[nodiscard]] Index p() const noexcept { return values_.rows(); }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] double operator()(Index k, Index j) const { return values_(k, j); }

private:
    Matrix values_;
};

/// Edge set {(k, j) : A(k, j) != 0}. Exact zero test: fitted matrices carry
/// bit-exact zeros outside their edge set.
inline Dag support_dag(const CoefMatrix& a) {
    const Matrix& v = a.values();
    std::vector<Edge> edges;
    for (Index k = 0; k < v.rows(); ++k) {
        if (v(k, k) != 0.0) {
            throw std::invalid_argument("coefficient matrix has a nonzero diagonal entry");
        }
        for (Index j = 0; j < v.cols(); ++j) {
            if (v(k, j) != 0.0) {
                edges.push_back({k, j});
            }
        }
    }
    return Dag(v.rows(), std::move(edges));
}

// ---------------------------------------------------------------------------
// DataMatrix
// ---------------------------------------------------------------------------

/// n x p observations, rows are samples, columns are nodes.
class DataMatrix {
public:
    DataMatrix() = default;

    explicit DataMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 2 || values_.cols() < 1) {
            throw DataError("data matrix needs n >= 2 rows and p >= 1 columns");
        }
        if (!values_.allFinite()) {
            throw DataError("data matrix contains non-finite entries");
        }
    }

    [[nodiscard]] Index n() const noexcept { return values_.rows(); }
    [[nodiscard]] Index p() const noexcept { return values_.cols(); }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }

private:
    Matrix values_;
};

// ---------------------------------------------------------------------------
// WeightVector
// ---------------------------------------------------------------------------

inline constexpr double kSimplexTolerance = 1e-12;

/// A point of the probability simplex.
class WeightVector {
public:
    WeightVector() = default;

    explicit WeightVector(Vector w) : w_(std::move(w)) {
        if (w_.size() < 1) {
            throw std::invalid_argument("weight vector must be non-empty");
        }
        for (Index i = 0; i < w_.size(); ++i) {
            if (!(w_[i] >= 0.0 && w_[i] <= 1.0)) {
                throw std::invalid_argument("weights must lie in [0, 1]");
            }
        }
        if (std::abs(w_.sum() - 1.0) > kSimplexTolerance) {
            throw std::invalid_argument("weights must sum to one");
        }
    }

    static WeightVector vertex(Index size, Index m) {
        Vector w = Vector::Zero(size);
        w[m] = 1.0;
        return WeightVector(std::move(w));
    }

    [[nodiscard]] Index size() const noexcept { return w_.size(); }
    [[nodiscard]] const Vector& values() const noexcept { return w_; }
    [[nodiscard]] double operator[](Index m) const { return w_[m]; }

private:
    Vector w_;
};

// ---------------------------------------------------------------------------
// PrecisionMatrix
// ---------------------------------------------------------------------------

/// Symmetric positive definite p x p matrix.
class PrecisionMatrix {
public:
    PrecisionMatrix() = default;

    explicit PrecisionMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols() || values_.rows() < 1) {
            throw std::invalid_argument("precision matrix must be square and non-empty");
        }
        if (!values_.allFinite()) {
            throw std::invalid_argument("precision matrix entries must be finite");
        }
        if ((values_ - values_.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw std::invalid_argument("precision matrix is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(values_, Eigen::EigenvaluesOnly);
        const double smallest = eig.eigenvalues().minCoeff();
        if (!(smallest > 0.0)) {
            throw NotPositiveDefinite(smallest);
        }
    }

    [[nodiscard]] Index p() const noexcept { return values_.rows(); }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }

private:
    Matrix values_;
};

// ---------------------------------------------------------------------------
// CandidateSet
// ---------------------------------------------------------------------------

struct Candidate {
    Dag edges;
    CoefMatrix coef;
};

/// Strictly nested candidate models E(1) < E(2) < ... with their fitted coefficients.
class CandidateSet {
public:
    CandidateSet() = default;

    explicit CandidateSet(std::vector<Candidate> models) : models_(std::move(models)) {
        if (models_.empty()) {
            throw std::invalid_argument("candidate set must be non-empty");
        }
        const Index p = models_.front().edges.num_nodes();
        for (std::size_t m = 0; m < models_.size(); ++m) {
            const auto& c = models_[m];
            if (c.edges.num_nodes() != p || c.coef.p() != p) {
                throw std::invalid_argument("candidate dimensions disagree");
            }
            if (!validate_dag(c.edges)) {
                throw std::invalid_argument("candidate " + std::to_string(m) + " is not acyclic");
            }
            if (!support_dag(c.coef).is_subset_of(c.edges)) {
                throw std::invalid_argument("candidate " + std::to_string(m) + " has coefficients outside its edge set");
            }
            if (m > 0) {
                const auto& prev = models_[m - 1].edges;
                if (!prev.is_subset_of(c.edges) || prev.num_edges() >= c.edges.num_edges()) {
                    throw std::invalid_argument("candidates are not strictly nested at " + std::to_string(m));
                }
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return models_.size(); }
    [[nodiscard]] Index p() const { return models_.front().edges.num_nodes(); }
    [[nodiscard]] const Candidate& operator[](std::size_t m) const { return models_[m]; }
    [[nodiscard]] std::span<const Candidate> models() const noexcept { return models_; }

    /// Edge counts k_m.
    [[nodiscard]] Vector edge_counts() const {
        Vector k(static_cast<Index>(models_.size()));
        for (std::size_t m = 0; m < models_.size(); ++m) {
            k[static_cast<Index>(m)] = static_cast<double>(models_[m].edges.num_edges());
        }
        return k;
    }

    [[nodiscard]] const Candidate& largest() const { return models_.back(); }

private:
    std::vector<Candidate> models_;
};

}  // namespace dagavg

#endif  // DAGAVG_CORE_HPP
