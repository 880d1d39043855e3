#ifndef DAGAVG_CANDIDATES_HPP
#define DAGAVG_CANDIDATES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "dagavg/core.hpp"
#include "dagavg/fit.hpp"
#include "dagavg/rng.hpp"

namespace dagavg {

/// Hill-climbing BIC search from the empty graph on the training half.
struct GreedyBic {};

/// Equal-variance top-down ordering followed by the same greedy BIC
/// additions restricted to edges that point forward in that ordering.
struct OrderedBic {};

/// A caller-provided starting graph, used verbatim.
struct UserSupplied {
    Dag graph;
};

using Initializer = std::variant<GreedyBic, OrderedBic, UserSupplied>;

struct SearchConfig {
    /// Number of nested candidates M_n.
    Index m_candidates = 11;
    std::uint64_t split_seed = 0;
    Initializer initializer = GreedyBic{};
    /// Optional cap on the number of parents of any node.
    std::optional<Index> max_parents;

    void validate() const {
        if (m_candidates < 1) {
            throw std::invalid_argument("SearchConfig: m_candidates must be >= 1");
        }
        if (const auto* u = std::get_if<UserSupplied>(&initializer); u && !validate_dag(u->graph)) {
            throw std::invalid_argument("SearchConfig: user-supplied initial graph is not acyclic");
        }
        if (max_parents && *max_parents < 0) {
            throw std::invalid_argument("SearchConfig: max_parents must be non-negative");
        }
    }
};

// ---------------------------------------------------------------------------
// Train / validation split
// ---------------------------------------------------------------------------

struct DataSplit {
    DataMatrix train;
    DataMatrix valid;
    std::vector<Index> train_rows;  // ascending
    std::vector<Index> valid_rows;  // ascending
};

/// Uniformly random row partition of sizes floor(n/2) (train) and ceil(n/2)
/// (validation). Rows keep their original relative order inside each part.
inline DataSplit split_data(const DataMatrix& data, std::uint64_t seed) {
    const Index n = data.n();
    if (n < 4) {
        throw DataError("split_data: need at least 4 rows");
    }
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        perm[static_cast<std::size_t>(i)] = i;
    }
    Rng rng(seed);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    const auto n_train = static_cast<std::size_t>(n / 2);
    std::vector<Index> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Index> valid(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(valid.begin(), valid.end());

    const Matrix& x = data.values();
    auto gather = [&](const std::vector<Index>& rows) {
        Matrix out(static_cast<Index>(rows.size()), x.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.row(static_cast<Index>(r)) = x.row(rows[r]);
        }
        return DataMatrix(std::move(out));
    };
    return DataSplit{gather(train), gather(valid), std::move(train), std::move(valid)};
}

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

/// Validation log-likelihood of edge set `e`: coefficients and
/// sigma2 = rss_train / (n_t p) come from the training half, the likelihood
/// is evaluated on the validation half. Higher is better.
inline double validation_score(const DataMatrix& train, const DataMatrix& valid, const Dag& e) {
    const auto fit = fit_edgeset(train, e);
    const double sigma2 = fit.rss / (static_cast<double>(train.n()) * static_cast<double>(train.p()));
    return profile_loglik(valid, fit.a_hat, sigma2);
}

namespace detail {

/// Same value as validation_score, from total residual sums of squares.
inline double validation_score_from_rss(double rss_train, double rss_valid, Index n_train, Index n_valid, Index p) {
    const double sigma2 = rss_train / (static_cast<double>(n_train) * static_cast<double>(p));
    const double nv = static_cast<double>(n_valid);
    const double score =
        -0.5 * nv * static_cast<double>(p) * std::log(2.0 * std::numbers::pi * sigma2) - rss_valid / (2.0 * sigma2);
    return std::isnan(score) ? -std::numeric_limits<double>::infinity() : score;
}

inline double bic_from_rss(double rss, Index n, Index p, std::size_t num_edges) {
    const double np = static_cast<double>(n) * static_cast<double>(p);
    return np * std::log(rss / np) + std::log(static_cast<double>(n)) * static_cast<double>(num_edges);
}

/// Per-node residual sums of squares for the current graph on the training
/// (and optionally validation) half. A move only changes one parent set, so
/// only one node is refit per evaluated edge.
class NodeCache {
public:
    NodeCache(const DataMatrix& train, const DataMatrix* valid, const Dag& graph)
        : train_(train), valid_(valid), graph_(graph),
          train_rss_(static_cast<std::size_t>(train.p())), valid_rss_(static_cast<std::size_t>(train.p()), 0.0) {
        for (Index j = 0; j < train.p(); ++j) {
            auto r = evaluate(j, graph.parents(j));
            if (!r) {
                throw RankDeficient(j);
            }
            train_rss_[static_cast<std::size_t>(j)] = r->first;
            valid_rss_[static_cast<std::size_t>(j)] = r->second;
        }
    }

    /// (train rss, validation rss) of node j under `parents`; nullopt when
    /// the design is not of full column rank or has too many columns.
    [[nodiscard]] std::optional<std::pair<double, double>> evaluate(Index j, const std::vector<Index>& parents) const {
        if (static_cast<Index>(parents.size()) >= train_.n()) {
            return std::nullopt;
        }
        auto node = fit_node(train_.values(), j, parents);
        if (!node.rank_ok) {
            return std::nullopt;
        }
        double vr = 0.0;
        if (valid_ != nullptr) {
            const Matrix& xv = valid_->values();
            Vector resid = xv.col(j);
            for (std::size_t c = 0; c < parents.size(); ++c) {
                resid -= node.coef[static_cast<Index>(c)] * xv.col(parents[c]);
            }
            vr = resid.squaredNorm();
        }
        return std::make_pair(node.rss, vr);
    }

    /// Totals after replacing node j's contribution by (tr, vr).
    [[nodiscard]] std::pair<double, double> totals_with(Index j, double tr, double vr) const {
        double t = 0.0;
        double v = 0.0;
        for (std::size_t i = 0; i < train_rss_.size(); ++i) {
            const bool swap = static_cast<Index>(i) == j;
            t += swap ? tr : train_rss_[i];
            v += swap ? vr : valid_rss_[i];
        }
        return {t, v};
    }

    void commit(const Dag& graph, Index j, double tr, double vr) {
        graph_ = graph;
        train_rss_[static_cast<std::size_t>(j)] = tr;
        valid_rss_[static_cast<std::size_t>(j)] = vr;
    }

    [[nodiscard]] const Dag& graph() const noexcept { return graph_; }

private:
    const DataMatrix& train_;
    const DataMatrix* valid_;
    Dag graph_;
    std::vector<double> train_rss_;
    std::vector<double> valid_rss_;
};

inline bool addition_allowed(const Dag& g, Edge e, const std::optional<Index>& max_parents) {
    if (e.parent == e.child || g.contains(e)) {
        return false;
    }
    if (max_parents && static_cast<Index>(g.parents(e.child).size()) >= *max_parents) {
        return false;
    }
    return addition_keeps_acyclic(g, e);
}

inline std::vector<Index> parents_with(const Dag& g, Edge e) {
    auto pa = g.parents(e.child);
    pa.insert(std::upper_bound(pa.begin(), pa.end(), e.parent), e.parent);
    return pa;
}

inline std::vector<Index> parents_without(const Dag& g, Edge e) {
    auto pa = g.parents(e.child);
    pa.erase(std::find(pa.begin(), pa.end(), e.parent));
    return pa;
}

}  // namespace detail

/// BIC = n p log(rss / (n p)) + log(n) |E| of an edge set fitted on `data`.
inline double bic_score(const DataMatrix& data, const Dag& e) {
    const auto fit = fit_edgeset(data, e);
    return detail::bic_from_rss(fit.rss, data.n(), data.p(), e.num_edges());
}

namespace detail {

/// Greedy BIC additions from the empty graph; `allowed(e)` filters moves.
template <typename Allowed>
Dag greedy_bic_additions(const DataMatrix& train, const std::optional<Index>& max_parents, Allowed allowed) {
    const Index p = train.p();
    NodeCache cache(train, nullptr, Dag(p));
    double current = bic_from_rss(cache.totals_with(-1, 0.0, 0.0).first, train.n(), p, 0);
    while (true) {
        const Dag& g = cache.graph();
        std::optional<Edge> best_edge;
        double best_bic = current;
        double best_rss = 0.0;
        for (Index k = 0; k < p; ++k) {
            for (Index j = 0; j < p; ++j) {
                const Edge e{k, j};
                if (!allowed(e) || !addition_allowed(g, e, max_parents)) {
                    continue;
                }
                auto r = cache.evaluate(j, parents_with(g, e));
                if (!r) {
                    continue;
                }
                const double rss = cache.totals_with(j, r->first, 0.0).first;
                const double bic = bic_from_rss(rss, train.n(), p, g.num_edges() + 1);
                if (bic < best_bic) {
                    best_bic = bic;
                    best_edge = e;
                    best_rss = r->first;
                }
            }
        }
        if (!best_edge) {
            return g;
        }
        cache.commit(g.with_edge(*best_edge), best_edge->child, best_rss, 0.0);
        current = best_bic;
    }
}

}  // namespace detail

/// Causal ordering under equal noise variances: repeatedly append the node
/// whose residual variance, given the nodes already ordered, is smallest.
/// Ties go to the lower index. Stops regressing once the ordered set would
/// leave no residual degrees of freedom; remaining nodes keep index order.
inline std::vector<Index> equal_variance_order(const DataMatrix& data) {
    const Index p = data.p();
    std::vector<Index> order;
    std::vector<char> used(static_cast<std::size_t>(p), 0);
    while (static_cast<Index>(order.size()) < p) {
        Index best = -1;
        double best_rss = std::numeric_limits<double>::infinity();
        const bool can_regress = static_cast<Index>(order.size()) < data.n() - 1;
        for (Index j = 0; j < p; ++j) {
            if (used[static_cast<std::size_t>(j)]) {
                continue;
            }
            if (!can_regress) {
                best = j;
                break;
            }
            const auto fit = fit_node(data.values(), j, order);
            const double rss = fit.rank_ok ? fit.rss : std::numeric_limits<double>::infinity();
            if (best < 0 || rss < best_rss) {
                best = j;
                best_rss = rss;
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);
    }
    return order;
}

/// Starting graph of the search. User-supplied graphs pass through. The
/// greedy BIC initializer adds, one at a time, the acyclicity-preserving edge
/// with the largest decrease of BIC = n p log(rss / (n p)) + log(n) |E| until
/// no addition decreases it; ties go to the smallest (parent, child) pair.
/// The ordered variant runs the same additions but only along an
/// equal-variance ordering of the nodes.
inline Dag initial_graph(const DataMatrix& train, const SearchConfig& cfg) {
    cfg.validate();
    if (const auto* u = std::get_if<UserSupplied>(&cfg.initializer)) {
        if (u->graph.num_nodes() != train.p()) {
            throw std::invalid_argument("initial_graph: user-supplied graph has the wrong node count");
        }
        return u->graph;
    }
    if (std::holds_alternative<OrderedBic>(cfg.initializer)) {
        const auto order = equal_variance_order(train);
        std::vector<Index> position(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            position[static_cast<std::size_t>(order[i])] = static_cast<Index>(i);
        }
        return detail::greedy_bic_additions(train, cfg.max_parents, [&](Edge e) {
            return position[static_cast<std::size_t>(e.parent)] < position[static_cast<std::size_t>(e.child)];
        });
    }
    return detail::greedy_bic_additions(train, cfg.max_parents, [](Edge) { return true; });
}

/// Position (0-based) of the initial graph inside a candidate list of size m.
constexpr std::size_t initial_candidate_index(Index m) { return static_cast<std::size_t>((m + 1) / 2 - 1); }

struct CandidateBuild {
    CandidateSet candidates;
    /// Full-data fits, one per candidate.
    std::vector<FitResult> fits;
    std::size_t initial_index = 0;
    DataSplit split;
};

/// Nested candidate generation around an initial graph.
///
/// The initial graph becomes candidate ceil(M/2). The forward phase adds
/// ceil((M-1)/2) edges, each time the acyclicity-preserving edge whose
/// addition gives the highest validation log-likelihood; the backward phase
/// removes ceil(M/2)-1 edges from the initial graph, each time the edge whose
/// removal gives the highest validation log-likelihood. Additions whose
/// parent design is singular are not legal moves. Every candidate is then
/// refit on the full data.
inline CandidateBuild build_candidate_models(const DataMatrix& x, const SearchConfig& cfg) {
    cfg.validate();
    auto split = split_data(x, cfg.split_seed);
    const DataMatrix& train = split.train;
    const DataMatrix& valid = split.valid;
    const Index p = x.p();
    const Index n_t = train.n();
    const Index n_v = valid.n();

    const Dag start = initial_graph(train, cfg);
    if (!validate_dag(start)) {
        throw std::invalid_argument("build_candidates: initial graph is not acyclic");
    }

    const Index m_total = cfg.m_candidates;
    const Index n_forward = m_total / 2;
    const Index n_backward = (m_total - 1) / 2;

    std::vector<Dag> forward;
    {
        detail::NodeCache cache(train, &valid, start);
        for (Index step = 0; step < n_forward; ++step) {
            const Dag& g = cache.graph();
            std::optional<Edge> best_edge;
            double best_score = -std::numeric_limits<double>::infinity();
            std::pair<double, double> best_rss;
            for (Index k = 0; k < p; ++k) {
                for (Index j = 0; j < p; ++j) {
                    const Edge e{k, j};
                    if (!detail::addition_allowed(g, e, cfg.max_parents)) {
                        continue;
                    }
                    auto r = cache.evaluate(j, detail::parents_with(g, e));
                    if (!r) {
                        continue;
                    }
                    const auto [t, v] = cache.totals_with(j, r->first, r->second);
                    const double score = detail::validation_score_from_rss(t, v, n_t, n_v, p);
                    if (!best_edge || score > best_score) {
                        best_score = score;
                        best_edge = e;
                        best_rss = *r;
                    }
                }
            }
            if (!best_edge) {
                throw SearchExhausted("forward phase: no edge can be added at step " + std::to_string(step + 1));
            }
            cache.commit(g.with_edge(*best_edge), best_edge->child, best_rss.first, best_rss.second);
            forward.push_back(cache.graph());
        }
    }

    std::vector<Dag> backward;
    {
        detail::NodeCache cache(train, &valid, start);
        for (Index step = 0; step < n_backward; ++step) {
            const Dag& g = cache.graph();
            std::optional<Edge> best_edge;
            double best_score = -std::numeric_limits<double>::infinity();
            std::pair<double, double> best_rss;
            for (const Edge& e : g.edges()) {
                auto r = cache.evaluate(e.child, detail::parents_without(g, e));
                if (!r) {
                    continue;
                }
                const auto [t, v] = cache.totals_with(e.child, r->first, r->second);
                const double score = detail::validation_score_from_rss(t, v, n_t, n_v, p);
                if (!best_edge || score > best_score) {
                    best_score = score;
                    best_edge = e;
                    best_rss = *r;
                }
            }
            if (!best_edge) {
                throw SearchExhausted("backward phase: no edge left to remove at step " + std::to_string(step + 1));
            }
            cache.commit(g.without_edge(*best_edge), best_edge->child, best_rss.first, best_rss.second);
            backward.push_back(cache.graph());
        }
    }

    std::vector<Dag> graphs(backward.rbegin(), backward.rend());
    graphs.push_back(start);
    graphs.insert(graphs.end(), forward.begin(), forward.end());

    std::vector<Candidate> models;
    std::vector<FitResult> fits;
    models.reserve(graphs.size());
    fits.reserve(graphs.size());
    for (auto& g : graphs) {
        auto fit = fit_edgeset(x, g);
        models.push_back({std::move(g), fit.a_hat});
        fits.push_back(std::move(fit));
    }
    return CandidateBuild{CandidateSet(std::move(models)), std::move(fits),
                          initial_candidate_index(m_total), std::move(split)};
}

inline CandidateSet build_candidates(const DataMatrix& x, const SearchConfig& cfg) {
    return build_candidate_models(x, cfg).candidates;
}

}  // namespace dagavg

#endif  // DAGAVG_CANDIDATES_HPP
