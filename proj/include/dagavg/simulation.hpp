#ifndef DAGAVG_SIMULATION_HPP
#define DAGAVG_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dagavg/averaging.hpp"
#include "dagavg/candidates.hpp"
#include "dagavg/core.hpp"
#include "dagavg/fit.hpp"
#include "dagavg/metrics.hpp"
#include "dagavg/rng.hpp"
#include "dagavg/svg_plot.hpp"
#include "dagavg/synth.hpp"

namespace dagavg {

enum class Baseline {
    largest_candidate,   // A^(M): the biggest candidate alone
    initial_graph,       // the initializer's graph, refit on the full data
    oracle_true_graph,   // OLS on the true support
    best_candidate,      // per replication, the candidate with the smallest KL (needs the truth)
};

inline std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::largest_candidate: return "largest_candidate";
        case Baseline::initial_graph: return "initial_graph";
        case Baseline::oracle_true_graph: return "oracle_true_graph";
        case Baseline::best_candidate: return "best_candidate";
    }
    return "unknown";
}

inline std::optional<Baseline> parse_baseline(const std::string& s) {
    for (auto b : {Baseline::largest_candidate, Baseline::initial_graph, Baseline::oracle_true_graph,
                   Baseline::best_candidate}) {
        if (to_string(b) == s) {
            return b;
        }
    }
    return std::nullopt;
}

inline constexpr const char* kAveragingMethod = "dag_ma";

struct ExperimentConfig {
    std::vector<Index> p_list{10};
    std::vector<double> rho_list{0.2};
    std::vector<Index> n_list{50, 100, 200, 400, 800};
    Index reps = 500;
    Index m_candidates = 11;
    LambdaRule lambda_rule = LogN{};
    std::uint64_t base_seed = 1;
    std::vector<Baseline> baselines;
    /// Use the true graph as the initial candidate instead of the BIC search.
    bool plant_true = false;
    /// Initializer when the truth is not planted. The simulated noise is
    /// homoscedastic, so the ordering-based search is the default here.
    Initializer initializer = OrderedBic{};
    double coef = 0.5;
    double sigma = 1.0;
    /// Fill the seconds column; off by default so output is byte-reproducible.
    bool record_timing = false;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    std::filesystem::path output_dir = "results";

    void validate() const {
        if (reps < 1) {
            throw std::invalid_argument("ExperimentConfig: reps must be >= 1");
        }
        if (p_list.empty() || rho_list.empty() || n_list.empty()) {
            throw std::invalid_argument("ExperimentConfig: p, rho and n lists must be non-empty");
        }
        for (Index n : n_list) {
            if (n < 4) {
                throw std::invalid_argument("ExperimentConfig: every n must be >= 4");
            }
        }
        for (Index p : p_list) {
            if (p < 1) {
                throw std::invalid_argument("ExperimentConfig: every p must be >= 1");
            }
        }
        for (double r : rho_list) {
            if (!(r >= 0.0 && r <= 1.0)) {
                throw std::invalid_argument("ExperimentConfig: rho must lie in [0, 1]");
            }
        }
        if (m_candidates < 1) {
            throw std::invalid_argument("ExperimentConfig: m_candidates must be >= 1");
        }
    }
};

/// Weight mass on the underfitted / smallest correct / overfitted candidates.
struct WeightSplit {
    double underfit = 0.0;
    double smallest_correct = 0.0;
    double overfit = 0.0;
};

struct RunRecord {
    Index p = 0;
    double rho = 0.0;
    Index n = 0;
    Index rep = 0;
    std::string method;
    std::optional<MetricsRecord> metrics;
    std::optional<WeightSplit> weights;
    std::optional<double> seconds;
    /// Non-empty when the replication failed; such records carry no metrics.
    std::string error;

    [[nodiscard]] bool ok() const noexcept { return error.empty(); }
};

/// Everything computed for one replication, for callers that need more than
/// the flat records (tests, diagnostics).
struct Replication {
    CoefMatrix a0;
    DataMatrix x;
    std::optional<CandidateBuild> build;
    std::optional<ModelAverage> average;
    std::optional<CandidateTaxonomy> taxonomy;
    /// Metrics of each candidate used alone.
    std::vector<MetricsRecord> candidate_metrics;
    std::vector<RunRecord> records;
};

inline WeightSplit split_weights(const CandidateTaxonomy& tax, const WeightVector& w) {
    WeightSplit out;
    for (auto m : tax.underfitted) {
        out.underfit += w[static_cast<Index>(m)];
    }
    if (tax.smallest_correct) {
        out.smallest_correct = w[static_cast<Index>(*tax.smallest_correct)];
    }
    for (auto m : tax.overfitted) {
        out.overfit += w[static_cast<Index>(m)];
    }
    return out;
}

namespace detail {

inline std::uint64_t rho_bits(double rho) { return std::bit_cast<std::uint64_t>(rho); }

inline MetricsRecord evaluate_estimate(const DataMatrix& x, const CoefMatrix& a0, const PrecisionMatrix& omega0,
                                       const CoefMatrix& a_hat, double sigma2_hat) {
    const auto omega_hat = estimated_precision(a_hat, sigma2_hat);
    MetricsRecord m;
    m.kl = kl_loss(omega_hat, omega0);
    m.pe = prediction_error(x, a0, a_hat);
    std::tie(m.ee_a, m.ee_omega) = estimation_errors(a0, a_hat, omega0, omega_hat);
    return m;
}

/// rss / ((n - k) p) of a single fitted model.
inline double single_model_sigma2(const FitResult& fit, Index n, Index p, std::size_t k) {
    return fit.rss / (static_cast<double>(n - static_cast<Index>(k)) * static_cast<double>(p));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Seeds of one replication. The true graph depends on (p, rho, rep) only, so
/// the same replication index sees the same truth at every sample size.
struct ReplicationSeeds {
    std::uint64_t graph;
    std::uint64_t data;
    std::uint64_t split;
};

inline ReplicationSeeds replication_seeds(std::uint64_t base, Index p, double rho, Index n, Index rep) {
    const auto up = static_cast<std::uint64_t>(p);
    const auto un = static_cast<std::uint64_t>(n);
    const auto ur = static_cast<std::uint64_t>(rep);
    const auto rb = detail::rho_bits(rho);
    return {derive_seed({base, 1, up, rb, ur}), derive_seed({base, 2, up, rb, un, ur}),
            derive_seed({base, 3, up, rb, un, ur})};
}

/// One replication: truth, data, candidates, weights, averaged estimator,
/// metrics for it and for each requested baseline. Numerical failures are
/// turned into error records, one per method.
inline Replication run_replication(const ExperimentConfig& cfg, Index p, double rho, Index n, Index rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = replication_seeds(cfg.base_seed, p, rho, n, rep);
    SynthConfig synth{p, rho, cfg.coef, cfg.sigma, seeds.graph};
    Replication out;
    out.a0 = generate_true_dag(synth);
    out.x = sample_data(out.a0, cfg.sigma, n, seeds.data);
    const auto& a0 = out.a0;
    const auto& x = out.x;

    auto make_record = [&](std::string method) {
        RunRecord r;
        r.p = p;
        r.rho = rho;
        r.n = n;
        r.rep = rep;
        r.method = std::move(method);
        return r;
    };

    try {
        const auto omega0 = true_precision(a0, cfg.sigma);
        SearchConfig search;
        search.m_candidates = cfg.m_candidates;
        search.split_seed = seeds.split;
        search.initializer = cfg.initializer;
        if (cfg.plant_true) {
            search.initializer = UserSupplied{support_dag(a0)};
        }
        out.build = build_candidate_models(x, search);
        const auto& build = *out.build;
        AveragingConfig avg_cfg;
        avg_cfg.lambda_rule = cfg.lambda_rule;
        out.average = average_models(x, build.candidates, build.fits.back(), avg_cfg);
        out.taxonomy = classify_candidates(build.candidates, a0);

        auto ma = make_record(kAveragingMethod);
        ma.metrics = detail::evaluate_estimate(x, a0, omega0, out.average->a_hat, out.average->sigma2_hat);
        ma.weights = split_weights(*out.taxonomy, out.average->weights.w);
        if (cfg.record_timing) {
            ma.seconds = detail::seconds_since(t0);
        }
        out.records.push_back(std::move(ma));

        for (std::size_t m = 0; m < build.candidates.size(); ++m) {
            const auto& fit = build.fits[m];
            const double s2 = detail::single_model_sigma2(fit, n, p, build.candidates[m].edges.num_edges());
            out.candidate_metrics.push_back(detail::evaluate_estimate(x, a0, omega0, fit.a_hat, s2));
        }

        for (auto b : cfg.baselines) {
            const auto tb = std::chrono::steady_clock::now();
            auto rec = make_record(to_string(b));
            switch (b) {
                case Baseline::largest_candidate:
                    rec.metrics = out.candidate_metrics.back();
                    break;
                case Baseline::initial_graph:
                    rec.metrics = out.candidate_metrics[build.initial_index];
                    break;
                case Baseline::oracle_true_graph: {
                    const Dag truth = support_dag(a0);
                    const auto fit = fit_edgeset(x, truth);
                    const double s2 = detail::single_model_sigma2(fit, n, p, truth.num_edges());
                    rec.metrics = detail::evaluate_estimate(x, a0, omega0, fit.a_hat, s2);
                    break;
                }
                case Baseline::best_candidate: {
                    const auto best = std::min_element(out.candidate_metrics.begin(), out.candidate_metrics.end(),
                                                       [](const auto& l, const auto& r) { return l.kl < r.kl; });
                    rec.metrics = *best;
                    break;
                }
            }
            if (cfg.record_timing) {
                rec.seconds = detail::seconds_since(tb);
            }
            out.records.push_back(std::move(rec));
        }
    } catch (const Error& e) {
        out.records.clear();
        auto fail = make_record(kAveragingMethod);
        fail.error = e.what();
        out.records.push_back(fail);
        for (auto b : cfg.baselines) {
            auto rec = make_record(to_string(b));
            rec.error = e.what();
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Orders records by (p, rho, n, rep, method).
inline void sort_records(std::vector<RunRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const RunRecord& l, const RunRecord& r) {
        return std::tie(l.p, l.rho, l.n, l.rep, l.method) < std::tie(r.p, r.rho, r.n, r.rep, r.method);
    });
}

/// Applies `fn` to every (p, rho, n, rep) cell of the grid on a worker pool;
/// results come back in grid order regardless of scheduling.
template <typename Fn>
auto for_each_replication(const ExperimentConfig& cfg, Fn&& fn) {
    cfg.validate();
    struct Task {
        Index p;
        double rho;
        Index n;
        Index rep;
    };
    std::vector<Task> tasks;
    for (Index p : cfg.p_list) {
        for (double rho : cfg.rho_list) {
            for (Index n : cfg.n_list) {
                for (Index rep = 0; rep < cfg.reps; ++rep) {
                    tasks.push_back({p, rho, n, rep});
                }
            }
        }
    }
    using Result = decltype(fn(cfg, Index{}, double{}, Index{}, Index{}));
    std::vector<std::optional<Result>> results(tasks.size());
    unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            results[i].emplace(fn(cfg, t.p, t.rho, t.n, t.rep));
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    std::vector<Result> out;
    out.reserve(results.size());
    for (auto& r : results) {
        out.push_back(std::move(*r));
    }
    return out;
}

/// Monte Carlo sweep over the configured grid. Deterministic given base_seed.
inline std::vector<RunRecord> run_simulation(const ExperimentConfig& cfg) {
    auto reps = for_each_replication(cfg, [](const ExperimentConfig& c, Index p, double rho, Index n, Index rep) {
        return run_replication(c, p, rho, n, rep).records;
    });
    std::vector<RunRecord> records;
    for (auto& r : reps) {
        records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    sort_records(records);
    return records;
}

/// Weight-consistency experiment: the true graph is planted as the initial
/// candidate, so the candidate list always holds a correctly specified model.
inline std::vector<RunRecord> run_weight_consistency(ExperimentConfig cfg) {
    cfg.plant_true = true;
    return run_simulation(cfg);
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "p,rho,n,rep,method,kl,pe,ee_a,ee_omega,w_underfit,w_smallest_correct,w_overfit,seconds";

namespace detail {

inline std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string rho_str(double rho) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", rho);
    return buf;
}

}  // namespace detail

/// results.csv body for the successful records, in the given order.
inline void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kResultsHeader << '\n';
    for (const auto& r : records) {
        if (!r.ok() || !r.metrics) {
            continue;
        }
        const auto& m = *r.metrics;
        out << r.p << ',' << detail::rho_str(r.rho) << ',' << r.n << ',' << r.rep << ',' << r.method << ','
            << detail::num(m.kl) << ',' << detail::num(m.pe) << ',' << detail::num(m.ee_a) << ','
            << detail::num(m.ee_omega) << ',';
        if (r.weights) {
            out << detail::num(r.weights->underfit) << ',' << detail::num(r.weights->smallest_correct) << ','
                << detail::num(r.weights->overfit);
        } else {
            out << ",,";
        }
        out << ',';
        if (r.seconds) {
            out << detail::num(*r.seconds);
        }
        out << '\n';
    }
}

/// Mean of each metric per (p, rho, n, method) over successful records.
struct CellMean {
    MetricsRecord mean;
    std::size_t count = 0;
};

using CellKey = std::tuple<Index, double, Index, std::string>;

inline std::map<CellKey, CellMean> cell_means(const std::vector<RunRecord>& records) {
    std::map<CellKey, CellMean> out;
    for (const auto& r : records) {
        if (!r.ok() || !r.metrics) {
            continue;
        }
        auto& cell = out[{r.p, r.rho, r.n, r.method}];
        cell.mean.kl += r.metrics->kl;
        cell.mean.pe += r.metrics->pe;
        cell.mean.ee_a += r.metrics->ee_a;
        cell.mean.ee_omega += r.metrics->ee_omega;
        ++cell.count;
    }
    for (auto& [key, cell] : out) {
        const double c = static_cast<double>(cell.count);
        cell.mean.kl /= c;
        cell.mean.pe /= c;
        cell.mean.ee_a /= c;
        cell.mean.ee_omega /= c;
    }
    return out;
}

/// Writes results.csv, failures.csv (when any replication failed) and one
/// SVG per metric per (p, rho): x = n, y = log10(mean metric), one line per
/// method. Returns the paths written.
inline std::vector<std::filesystem::path> emit_results(const std::vector<RunRecord>& records,
                                                       const std::filesystem::path& output_dir) {
    if (records.empty()) {
        throw std::invalid_argument("emit_results: no records");
    }
    std::filesystem::create_directories(output_dir);
    std::vector<std::filesystem::path> written;
    auto open = [&](const std::filesystem::path& path) {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        written.push_back(path);
        return f;
    };
    {
        auto f = open(output_dir / "results.csv");
        write_results_csv(f, records);
    }
    if (std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.ok(); })) {
        auto f = open(output_dir / "failures.csv");
        f << "p,rho,n,rep,method,error\n";
        for (const auto& r : records) {
            if (!r.ok()) {
                std::string msg = r.error;
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                f << r.p << ',' << detail::rho_str(r.rho) << ',' << r.n << ',' << r.rep << ',' << r.method << ','
                  << msg << '\n';
            }
        }
    }

    const auto means = cell_means(records);
    std::map<std::pair<Index, double>, std::map<std::string, std::vector<std::pair<Index, MetricsRecord>>>> panels;
    for (const auto& [key, cell] : means) {
        const auto& [p, rho, n, method] = key;
        panels[{p, rho}][method].emplace_back(n, cell.mean);
    }
    struct MetricDef {
        const char* name;
        const char* label;
        double MetricsRecord::*field;
    };
    static const MetricDef metric_defs[] = {{"kl", "KL loss", &MetricsRecord::kl},
                                            {"pe", "prediction error", &MetricsRecord::pe},
                                            {"ee_a", "estimation error of A", &MetricsRecord::ee_a},
                                            {"ee_omega", "estimation error of Omega", &MetricsRecord::ee_omega}};
    for (const auto& [panel, methods] : panels) {
        for (const auto& metric : metric_defs) {
            std::vector<PlotSeries> series;
            for (const auto& [method, points] : methods) {
                PlotSeries s{method, {}, {}};
                for (const auto& [n, mean] : points) {
                    s.x.push_back(static_cast<double>(n));
                    s.y.push_back(std::log10(mean.*metric.field));
                }
                series.push_back(std::move(s));
            }
            const std::string stem = std::string(metric.name) + "_p" + std::to_string(panel.first) + "_rho" +
                                     detail::rho_str(panel.second);
            auto f = open(output_dir / (stem + ".svg"));
            write_line_plot(f, std::string(metric.label) + " (p=" + std::to_string(panel.first) +
                                   ", rho=" + detail::rho_str(panel.second) + ")",
                            "n", std::string("log10 mean ") + metric.name, series);
        }
    }
    return written;
}

}  // namespace dagavg

#endif  // DAGAVG_SIMULATION_HPP
