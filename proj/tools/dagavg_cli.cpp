// Command-line front end: simulate, consistency, fit, version.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dagavg/dagavg.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

dagavg::LambdaRule parse_lambda(const std::string& text) {
    if (text == "log_n") {
        return dagavg::LogN{};
    }
    if (text == "mallows2") {
        return dagavg::Mallows2{};
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v >= 0.0)) {
        throw CLI::ValidationError("--lambda", "expected log_n, mallows2 or a number >= 0, got '" + text + "'");
    }
    return dagavg::FixedLambda{v};
}

dagavg::Initializer parse_init(const std::string& text) {
    if (text == "ordered_bic") {
        return dagavg::OrderedBic{};
    }
    return dagavg::GreedyBic{};
}

struct SweepOptions {
    std::vector<long> p{10};
    std::vector<double> rho{0.2};
    std::vector<long> n{50, 100, 200, 400, 800};
    long reps = 50;
    long candidates = 11;
    std::string lambda = "log_n";
    std::string init = "ordered_bic";
    std::uint64_t seed = 1;
    std::string out = "results";
    std::vector<std::string> baselines;
    unsigned threads = 0;
    bool timing = false;
    bool plant_true = true;
};

void add_sweep_options(CLI::App* cmd, SweepOptions& o) {
    cmd->add_option("--p", o.p, "Node counts (comma separated)")->delimiter(',')->capture_default_str();
    cmd->add_option("--rho", o.rho, "Edge probabilities (comma separated)")->delimiter(',')->capture_default_str();
    cmd->add_option("--n", o.n, "Sample sizes (comma separated)")->delimiter(',')->capture_default_str();
    cmd->add_option("--reps", o.reps, "Replications per cell")->capture_default_str();
    cmd->add_option("--candidates", o.candidates, "Number of nested candidates M")->capture_default_str();
    cmd->add_option("--lambda", o.lambda, "Penalty rule: log_n, mallows2 or a number")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Base seed")->capture_default_str();
    cmd->add_option("--init", o.init, "Initializer: greedy_bic or ordered_bic")
        ->check(CLI::IsMember({"greedy_bic", "ordered_bic"}))
        ->capture_default_str();
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--baselines", o.baselines,
                    "Comma separated subset of largest_candidate, initial_graph, oracle_true_graph, best_candidate, "
                    "or none")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    cmd->add_flag("--timing", o.timing, "Fill the seconds column (makes output run-dependent)");
}

dagavg::ExperimentConfig to_experiment(const SweepOptions& o) {
    dagavg::ExperimentConfig cfg;
    cfg.p_list.assign(o.p.begin(), o.p.end());
    cfg.rho_list = o.rho;
    cfg.n_list.assign(o.n.begin(), o.n.end());
    cfg.reps = o.reps;
    cfg.m_candidates = o.candidates;
    cfg.lambda_rule = parse_lambda(o.lambda);
    cfg.base_seed = o.seed;
    cfg.initializer = parse_init(o.init);
    for (const auto& b : o.baselines) {
        if (b == "none") {
            continue;
        }
        auto parsed = dagavg::parse_baseline(b);
        if (!parsed) {
            throw CLI::ValidationError("--baselines", "unknown baseline '" + b + "'");
        }
        cfg.baselines.push_back(*parsed);
    }
    cfg.threads = o.threads;
    cfg.record_timing = o.timing;
    cfg.output_dir = o.out;
    cfg.validate();
    return cfg;
}

void print_summary(const std::vector<dagavg::RunRecord>& records) {
    const auto means = dagavg::cell_means(records);
    std::printf("%5s %6s %6s %-20s %5s %12s %12s %12s %12s\n", "p", "rho", "n", "method", "reps", "KL", "PE", "EE(A)",
                "EE(Omega)");
    for (const auto& [key, cell] : means) {
        const auto& [p, rho, n, method] = key;
        std::printf("%5ld %6g %6ld %-20s %5zu %12.5g %12.5g %12.5g %12.5g\n", static_cast<long>(p), rho,
                    static_cast<long>(n), method.c_str(), cell.count, cell.mean.kl, cell.mean.pe, cell.mean.ee_a,
                    cell.mean.ee_omega);
    }
    std::size_t failures = 0;
    for (const auto& r : records) {
        failures += r.ok() ? 0 : 1;
    }
    if (failures > 0) {
        std::printf("%zu record(s) failed; see failures.csv\n", failures);
    }
}

int run_sweep(const SweepOptions& o, bool consistency) {
    auto cfg = to_experiment(o);
    const auto records = consistency && o.plant_true ? dagavg::run_weight_consistency(cfg) : dagavg::run_simulation(cfg);
    dagavg::emit_results(records, cfg.output_dir);
    print_summary(records);
    if (consistency) {
        std::map<std::pair<long, std::pair<double, long>>, std::tuple<double, double, double, std::size_t>> acc;
        for (const auto& r : records) {
            if (r.ok() && r.weights) {
                auto& a = acc[{static_cast<long>(r.p), {r.rho, static_cast<long>(r.n)}}];
                std::get<0>(a) += r.weights->underfit;
                std::get<1>(a) += r.weights->smallest_correct;
                std::get<2>(a) += r.weights->overfit;
                ++std::get<3>(a);
            }
        }
        std::printf("\n%5s %6s %6s %12s %18s %12s\n", "p", "rho", "n", "|w_U|_1", "w_smallest_correct", "|w_O|_1");
        for (const auto& [key, a] : acc) {
            const double c = static_cast<double>(std::get<3>(a));
            std::printf("%5ld %6g %6ld %12.5g %18.5g %12.5g\n", key.first, key.second.first, key.second.second,
                        std::get<0>(a) / c, std::get<1>(a) / c, std::get<2>(a) / c);
        }
    }
    std::printf("wrote %s\n", (cfg.output_dir / "results.csv").string().c_str());
    return 0;
}

struct FitOptions {
    std::string data;
    long candidates = 11;
    std::string lambda = "log_n";
    std::uint64_t seed = 1;
    std::string out_dot;
    std::string out_weights;
    bool standardize = false;
    long max_parents = -1;
};

int run_fit(const FitOptions& o) {
    auto labeled = dagavg::load_csv(o.data);
    dagavg::DataMatrix x = o.standardize ? dagavg::standardize(labeled.data) : labeled.data;

    dagavg::SearchConfig search;
    search.m_candidates = o.candidates;
    search.split_seed = o.seed;
    if (o.max_parents >= 0) {
        search.max_parents = o.max_parents;
    }
    dagavg::AveragingConfig avg_cfg;
    avg_cfg.lambda_rule = parse_lambda(o.lambda);

    const auto build = dagavg::build_candidate_models(x, search);
    const auto avg = dagavg::average_models(x, build.candidates, build.fits.back(), avg_cfg);
    const auto k = build.candidates.edge_counts();

    std::printf("data: n=%ld p=%ld%s\n", static_cast<long>(x.n()), static_cast<long>(x.p()),
                o.standardize ? " (standardized)" : "");
    std::printf("lambda rule: %s, lambda = %.6g\n", dagavg::to_string(avg_cfg.lambda_rule).c_str(), avg.lambda);
    std::printf("sigma2_hat = %.6g\n", avg.sigma2_hat);
    std::printf("criterion C_n(w) = %.10g, penalized -2 loglik = %.10g\n", avg.weights.objective,
                dagavg::penalized_criterion(x.n(), x.p(), avg.sigma2_hat, avg.weights.objective));
    std::printf("%6s %6s %12s\n", "model", "k", "weight");
    for (dagavg::Index m = 0; m < k.size(); ++m) {
        std::printf("%6ld %6.0f %12.6f%s\n", static_cast<long>(m + 1), k[m], avg.weights.w[m],
                    static_cast<std::size_t>(m) == build.initial_index ? "  (initial)" : "");
    }
    const auto deg = dagavg::degree_summary(avg.a_hat);
    std::printf("edges: %zu, average degree: %.4g\n", deg.num_edges, deg.average_degree);
    std::printf("%-12s %6s %6s\n", "node", "in", "out");
    for (std::size_t j = 0; j < labeled.names.size(); ++j) {
        std::printf("%-12s %6ld %6ld\n", labeled.names[j].c_str(), static_cast<long>(deg.in_degree[j]),
                    static_cast<long>(deg.out_degree[j]));
    }
    if (!o.out_dot.empty()) {
        dagavg::export_dot(avg.a_hat, labeled.names, o.out_dot);
        std::printf("wrote %s\n", o.out_dot.c_str());
    }
    if (!o.out_weights.empty()) {
        std::ofstream f(o.out_weights, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot write " + o.out_weights);
        }
        dagavg::write_weights_csv(f, k, avg.weights.w.values());
        std::printf("wrote %s\n", o.out_weights.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model averaging for Gaussian DAG estimation"};
    app.require_subcommand(1);

    SweepOptions sim_opts;
    sim_opts.baselines = {"largest_candidate", "initial_graph", "oracle_true_graph"};
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo benchmark over a (p, rho, n) grid");
    add_sweep_options(simulate, sim_opts);

    SweepOptions cons_opts;
    cons_opts.n = {100, 200, 400, 800, 1600};
    auto* consistency = app.add_subcommand("consistency", "Weight-consistency experiment with the truth planted");
    add_sweep_options(consistency, cons_opts);
    consistency->add_flag("--plant-true,!--no-plant-true", cons_opts.plant_true,
                          "Use the true graph as the initial candidate (default on)");

    FitOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "Estimate a model-averaged DAG from a CSV file");
    fit->add_option("--data", fit_opts.data, "Input CSV (header row of node names)")->required();
    fit->add_option("--candidates", fit_opts.candidates, "Number of nested candidates M")->capture_default_str();
    fit->add_option("--lambda", fit_opts.lambda, "Penalty rule: log_n, mallows2 or a number")->capture_default_str();
    fit->add_option("--seed", fit_opts.seed, "Seed of the train/validation split")->capture_default_str();
    fit->add_option("--out-dot", fit_opts.out_dot, "Write the averaged graph as DOT");
    fit->add_option("--out-weights", fit_opts.out_weights, "Write weights.csv");
    fit->add_option("--max-parents", fit_opts.max_parents, "Cap on parents per node during the search");
    fit->add_flag("--standardize", fit_opts.standardize, "Scale every column to mean 0, variance 1");

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*version) {
            std::printf("dagavg %s\n", DAGAVG_VERSION);
            return 0;
        }
        if (*simulate) {
            return run_sweep(sim_opts, false);
        }
        if (*consistency) {
            return run_sweep(cons_opts, true);
        }
        if (*fit) {
            return run_fit(fit_opts);
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const dagavg::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const dagavg::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
