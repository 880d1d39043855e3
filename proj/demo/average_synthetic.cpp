// Draws one synthetic SEM data set, builds nested candidates around a greedy
// BIC graph and prints the averaging weights next to the truth.

#include <cstdio>

#include "dagavg/dagavg.hpp"

int main() {
    dagavg::SynthConfig synth{10, 0.2, 0.5, 1.0, 2024};
    const auto a0 = dagavg::generate_true_dag(synth);
    const auto x = dagavg::sample_data(a0, synth.sigma, 400, 7);

    dagavg::SearchConfig search;
    search.split_seed = 11;
    const auto build = dagavg::build_candidate_models(x, search);
    const auto avg = dagavg::average_models(x, build.candidates, build.fits.back(), dagavg::AveragingConfig{});
    const auto tax = dagavg::classify_candidates(build.candidates, a0);

    std::printf("true edges: %zu, lambda = %.4f, sigma2_hat = %.4f\n", dagavg::support_dag(a0).num_edges(),
                avg.lambda, avg.sigma2_hat);
    for (std::size_t m = 0; m < build.candidates.size(); ++m) {
        const char* cls = "underfit";
        if (tax.smallest_correct && m == *tax.smallest_correct) {
            cls = "smallest correct";
        } else if (tax.smallest_correct && m > *tax.smallest_correct) {
            cls = "overfit";
        }
        std::printf("model %2zu  k=%2zu  w=%.4f  %s\n", m + 1, build.candidates[m].edges.num_edges(),
                    avg.weights.w[static_cast<dagavg::Index>(m)], cls);
    }
    const auto omega0 = dagavg::true_precision(a0, synth.sigma);
    const auto omega_hat = dagavg::estimated_precision(avg.a_hat, avg.sigma2_hat);
    std::printf("KL = %.5f, EE(A) = %.5f\n", dagavg::kl_loss(omega_hat, omega0),
                dagavg::estimation_errors(a0, avg.a_hat, omega0, omega_hat).first);
    return 0;
}
