// Writes a synthetic 26-country panel shaped like quarterly cross-border
// banking growth rates: 99 rows, a sparse signed DAG, per-column scales.
#include <cstdio>
#include <string>
#include <vector>

#include "dagavg/dagavg.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> names = {"AT", "BS", "BH", "BE", "CA", "KY", "DK", "FI", "FR",
                                            "DE", "HK", "IE", "IN", "IT", "JP", "LU", "NL", "NO",
                                            "SG", "ES", "SE", "CH", "GB", "US", "CN", "KR"};
    const char* path = argc > 1 ? argv[1] : "lbs_like.csv";
    const auto p = static_cast<dagavg::Index>(names.size());
    constexpr dagavg::Index n = 99;

    dagavg::Rng rng(20240331);
    dagavg::Matrix a = dagavg::Matrix::Zero(p, p);
    for (dagavg::Index j = 0; j < p; ++j) {
        for (dagavg::Index k = j + 1; k < p; ++k) {
            if (rng.bernoulli(0.12)) {
                a(k, j) = (rng.bernoulli(0.7) ? 1.0 : -1.0) * (0.3 + 0.5 * rng.uniform());
            }
        }
    }
    const auto x = dagavg::sample_data(dagavg::CoefMatrix(a), 1.0, n, 7);
    std::vector<double> scale(static_cast<std::size_t>(p));
    for (auto& s : scale) {
        s = 1.0 + 5.0 * rng.uniform();
    }

    std::FILE* f = std::fopen(path, "wb");
    if (!f) {
        std::perror(path);
        return 2;
    }
    for (dagavg::Index j = 0; j < p; ++j) {
        std::fprintf(f, "%s%s", j ? "," : "", names[static_cast<std::size_t>(j)].c_str());
    }
    std::fputc('\n', f);
    for (dagavg::Index i = 0; i < n; ++i) {
        for (dagavg::Index j = 0; j < p; ++j) {
            std::fprintf(f, "%s%.4f", j ? "," : "", x.values()(i, j) * scale[static_cast<std::size_t>(j)]);
        }
        std::fputc('\n', f);
    }
    std::fclose(f);
    return 0;
}
