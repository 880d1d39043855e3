#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dagavg/dagavg.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dagavg_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + DAGAVG_CLI_PATH + "\" " + args + " > \"" +
                            (kWork / "stdout.txt").string() + "\" 2> \"" + (kWork / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
    ~Workspace() { fs::remove_all(kWork); }
};

const std::string kSmallSweep = "--p 5 --rho 0.3 --n 40,80 --reps 2 --candidates 5";

}  // namespace

TEST_CASE("version succeeds") {
    Workspace ws;
    CHECK(run("version") == 0);
    CHECK(slurp(kWork / "stdout.txt").rfind("dagavg ", 0) == 0);
}

TEST_CASE("usage errors exit with 1") {
    Workspace ws;
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("simulate --no-such-flag") == 1);
    CHECK(run("simulate --lambda banana") == 1);
    CHECK(run("simulate --rho 1.5") == 1);
    CHECK(run("simulate --init magic") == 1);
    CHECK(run("fit") == 1);
}

TEST_CASE("data errors exit with 2") {
    Workspace ws;
    CHECK(run("fit --data \"" + (kWork / "absent.csv").string() + "\"") == 2);
    write_file(kWork / "bad.csv", "a,b,c\n1,2,3\n4,x,6\n");
    CHECK(run("fit --data \"" + (kWork / "bad.csv").string() + "\"") == 2);
    write_file(kWork / "dup.csv", "a,a\n1,2\n3,4\n");
    CHECK(run("fit --data \"" + (kWork / "dup.csv").string() + "\"") == 2);
    write_file(kWork / "const.csv", "a,b\n1,2\n1,3\n1,5\n");
    CHECK(run("fit --standardize --data \"" + (kWork / "const.csv").string() + "\"") == 2);
}

TEST_CASE("numerical failures exit with 3") {
    Workspace ws;
    // Two nodes admit one edge, so eleven nested candidates cannot exist.
    std::string csv = "a,b\n";
    dagavg::Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        const double u = rng.normal();
        csv += std::to_string(u) + "," + std::to_string(u + rng.normal()) + "\n";
    }
    write_file(kWork / "two.csv", csv);
    CHECK(run("fit --candidates 11 --data \"" + (kWork / "two.csv").string() + "\"") == 3);
    CHECK(run("fit --candidates 1 --data \"" + (kWork / "two.csv").string() + "\"") == 0);
}

TEST_CASE("simulate writes results and plots deterministically") {
    Workspace ws;
    REQUIRE(run("simulate " + kSmallSweep + " --out \"" + (kWork / "a").string() + "\"") == 0);
    REQUIRE(run("simulate " + kSmallSweep + " --threads 2 --out \"" + (kWork / "b").string() + "\"") == 0);
    const auto a = slurp(kWork / "a" / "results.csv");
    CHECK(a == slurp(kWork / "b" / "results.csv"));
    CHECK(a.rfind("p,rho,n,rep,method,kl,pe,ee_a,ee_omega,w_underfit,w_smallest_correct,w_overfit,seconds\n", 0) == 0);
    for (const char* metric : {"kl", "pe", "ee_a", "ee_omega"}) {
        CHECK(fs::exists(kWork / "a" / (std::string(metric) + "_p5_rho0.3.svg")));
    }
    REQUIRE(run("simulate " + kSmallSweep + " --seed 2 --out \"" + (kWork / "c").string() + "\"") == 0);
    CHECK(a != slurp(kWork / "c" / "results.csv"));
}

TEST_CASE("consistency writes only averaging rows by default") {
    Workspace ws;
    REQUIRE(run("consistency --p 5 --rho 0.3 --n 60 --reps 3 --candidates 3 --out \"" + (kWork / "c").string() +
                "\"") == 0);
    std::istringstream in(slurp(kWork / "c" / "results.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.find(",dag_ma,") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("fit on the bundled panel writes DOT and weights") {
    Workspace ws;
    const auto dot = kWork / "g.dot";
    const auto weights = kWork / "w.csv";
    REQUIRE(run(std::string("fit --standardize --data \"") + DAGAVG_DATA_DIR + "/lbs_like.csv\" --out-dot \"" +
                dot.string() + "\" --out-weights \"" + weights.string() + "\"") == 0);
    const auto dot_text = slurp(dot);
    CHECK(dot_text.rfind("digraph", 0) == 0);
    CHECK(dot_text.find("\"US\"") != std::string::npos);
    std::istringstream w(slurp(weights));
    std::string line;
    std::getline(w, line);
    CHECK(line == "model_index,k,weight");
    double total = 0.0;
    int rows = 0;
    while (std::getline(w, line)) {
        total += std::stod(line.substr(line.rfind(',') + 1));
        ++rows;
    }
    CHECK(rows == 11);
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}
