#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparsefa/io.hpp"

namespace fs = std::filesystem;
using namespace sparsefa;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sparsefa_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(SPARSEFA_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes", "[cli]") {
    TempDir tmp;

    SECTION("usage error without arguments") { CHECK(run("") == 1); }

    SECTION("missing input file exits 2 and writes nothing") {
        const fs::path out = tmp.path / "out";
        CHECK(run("fit --data " + (tmp.path / "missing.csv").string() +
                  " --factors 2 --out " + out.string()) == 2);
        CHECK_FALSE(fs::exists(out / "path.json"));
        CHECK_FALSE(fs::exists(out / "selected.json"));
    }

    SECTION("malformed data exits 2") {
        std::ofstream(tmp.path / "bad.csv") << "1, 2\n3, oops\n";
        CHECK(run("fit --data " + (tmp.path / "bad.csv").string() + " --factors 1") == 2);
    }
}

TEST_CASE("cli fit writes the artifact set", "[cli]") {
    TempDir tmp;
    // Model (A) raw data: write a generated dataset as a raw table
    TrueModel a = TrueModel::model_a();
    SampleMoments sm = generate_dataset(a, 150, 21);
    {
        std::ofstream out(tmp.path / "cov.txt");
        out.precision(17);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) out << sm.S(i, j) << (j + 1 < 6 ? ' ' : '\n');
        }
    }
    const fs::path out = tmp.path / "out";
    const int rc = run("fit --data " + (tmp.path / "cov.txt").string() +
                       " --kind cov --n-obs 150 --factors 2 --penalty mcp --gamma-grid 2.1" +
                       " --rho-count 8 --criterion bic --out " + out.string());
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "path.json"));
    CHECK(fs::exists(out / "path.csv"));
    CHECK(fs::exists(out / "selected.json"));
    CHECK(fs::exists(out / "trace.csv"));

    SECTION("repeated runs are byte-identical") {
        const fs::path out2 = tmp.path / "out2";
        REQUIRE(run("fit --data " + (tmp.path / "cov.txt").string() +
                    " --kind cov --n-obs 150 --factors 2 --penalty mcp --gamma-grid 2.1" +
                    " --rho-count 8 --criterion bic --out " + out2.string()) == 0);
        for (const char* name : {"path.json", "selected.json"}) {
            std::ifstream f1(out / name), f2(out2 / name);
            std::stringstream s1, s2;
            s1 << f1.rdbuf();
            s2 << f2.rdbuf();
            CHECK(s1.str() == s2.str());
        }
    }
}

TEST_CASE("cli simulate runs a one-cell study", "[cli]") {
    TempDir tmp;
    std::ofstream(tmp.path / "study.json") << R"({
      "models": ["A"], "sample_sizes": [60], "replications": 2, "seed": 3, "rho_count": 6,
      "estimators": [{"model": "oblique", "method": "mcp", "gamma": 2.1, "criterion": "bic"}]})";
    const fs::path out = tmp.path / "simout";
    REQUIRE(run("simulate --config " + (tmp.path / "study.json").string() + " --out " +
                out.string()) == 0);
    std::ifstream rep(out / "report.csv");
    REQUIRE(rep.good());
    std::string header, data;
    std::getline(rep, header);
    std::getline(rep, data);
    CHECK(data.find("A,60,obl-mcp-bic,") == 0);

    SECTION("unknown estimator exits 2") {
        std::ofstream(tmp.path / "bad.json") << R"({
          "models": ["A"], "sample_sizes": [60],
          "estimators": [{"model": "oblique", "method": "nope"}]})";
        CHECK(run("simulate --config " + (tmp.path / "bad.json").string()) == 2);
    }
}

TEST_CASE("cli fits the bundled psychological-tests fixture", "[cli]") {
    TempDir tmp;
    const fs::path fixture = fs::path(SPARSEFA_DATA_DIR) / "harman74.cor";
    REQUIRE(fs::exists(fixture));
    const fs::path out = tmp.path / "harman";
    const int rc = run("fit --data " + fixture.string() +
                       " --kind cor --n-obs 145 --factors 4 --penalty mcp --gamma-grid 2.1" +
                       " --rho-count 20 --criterion bic --em-tol 1e-7 --max-em-iter 3000 --out " +
                       out.string());
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(out / "selected.json"));
    // sparse first column per the oblique analysis of this dataset
    FactorSolution sol = read_selected_json(out / "selected.json");
    Eigen::MatrixXd L = sol.Lambda;
    Eigen::MatrixXd phi = sol.Phi;
    canonicalize_columns(L, &phi);
    int zeros = 0;
    for (int i = 0; i < L.rows(); ++i)
        if (L(i, 0) == 0.0) ++zeros;
    CHECK(zeros >= 4);
}
