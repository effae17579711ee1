#include "csv.hpp"
#include "estimators.hpp"
#include "kernels.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using steingrad_cli::read_csv;
using steingrad_cli::read_file;
using steingrad_cli::write_file;

namespace {

const std::string kCli = STEINGRAD_CLI_PATH;
const std::string kFixture = std::string(STEINGRAD_FIXTURE_DIR) + "/gaussian_seed7_k200_d2.csv";

class Scratch {
public:
    Scratch()
        : dir_(fs::temp_directory_path() /
               ("steingrad_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++)))
    {
        fs::create_directories(dir_);
    }
    ~Scratch() { fs::remove_all(dir_); }
    Scratch(const Scratch&) = delete;
    Scratch& operator=(const Scratch&) = delete;

    [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    static inline int counter_ = 0;
    fs::path dir_;
};

// Runs the CLI with the given arguments, discarding its stderr, and returns
// the exit status.
int run(const std::string& args, const std::string& stdout_path = "/dev/null")
{
    const std::string cmd = "'" + kCli + "' " + args + " > '" + stdout_path + "' 2>/dev/null";
    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    return WEXITSTATUS(raw);
}

steingrad::Matrix to_matrix(const steingrad_cli::Table& t)
{
    steingrad::Matrix m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    for (std::size_t i = 0; i < t.rows; ++i) {
        for (std::size_t j = 0; j < t.cols; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.data[i * t.cols + j];
        }
    }
    return m;
}

}  // namespace

TEST_CASE("help and usage errors")
{
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("estimate --input /nonexistent.csv --output /dev/null") == 2);
    CHECK(run("banana --n-iters 2") == 2);
    CHECK(run("entropy-check") == 2);
}

TEST_CASE("estimate on the fixture matches the library exactly")
{
    Scratch tmp;
    REQUIRE(run("estimate --input '" + kFixture + "' --output '" + tmp.path("g.csv") + "'") == 0);
    const steingrad::Matrix g = to_matrix(read_csv(tmp.path("g.csv"), "g"));

    const steingrad::SampleSet s(to_matrix(read_csv(kFixture, "x")));
    const steingrad::KernelSpec spec = steingrad::KernelSpec::rbf(steingrad::median_heuristic(s));
    const steingrad::Matrix expected =
        steingrad::stein_nonparametric_fit(s, spec, 0.1, steingrad::Statistic::V).grads;
    CHECK(g.rows() == 200);
    CHECK((g - expected).cwiseAbs().maxCoeff() == 0.0);

    const json sidecar = json::parse(read_file(tmp.path("g.csv.json")));
    CHECK(sidecar.at("kind") == "stein_nonparam_v");
    CHECK(sidecar.at("eta") == 0.1);
    CHECK(sidecar.at("kernel").at("sigma2").get<double>() == spec.sigma2());
    CHECK(sidecar.at("bandwidth").at("source") == "median_heuristic");
    CHECK(sidecar.at("fit_diagnostics").at("jitter_level") == 0);
}

TEST_CASE("estimate then predict reproduces the gradients")
{
    Scratch tmp;
    for (const std::string kind : {"stein_nonparam_v", "stein_param_v", "score_match_rbf", "kde"}) {
        CAPTURE(kind);
        const std::string out = tmp.path(kind + ".csv");
        REQUIRE(run("estimate --estimator " + kind + " --input '" + kFixture + "' --output '" + out + "'") == 0);
        const steingrad::Matrix g = to_matrix(read_csv(out, "g"));

        // Stored training gradients.
        const std::string again = tmp.path(kind + "_again.csv");
        REQUIRE(run("predict --model '" + out + ".json' --output '" + again + "'") == 0);
        CHECK((to_matrix(read_csv(again, "g")) - g).cwiseAbs().maxCoeff() <= 1e-12);

        // Re-evaluation at the training points for the kinds whose
        // out-of-sample form reduces to the fitted values there.
        if (kind != "stein_nonparam_v") {
            const std::string at = tmp.path(kind + "_at.csv");
            REQUIRE(run("predict --model '" + out + ".json' --input '" + kFixture + "' --output '" + at + "'") == 0);
            CHECK((to_matrix(read_csv(at, "g")) - g).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("estimate edge cases and exit codes")
{
    Scratch tmp;
    write_file(tmp.path("one.csv"), "x0,x1\n0.5,-2\n");
    REQUIRE(run("estimate --input '" + tmp.path("one.csv") + "' --output '" + tmp.path("one_g.csv") + "'") == 0);
    const steingrad_cli::Table one = read_csv(tmp.path("one_g.csv"), "g");
    CHECK(one.rows == 1);
    CHECK(one.data[0] == 0.0);
    CHECK(one.data[1] == 0.0);

    write_file(tmp.path("bad.csv"), "x0,x1\n1,2\n3,oops\n");
    CHECK(run("estimate --input '" + tmp.path("bad.csv") + "' --output '" + tmp.path("o.csv") + "'") == 2);
    write_file(tmp.path("header.csv"), "a,b\n1,2\n");
    CHECK(run("estimate --input '" + tmp.path("header.csv") + "' --output '" + tmp.path("o.csv") + "'") == 2);

    write_file(tmp.path("pair.csv"), "x0,x1\n0,0\n2,0\n");
    CHECK(run("estimate --estimator kde --kernel epanechnikov --input '" + tmp.path("pair.csv") + "' --output '" +
              tmp.path("o.csv") + "'") == 3);

    write_file(tmp.path("same.csv"), "x0\n1\n1\n1\n");
    CHECK(run("estimate --input '" + tmp.path("same.csv") + "' --output '" + tmp.path("o.csv") + "'") == 3);

    CHECK(run("estimate --estimator stein_nonparam_u --eta 0 --input '" + kFixture + "' --output '" +
              tmp.path("o.csv") + "'") == 2);
    CHECK(run("estimate --estimator nope --input '" + kFixture + "' --output '" + tmp.path("o.csv") + "'") == 2);
}

TEST_CASE("config files and flag precedence")
{
    Scratch tmp;
    write_file(tmp.path("cfg.json"), json{{"input", kFixture}, {"output", tmp.path("c.csv")}, {"eta", 5.0}}.dump());
    REQUIRE(run("estimate --config '" + tmp.path("cfg.json") + "' --eta 0.25") == 0);
    CHECK(json::parse(read_file(tmp.path("c.csv.json"))).at("eta") == 0.25);
    REQUIRE(run("estimate --config '" + tmp.path("cfg.json") + "'") == 0);
    CHECK(json::parse(read_file(tmp.path("c.csv.json"))).at("eta") == 5.0);

    write_file(tmp.path("typo.json"), json{{"input", kFixture}, {"outptu", "x"}}.dump());
    CHECK(run("estimate --config '" + tmp.path("typo.json") + "'") == 2);
    write_file(tmp.path("broken.json"), "{");
    CHECK(run("estimate --config '" + tmp.path("broken.json") + "'") == 2);
}

TEST_CASE("ksd command")
{
    Scratch tmp;
    write_file(tmp.path("s.csv"), "x0,x1\n0,0\n1,0.5\n-0.3,2\n");
    write_file(tmp.path("z.csv"), "g0,g1\n0,0\n0,0\n0,0\n");
    write_file(tmp.path("g.csv"), "g0,g1\n0,0\n-1,-0.5\n0.3,-2\n");

    REQUIRE(run("ksd --samples '" + tmp.path("s.csv") + "' --grads '" + tmp.path("z.csv") +
                "' --includes-constant false --output '" + tmp.path("r.json") + "'") == 0);
    const json zero = json::parse(read_file(tmp.path("r.json")));
    CHECK(zero.at("value") == 0.0);
    CHECK(zero.at("K") == 3);
    CHECK(zero.at("d") == 2);
    CHECK(zero.at("statistic") == "V");
    CHECK(zero.at("includes_constant") == false);

    REQUIRE(run("ksd --samples '" + tmp.path("s.csv") + "' --grads '" + tmp.path("g.csv") + "' --sigma2 1.5",
                tmp.path("r2.json")) == 0);
    const json full = json::parse(read_file(tmp.path("r2.json")));
    CHECK(full.at("value").get<double>() >= -1e-10);
    CHECK(full.at("sigma2") == 1.5);
    CHECK(full.at("kernel") == "rbf");

    CHECK(run("ksd --samples '" + tmp.path("s.csv") + "' --grads '" + tmp.path("bad.csv") + "'") == 2);
    write_file(tmp.path("short.csv"), "g0,g1\n0,0\n");
    CHECK(run("ksd --samples '" + tmp.path("s.csv") + "' --grads '" + tmp.path("short.csv") + "'") == 2);
}

TEST_CASE("banana command")
{
    Scratch tmp;
    REQUIRE(run("banana --seed 5 --n-iters 1 --n-chains 4 --estimator stein_nonparam_v --trajectories '" +
                    tmp.path("t.csv") + "' --output '" + tmp.path("b.json") + "'") == 0);
    const json report = json::parse(read_file(tmp.path("b.json")));
    CHECK(report.at("config").at("hmc").at("n_chains") == 4);
    CHECK(report.at("config").at("estimator") == "stein_nonparam_v");
    CHECK(report.at("stats").contains("ksd_pooled"));
    CHECK(report.at("stats").contains("ksd_mean_per_chain"));
    CHECK(report.at("estimator_sigma2").is_number());

    std::ifstream in(tmp.path("t.csv"));
    std::string line;
    int lines = 0;
    std::getline(in, line);
    CHECK(line == "chain,iter,accepted,x0,x1");
    while (std::getline(in, line)) {
        ++lines;
    }
    CHECK(lines == 4);

    // Identical inputs give byte-identical reports, whatever the thread count.
    REQUIRE(run("banana --seed 5 --n-iters 30 --n-chains 4 --threads 1", tmp.path("a1.json")) == 0);
    REQUIRE(run("banana --seed 5 --n-iters 30 --n-chains 4 --threads 3", tmp.path("a2.json")) == 0);
    CHECK(read_file(tmp.path("a1.json")) == read_file(tmp.path("a2.json")));
    CHECK(json::parse(read_file(tmp.path("a1.json"))).at("fit_diagnostics").is_null());

    CHECK(run("banana --seed 5 --estimator stein_nonparam_u --n-iters 2") == 2);
    CHECK(run("banana --seed 5 --preset giant") == 2);
    CHECK(run("banana --seed 5 --stepsize -1") == 2);
}

TEST_CASE("entropy-check command")
{
    Scratch tmp;
    REQUIRE(run("entropy-check --seed 7 --sigma 1 --n-samples 200", tmp.path("e.json")) == 0);
    const json report = json::parse(read_file(tmp.path("e.json")));
    CHECK(report.at("analytic") == 1.0);
    CHECK(report.at("estimators").size() == 2);
    CHECK(report.at("estimators")[0].at("kind") == "stein_nonparam_v");

    REQUIRE(run("entropy-check --seed 7 --sigma 1 --n-samples 200", tmp.path("e2.json")) == 0);
    CHECK(read_file(tmp.path("e.json")) == read_file(tmp.path("e2.json")));
    CHECK(run("entropy-check --seed 7 --sigma 0") == 2);
    CHECK(run("entropy-check --seed 7 --estimators kde,bogus") == 2);
}
