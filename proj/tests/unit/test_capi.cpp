#include <steingrad/steingrad.h>

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

namespace {

std::vector<double> normal_rows(std::uint64_t seed, std::size_t k, std::size_t d)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> out(k * d);
    for (double& v : out) {
        v = normal(rng);
    }
    return out;
}

sg_kernel rbf(double sigma2)
{
    return sg_kernel{SG_KERNEL_RBF, sigma2};
}

}  // namespace

TEST_CASE("status helpers and names")
{
    CHECK(std::string(sg_version()).size() > 0);
    CHECK(sg_status_is_numerical(SG_ERR_SINGULAR_SYSTEM));
    CHECK_FALSE(sg_status_is_numerical(SG_ERR_PARSE));
    CHECK_FALSE(sg_status_is_numerical(SG_ERR_INTERNAL));
    CHECK(std::string(sg_status_name(SG_OK)) == "ok");

    for (int k = 0; k <= 6; ++k) {
        const auto kind = static_cast<sg_estimator_kind>(k);
        sg_estimator_kind back{};
        REQUIRE(sg_estimator_kind_from_name(sg_estimator_kind_name(kind), &back) == SG_OK);
        CHECK(back == kind);
    }
    sg_estimator_kind kind{};
    CHECK(sg_estimator_kind_from_name("nope", &kind) == SG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(sg_last_error_message()).find("nope") != std::string::npos);
    CHECK(sg_estimator_kind_from_name(nullptr, &kind) == SG_ERR_INVALID_ARGUMENT);

    sg_kernel_family family{};
    CHECK(sg_kernel_family_from_name("epanechnikov", &family) == SG_OK);
    CHECK(family == SG_KERNEL_EPANECHNIKOV);
    sg_statistic st{};
    CHECK(sg_statistic_from_name("U", &st) == SG_OK);
    CHECK(st == SG_STATISTIC_U);
    CHECK(std::string(sg_statistic_name(SG_STATISTIC_V)) == "V");
    sg_preset preset{};
    CHECK(sg_preset_from_name("paper", &preset) == SG_OK);
    CHECK(preset == SG_PRESET_PAPER);
}

TEST_CASE("median heuristic through the C API")
{
    const double pts[] = {0.0, 2.0};
    double sigma2 = 0.0;
    REQUIRE(sg_median_heuristic(pts, 2, 1, &sigma2) == SG_OK);
    CHECK(sigma2 == 4.0);
    const double same[] = {1.0, 1.0, 1.0};
    CHECK(sg_median_heuristic(same, 3, 1, &sigma2) == SG_ERR_DEGENERATE_BANDWIDTH);
    CHECK(sg_median_heuristic(nullptr, 3, 1, &sigma2) == SG_ERR_INVALID_ARGUMENT);
}

TEST_CASE("fit, query, serialise and free an estimator")
{
    const std::size_t k = 20;
    const std::size_t d = 2;
    const std::vector<double> x = normal_rows(1, k, d);
    double sigma2 = 0.0;
    REQUIRE(sg_median_heuristic(x.data(), k, d, &sigma2) == SG_OK);

    sg_estimator* est = nullptr;
    REQUIRE(sg_estimator_fit(SG_ESTIMATOR_STEIN_NONPARAM_V, x.data(), k, d, rbf(sigma2), 0.1, 1, &est) == SG_OK);
    REQUIRE(est != nullptr);

    sg_estimator_info info{};
    REQUIRE(sg_estimator_get_info(est, &info) == SG_OK);
    CHECK(info.kind == SG_ESTIMATOR_STEIN_NONPARAM_V);
    CHECK(info.k == k);
    CHECK(info.d == d);
    CHECK(info.kernel.sigma2 == sigma2);
    CHECK(info.can_predict == 1);

    std::vector<double> g(k * d);
    REQUIRE(sg_estimator_gradients(est, g.data()) == SG_OK);
    std::vector<double> far{1e3, 1e3};
    std::vector<double> pred(2);
    REQUIRE(sg_estimator_predict(est, far.data(), 1, d, pred.data()) == SG_OK);
    CHECK(std::abs(pred[0]) <= 1e-12);
    CHECK(sg_estimator_predict(est, far.data(), 1, 3, pred.data()) == SG_ERR_INVALID_ARGUMENT);

    char* json = nullptr;
    REQUIRE(sg_estimator_to_json(est, &json) == SG_OK);
    sg_estimator* loaded = nullptr;
    REQUIRE(sg_estimator_from_json(json, &loaded) == SG_OK);
    std::vector<double> g2(k * d);
    REQUIRE(sg_estimator_gradients(loaded, g2.data()) == SG_OK);
    CHECK(g == g2);
    sg_string_free(json);
    sg_estimator_free(loaded);
    sg_estimator_free(est);
    sg_estimator_free(nullptr);

    CHECK(sg_estimator_from_json("{", &loaded) == SG_ERR_PARSE);
}

TEST_CASE("estimator errors map to status codes")
{
    const std::vector<double> x = normal_rows(2, 6, 2);
    sg_estimator* est = nullptr;
    CHECK(sg_estimator_fit(SG_ESTIMATOR_STEIN_NONPARAM_U, x.data(), 6, 2, rbf(1.0), 0.0, 0, &est) ==
          SG_ERR_INVALID_ARGUMENT);
    CHECK(est == nullptr);
    CHECK(sg_estimator_fit(SG_ESTIMATOR_STEIN_PARAM_V, x.data(), 6, 2, sg_kernel{SG_KERNEL_EPANECHNIKOV, 0.0}, 0.1, 0,
                           &est) == SG_ERR_INVALID_ARGUMENT);
    CHECK(sg_estimator_fit(SG_ESTIMATOR_KDE, x.data(), 6, 2, rbf(-1.0), 0.1, 0, &est) == SG_ERR_INVALID_ARGUMENT);
    CHECK(sg_estimator_fit(static_cast<sg_estimator_kind>(42), x.data(), 6, 2, rbf(1.0), 0.1, 0, &est) ==
          SG_ERR_INVALID_ARGUMENT);

    const double pair[] = {0.0, 0.0, 2.0, 0.0};
    CHECK(sg_estimator_fit(SG_ESTIMATOR_KDE, pair, 2, 2, sg_kernel{SG_KERNEL_EPANECHNIKOV, 0.0}, 0.1, 0, &est) ==
          SG_ERR_DEGENERATE_DENOMINATOR);
    CHECK(std::string(sg_last_error_message()).find("row") != std::string::npos);

    REQUIRE(sg_estimator_fit(SG_ESTIMATOR_STEIN_NONPARAM_U, x.data(), 6, 2, rbf(1.0), 0.1, 1, &est) == SG_OK);
    double out[2];
    CHECK(sg_estimator_predict(est, x.data(), 1, 2, out) == SG_ERR_UNSUPPORTED);
    sg_estimator_free(est);
}

TEST_CASE("KSD through the C API")
{
    const std::vector<double> x = normal_rows(3, 10, 2);
    const std::vector<double> zeros(20, 0.0);
    sg_ksd_result r{};
    REQUIRE(sg_ksd(x.data(), zeros.data(), 10, 2, rbf(1.0), SG_STATISTIC_V, 0, &r) == SG_OK);
    CHECK(r.value == 0.0);
    REQUIRE(sg_ksd(x.data(), x.data(), 10, 2, rbf(1.0), SG_STATISTIC_V, 1, &r) == SG_OK);
    CHECK(r.value >= -1e-10);
    CHECK(r.includes_constant == 1);
    CHECK(sg_ksd(x.data(), zeros.data(), 1, 2, rbf(1.0), SG_STATISTIC_U, 1, &r) == SG_ERR_INVALID_ARGUMENT);
}

TEST_CASE("banana run through the C API")
{
    sg_banana_config cfg{};
    REQUIRE(sg_banana_default_config(SG_PRESET_DESK, &cfg) == SG_OK);
    CHECK(cfg.n_chains == 50);
    CHECK(cfg.n_iters == 500);
    CHECK(cfg.n_train == 200);
    CHECK(cfg.b == 0.03);
    CHECK(cfg.v == 100.0);
    CHECK(cfg.init_noise_std == 2.0);

    cfg.seed = 9;
    cfg.n_chains = 3;
    cfg.n_iters = 20;
    cfg.record_trajectories = 1;
    cfg.use_exact_score = 1;
    sg_banana_result* res = nullptr;
    REQUIRE(sg_banana_run(&cfg, &res) == SG_OK);
    sg_banana_stats stats{};
    REQUIRE(sg_banana_result_stats(res, &stats) == SG_OK);
    CHECK(stats.n_chains == 3);
    CHECK(stats.jitter_level == -1);
    CHECK(std::isnan(stats.estimator_sigma2));
    CHECK(stats.has_trajectories == 1);
    std::vector<double> states(40);
    std::vector<unsigned char> accepted(20);
    CHECK(sg_banana_result_trajectory(res, 2, states.data(), accepted.data()) == SG_OK);
    CHECK(sg_banana_result_trajectory(res, 3, states.data(), accepted.data()) == SG_ERR_INVALID_ARGUMENT);
    sg_banana_result_free(res);

    cfg.use_exact_score = 0;
    cfg.estimator = SG_ESTIMATOR_STEIN_NONPARAM_U;
    CHECK(sg_banana_run(&cfg, &res) == SG_ERR_INVALID_ARGUMENT);
}

TEST_CASE("entropy check through the C API")
{
    sg_entropy_config cfg{};
    REQUIRE(sg_entropy_default_config(&cfg) == SG_OK);
    CHECK(cfg.sigma == 1.5);
    CHECK(cfg.n_samples == 2000);
    cfg.seed = 1;
    cfg.sigma = 1.0;
    cfg.n_samples = 100;
    const sg_estimator_kind kinds[] = {SG_ESTIMATOR_KDE};
    sg_entropy_summary summary{};
    sg_entropy_estimate est{};
    REQUIRE(sg_entropy_check(&cfg, kinds, 1, &summary, &est) == SG_OK);
    CHECK(summary.analytic == 1.0);
    CHECK(est.kind == SG_ESTIMATOR_KDE);
    CHECK(std::isfinite(est.estimate));
}
