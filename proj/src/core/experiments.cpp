#include "experiments.hpp"

#include "error.hpp"

#include <cmath>
#include <string>

namespace steingrad {

namespace {

KernelSpec kernel_for(EstimatorKind kind, double sigma2)
{
    return kind == EstimatorKind::ScoreMatchEpanechnikov ? KernelSpec::epanechnikov() : KernelSpec::rbf(sigma2);
}

}  // namespace

std::string_view to_string(Preset preset) noexcept
{
    return preset == Preset::Desk ? "desk" : "paper";
}

Preset preset_from_string(std::string_view name)
{
    if (name == "desk") {
        return Preset::Desk;
    }
    if (name == "paper") {
        return Preset::Paper;
    }
    fail(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "' (expected desk or paper)");
}

void apply_preset(HmcConfig& cfg, Preset preset)
{
    if (preset == Preset::Desk) {
        cfg.n_iters = 500;
        cfg.n_chains = 50;
    } else {
        cfg.n_iters = 2000;
        cfg.n_chains = 200;
    }
}

// ---------------------------------------------------------------------------
// Banana experiment

void BananaExperimentConfig::validate() const
{
    target.validate();
    hmc.validate();
    require(n_train >= 2, "n_train must be at least 2 for the median heuristic");
    require(std::isfinite(eta) && eta >= 0.0, "eta must be non-negative");
    require(std::isfinite(bandwidth_scale) && bandwidth_scale > 0.0, "bandwidth_scale must be positive");
    if (estimator == EstimatorKind::SteinNonparamU) {
        fail(ErrorCode::InvalidArgument, "stein_nonparam_u has no predictive form; use stein_nonparam_v");
    }
}

BananaExperimentResult run_banana_experiment(const BananaExperimentConfig& cfg)
{
    cfg.validate();
    const BananaTarget target = cfg.target;

    Rng train_rng = make_stream(cfg.seed, kTrainingStream);
    const SampleSet train = target.sample(train_rng, cfg.n_train);

    BananaExperimentResult result;
    result.ksd_sigma2 = median_heuristic(train);
    const KernelSpec ksd_kernel = KernelSpec::rbf(result.ksd_sigma2);

    HmcTarget hmc_target{[target](const Vector& x) { return target.log_density(x); },
                         [target](const Vector& x) { return target.score(x); }};

    std::optional<FittedEstimator> fitted;
    ScoreFn flow_score = hmc_target.score;
    if (cfg.estimator) {
        const double sigma2 = result.ksd_sigma2 * cfg.bandwidth_scale;
        fitted = FittedEstimator::fit(*cfg.estimator, train, kernel_for(*cfg.estimator, sigma2), cfg.eta);
        if (*cfg.estimator != EstimatorKind::ScoreMatchEpanechnikov) {
            result.estimator_sigma2 = sigma2;
        }
        result.fit_diagnostics = fitted->diagnostics();
        flow_score = [&est = *fitted](const Vector& x) { return est.predict(x); };
    }

    Rng init_rng = make_stream(cfg.seed, kInitStream);
    Matrix init = target.sample(init_rng, cfg.hmc.n_chains).matrix();
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Eigen::Index i = 0; i < init.rows(); ++i) {
        for (Eigen::Index j = 0; j < init.cols(); ++j) {
            init(i, j) += cfg.hmc.init_noise_std * noise(init_rng);
        }
    }

    result.stats = run_hmc(hmc_target, flow_score, cfg.hmc, SampleSet(std::move(init)), cfg.seed, ksd_kernel);
    return result;
}

// ---------------------------------------------------------------------------
// Entropy check

void EntropyCheckConfig::validate() const
{
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    require(n_samples >= 2, "the entropy check needs at least two samples");
    require(std::isfinite(eta) && eta >= 0.0, "eta must be non-negative");
    require(std::isfinite(bandwidth_scale) && bandwidth_scale > 0.0, "bandwidth_scale must be positive");
}

EntropyCheckResult run_entropy_check(const EntropyCheckConfig& cfg)
{
    cfg.validate();

    Rng rng = make_stream(cfg.seed, kEntropyStream);
    std::normal_distribution<double> normal;
    const Eigen::Index n = cfg.n_samples;
    Matrix eps(n, 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        eps(k, 0) = normal(rng);
    }
    const SampleSet z(cfg.sigma * eps);

    // z = sigma * eps, so the Jacobian with respect to sigma is eps itself.
    std::vector<Matrix> jacobians;
    jacobians.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        jacobians.push_back(eps.row(k));
    }

    EntropyCheckResult result;
    result.analytic = 1.0 / cfg.sigma;

    const Matrix exact_grads = -z.matrix() / (cfg.sigma * cfg.sigma);
    result.exact_estimate = entropy_gradient_surrogate(exact_grads, jacobians)(0);
    result.exact_abs_error = std::abs(result.exact_estimate - result.analytic);
    result.exact_rel_error = result.exact_abs_error / result.analytic;

    result.sigma2 = median_heuristic(z) * cfg.bandwidth_scale;
    for (const EstimatorKind kind : cfg.estimators) {
        const FittedEstimator fitted =
            FittedEstimator::fit(kind, z, kernel_for(kind, result.sigma2), cfg.eta, /*predictive=*/false);
        EntropyEstimate e;
        e.kind = kind;
        e.estimate = entropy_gradient_surrogate(fitted.training_gradients(), jacobians)(0);
        e.abs_error = std::abs(e.estimate - result.analytic);
        e.rel_error = e.abs_error / result.analytic;
        result.estimates.push_back(e);
    }
    return result;
}

}  // namespace steingrad
