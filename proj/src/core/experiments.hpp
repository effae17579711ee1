#pragma once

#include "estimators.hpp"
#include "sampler.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace steingrad {

enum class Preset { Desk, Paper };

[[nodiscard]] std::string_view to_string(Preset preset) noexcept;
[[nodiscard]] Preset preset_from_string(std::string_view name);

/// Applies the chain count and iteration count of a named preset.
void apply_preset(HmcConfig& cfg, Preset preset);

// Stream identifiers used by the experiments; chain c of a run uses stream c,
// so auxiliary streams live far above any realistic chain count.
inline constexpr std::uint64_t kTrainingStream = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kInitStream = kTrainingStream + 1;
inline constexpr std::uint64_t kEntropyStream = kTrainingStream + 2;

struct BananaExperimentConfig {
    std::uint64_t seed = 0;
    std::optional<EstimatorKind> estimator;  // nullopt: exact target score
    Eigen::Index n_train = 200;
    BananaTarget target;
    double eta = kDefaultEta;
    double bandwidth_scale = 1.0;
    HmcConfig hmc;

    void validate() const;
};

struct BananaExperimentResult {
    ChainStats stats;
    double ksd_sigma2 = 0.0;                    // median heuristic of the training set
    std::optional<double> estimator_sigma2;     // scaled bandwidth of the flow estimator
    std::optional<SolveDiagnostics> fit_diagnostics;
};

/// Draws the training set, fits the flow estimator, perturbs target samples
/// into initial states and runs the chains.
[[nodiscard]] BananaExperimentResult run_banana_experiment(const BananaExperimentConfig& cfg);

struct EntropyCheckConfig {
    std::uint64_t seed = 0;
    double sigma = 1.5;
    Eigen::Index n_samples = 2000;
    double eta = kDefaultEta;
    double bandwidth_scale = 1.0;
    std::vector<EstimatorKind> estimators{EstimatorKind::SteinNonparamV, EstimatorKind::Kde};

    void validate() const;
};

struct EntropyEstimate {
    EstimatorKind kind = EstimatorKind::SteinNonparamV;
    double estimate = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
};

struct EntropyCheckResult {
    double analytic = 0.0;  // d/dsigma of the Gaussian entropy, 1/sigma
    double exact_estimate = 0.0;
    double exact_abs_error = 0.0;
    double exact_rel_error = 0.0;
    double sigma2 = 0.0;  // kernel bandwidth used by the estimators
    std::vector<EntropyEstimate> estimates;
};

/// Entropy-gradient surrogate for z = sigma * eps, eps ~ N(0, 1), with the
/// exact score and with scores estimated from the samples.
[[nodiscard]] EntropyCheckResult run_entropy_check(const EntropyCheckConfig& cfg);

}  // namespace steingrad
