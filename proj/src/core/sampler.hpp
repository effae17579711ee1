#pragma once

#include "discrepancy.hpp"
#include "kernels.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace steingrad {

using Rng = std::mt19937_64;
using LogDensityFn = std::function<double(const Vector&)>;

/// Independent generator for one (seed, stream) pair. Every chain, and every
/// other consumer of randomness in an experiment, owns its own stream.
[[nodiscard]] Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// x1 ~ N(0, v), x2 = eps + b (x1^2 - v), eps ~ N(0, 1).
struct BananaTarget {
    double b = 0.03;
    double v = 100.0;

    void validate() const;

    [[nodiscard]] double log_density(const Vector& x) const;
    [[nodiscard]] Vector score(const Vector& x) const;

    /// Maps standard-normal draws (z, eps) to a banana sample.
    [[nodiscard]] Vector transform(double z, double eps) const;
    [[nodiscard]] SampleSet sample(Rng& rng, Eigen::Index n) const;
};

/// Leapfrog with identity mass. `score_fn` is the gradient of the log
/// target (exact or estimated). Throws DivergenceError on a non-finite state.
[[nodiscard]] std::pair<Vector, Vector> leapfrog(Vector q, Vector p, double stepsize, int n_steps,
                                                 const ScoreFn& score_fn);

struct HmcConfig {
    double stepsize = 0.1;
    int n_leapfrog = 5;
    int n_iters = 500;
    int n_chains = 50;
    double init_noise_std = 2.0;
    double burn_in = 0.2;
    bool record_trajectories = false;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

/// The exact target: drives the Metropolis-Hastings correction and the
/// sample-quality diagnostics.
struct HmcTarget {
    LogDensityFn log_density;
    ScoreFn score;
};

struct ChainTrace {
    Matrix states;                  // n_iters x d, state after each MH step
    std::vector<std::uint8_t> accepted;
    std::size_t n_accepted = 0;
    std::size_t divergences = 0;
};

/// One chain of HMC with a (possibly approximate) flow score and an exact
/// accept/reject step.
[[nodiscard]] ChainTrace run_chain(const HmcTarget& target, const ScoreFn& flow_score, const HmcConfig& cfg,
                                   const Vector& init, Rng& rng);

struct ChainStats {
    double acceptance_rate = 0.0;
    double mean_x1 = 0.0;
    double se_x1 = 0.0;  // across-chain standard error of mean_x1
    double ksd_pooled = 0.0;
    double ksd_mean_per_chain = 0.0;
    std::size_t divergences = 0;
    std::size_t post_burn_in = 0;  // retained iterations per chain
    std::size_t pooled_ksd_samples = 0;
    std::optional<std::vector<ChainTrace>> trajectories;
};

inline constexpr Eigen::Index kMaxPooledKsdSamples = 2000;

/// Runs cfg.n_chains chains from the rows of `init`; chain c draws from
/// make_stream(seed, c). Diagnostics use the post-burn-in samples and the
/// V-statistic KSD (constant included) under `ksd_kernel`.
[[nodiscard]] ChainStats run_hmc(const HmcTarget& target, const ScoreFn& flow_score, const HmcConfig& cfg,
                                 const SampleSet& init, std::uint64_t seed, const KernelSpec& ksd_kernel);

}  // namespace steingrad
