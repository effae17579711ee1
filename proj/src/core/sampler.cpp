#include "sampler.hpp"

#include "error.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace steingrad {

Rng make_stream(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

// ---------------------------------------------------------------------------
// Banana target

void BananaTarget::validate() const
{
    require(std::isfinite(b), "banana curvature b must be finite");
    require(std::isfinite(v) && v > 0.0, "banana variance v must be positive");
}

double BananaTarget::log_density(const Vector& x) const
{
    require(x.size() == 2, "banana target is two-dimensional");
    constexpr double log_two_pi = 1.8378770664093454836;  // log(2 pi)
    const double r = x(1) - b * (x(0) * x(0) - v);
    return -0.5 * (log_two_pi + std::log(v)) - x(0) * x(0) / (2.0 * v) - 0.5 * log_two_pi - 0.5 * r * r;
}

Vector BananaTarget::score(const Vector& x) const
{
    require(x.size() == 2, "banana target is two-dimensional");
    const double r = x(1) - b * (x(0) * x(0) - v);
    Vector g(2);
    g(0) = -x(0) / v + 2.0 * b * x(0) * r;
    g(1) = -r;
    return g;
}

Vector BananaTarget::transform(double z, double eps) const
{
    const double x1 = std::sqrt(v) * z;
    Vector x(2);
    x(0) = x1;
    x(1) = eps + b * (x1 * x1 - v);
    return x;
}

SampleSet BananaTarget::sample(Rng& rng, Eigen::Index n) const
{
    validate();
    require(n >= 1, "banana_sample needs n >= 1");
    std::normal_distribution<double> normal;
    Matrix out(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z = normal(rng);
        const double eps = normal(rng);
        out.row(i) = transform(z, eps).transpose();
    }
    return SampleSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Dynamics

std::pair<Vector, Vector> leapfrog(Vector q, Vector p, double stepsize, int n_steps, const ScoreFn& score_fn)
{
    require(q.size() == p.size(), "position and momentum differ in dimension");
    require(n_steps >= 0, "leapfrog step count must be non-negative");
    if (n_steps == 0) {
        return {std::move(q), std::move(p)};
    }

    p += 0.5 * stepsize * score_fn(q);
    for (int step = 1; step <= n_steps; ++step) {
        q += stepsize * p;
        const Vector g = score_fn(q);
        p += (step == n_steps ? 0.5 : 1.0) * stepsize * g;
        if (!q.allFinite() || !p.allFinite()) {
            throw DivergenceError(static_cast<std::size_t>(step));
        }
    }
    return {std::move(q), std::move(p)};
}

void HmcConfig::validate() const
{
    require(std::isfinite(stepsize) && stepsize > 0.0, "stepsize must be positive");
    require(n_leapfrog >= 1, "n_leapfrog must be positive");
    require(n_iters >= 1, "n_iters must be positive");
    require(n_chains >= 1, "n_chains must be positive");
    require(std::isfinite(init_noise_std) && init_noise_std >= 0.0, "init_noise_std must be non-negative");
    require(burn_in >= 0.0 && burn_in < 1.0, "burn_in must lie in [0, 1)");
}

ChainTrace run_chain(const HmcTarget& target, const ScoreFn& flow_score, const HmcConfig& cfg, const Vector& init,
                     Rng& rng)
{
    const Eigen::Index d = init.size();
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;

    ChainTrace trace;
    trace.states.resize(cfg.n_iters, d);
    trace.accepted.assign(static_cast<std::size_t>(cfg.n_iters), 0);

    Vector q = init;
    double log_p = target.log_density(q);
    for (int t = 0; t < cfg.n_iters; ++t) {
        Vector p(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            p(j) = normal(rng);
        }
        const double u = uniform(rng);

        bool accept = false;
        Vector q_new;
        double log_p_new = 0.0;
        try {
            auto [q_prop, p_prop] = leapfrog(q, p, cfg.stepsize, cfg.n_leapfrog, flow_score);
            log_p_new = target.log_density(q_prop);
            const double h_old = -log_p + 0.5 * p.squaredNorm();
            const double h_new = -log_p_new + 0.5 * p_prop.squaredNorm();
            const double log_ratio = h_old - h_new;
            accept = std::isfinite(log_ratio) && std::log(u) < log_ratio;
            q_new = std::move(q_prop);
        } catch (const Error& e) {
            // A non-finite trajectory, or an estimated score that cannot be
            // evaluated along it, rejects the proposal.
            if (!e.is_numerical()) {
                throw;
            }
            ++trace.divergences;
        }

        if (accept) {
            q = std::move(q_new);
            log_p = log_p_new;
            ++trace.n_accepted;
            trace.accepted[static_cast<std::size_t>(t)] = 1;
        }
        trace.states.row(t) = q.transpose();
    }
    return trace;
}

ChainStats run_hmc(const HmcTarget& target, const ScoreFn& flow_score, const HmcConfig& cfg, const SampleSet& init,
                   std::uint64_t seed, const KernelSpec& ksd_kernel)
{
    cfg.validate();
    require(init.count() == cfg.n_chains, "init must have one row per chain");

    const auto n_chains = static_cast<std::size_t>(cfg.n_chains);
    std::vector<ChainTrace> traces(n_chains);

    unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n_chains));

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t c = next++; c < n_chains; c = next++) {
            try {
                Rng rng = make_stream(seed, c);
                traces[c] = run_chain(target, flow_score, cfg, init.row(static_cast<Eigen::Index>(c)), rng);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) {
            pool.emplace_back(work);
        }
        work();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    const auto burn = static_cast<Eigen::Index>(std::floor(cfg.burn_in * cfg.n_iters));
    const Eigen::Index kept = cfg.n_iters - burn;
    const Eigen::Index d = init.dim();

    ChainStats stats;
    stats.post_burn_in = static_cast<std::size_t>(kept);

    std::size_t accepted = 0;
    Vector chain_means(static_cast<Eigen::Index>(n_chains));
    Matrix pooled(static_cast<Eigen::Index>(n_chains) * kept, d);
    double ksd_sum = 0.0;
    for (std::size_t c = 0; c < n_chains; ++c) {
        const ChainTrace& tr = traces[c];
        accepted += tr.n_accepted;
        stats.divergences += tr.divergences;
        const Matrix post = tr.states.bottomRows(kept);
        chain_means(static_cast<Eigen::Index>(c)) = post.col(0).mean();
        pooled.middleRows(static_cast<Eigen::Index>(c) * kept, kept) = post;
        ksd_sum += ksd_to_target(SampleSet(post), target.score, ksd_kernel, Statistic::V).value;
    }

    stats.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n_chains * cfg.n_iters);
    stats.mean_x1 = pooled.col(0).mean();
    if (n_chains >= 2) {
        const double m = chain_means.mean();
        const double var = (chain_means.array() - m).square().sum() / static_cast<double>(n_chains - 1);
        stats.se_x1 = std::sqrt(var / static_cast<double>(n_chains));
    } else {
        stats.se_x1 = std::numeric_limits<double>::quiet_NaN();
    }
    stats.ksd_mean_per_chain = ksd_sum / static_cast<double>(n_chains);

    const Eigen::Index total = pooled.rows();
    const Eigen::Index stride = (total + kMaxPooledKsdSamples - 1) / kMaxPooledKsdSamples;
    const Eigen::Index thinned_rows = (total + stride - 1) / stride;
    Matrix thinned(thinned_rows, d);
    for (Eigen::Index i = 0; i < thinned_rows; ++i) {
        thinned.row(i) = pooled.row(i * stride);
    }
    stats.pooled_ksd_samples = static_cast<std::size_t>(thinned_rows);
    stats.ksd_pooled = ksd_to_target(SampleSet(std::move(thinned)), target.score, ksd_kernel, Statistic::V).value;

    if (cfg.record_trajectories) {
        stats.trajectories = std::move(traces);
    }
    return stats;
}

}  // namespace steingrad
