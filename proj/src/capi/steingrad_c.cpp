#include "steingrad/steingrad.h"

#include "error.hpp"
#include "estimators.hpp"
#include "discrepancy.hpp"
#include "experiments.hpp"
#include "serialize.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

using namespace steingrad;

struct sg_estimator {
    FittedEstimator fitted;
};

struct sg_banana_result {
    BananaExperimentResult result;
    int n_chains = 0;
    int n_iters = 0;
};

namespace {

thread_local std::string g_last_error;

sg_status status_for(ErrorCode code)
{
    switch (code) {
        case ErrorCode::InvalidArgument: return SG_ERR_INVALID_ARGUMENT;
        case ErrorCode::Parse: return SG_ERR_PARSE;
        case ErrorCode::Unsupported: return SG_ERR_UNSUPPORTED;
        case ErrorCode::DegenerateBandwidth: return SG_ERR_DEGENERATE_BANDWIDTH;
        case ErrorCode::DegenerateDenominator: return SG_ERR_DEGENERATE_DENOMINATOR;
        case ErrorCode::SingularSystem: return SG_ERR_SINGULAR_SYSTEM;
        case ErrorCode::NumericalDegeneracy: return SG_ERR_NUMERICAL_DEGENERACY;
        case ErrorCode::Divergence: return SG_ERR_DIVERGENCE;
    }
    return SG_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes and recording the
// message for sg_last_error_message().
template <typename F>
sg_status guarded(F&& body) noexcept
{
    try {
        body();
        g_last_error.clear();
        return SG_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_for(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SG_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SG_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SG_ERR_INTERNAL;
    }
}

void require_ptr(const void* p, const char* name)
{
    require(p != nullptr, std::string(name) + " must not be NULL");
}

Matrix matrix_from_rows(const double* data, size_t rows, size_t cols, const char* name)
{
    require_ptr(data, name);
    require(rows >= 1 && cols >= 1, std::string(name) + " must have at least one row and one column");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void matrix_to_rows(const Matrix& m, double* out)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[i * m.cols() + j] = m(i, j);
        }
    }
}

EstimatorKind kind_from_c(sg_estimator_kind kind)
{
    switch (kind) {
        case SG_ESTIMATOR_STEIN_NONPARAM_V: return EstimatorKind::SteinNonparamV;
        case SG_ESTIMATOR_STEIN_NONPARAM_U: return EstimatorKind::SteinNonparamU;
        case SG_ESTIMATOR_STEIN_PARAM_V: return EstimatorKind::SteinParamV;
        case SG_ESTIMATOR_STEIN_PARAM_U: return EstimatorKind::SteinParamU;
        case SG_ESTIMATOR_SCORE_MATCH_RBF: return EstimatorKind::ScoreMatchRbf;
        case SG_ESTIMATOR_SCORE_MATCH_EPANECHNIKOV: return EstimatorKind::ScoreMatchEpanechnikov;
        case SG_ESTIMATOR_KDE: return EstimatorKind::Kde;
    }
    fail(ErrorCode::InvalidArgument, "unknown estimator kind");
}

sg_estimator_kind kind_to_c(EstimatorKind kind)
{
    switch (kind) {
        case EstimatorKind::SteinNonparamV: return SG_ESTIMATOR_STEIN_NONPARAM_V;
        case EstimatorKind::SteinNonparamU: return SG_ESTIMATOR_STEIN_NONPARAM_U;
        case EstimatorKind::SteinParamV: return SG_ESTIMATOR_STEIN_PARAM_V;
        case EstimatorKind::SteinParamU: return SG_ESTIMATOR_STEIN_PARAM_U;
        case EstimatorKind::ScoreMatchRbf: return SG_ESTIMATOR_SCORE_MATCH_RBF;
        case EstimatorKind::ScoreMatchEpanechnikov: return SG_ESTIMATOR_SCORE_MATCH_EPANECHNIKOV;
        case EstimatorKind::Kde: return SG_ESTIMATOR_KDE;
    }
    return SG_ESTIMATOR_STEIN_NONPARAM_V;
}

KernelSpec kernel_from_c(sg_kernel kernel)
{
    switch (kernel.family) {
        case SG_KERNEL_RBF: return KernelSpec::rbf(kernel.sigma2);
        case SG_KERNEL_EPANECHNIKOV: return KernelSpec::epanechnikov();
    }
    fail(ErrorCode::InvalidArgument, "unknown kernel family");
}

sg_kernel kernel_to_c(const KernelSpec& spec)
{
    if (spec.family() == KernelFamily::Rbf) {
        return {SG_KERNEL_RBF, spec.sigma2()};
    }
    return {SG_KERNEL_EPANECHNIKOV, 0.0};
}

Statistic statistic_from_c(sg_statistic statistic)
{
    switch (statistic) {
        case SG_STATISTIC_V: return Statistic::V;
        case SG_STATISTIC_U: return Statistic::U;
    }
    fail(ErrorCode::InvalidArgument, "unknown statistic");
}

char* copy_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

int sg_status_is_numerical(sg_status status)
{
    return status >= 10 && status < 20 ? 1 : 0;
}

const char* sg_status_name(sg_status status)
{
    switch (status) {
        case SG_OK: return "ok";
        case SG_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case SG_ERR_PARSE: return "parse_error";
        case SG_ERR_UNSUPPORTED: return "unsupported";
        case SG_ERR_DEGENERATE_BANDWIDTH: return "degenerate_bandwidth";
        case SG_ERR_DEGENERATE_DENOMINATOR: return "degenerate_denominator";
        case SG_ERR_SINGULAR_SYSTEM: return "singular_system";
        case SG_ERR_NUMERICAL_DEGENERACY: return "numerical_degeneracy";
        case SG_ERR_DIVERGENCE: return "divergence";
        case SG_ERR_INTERNAL: return "internal_error";
    }
    return "unknown_status";
}

const char* sg_last_error_message(void)
{
    return g_last_error.c_str();
}

const char* sg_version(void)
{
    return "0.1.0";
}

const char* sg_estimator_kind_name(sg_estimator_kind kind)
{
    const char* name = "unknown";
    guarded([&] { name = to_string(kind_from_c(kind)).data(); });
    return name;
}

sg_status sg_estimator_kind_from_name(const char* name, sg_estimator_kind* out)
{
    return guarded([&] {
        require_ptr(name, "name");
        require_ptr(out, "out");
        *out = kind_to_c(estimator_kind_from_string(name));
    });
}

const char* sg_kernel_family_name(sg_kernel_family family)
{
    switch (family) {
        case SG_KERNEL_RBF: return "rbf";
        case SG_KERNEL_EPANECHNIKOV: return "epanechnikov";
    }
    return "unknown";
}

sg_status sg_kernel_family_from_name(const char* name, sg_kernel_family* out)
{
    return guarded([&] {
        require_ptr(name, "name");
        require_ptr(out, "out");
        *out = kernel_family_from_string(name) == KernelFamily::Rbf ? SG_KERNEL_RBF : SG_KERNEL_EPANECHNIKOV;
    });
}

const char* sg_statistic_name(sg_statistic statistic)
{
    switch (statistic) {
        case SG_STATISTIC_V: return "V";
        case SG_STATISTIC_U: return "U";
    }
    return "unknown";
}

sg_status sg_statistic_from_name(const char* name, sg_statistic* out)
{
    return guarded([&] {
        require_ptr(name, "name");
        require_ptr(out, "out");
        *out = statistic_from_string(name) == Statistic::V ? SG_STATISTIC_V : SG_STATISTIC_U;
    });
}

sg_status sg_median_heuristic(const double* samples, size_t k, size_t d, double* sigma2)
{
    return guarded([&] {
        require_ptr(sigma2, "sigma2");
        *sigma2 = median_heuristic(SampleSet(matrix_from_rows(samples, k, d, "samples")));
    });
}

sg_status sg_estimator_fit(sg_estimator_kind kind, const double* samples, size_t k, size_t d, sg_kernel kernel,
                           double eta, int predictive, sg_estimator** out)
{
    return guarded([&] {
        require_ptr(out, "out");
        *out = nullptr;
        const SampleSet train(matrix_from_rows(samples, k, d, "samples"));
        *out = new sg_estimator{
            FittedEstimator::fit(kind_from_c(kind), train, kernel_from_c(kernel), eta, predictive != 0)};
    });
}

void sg_estimator_free(sg_estimator* estimator)
{
    delete estimator;
}

sg_status sg_estimator_get_info(const sg_estimator* estimator, sg_estimator_info* info)
{
    return guarded([&] {
        require_ptr(estimator, "estimator");
        require_ptr(info, "info");
        const FittedEstimator& f = estimator->fitted;
        info->kind = kind_to_c(f.kind());
        info->kernel = kernel_to_c(f.spec());
        info->eta = f.eta();
        info->k = static_cast<size_t>(f.train().count());
        info->d = static_cast<size_t>(f.train().dim());
        info->jitter_level = f.diagnostics().jitter_level;
        info->jitter = f.diagnostics().jitter;
        info->can_predict = f.can_predict() ? 1 : 0;
    });
}

sg_status sg_estimator_gradients(const sg_estimator* estimator, double* out)
{
    return guarded([&] {
        require_ptr(estimator, "estimator");
        require_ptr(out, "out");
        matrix_to_rows(estimator->fitted.training_gradients(), out);
    });
}

sg_status sg_estimator_predict(const sg_estimator* estimator, const double* queries, size_t n, size_t d, double* out)
{
    return guarded([&] {
        require_ptr(estimator, "estimator");
        require_ptr(out, "out");
        const Matrix q = matrix_from_rows(queries, n, d, "queries");
        require(q.allFinite(), "queries contain non-finite entries");
        matrix_to_rows(estimator->fitted.predict(q), out);
    });
}

sg_status sg_estimator_to_json(const sg_estimator* estimator, char** out)
{
    return guarded([&] {
        require_ptr(estimator, "estimator");
        require_ptr(out, "out");
        *out = copy_string(estimator_to_json(estimator->fitted));
    });
}

sg_status sg_estimator_from_json(const char* json, sg_estimator** out)
{
    return guarded([&] {
        require_ptr(json, "json");
        require_ptr(out, "out");
        *out = nullptr;
        *out = new sg_estimator{estimator_from_json(json)};
    });
}

void sg_string_free(char* str)
{
    std::free(str);
}

sg_status sg_ksd(const double* samples, const double* grads, size_t k, size_t d, sg_kernel kernel,
                 sg_statistic statistic, int includes_constant, sg_ksd_result* out)
{
    return guarded([&] {
        require_ptr(out, "out");
        const SampleSet x(matrix_from_rows(samples, k, d, "samples"));
        const Matrix g = matrix_from_rows(grads, k, d, "grads");
        const KsdEstimate e = ksd(x, g, kernel_from_c(kernel), statistic_from_c(statistic), includes_constant != 0);
        out->value = e.value;
        out->statistic = e.statistic == Statistic::V ? SG_STATISTIC_V : SG_STATISTIC_U;
        out->includes_constant = e.includes_constant ? 1 : 0;
    });
}

sg_status sg_preset_from_name(const char* name, sg_preset* out)
{
    return guarded([&] {
        require_ptr(name, "name");
        require_ptr(out, "out");
        *out = preset_from_string(name) == Preset::Desk ? SG_PRESET_DESK : SG_PRESET_PAPER;
    });
}

sg_status sg_banana_default_config(sg_preset preset, sg_banana_config* out)
{
    return guarded([&] {
        require_ptr(out, "out");
        require(preset == SG_PRESET_DESK || preset == SG_PRESET_PAPER, "unknown preset");
        const BananaExperimentConfig defaults;
        HmcConfig hmc = defaults.hmc;
        apply_preset(hmc, preset == SG_PRESET_DESK ? Preset::Desk : Preset::Paper);
        *out = sg_banana_config{};
        out->seed = 0;
        out->use_exact_score = 0;
        out->estimator = SG_ESTIMATOR_STEIN_NONPARAM_V;
        out->n_train = static_cast<size_t>(defaults.n_train);
        out->b = defaults.target.b;
        out->v = defaults.target.v;
        out->eta = defaults.eta;
        out->bandwidth_scale = defaults.bandwidth_scale;
        out->stepsize = hmc.stepsize;
        out->n_leapfrog = hmc.n_leapfrog;
        out->n_iters = hmc.n_iters;
        out->n_chains = hmc.n_chains;
        out->init_noise_std = hmc.init_noise_std;
        out->burn_in = hmc.burn_in;
        out->record_trajectories = 0;
        out->threads = 0;
    });
}

sg_status sg_banana_run(const sg_banana_config* config, sg_banana_result** out)
{
    return guarded([&] {
        require_ptr(config, "config");
        require_ptr(out, "out");
        *out = nullptr;
        BananaExperimentConfig cfg;
        cfg.seed = config->seed;
        if (config->use_exact_score == 0) {
            cfg.estimator = kind_from_c(config->estimator);
        }
        cfg.n_train = static_cast<Eigen::Index>(config->n_train);
        cfg.target.b = config->b;
        cfg.target.v = config->v;
        cfg.eta = config->eta;
        cfg.bandwidth_scale = config->bandwidth_scale;
        cfg.hmc.stepsize = config->stepsize;
        cfg.hmc.n_leapfrog = config->n_leapfrog;
        cfg.hmc.n_iters = config->n_iters;
        cfg.hmc.n_chains = config->n_chains;
        cfg.hmc.init_noise_std = config->init_noise_std;
        cfg.hmc.burn_in = config->burn_in;
        cfg.hmc.record_trajectories = config->record_trajectories != 0;
        cfg.hmc.threads = config->threads;

        auto* result = new sg_banana_result{run_banana_experiment(cfg), cfg.hmc.n_chains, cfg.hmc.n_iters};
        *out = result;
    });
}

void sg_banana_result_free(sg_banana_result* result)
{
    delete result;
}

sg_status sg_banana_result_stats(const sg_banana_result* result, sg_banana_stats* out)
{
    return guarded([&] {
        require_ptr(result, "result");
        require_ptr(out, "out");
        const BananaExperimentResult& r = result->result;
        const ChainStats& s = r.stats;
        out->acceptance_rate = s.acceptance_rate;
        out->mean_x1 = s.mean_x1;
        out->se_x1 = s.se_x1;
        out->ksd_pooled = s.ksd_pooled;
        out->ksd_mean_per_chain = s.ksd_mean_per_chain;
        out->divergences = s.divergences;
        out->post_burn_in = s.post_burn_in;
        out->pooled_ksd_samples = s.pooled_ksd_samples;
        out->ksd_sigma2 = r.ksd_sigma2;
        out->estimator_sigma2 = r.estimator_sigma2.value_or(kNaN);
        out->jitter_level = r.fit_diagnostics ? r.fit_diagnostics->jitter_level : -1;
        out->jitter = r.fit_diagnostics ? r.fit_diagnostics->jitter : 0.0;
        out->n_chains = static_cast<size_t>(result->n_chains);
        out->n_iters = static_cast<size_t>(result->n_iters);
        out->has_trajectories = s.trajectories ? 1 : 0;
    });
}

sg_status sg_banana_result_trajectory(const sg_banana_result* result, size_t chain, double* states,
                                      unsigned char* accepted)
{
    return guarded([&] {
        require_ptr(result, "result");
        const auto& traces = result->result.stats.trajectories;
        require(traces.has_value(), "trajectories were not recorded; set record_trajectories");
        require(chain < traces->size(), "chain index out of range");
        const ChainTrace& trace = (*traces)[chain];
        if (states != nullptr) {
            matrix_to_rows(trace.states, states);
        }
        if (accepted != nullptr) {
            std::memcpy(accepted, trace.accepted.data(), trace.accepted.size());
        }
    });
}

sg_status sg_entropy_default_config(sg_entropy_config* out)
{
    return guarded([&] {
        require_ptr(out, "out");
        const EntropyCheckConfig defaults;
        out->seed = 0;
        out->sigma = defaults.sigma;
        out->n_samples = static_cast<size_t>(defaults.n_samples);
        out->eta = defaults.eta;
        out->bandwidth_scale = defaults.bandwidth_scale;
    });
}

sg_status sg_entropy_check(const sg_entropy_config* config, const sg_estimator_kind* kinds, size_t n_kinds,
                           sg_entropy_summary* summary, sg_entropy_estimate* estimates)
{
    return guarded([&] {
        require_ptr(config, "config");
        require_ptr(summary, "summary");
        require(n_kinds == 0 || (kinds != nullptr && estimates != nullptr),
                "kinds and estimates must not be NULL when n_kinds > 0");
        EntropyCheckConfig cfg;
        cfg.seed = config->seed;
        cfg.sigma = config->sigma;
        cfg.n_samples = static_cast<Eigen::Index>(config->n_samples);
        cfg.eta = config->eta;
        cfg.bandwidth_scale = config->bandwidth_scale;
        cfg.estimators.clear();
        for (size_t i = 0; i < n_kinds; ++i) {
            cfg.estimators.push_back(kind_from_c(kinds[i]));
        }

        const EntropyCheckResult r = run_entropy_check(cfg);
        summary->analytic = r.analytic;
        summary->exact_estimate = r.exact_estimate;
        summary->exact_abs_error = r.exact_abs_error;
        summary->exact_rel_error = r.exact_rel_error;
        summary->sigma2 = r.sigma2;
        for (size_t i = 0; i < n_kinds; ++i) {
            estimates[i].kind = kind_to_c(r.estimates[i].kind);
            estimates[i].estimate = r.estimates[i].estimate;
            estimates[i].abs_error = r.estimates[i].abs_error;
            estimates[i].rel_error = r.estimates[i].rel_error;
        }
    });
}

}  // extern "C"
