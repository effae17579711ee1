// steingrad command-line front end. Every numerical operation goes through
// the C API in steingrad/steingrad.h.

#include "csv.hpp"

#include "steingrad/steingrad.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace steingrad_cli;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

// A failure reported by the library.
class LibraryError : public std::runtime_error {
public:
    LibraryError(sg_status status, const std::string& what) : std::runtime_error(what), status_(status) {}
    [[nodiscard]] sg_status status() const noexcept { return status_; }

private:
    sg_status status_;
};

void check(sg_status status)
{
    if (status != SG_OK) {
        throw LibraryError(status, std::string(sg_status_name(status)) + ": " + sg_last_error_message());
    }
}

struct EstimatorDeleter {
    void operator()(sg_estimator* p) const noexcept { sg_estimator_free(p); }
};
struct BananaDeleter {
    void operator()(sg_banana_result* p) const noexcept { sg_banana_result_free(p); }
};
struct StringDeleter {
    void operator()(char* p) const noexcept { sg_string_free(p); }
};
using EstimatorPtr = std::unique_ptr<sg_estimator, EstimatorDeleter>;
using BananaPtr = std::unique_ptr<sg_banana_result, BananaDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

// ---------------------------------------------------------------------------
// Configuration: one JSON object, optionally with nested "hmc" settings.
// Command-line flags take precedence over values read from the file.

class Config {
public:
    Config() = default;

    static Config load(const std::string& path, const std::set<std::string>& allowed)
    {
        Config cfg;
        if (path.empty()) {
            return cfg;
        }
        try {
            cfg.doc_ = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw InputError("config '" + path + "': " + e.what());
        }
        if (!cfg.doc_.is_object()) {
            throw InputError("config '" + path + "': top level must be a JSON object");
        }
        for (const auto& [key, value] : cfg.doc_.items()) {
            if (key == "hmc" && value.is_object()) {
                for (const auto& item : value.items()) {
                    cfg.check_known("hmc." + item.key(), allowed, path);
                }
            } else {
                cfg.check_known(key, allowed, path);
            }
        }
        return cfg;
    }

    template <typename T>
    [[nodiscard]] std::optional<T> get(const std::string& dotted) const
    {
        const json* node = find(dotted);
        if (node == nullptr || node->is_null()) {
            return std::nullopt;
        }
        const auto bad = [&](const char* expected) {
            return InputError("config key '" + dotted + "': expected " + expected);
        };
        if constexpr (std::is_same_v<T, bool>) {
            if (!node->is_boolean()) {
                throw bad("a boolean");
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!node->is_string()) {
                throw bad("a string");
            }
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            if (!node->is_array()) {
                throw bad("an array of strings");
            }
            for (const auto& v : *node) {
                if (!v.is_string()) {
                    throw bad("an array of strings");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!node->is_number()) {
                throw bad("a number");
            }
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!node->is_number_unsigned()) {
                throw bad("a non-negative integer");
            }
        } else {
            if (!node->is_number_integer()) {
                throw bad("an integer");
            }
        }
        return node->get<T>();
    }

private:
    void check_known(const std::string& key, const std::set<std::string>& allowed, const std::string& path) const
    {
        if (allowed.count(key) == 0) {
            throw InputError("config '" + path + "': unknown key '" + key + "'");
        }
    }

    [[nodiscard]] const json* find(const std::string& dotted) const
    {
        if (!doc_.is_object()) {
            return nullptr;
        }
        const auto dot = dotted.find('.');
        if (dot == std::string::npos) {
            const auto it = doc_.find(dotted);
            return it == doc_.end() ? nullptr : &*it;
        }
        const auto outer = doc_.find(dotted.substr(0, dot));
        if (outer == doc_.end() || !outer->is_object()) {
            return nullptr;
        }
        const auto inner = outer->find(dotted.substr(dot + 1));
        return inner == outer->end() ? nullptr : &*inner;
    }

    json doc_ = json::object();
};

// Flag value if the flag was given, else the config value, else `fallback`.
template <typename T>
T resolve(const CLI::Option* flag, const T& flag_value, const Config& cfg, const std::string& key, T fallback)
{
    if (flag->count() > 0) {
        return flag_value;
    }
    return cfg.get<T>(key).value_or(std::move(fallback));
}

template <typename T>
std::optional<T> resolve_optional(const CLI::Option* flag, const T& flag_value, const Config& cfg,
                                  const std::string& key)
{
    if (flag->count() > 0) {
        return flag_value;
    }
    return cfg.get<T>(key);
}

std::string require_path(const std::optional<std::string>& value, const char* what)
{
    if (!value || value->empty()) {
        throw InputError(std::string("missing required setting '") + what + "'");
    }
    return *value;
}

sg_estimator_kind parse_kind(const std::string& name)
{
    sg_estimator_kind kind{};
    if (sg_estimator_kind_from_name(name.c_str(), &kind) != SG_OK) {
        throw InputError("unknown estimator '" + name + "'");
    }
    return kind;
}

sg_kernel_family parse_family(const std::string& name)
{
    sg_kernel_family family{};
    if (sg_kernel_family_from_name(name.c_str(), &family) != SG_OK) {
        throw InputError("unknown kernel '" + name + "' (expected rbf or epanechnikov)");
    }
    return family;
}

sg_statistic parse_statistic(const std::string& name)
{
    sg_statistic statistic{};
    if (sg_statistic_from_name(name.c_str(), &statistic) != SG_OK) {
        throw InputError("unknown statistic '" + name + "' (expected V or U)");
    }
    return statistic;
}

unsigned thread_cap_from_env()
{
    const char* env = std::getenv("STEINGRAD_THREADS");
    if (env == nullptr || *env == '\0') {
        return 0;
    }
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1) {
        throw InputError("STEINGRAD_THREADS must be a positive integer");
    }
    return static_cast<unsigned>(value);
}

void emit_json(const json& doc, const std::optional<std::string>& path)
{
    const std::string text = doc.dump(2) + "\n";
    if (path && !path->empty()) {
        write_file(*path, text);
    } else {
        std::cout << text;
    }
}

json nullable(double value)
{
    return std::isfinite(value) ? json(value) : json(nullptr);
}

// Kernel selection shared by estimate and ksd. An explicit sigma2 is used as
// given; otherwise the median heuristic is multiplied by bandwidth_scale.
struct KernelChoice {
    sg_kernel kernel{};
    std::string source;  // "explicit", "median_heuristic", "single_sample_default", "none"
    std::optional<double> median;
};

KernelChoice choose_kernel(sg_kernel_family family, std::optional<double> sigma2, double scale, const Table& x,
                           bool allow_single_sample)
{
    KernelChoice choice;
    choice.kernel.family = family;
    if (!std::isfinite(scale) || scale <= 0.0) {
        throw InputError("bandwidth_scale must be positive");
    }
    if (family == SG_KERNEL_EPANECHNIKOV) {
        choice.source = "none";
        return choice;
    }
    if (sigma2) {
        choice.kernel.sigma2 = *sigma2;
        choice.source = "explicit";
    } else if (x.rows >= 2) {
        double m = 0.0;
        check(sg_median_heuristic(x.data.data(), x.rows, x.cols, &m));
        choice.median = m;
        choice.kernel.sigma2 = m * scale;
        choice.source = "median_heuristic";
    } else if (allow_single_sample) {
        // A single sample has no pairwise distance; its fitted score is zero
        // for every bandwidth, so any positive value serves.
        choice.kernel.sigma2 = 1.0;
        choice.source = "single_sample_default";
    } else {
        throw InputError("the median heuristic needs at least two samples; pass --sigma2");
    }
    return choice;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string config, input, output, sidecar, estimator, kernel;
    double sigma2 = 0.0, bandwidth_scale = 1.0, eta = 0.0;
    CLI::Option *o_input, *o_output, *o_sidecar, *o_estimator, *o_kernel, *o_sigma2, *o_scale, *o_eta;
};

void add_estimate(CLI::App& app, EstimateArgs& a)
{
    auto* sub = app.add_subcommand("estimate", "Fit an estimator on a sample CSV and write the estimated scores");
    sub->add_option("--config", a.config, "JSON config file");
    a.o_input = sub->add_option("--input,-i", a.input, "Sample CSV with header x0,...,x{d-1}");
    a.o_output = sub->add_option("--output,-o", a.output, "Output CSV with header g0,...,g{d-1}");
    a.o_sidecar = sub->add_option("--sidecar", a.sidecar, "Estimator JSON (default: <output>.json)");
    a.o_estimator = sub->add_option("--estimator", a.estimator, "Estimator kind (default stein_nonparam_v)");
    a.o_kernel = sub->add_option("--kernel", a.kernel, "rbf or epanechnikov");
    a.o_sigma2 = sub->add_option("--sigma2", a.sigma2, "RBF bandwidth (default: median heuristic)");
    a.o_scale = sub->add_option("--bandwidth-scale", a.bandwidth_scale, "Factor applied to the median heuristic");
    a.o_eta = sub->add_option("--eta", a.eta, "Ridge regulariser (default 0.1)");
}

int run_estimate(const EstimateArgs& a)
{
    const Config cfg = Config::load(
        a.config, {"input", "output", "sidecar", "estimator", "kernel", "sigma2", "bandwidth_scale", "eta"});
    const std::string input = require_path(resolve_optional(a.o_input, a.input, cfg, "input"), "input");
    const std::string output = require_path(resolve_optional(a.o_output, a.output, cfg, "output"), "output");
    const std::string sidecar =
        resolve(a.o_sidecar, a.sidecar, cfg, "sidecar", output + ".json");
    const sg_estimator_kind kind =
        parse_kind(resolve<std::string>(a.o_estimator, a.estimator, cfg, "estimator", "stein_nonparam_v"));
    const std::string default_kernel = kind == SG_ESTIMATOR_SCORE_MATCH_EPANECHNIKOV ? "epanechnikov" : "rbf";
    const sg_kernel_family family = parse_family(resolve(a.o_kernel, a.kernel, cfg, "kernel", default_kernel));
    const double scale = resolve(a.o_scale, a.bandwidth_scale, cfg, "bandwidth_scale", 1.0);
    const double eta = resolve(a.o_eta, a.eta, cfg, "eta", 0.1);

    const Table x = read_csv(input, "x");
    const KernelChoice kc =
        choose_kernel(family, resolve_optional(a.o_sigma2, a.sigma2, cfg, "sigma2"), scale, x, true);

    sg_estimator* raw = nullptr;
    check(sg_estimator_fit(kind, x.data.data(), x.rows, x.cols, kc.kernel, eta, 1, &raw));
    const EstimatorPtr estimator(raw);

    Table g{x.rows, x.cols, std::vector<double>(x.rows * x.cols)};
    check(sg_estimator_gradients(estimator.get(), g.data.data()));

    char* text = nullptr;
    check(sg_estimator_to_json(estimator.get(), &text));
    const StringPtr owned(text);
    json doc = json::parse(owned.get());
    doc["bandwidth"] = {
        {"source", kc.source},
        {"median_heuristic", kc.median ? json(*kc.median) : json(nullptr)},
        {"scale", kc.source == "median_heuristic" ? json(scale) : json(nullptr)},
    };

    write_csv(output, "g", g);
    emit_json(doc, sidecar);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string model, input, output;
    CLI::Option* o_input;
};

void add_predict(CLI::App& app, PredictArgs& a)
{
    auto* sub = app.add_subcommand("predict", "Evaluate a saved estimator at query points");
    sub->add_option("--model,-m", a.model, "Estimator JSON written by 'estimate'")->required();
    a.o_input = sub->add_option("--input,-i", a.input,
                                "Query CSV with header x0,...; omit to emit the scores at the training samples");
    sub->add_option("--output,-o", a.output, "Output CSV with header g0,...")->required();
}

int run_predict(const PredictArgs& a)
{
    const std::string text = read_file(a.model);
    sg_estimator* raw = nullptr;
    check(sg_estimator_from_json(text.c_str(), &raw));
    const EstimatorPtr estimator(raw);
    sg_estimator_info info{};
    check(sg_estimator_get_info(estimator.get(), &info));

    Table g;
    if (a.o_input->count() > 0) {
        const Table q = read_csv(a.input, "x");
        if (q.cols != info.d) {
            throw InputError("query dimension " + std::to_string(q.cols) + " does not match the estimator's " +
                             std::to_string(info.d));
        }
        g = {q.rows, q.cols, std::vector<double>(q.rows * q.cols)};
        check(sg_estimator_predict(estimator.get(), q.data.data(), q.rows, q.cols, g.data.data()));
    } else {
        g = {info.k, info.d, std::vector<double>(info.k * info.d)};
        check(sg_estimator_gradients(estimator.get(), g.data.data()));
    }
    write_csv(a.output, "g", g);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// ksd

struct KsdArgs {
    std::string config, samples, grads, output, kernel, statistic;
    double sigma2 = 0.0, bandwidth_scale = 1.0;
    bool includes_constant = true;
    CLI::Option *o_samples, *o_grads, *o_output, *o_kernel, *o_statistic, *o_sigma2, *o_scale, *o_constant;
};

void add_ksd(CLI::App& app, KsdArgs& a)
{
    auto* sub = app.add_subcommand("ksd", "Kernelised Stein discrepancy of samples under given scores");
    sub->add_option("--config", a.config, "JSON config file");
    a.o_samples = sub->add_option("--samples,-s", a.samples, "Sample CSV with header x0,...");
    a.o_grads = sub->add_option("--grads,-g", a.grads, "Score CSV with header g0,..., aligned with the samples");
    a.o_output = sub->add_option("--output,-o", a.output, "Report path (default: stdout)");
    a.o_kernel = sub->add_option("--kernel", a.kernel, "rbf or epanechnikov (default rbf)");
    a.o_statistic = sub->add_option("--statistic", a.statistic, "V or U (default V)");
    a.o_sigma2 = sub->add_option("--sigma2", a.sigma2, "RBF bandwidth (default: median heuristic)");
    a.o_scale = sub->add_option("--bandwidth-scale", a.bandwidth_scale, "Factor applied to the median heuristic");
    a.o_constant = sub->add_option("--includes-constant", a.includes_constant,
                                   "Include the score-independent term (default true)");
}

int run_ksd(const KsdArgs& a)
{
    const Config cfg = Config::load(a.config, {"samples", "grads", "output", "kernel", "statistic", "sigma2",
                                               "bandwidth_scale", "includes_constant"});
    const std::string samples_path =
        require_path(resolve_optional(a.o_samples, a.samples, cfg, "samples"), "samples");
    const std::string grads_path = require_path(resolve_optional(a.o_grads, a.grads, cfg, "grads"), "grads");
    const auto output = resolve_optional(a.o_output, a.output, cfg, "output");
    const sg_kernel_family family = parse_family(resolve<std::string>(a.o_kernel, a.kernel, cfg, "kernel", "rbf"));
    const sg_statistic statistic =
        parse_statistic(resolve<std::string>(a.o_statistic, a.statistic, cfg, "statistic", "V"));
    const double scale = resolve(a.o_scale, a.bandwidth_scale, cfg, "bandwidth_scale", 1.0);
    const bool includes_constant = resolve(a.o_constant, a.includes_constant, cfg, "includes_constant", true);

    const Table x = read_csv(samples_path, "x");
    const Table g = read_csv(grads_path, "g");
    if (g.rows != x.rows || g.cols != x.cols) {
        throw InputError("score file shape " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                         " does not match the samples' " + std::to_string(x.rows) + "x" + std::to_string(x.cols));
    }
    const KernelChoice kc =
        choose_kernel(family, resolve_optional(a.o_sigma2, a.sigma2, cfg, "sigma2"), scale, x, false);

    sg_ksd_result r{};
    check(sg_ksd(x.data.data(), g.data.data(), x.rows, x.cols, kc.kernel, statistic, includes_constant ? 1 : 0,
                 &r));

    const json report{
        {"statistic", sg_statistic_name(r.statistic)},
        {"includes_constant", r.includes_constant != 0},
        {"value", r.value},
        {"K", x.rows},
        {"d", x.cols},
        {"kernel", sg_kernel_family_name(family)},
        {"sigma2", family == SG_KERNEL_RBF ? json(kc.kernel.sigma2) : json(nullptr)},
    };
    emit_json(report, output);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// banana

struct BananaArgs {
    std::string config, estimator, preset, output, trajectories;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    double b = 0, v = 0, eta = 0, bandwidth_scale = 0, stepsize = 0, init_noise_std = 0, burn_in = 0;
    int n_leapfrog = 0, n_iters = 0, n_chains = 0;
    unsigned threads = 0;
    CLI::Option *o_seed, *o_estimator, *o_preset, *o_output, *o_trajectories, *o_n_train, *o_b, *o_v, *o_eta,
        *o_scale, *o_stepsize, *o_noise, *o_burn_in, *o_leapfrog, *o_iters, *o_chains, *o_threads;
};

void add_banana(CLI::App& app, BananaArgs& a)
{
    auto* sub = app.add_subcommand("banana", "Run the banana-target Hamiltonian flow experiment");
    sub->add_option("--config", a.config, "JSON config file");
    a.o_seed = sub->add_option("--seed", a.seed, "Master seed (required)");
    a.o_estimator = sub->add_option("--estimator", a.estimator, "exact or an estimator kind (default exact)");
    a.o_preset = sub->add_option("--preset", a.preset, "desk (T=500, 50 chains) or paper (T=2000, 200 chains)");
    a.o_output = sub->add_option("--output,-o", a.output, "Report path (default: stdout)");
    a.o_trajectories = sub->add_option("--trajectories", a.trajectories, "Write per-chain states to this CSV");
    a.o_n_train = sub->add_option("--n-train", a.n_train, "Training samples for the estimator (default 200)");
    a.o_b = sub->add_option("--b", a.b, "Banana curvature (default 0.03)");
    a.o_v = sub->add_option("--v", a.v, "Variance of x0 (default 100)");
    a.o_eta = sub->add_option("--eta", a.eta, "Ridge regulariser (default 0.1)");
    a.o_scale = sub->add_option("--bandwidth-scale", a.bandwidth_scale, "Median-heuristic scale (default 1)");
    a.o_stepsize = sub->add_option("--stepsize", a.stepsize, "Leapfrog step size (default 0.1)");
    a.o_leapfrog = sub->add_option("--n-leapfrog", a.n_leapfrog, "Leapfrog steps per proposal (default 5)");
    a.o_iters = sub->add_option("--n-iters", a.n_iters, "Iterations per chain");
    a.o_chains = sub->add_option("--n-chains", a.n_chains, "Number of chains");
    a.o_noise = sub->add_option("--init-noise-std", a.init_noise_std, "Initial perturbation (default 2.0)");
    a.o_burn_in = sub->add_option("--burn-in", a.burn_in, "Discarded fraction of each chain (default 0.2)");
    a.o_threads = sub->add_option("--threads", a.threads, "Worker threads (default: all cores)");
}

void write_trajectories(const std::string& path, const sg_banana_result* result, const sg_banana_stats& stats)
{
    std::ostringstream out;
    out << "chain,iter,accepted,x0,x1\n";
    std::vector<double> states(stats.n_iters * 2);
    std::vector<unsigned char> accepted(stats.n_iters);
    for (std::size_t c = 0; c < stats.n_chains; ++c) {
        check(sg_banana_result_trajectory(result, c, states.data(), accepted.data()));
        for (std::size_t t = 0; t < stats.n_iters; ++t) {
            out << c << ',' << t << ',' << static_cast<int>(accepted[t]) << ',' << format_double(states[2 * t])
                << ',' << format_double(states[2 * t + 1]) << '\n';
        }
    }
    write_file(path, out.str());
}

int run_banana(const BananaArgs& a)
{
    const Config cfg = Config::load(
        a.config, {"seed", "estimator", "preset", "output", "trajectories", "n_train", "b", "v", "eta",
                   "bandwidth_scale", "hmc.stepsize", "hmc.n_leapfrog", "hmc.n_iters", "hmc.n_chains",
                   "hmc.init_noise_std", "hmc.burn_in", "hmc.threads"});

    const auto seed = resolve_optional(a.o_seed, a.seed, cfg, "seed");
    if (!seed) {
        throw InputError("banana requires a seed (--seed or config key 'seed')");
    }
    const std::string preset_name = resolve<std::string>(a.o_preset, a.preset, cfg, "preset", "desk");
    sg_preset preset{};
    if (sg_preset_from_name(preset_name.c_str(), &preset) != SG_OK) {
        throw InputError("unknown preset '" + preset_name + "' (expected desk or paper)");
    }

    sg_banana_config c{};
    check(sg_banana_default_config(preset, &c));
    c.seed = *seed;
    const std::string estimator = resolve<std::string>(a.o_estimator, a.estimator, cfg, "estimator", "exact");
    c.use_exact_score = estimator == "exact" ? 1 : 0;
    if (c.use_exact_score == 0) {
        c.estimator = parse_kind(estimator);
    }
    c.n_train = resolve(a.o_n_train, a.n_train, cfg, "n_train", c.n_train);
    c.b = resolve(a.o_b, a.b, cfg, "b", c.b);
    c.v = resolve(a.o_v, a.v, cfg, "v", c.v);
    c.eta = resolve(a.o_eta, a.eta, cfg, "eta", c.eta);
    c.bandwidth_scale = resolve(a.o_scale, a.bandwidth_scale, cfg, "bandwidth_scale", c.bandwidth_scale);
    c.stepsize = resolve(a.o_stepsize, a.stepsize, cfg, "hmc.stepsize", c.stepsize);
    c.n_leapfrog = resolve(a.o_leapfrog, a.n_leapfrog, cfg, "hmc.n_leapfrog", c.n_leapfrog);
    c.n_iters = resolve(a.o_iters, a.n_iters, cfg, "hmc.n_iters", c.n_iters);
    c.n_chains = resolve(a.o_chains, a.n_chains, cfg, "hmc.n_chains", c.n_chains);
    c.init_noise_std = resolve(a.o_noise, a.init_noise_std, cfg, "hmc.init_noise_std", c.init_noise_std);
    c.burn_in = resolve(a.o_burn_in, a.burn_in, cfg, "hmc.burn_in", c.burn_in);
    c.threads = resolve(a.o_threads, a.threads, cfg, "hmc.threads", 0U);
    if (const unsigned cap = thread_cap_from_env(); cap != 0) {
        c.threads = c.threads == 0 ? cap : std::min(c.threads, cap);
    }
    const auto trajectories = resolve_optional(a.o_trajectories, a.trajectories, cfg, "trajectories");
    c.record_trajectories = trajectories && !trajectories->empty() ? 1 : 0;
    const auto output = resolve_optional(a.o_output, a.output, cfg, "output");

    sg_banana_result* raw = nullptr;
    check(sg_banana_run(&c, &raw));
    const BananaPtr result(raw);
    sg_banana_stats s{};
    check(sg_banana_result_stats(result.get(), &s));

    // Thread count is omitted: results do not depend on it.
    const json report{
        {"config",
         {{"seed", c.seed},
          {"estimator", estimator},
          {"preset", preset_name},
          {"n_train", c.n_train},
          {"b", c.b},
          {"v", c.v},
          {"eta", c.eta},
          {"bandwidth_scale", c.bandwidth_scale},
          {"hmc",
           {{"stepsize", c.stepsize},
            {"n_leapfrog", c.n_leapfrog},
            {"n_iters", c.n_iters},
            {"n_chains", c.n_chains},
            {"init_noise_std", c.init_noise_std},
            {"burn_in", c.burn_in}}}}},
        {"stats",
         {{"acceptance_rate", s.acceptance_rate},
          {"mean_x1", s.mean_x1},
          {"se_x1", nullable(s.se_x1)},
          {"ksd_pooled", s.ksd_pooled},
          {"ksd_mean_per_chain", s.ksd_mean_per_chain},
          {"divergences", s.divergences},
          {"post_burn_in", s.post_burn_in},
          {"pooled_ksd_samples", s.pooled_ksd_samples}}},
        {"ksd_kernel", {{"family", "rbf"}, {"sigma2", s.ksd_sigma2}}},
        {"estimator_sigma2", nullable(s.estimator_sigma2)},
        {"fit_diagnostics",
         s.jitter_level < 0 ? json(nullptr) : json{{"jitter_level", s.jitter_level}, {"jitter", s.jitter}}},
    };

    if (c.record_trajectories != 0) {
        write_trajectories(*trajectories, result.get(), s);
    }
    emit_json(report, output);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// entropy-check

struct EntropyArgs {
    std::string config, output;
    std::uint64_t seed = 0;
    double sigma = 0, eta = 0, bandwidth_scale = 0;
    std::size_t n_samples = 0;
    std::vector<std::string> estimators;
    CLI::Option *o_seed, *o_output, *o_sigma, *o_eta, *o_scale, *o_n, *o_estimators;
};

void add_entropy(CLI::App& app, EntropyArgs& a)
{
    auto* sub = app.add_subcommand("entropy-check", "Entropy-gradient surrogate on a Gaussian with known answer");
    sub->add_option("--config", a.config, "JSON config file");
    a.o_seed = sub->add_option("--seed", a.seed, "Seed (required)");
    a.o_output = sub->add_option("--output,-o", a.output, "Report path (default: stdout)");
    a.o_sigma = sub->add_option("--sigma", a.sigma, "Scale of the Gaussian (default 1.5)");
    a.o_n = sub->add_option("--n-samples", a.n_samples, "Number of samples (default 2000)");
    a.o_eta = sub->add_option("--eta", a.eta, "Ridge regulariser (default 0.1)");
    a.o_scale = sub->add_option("--bandwidth-scale", a.bandwidth_scale, "Median-heuristic scale (default 1)");
    a.o_estimators = sub->add_option("--estimators", a.estimators, "Estimator kinds to compare")->delimiter(',');
}

int run_entropy(const EntropyArgs& a)
{
    const Config cfg =
        Config::load(a.config, {"seed", "output", "sigma", "n_samples", "eta", "bandwidth_scale", "estimators"});
    const auto seed = resolve_optional(a.o_seed, a.seed, cfg, "seed");
    if (!seed) {
        throw InputError("entropy-check requires a seed (--seed or config key 'seed')");
    }
    sg_entropy_config c{};
    check(sg_entropy_default_config(&c));
    c.seed = *seed;
    c.sigma = resolve(a.o_sigma, a.sigma, cfg, "sigma", c.sigma);
    c.n_samples = resolve(a.o_n, a.n_samples, cfg, "n_samples", c.n_samples);
    c.eta = resolve(a.o_eta, a.eta, cfg, "eta", c.eta);
    c.bandwidth_scale = resolve(a.o_scale, a.bandwidth_scale, cfg, "bandwidth_scale", c.bandwidth_scale);
    const auto names = resolve<std::vector<std::string>>(a.o_estimators, a.estimators, cfg, "estimators",
                                                         {"stein_nonparam_v", "kde"});
    const auto output = resolve_optional(a.o_output, a.output, cfg, "output");

    std::vector<sg_estimator_kind> kinds;
    for (const auto& n : names) {
        kinds.push_back(parse_kind(n));
    }
    sg_entropy_summary summary{};
    std::vector<sg_entropy_estimate> estimates(kinds.size());
    check(sg_entropy_check(&c, kinds.data(), kinds.size(), &summary, estimates.data()));

    constexpr double band_factor = 3.0;
    json rows = json::array();
    for (const auto& e : estimates) {
        rows.push_back({{"kind", sg_estimator_kind_name(e.kind)},
                        {"estimate", e.estimate},
                        {"abs_error", e.abs_error},
                        {"rel_error", e.rel_error},
                        {"within_band", e.abs_error <= band_factor * summary.exact_abs_error}});
    }
    const json report{
        {"config",
         {{"seed", c.seed},
          {"sigma", c.sigma},
          {"n_samples", c.n_samples},
          {"eta", c.eta},
          {"bandwidth_scale", c.bandwidth_scale}}},
        {"analytic", summary.analytic},
        {"exact",
         {{"estimate", summary.exact_estimate},
          {"abs_error", summary.exact_abs_error},
          {"rel_error", summary.exact_rel_error}}},
        {"sigma2", summary.sigma2},
        {"band_factor", band_factor},
        {"estimators", rows},
    };
    emit_json(report, output);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"steingrad: kernel score estimators, Stein discrepancy and Hamiltonian flow experiments"};
    app.set_version_flag("--version", std::string("steingrad ") + sg_version());
    app.require_subcommand(1);

    EstimateArgs estimate;
    PredictArgs predict;
    KsdArgs ksd;
    BananaArgs banana;
    EntropyArgs entropy;
    add_estimate(app, estimate);
    add_predict(app, predict);
    add_ksd(app, ksd);
    add_banana(app, banana);
    add_entropy(app, entropy);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (app.got_subcommand("estimate")) {
            return run_estimate(estimate);
        }
        if (app.got_subcommand("predict")) {
            return run_predict(predict);
        }
        if (app.got_subcommand("ksd")) {
            return run_ksd(ksd);
        }
        if (app.got_subcommand("banana")) {
            return run_banana(banana);
        }
        if (app.got_subcommand("entropy-check")) {
            return run_entropy(entropy);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const LibraryError& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (sg_status_is_numerical(e.status()) != 0) {
            return kExitNumerical;
        }
        return e.status() == SG_ERR_INTERNAL ? kExitInternal : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInput;
}
