#pragma once

#include "kernels.hpp"
#include "linalg.hpp"

#include <optional>
#include <span>
#include <string_view>

namespace steingrad {

enum class Statistic { V, U };

enum class EstimatorKind {
    SteinNonparamV,
    SteinNonparamU,
    SteinParamV,
    SteinParamU,
    ScoreMatchRbf,
    ScoreMatchEpanechnikov,
    Kde,
};

[[nodiscard]] std::string_view to_string(Statistic statistic) noexcept;
[[nodiscard]] Statistic statistic_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(EstimatorKind kind) noexcept;
[[nodiscard]] EstimatorKind estimator_kind_from_string(std::string_view name);

inline constexpr double kDefaultEta = 0.1;
inline constexpr double kMinUStatisticEta = 1e-8;

/// Estimated scores at sample locations; row k approximates grad log q(x^k).
struct GradientField {
    Matrix grads;
};

/// Linear system lhs * a = rhs before the ridge is added to lhs.
struct QuadraticSystem {
    Matrix lhs;
    Vector rhs;
};

/// Plug-in estimator: -diag(K 1)^-1 <grad, K>.
[[nodiscard]] GradientField kde_fit(const SampleSet& samples, const KernelSpec& spec);

/// Non-parametric Stein estimator.
///   V: (K + eta I) G = -<grad, K>
///   U: (K - diag(K) + eta I) G = -<grad, K>, eta >= 1e-8
[[nodiscard]] GradientField stein_nonparametric_fit(const SampleSet& samples, const KernelSpec& spec, double eta,
                                                    Statistic statistic, SolveDiagnostics* diagnostics = nullptr);

/// Score matching normal equations. RBF: (Sigma, v) from per-coordinate
/// sums. Epanechnikov: (d^2 Sigma, (d^2 / 2) 1), so the ridge acts on the
/// unscaled bracket matrix.
[[nodiscard]] QuadraticSystem score_matching_system(const SampleSet& samples, const KernelSpec& spec);

/// Epanechnikov score matching Sigma with its 1/d^2 factor, built from the
/// centred gram matrix.
[[nodiscard]] Matrix epanechnikov_score_sigma(const SampleSet& samples);

[[nodiscard]] Vector score_matching_fit(const SampleSet& samples, const KernelSpec& spec, double eta,
                                        SolveDiagnostics* diagnostics = nullptr);

/// Gradient of sum_k a_k k(y, x^k) at each row of queries.
[[nodiscard]] GradientField score_matching_predict(const Vector& coeffs, const SampleSet& train, const KernelSpec& spec,
                                                   const Matrix& queries);

/// Parametric Stein system (Lambda or Lambda-tilde, b) for the RBF kernel.
[[nodiscard]] QuadraticSystem stein_parametric_system(const SampleSet& samples, double sigma2, Statistic statistic);

[[nodiscard]] Vector stein_parametric_fit(const SampleSet& samples, double sigma2, double eta, Statistic statistic,
                                          SolveDiagnostics* diagnostics = nullptr);

/// Monte Carlo entropy gradient -(1/K) sum_k J_k^T g_k, where J_k is the
/// d x p Jacobian of the sampler output with respect to its parameters.
[[nodiscard]] Vector entropy_gradient_surrogate(const Matrix& grads_at_samples, std::span<const Matrix> jacobians);

/// A fitted estimator that can be queried away from its training set. It is
/// immutable after construction and safe to share across threads.
class FittedEstimator {
public:
    /// `predictive` caches (K + eta I)^-1 for the non-parametric V kind.
    static FittedEstimator fit(EstimatorKind kind, const SampleSet& train, const KernelSpec& spec, double eta,
                               bool predictive = true);

    /// Reassembles an estimator from stored parts, checking its invariants.
    static FittedEstimator from_parts(EstimatorKind kind, SampleSet train, KernelSpec spec, double eta,
                                      std::optional<Matrix> grads, std::optional<Vector> coeffs,
                                      std::optional<Matrix> kinv, SolveDiagnostics diagnostics);

    [[nodiscard]] EstimatorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const SampleSet& train() const noexcept { return train_; }
    [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] const std::optional<Matrix>& grads() const noexcept { return grads_; }
    [[nodiscard]] const std::optional<Vector>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] const std::optional<Matrix>& kinv() const noexcept { return kinv_; }
    [[nodiscard]] const SolveDiagnostics& diagnostics() const noexcept { return diagnostics_; }

    [[nodiscard]] bool is_parametric() const noexcept;
    [[nodiscard]] bool can_predict() const noexcept;

    /// Estimated scores at the training samples.
    [[nodiscard]] Matrix training_gradients() const;

    [[nodiscard]] Vector predict(const Vector& y) const;
    [[nodiscard]] Matrix predict(const Matrix& queries) const;

private:
    FittedEstimator(EstimatorKind kind, SampleSet train, KernelSpec spec, double eta)
        : kind_(kind), train_(std::move(train)), spec_(spec), eta_(eta)
    {
    }

    void validate() const;

    EstimatorKind kind_;
    SampleSet train_;
    KernelSpec spec_;
    double eta_;
    std::optional<Matrix> grads_;
    std::optional<Vector> coeffs_;
    std::optional<Matrix> kinv_;
    SolveDiagnostics diagnostics_;
};

/// Out-of-sample prediction of the non-parametric V estimator: the score at
/// y obtained by treating y as an extra sample and eliminating the training
/// block in closed form.
[[nodiscard]] Vector stein_predict(const FittedEstimator& fitted, const Vector& y);

}  // namespace steingrad
