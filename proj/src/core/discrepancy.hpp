#pragma once

#include "estimators.hpp"
#include "kernels.hpp"

#include <functional>

namespace steingrad {

using ScoreFn = std::function<Vector(const Vector&)>;

struct KsdEstimate {
    double value = 0.0;
    Statistic statistic = Statistic::V;
    bool includes_constant = false;
};

/// Unnormalised pieces of the KSD sum, so that
///   value = (quadratic + 2 * linear + constant) / normaliser
/// with normaliser K^2 (V) or K(K-1) (U).
struct KsdTerms {
    double quadratic = 0.0;  // Tr(G^T K G)
    double linear = 0.0;     // Tr(G^T <grad, K>)
    double constant = 0.0;   // sum of Tr(grad_x grad_x' k) over the included pairs
    double normaliser = 1.0;
};

[[nodiscard]] KsdTerms ksd_terms(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec,
                                 Statistic statistic);

[[nodiscard]] KsdEstimate ksd_v(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec,
                                bool includes_constant);

/// Drops the j = l terms; needs K >= 2.
[[nodiscard]] KsdEstimate ksd_u(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec,
                                bool includes_constant);

[[nodiscard]] KsdEstimate ksd(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec,
                              Statistic statistic, bool includes_constant);

/// KSD of the samples against a target with known score, constant included.
[[nodiscard]] KsdEstimate ksd_to_target(const SampleSet& samples, const ScoreFn& score_fn, const KernelSpec& spec,
                                        Statistic statistic);

}  // namespace steingrad
