#pragma once

#include "estimators.hpp"

#include <string>

namespace steingrad {

inline constexpr const char* kEstimatorFormat = "steingrad-estimator";
inline constexpr int kEstimatorFormatVersion = 1;

/// Self-describing JSON document for a fitted estimator. Matrices are stored
/// as {"rows", "cols", "data"} with row-major data; doubles are written in
/// shortest round-trip form so a reload is bit-exact.
///
///   {
///     "format": "steingrad-estimator", "version": 1,
///     "kind": "stein_nonparam_v",
///     "kernel": {"family": "rbf", "sigma2": 1.5},
///     "eta": 0.1,
///     "train": {...}, "grads": {...} | null, "coeffs": [...] | null,
///     "kinv": {...} | null,
///     "fit_diagnostics": {"jitter_level": 0, "jitter": 0.0}
///   }
[[nodiscard]] std::string estimator_to_json(const FittedEstimator& estimator);

/// Throws Error(Parse) on malformed documents and InvalidArgument when the
/// parts violate estimator invariants.
[[nodiscard]] FittedEstimator estimator_from_json(const std::string& text);

}  // namespace steingrad
