#pragma once

#include "kernels.hpp"

namespace steingrad {

/// Which rung of the jitter ladder a symmetric solve needed. Level 0 means
/// the matrix was factorised as given; level L >= 1 added
/// 10^(L-11) * trace/n to the diagonal.
struct SolveDiagnostics {
    int jitter_level = 0;
    double jitter = 0.0;
};

inline constexpr int kMaxJitterLevel = 7;

/// Solves a x = rhs for symmetric (possibly indefinite) a with a
/// Bunch-Kaufman factorisation, escalating diagonal jitter when the
/// factorisation is singular or numerically useless. Throws SingularSystem
/// once the ladder is exhausted.
[[nodiscard]] Matrix solve_symmetric(const Matrix& a, const Matrix& rhs, SolveDiagnostics* diagnostics = nullptr);

/// Explicit inverse through the same factorisation and ladder.
[[nodiscard]] Matrix invert_symmetric(const Matrix& a, SolveDiagnostics* diagnostics = nullptr);

}  // namespace steingrad
