#include "linalg.hpp"

#include "error.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace steingrad {

namespace {

std::optional<Matrix> try_factor_solve(const Matrix& a, const Matrix& rhs)
{
    const auto n = static_cast<lapack_int>(a.rows());
    const auto nrhs = static_cast<lapack_int>(rhs.cols());

    Matrix factor = a;
    std::vector<lapack_int> pivots(static_cast<std::size_t>(n));

    const double anorm = LAPACKE_dlansy(LAPACK_COL_MAJOR, '1', 'L', n, factor.data(), n);
    if (!std::isfinite(anorm)) {
        return std::nullopt;
    }
    if (LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factor.data(), n, pivots.data()) != 0) {
        return std::nullopt;
    }

    double rcond = 0.0;
    if (LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, factor.data(), n, pivots.data(), anorm, &rcond) != 0 ||
        !(rcond > std::numeric_limits<double>::epsilon())) {
        return std::nullopt;
    }

    Matrix x = rhs;
    if (LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, nrhs, factor.data(), n, pivots.data(), x.data(), n) != 0) {
        return std::nullopt;
    }
    if (!x.allFinite()) {
        return std::nullopt;
    }

    // Backward-error guard; a stable solve sits many orders below this.
    const double residual = (a * x - rhs).norm();
    const double scale = a.norm() * x.norm() + rhs.norm();
    if (residual > 1e-10 * scale) {
        return std::nullopt;
    }
    return x;
}

}  // namespace

Matrix solve_symmetric(const Matrix& a, const Matrix& rhs, SolveDiagnostics* diagnostics)
{
    require(a.rows() == a.cols(), "solve_symmetric needs a square matrix");
    require(a.rows() == rhs.rows(), "solve_symmetric: right-hand side row count mismatch");
    require(a.allFinite() && rhs.allFinite(), "solve_symmetric: non-finite input");

    const double n = static_cast<double>(a.rows());
    const double base = a.diagonal().cwiseAbs().sum() / n;

    for (int level = 0; level <= kMaxJitterLevel; ++level) {
        const double jitter = level == 0 ? 0.0 : std::pow(10.0, level - 11) * base;
        if (level > 0 && !(jitter > 0.0)) {
            break;
        }
        Matrix shifted = a;
        shifted.diagonal().array() += jitter;
        if (auto x = try_factor_solve(shifted, rhs)) {
            if (diagnostics != nullptr) {
                diagnostics->jitter_level = level;
                diagnostics->jitter = jitter;
            }
            return *std::move(x);
        }
    }
    fail(ErrorCode::SingularSystem,
         "linear system is singular even after diagonal jitter; use a positive ridge eta");
}

Matrix invert_symmetric(const Matrix& a, SolveDiagnostics* diagnostics)
{
    Matrix inv = solve_symmetric(a, Matrix::Identity(a.rows(), a.cols()), diagnostics);
    return 0.5 * (inv + inv.transpose());
}

}  // namespace steingrad
