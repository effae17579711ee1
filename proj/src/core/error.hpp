#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steingrad {

enum class ErrorCode {
    InvalidArgument,
    DegenerateBandwidth,
    DegenerateDenominator,
    SingularSystem,
    NumericalDegeneracy,
    Divergence,
    Unsupported,
    Parse,
};

// Base class for every error raised by the core library. The code drives the
// C API status mapping and the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

    // Input errors versus numerical failures (CLI exit 2 vs 3).
    [[nodiscard]] bool is_numerical() const noexcept
    {
        switch (code_) {
            case ErrorCode::DegenerateBandwidth:
            case ErrorCode::DegenerateDenominator:
            case ErrorCode::SingularSystem:
            case ErrorCode::NumericalDegeneracy:
            case ErrorCode::Divergence:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorCode code_;
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t step)
        : Error(ErrorCode::Divergence,
                "leapfrog produced a non-finite state at step " + std::to_string(step)),
          step_(step)
    {
    }

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

inline void require(bool condition, const std::string& what)
{
    if (!condition) {
        fail(ErrorCode::InvalidArgument, what);
    }
}

}  // namespace steingrad
