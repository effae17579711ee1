#include "error.hpp"
#include "linalg.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <string>

using namespace steingrad;

TEST_CASE("solve_symmetric on a well-conditioned SPD system needs no jitter")
{
    const Matrix b = steingrad::testing::normal_matrix(1, 12, 12);
    const Matrix a = b * b.transpose() + Matrix::Identity(12, 12);
    const Matrix rhs = steingrad::testing::normal_matrix(2, 12, 3);
    SolveDiagnostics diag;
    const Matrix x = solve_symmetric(a, rhs, &diag);
    CHECK(diag.jitter_level == 0);
    CHECK(diag.jitter == 0.0);
    CHECK((a * x - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
}

TEST_CASE("solve_symmetric handles indefinite systems")
{
    Matrix a(3, 3);
    a << 0, 1, 0, 1, 0, 2, 0, 2, -1;
    const Vector rhs = Vector::Ones(3);
    SolveDiagnostics diag;
    const Vector x = solve_symmetric(a, rhs, &diag);
    CHECK(diag.jitter_level == 0);
    CHECK((a * x - rhs).norm() <= 1e-12);
}

TEST_CASE("solve_symmetric climbs the jitter ladder on a singular matrix")
{
    Matrix a(2, 2);
    a << 1, 1, 1, 1;
    const Vector rhs = Vector::Ones(2);
    SolveDiagnostics diag;
    const Vector x = solve_symmetric(a, rhs, &diag);
    CHECK(diag.jitter_level >= 1);
    CHECK(diag.jitter_level <= kMaxJitterLevel);
    CHECK(diag.jitter == doctest::Approx(std::pow(10.0, diag.jitter_level - 11)).epsilon(1e-12));
    Matrix shifted = a;
    shifted.diagonal().array() += diag.jitter;
    CHECK((shifted * x - rhs).norm() <= 1e-6);
}

TEST_CASE("solve_symmetric fails on an all-zero matrix with advice about eta")
{
    try {
        (void)solve_symmetric(Matrix::Zero(3, 3), Vector::Ones(3));
        FAIL("expected SingularSystem");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularSystem);
        CHECK(std::string(e.what()).find("eta") != std::string::npos);
    }
}

TEST_CASE("solve_symmetric validates its inputs")
{
    CHECK_THROWS_AS((void)solve_symmetric(Matrix::Identity(2, 3), Vector::Ones(2)), Error);
    CHECK_THROWS_AS((void)solve_symmetric(Matrix::Identity(2, 2), Vector::Ones(3)), Error);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((void)solve_symmetric(bad, Vector::Ones(2)), Error);
}

TEST_CASE("invert_symmetric returns a symmetric inverse")
{
    const Matrix b = steingrad::testing::normal_matrix(3, 8, 8);
    const Matrix a = b + b.transpose() + 20.0 * Matrix::Identity(8, 8);
    const Matrix inv = invert_symmetric(a);
    CHECK((inv - inv.transpose()).norm() == 0.0);
    CHECK((a * inv - Matrix::Identity(8, 8)).norm() <= 1e-12);
}
