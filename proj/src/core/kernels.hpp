#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>

namespace steingrad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// K samples of dimension d, one sample per row. Always non-empty and finite.
class SampleSet {
public:
    explicit SampleSet(Matrix data);

    [[nodiscard]] Eigen::Index count() const noexcept { return data_.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return data_.cols(); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return data_; }
    [[nodiscard]] Vector row(Eigen::Index i) const { return data_.row(i).transpose(); }

    /// Same samples shifted so that the column means are zero.
    [[nodiscard]] Matrix centered() const;

private:
    Matrix data_;
};

enum class KernelFamily { Rbf, Epanechnikov };

[[nodiscard]] std::string_view to_string(KernelFamily family) noexcept;
[[nodiscard]] KernelFamily kernel_family_from_string(std::string_view name);

/// Kernel family plus its bandwidth. The RBF kernel is
/// exp(-|x - y|^2 / (2 sigma2)); the Epanechnikov kernel is
/// (1/d) sum_j (1 - (x_j - y_j)^2) and carries no bandwidth.
class KernelSpec {
public:
    static KernelSpec rbf(double sigma2);
    static KernelSpec epanechnikov() noexcept { return KernelSpec(KernelFamily::Epanechnikov, 0.0); }

    [[nodiscard]] KernelFamily family() const noexcept { return family_; }
    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }

    [[nodiscard]] double eval(const Vector& x, const Vector& y) const;

    /// Gradient with respect to the first argument.
    [[nodiscard]] Vector grad_first_arg(const Vector& x, const Vector& y) const;

    /// Tr(grad_x grad_y k(x, y)), the sample-independent summand of the KSD.
    [[nodiscard]] double cross_trace(const Vector& x, const Vector& y) const;

private:
    KernelSpec(KernelFamily family, double sigma2) noexcept : family_(family), sigma2_(sigma2) {}

    KernelFamily family_;
    double sigma2_;
};

/// Dense kernel-derived matrices shared by all estimators.
///   k_matrix(i, j) = k(x^i, x^j)
///   grad_sum(i, :) = sum_k grad_{x^k} k(x^i, x^k)
///   gram(i, j)     = <x^i, x^j>
struct KernelMatrices {
    Matrix k_matrix;
    Matrix grad_sum;
    Matrix gram;
};

[[nodiscard]] double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y);
[[nodiscard]] Vector kernel_grad_first_arg(const KernelSpec& spec, const Vector& x, const Vector& y);

[[nodiscard]] KernelMatrices build_matrices(const KernelSpec& spec, const SampleSet& samples);

/// Kernel matrix only, without the gradient and gram blocks.
[[nodiscard]] Matrix kernel_matrix(const KernelSpec& spec, const SampleSet& samples);

/// Squared median of the pairwise Euclidean distances over i < j. An even
/// number of pairs uses the mean of the two central order statistics.
[[nodiscard]] double median_heuristic(const SampleSet& samples);

}  // namespace steingrad
