#include "kernels.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace steingrad {

SampleSet::SampleSet(Matrix data) : data_(std::move(data))
{
    require(data_.rows() >= 1, "sample set needs at least one sample");
    require(data_.cols() >= 1, "sample set needs dimension at least one");
    require(data_.allFinite(), "sample set contains non-finite entries");
}

Matrix SampleSet::centered() const
{
    const Eigen::RowVectorXd mean = data_.colwise().mean();
    return data_.rowwise() - mean;
}

std::string_view to_string(KernelFamily family) noexcept
{
    switch (family) {
        case KernelFamily::Rbf: return "rbf";
        case KernelFamily::Epanechnikov: return "epanechnikov";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name)
{
    if (name == "rbf") {
        return KernelFamily::Rbf;
    }
    if (name == "epanechnikov") {
        return KernelFamily::Epanechnikov;
    }
    fail(ErrorCode::InvalidArgument, "unknown kernel family '" + std::string(name) + "'");
}

KernelSpec KernelSpec::rbf(double sigma2)
{
    require(std::isfinite(sigma2) && sigma2 > 0.0, "RBF bandwidth sigma2 must be positive and finite");
    return KernelSpec(KernelFamily::Rbf, sigma2);
}

namespace {

void check_same_dim(const Vector& x, const Vector& y)
{
    if (x.size() != y.size()) {
        fail(ErrorCode::InvalidArgument, "kernel arguments differ in dimension (" + std::to_string(x.size()) +
                                             " vs " + std::to_string(y.size()) + ")");
    }
}

}  // namespace

double KernelSpec::eval(const Vector& x, const Vector& y) const
{
    check_same_dim(x, y);
    const double sq = (x - y).squaredNorm();
    if (family_ == KernelFamily::Rbf) {
        return std::exp(-sq / (2.0 * sigma2_));
    }
    return 1.0 - sq / static_cast<double>(x.size());
}

Vector KernelSpec::grad_first_arg(const Vector& x, const Vector& y) const
{
    check_same_dim(x, y);
    if (family_ == KernelFamily::Rbf) {
        const double k = std::exp(-(x - y).squaredNorm() / (2.0 * sigma2_));
        return (k / sigma2_) * (y - x);
    }
    return (2.0 / static_cast<double>(x.size())) * (y - x);
}

double KernelSpec::cross_trace(const Vector& x, const Vector& y) const
{
    check_same_dim(x, y);
    if (family_ == KernelFamily::Rbf) {
        const double sq = (x - y).squaredNorm();
        const double k = std::exp(-sq / (2.0 * sigma2_));
        return k * (static_cast<double>(x.size()) / sigma2_ - sq / (sigma2_ * sigma2_));
    }
    return 2.0;
}

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y)
{
    return spec.eval(x, y);
}

Vector kernel_grad_first_arg(const KernelSpec& spec, const Vector& x, const Vector& y)
{
    return spec.grad_first_arg(x, y);
}

Matrix kernel_matrix(const KernelSpec& spec, const SampleSet& samples)
{
    const Matrix& x = samples.matrix();
    const Eigen::Index n = samples.count();
    const auto d = static_cast<double>(samples.dim());
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double sq = (x.row(i) - x.row(j)).squaredNorm();
            const double v = spec.family() == KernelFamily::Rbf ? std::exp(-sq / (2.0 * spec.sigma2())) : 1.0 - sq / d;
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

KernelMatrices build_matrices(const KernelSpec& spec, const SampleSet& samples)
{
    const Matrix& x = samples.matrix();
    const Eigen::Index n = samples.count();
    const Eigen::Index d = samples.dim();

    KernelMatrices out;
    out.k_matrix = kernel_matrix(spec, samples);
    out.grad_sum = Matrix::Zero(n, d);

    // grad_{x^k} k(x^i, x^k) is (k_ik / sigma2)(x^i - x^k) for RBF and
    // (2/d)(x^i - x^k) for Epanechnikov.
    const double epan_scale = 2.0 / static_cast<double>(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) {
                continue;
            }
            const double w = spec.family() == KernelFamily::Rbf ? out.k_matrix(i, k) / spec.sigma2() : epan_scale;
            out.grad_sum.row(i) += w * (x.row(i) - x.row(k));
        }
    }

    out.gram = x * x.transpose();
    return out;
}

double median_heuristic(const SampleSet& samples)
{
    const Eigen::Index n = samples.count();
    require(n >= 2, "median heuristic needs at least two samples");

    const Matrix& x = samples.matrix();
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            dist.push_back((x.row(i) - x.row(j)).norm());
        }
    }

    const std::size_t m = dist.size();
    const auto upper = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dist.begin(), upper, dist.end());
    double median = *upper;
    if (m % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), upper);
        median = 0.5 * (lower + median);
    }

    const double sigma2 = median * median;
    if (!(sigma2 > 0.0)) {
        fail(ErrorCode::DegenerateBandwidth, "median heuristic gave zero bandwidth (samples are identical)");
    }
    return sigma2;
}

}  // namespace steingrad
