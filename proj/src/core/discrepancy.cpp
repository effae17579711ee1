#include "discrepancy.hpp"

#include "error.hpp"

namespace steingrad {

KsdTerms ksd_terms(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec, Statistic statistic)
{
    const Eigen::Index n = samples.count();
    require(grads.rows() == n && grads.cols() == samples.dim(), "gradient matrix shape does not match the samples");
    require(grads.allFinite(), "gradient matrix contains non-finite entries");
    if (statistic == Statistic::U) {
        require(n >= 2, "the U-statistic needs at least two samples");
    }

    KernelMatrices km = build_matrices(spec, samples);
    if (statistic == Statistic::U) {
        km.k_matrix.diagonal().setZero();
    }

    const Matrix& x = samples.matrix();
    double constant = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vector xj = x.row(j).transpose();
        if (statistic == Statistic::V) {
            constant += spec.cross_trace(xj, xj);
        }
        for (Eigen::Index l = j + 1; l < n; ++l) {
            constant += 2.0 * spec.cross_trace(xj, x.row(l).transpose());
        }
    }

    KsdTerms terms;
    terms.quadratic = (grads.transpose() * km.k_matrix * grads).trace();
    // grad_sum has no diagonal contribution for translation-invariant
    // kernels, so it serves both statistics.
    terms.linear = grads.cwiseProduct(km.grad_sum).sum();
    terms.constant = constant;
    const auto k = static_cast<double>(n);
    terms.normaliser = statistic == Statistic::V ? k * k : k * (k - 1.0);
    return terms;
}

KsdEstimate ksd(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec, Statistic statistic,
                bool includes_constant)
{
    const KsdTerms t = ksd_terms(samples, grads, spec, statistic);
    const double sum = t.quadratic + 2.0 * t.linear + (includes_constant ? t.constant : 0.0);
    return {sum / t.normaliser, statistic, includes_constant};
}

KsdEstimate ksd_v(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec, bool includes_constant)
{
    return ksd(samples, grads, spec, Statistic::V, includes_constant);
}

KsdEstimate ksd_u(const SampleSet& samples, const Matrix& grads, const KernelSpec& spec, bool includes_constant)
{
    return ksd(samples, grads, spec, Statistic::U, includes_constant);
}

KsdEstimate ksd_to_target(const SampleSet& samples, const ScoreFn& score_fn, const KernelSpec& spec,
                          Statistic statistic)
{
    Matrix grads(samples.count(), samples.dim());
    for (Eigen::Index i = 0; i < samples.count(); ++i) {
        const Vector g = score_fn(samples.row(i));
        require(g.size() == samples.dim(), "score function returned the wrong dimension");
        grads.row(i) = g.transpose();
    }
    return ksd(samples, grads, spec, statistic, true);
}

}  // namespace steingrad
