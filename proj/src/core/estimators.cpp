#include "estimators.hpp"

#include "error.hpp"

#include <cmath>
#include <string>

namespace steingrad {

std::string_view to_string(Statistic statistic) noexcept
{
    return statistic == Statistic::V ? "V" : "U";
}

Statistic statistic_from_string(std::string_view name)
{
    if (name == "V" || name == "v") {
        return Statistic::V;
    }
    if (name == "U" || name == "u") {
        return Statistic::U;
    }
    fail(ErrorCode::InvalidArgument, "unknown statistic '" + std::string(name) + "' (expected V or U)");
}

std::string_view to_string(EstimatorKind kind) noexcept
{
    switch (kind) {
        case EstimatorKind::SteinNonparamV: return "stein_nonparam_v";
        case EstimatorKind::SteinNonparamU: return "stein_nonparam_u";
        case EstimatorKind::SteinParamV: return "stein_param_v";
        case EstimatorKind::SteinParamU: return "stein_param_u";
        case EstimatorKind::ScoreMatchRbf: return "score_match_rbf";
        case EstimatorKind::ScoreMatchEpanechnikov: return "score_match_epanechnikov";
        case EstimatorKind::Kde: return "kde";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name)
{
    for (auto kind : {EstimatorKind::SteinNonparamV, EstimatorKind::SteinNonparamU, EstimatorKind::SteinParamV,
                      EstimatorKind::SteinParamU, EstimatorKind::ScoreMatchRbf, EstimatorKind::ScoreMatchEpanechnikov,
                      EstimatorKind::Kde}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown estimator kind '" + std::string(name) + "'");
}

namespace {

void require_eta(double eta, Statistic statistic)
{
    require(std::isfinite(eta) && eta >= 0.0, "ridge eta must be non-negative and finite");
    if (statistic == Statistic::U) {
        require(eta >= kMinUStatisticEta, "U-statistic systems need eta >= 1e-8");
    }
}

Matrix with_ridge(Matrix m, double eta)
{
    m.diagonal().array() += eta;
    return m;
}

}  // namespace

GradientField kde_fit(const SampleSet& samples, const KernelSpec& spec)
{
    const KernelMatrices km = build_matrices(spec, samples);
    const Vector row_sums = km.k_matrix.rowwise().sum();
    for (Eigen::Index i = 0; i < row_sums.size(); ++i) {
        if (row_sums(i) == 0.0 || !std::isfinite(row_sums(i))) {
            fail(ErrorCode::DegenerateDenominator,
                 "KDE denominator (kernel row sum) is zero at sample row " + std::to_string(i));
        }
    }
    return {-(row_sums.cwiseInverse().asDiagonal() * km.grad_sum)};
}

GradientField stein_nonparametric_fit(const SampleSet& samples, const KernelSpec& spec, double eta,
                                      Statistic statistic, SolveDiagnostics* diagnostics)
{
    require_eta(eta, statistic);
    const KernelMatrices km = build_matrices(spec, samples);
    Matrix system = km.k_matrix;
    if (statistic == Statistic::U) {
        system.diagonal().setZero();
    }
    return {-solve_symmetric(with_ridge(std::move(system), eta), km.grad_sum, diagnostics)};
}

Matrix epanechnikov_score_sigma(const SampleSet& samples)
{
    const Matrix u = samples.centered();
    const Matrix gram = u * u.transpose();
    const auto n = static_cast<double>(samples.count());
    const auto d = static_cast<double>(samples.dim());
    Matrix sigma = gram.array() + gram.trace() / n;
    return sigma / (d * d);
}

QuadraticSystem score_matching_system(const SampleSet& samples, const KernelSpec& spec)
{
    const Eigen::Index n = samples.count();
    const Eigen::Index d = samples.dim();

    if (spec.family() == KernelFamily::Epanechnikov) {
        const auto dd = static_cast<double>(d * d);
        return {dd * epanechnikov_score_sigma(samples), Vector::Constant(n, 0.5 * dd)};
    }

    const Matrix x = samples.centered();
    const Matrix k = kernel_matrix(spec, samples);
    const double sigma2 = spec.sigma2();
    const Vector k_ones = k.rowwise().sum();

    Matrix sigma = Matrix::Zero(n, n);
    Vector v = Vector::Zero(n);
    for (Eigen::Index i = 0; i < d; ++i) {
        const Vector xi = x.col(i);
        const Vector xi_sq = xi.cwiseProduct(xi);
        // K diag(x_i) - diag(x_i) K
        const Matrix m = k * xi.asDiagonal() - xi.asDiagonal() * k;
        sigma.noalias() += m.transpose() * m;
        v += sigma2 * k_ones - (k * xi_sq + xi_sq.cwiseProduct(k_ones) - 2.0 * xi.cwiseProduct(k * xi));
    }
    return {std::move(sigma), std::move(v)};
}

Vector score_matching_fit(const SampleSet& samples, const KernelSpec& spec, double eta,
                          SolveDiagnostics* diagnostics)
{
    require_eta(eta, Statistic::V);
    QuadraticSystem sys = score_matching_system(samples, spec);
    return solve_symmetric(with_ridge(std::move(sys.lhs), eta), sys.rhs, diagnostics);
}

GradientField score_matching_predict(const Vector& coeffs, const SampleSet& train, const KernelSpec& spec,
                                     const Matrix& queries)
{
    require(coeffs.size() == train.count(), "coefficient count does not match the training set");
    require(queries.cols() == train.dim(), "query dimension does not match the training set");
    const Matrix& x = train.matrix();
    Matrix out = Matrix::Zero(queries.rows(), queries.cols());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        const Vector y = queries.row(i).transpose();
        for (Eigen::Index k = 0; k < x.rows(); ++k) {
            out.row(i) += coeffs(k) * spec.grad_first_arg(y, x.row(k).transpose()).transpose();
        }
    }
    return {std::move(out)};
}

QuadraticSystem stein_parametric_system(const SampleSet& samples, double sigma2, Statistic statistic)
{
    const KernelSpec spec = KernelSpec::rbf(sigma2);
    const Matrix k = kernel_matrix(spec, samples);
    const Matrix u = samples.centered();
    const Matrix g = u * u.transpose();
    const Eigen::Index n = samples.count();

    const Matrix kk = k * k;
    const Matrix k_g = k.cwiseProduct(g);

    Matrix lambda;
    if (statistic == Statistic::V) {
        lambda = g.cwiseProduct(kk * k) + k * k_g * k - kk.cwiseProduct(g) * k - k * kk.cwiseProduct(g);
    } else {
        Matrix k_off = k;
        k_off.diagonal().setZero();
        Matrix k_g_off = k_g;
        k_g_off.diagonal().setZero();
        const Matrix k_koff = k * k_off;
        const Matrix koff_k = k_off * k;
        lambda = g.cwiseProduct(k_koff * k) + k * k_g_off * k - k_koff.cwiseProduct(g) * k - k * koff_k.cwiseProduct(g);
    }
    lambda = 0.5 * (lambda + lambda.transpose());

    const Matrix b_mat = k * g.diagonal().asDiagonal() * k + kk.cwiseProduct(g) - k * k_g - k_g * k;
    Vector b = b_mat * Vector::Ones(n);
    return {std::move(lambda), std::move(b)};
}

Vector stein_parametric_fit(const SampleSet& samples, double sigma2, double eta, Statistic statistic,
                            SolveDiagnostics* diagnostics)
{
    require_eta(eta, statistic);
    QuadraticSystem sys = stein_parametric_system(samples, sigma2, statistic);
    return solve_symmetric(with_ridge(std::move(sys.lhs), eta), sys.rhs, diagnostics);
}

Vector entropy_gradient_surrogate(const Matrix& grads_at_samples, std::span<const Matrix> jacobians)
{
    const auto count = static_cast<Eigen::Index>(jacobians.size());
    require(count >= 1, "entropy surrogate needs at least one sample");
    require(grads_at_samples.rows() == count, "gradient rows must match the number of Jacobians");
    const Eigen::Index d = grads_at_samples.cols();
    const Eigen::Index p = jacobians.front().cols();

    Vector out = Vector::Zero(p);
    for (Eigen::Index k = 0; k < count; ++k) {
        const Matrix& jac = jacobians[static_cast<std::size_t>(k)];
        require(jac.rows() == d && jac.cols() == p, "Jacobian " + std::to_string(k) + " has the wrong shape");
        out.noalias() += jac.transpose() * grads_at_samples.row(k).transpose();
    }
    return -out / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// FittedEstimator

namespace {

void require_kernel_for(EstimatorKind kind, const KernelSpec& spec)
{
    const bool rbf = spec.family() == KernelFamily::Rbf;
    switch (kind) {
        case EstimatorKind::SteinParamV:
        case EstimatorKind::SteinParamU:
        case EstimatorKind::ScoreMatchRbf:
            require(rbf, std::string(to_string(kind)) + " requires the RBF kernel");
            break;
        case EstimatorKind::ScoreMatchEpanechnikov:
            require(!rbf, "score_match_epanechnikov requires the Epanechnikov kernel");
            break;
        default:
            break;
    }
}

}  // namespace

bool FittedEstimator::is_parametric() const noexcept
{
    switch (kind_) {
        case EstimatorKind::SteinParamV:
        case EstimatorKind::SteinParamU:
        case EstimatorKind::ScoreMatchRbf:
        case EstimatorKind::ScoreMatchEpanechnikov:
            return true;
        default:
            return false;
    }
}

bool FittedEstimator::can_predict() const noexcept
{
    if (kind_ == EstimatorKind::SteinNonparamU) {
        return false;
    }
    if (kind_ == EstimatorKind::SteinNonparamV) {
        return kinv_.has_value();
    }
    return true;
}

void FittedEstimator::validate() const
{
    require_kernel_for(kind_, spec_);

    const Eigen::Index n = train_.count();
    if (is_parametric()) {
        require(coeffs_.has_value() && !grads_.has_value(), "parametric estimators carry coefficients only");
        require(coeffs_->size() == n, "coefficient count does not match the training set");
        require(!kinv_.has_value(), "parametric estimators carry no kernel inverse");
    } else {
        require(grads_.has_value() && !coeffs_.has_value(), "non-parametric estimators carry gradients only");
        require(grads_->rows() == n && grads_->cols() == train_.dim(), "gradient matrix has the wrong shape");
        if (kinv_.has_value()) {
            require(kind_ == EstimatorKind::SteinNonparamV, "only stein_nonparam_v stores a kernel inverse");
            require(kinv_->rows() == n && kinv_->cols() == n, "kernel inverse has the wrong shape");
        }
    }
}


FittedEstimator FittedEstimator::fit(EstimatorKind kind, const SampleSet& train, const KernelSpec& spec, double eta,
                                     bool predictive)
{
    require_kernel_for(kind, spec);
    FittedEstimator out(kind, train, spec, eta);
    switch (kind) {
        case EstimatorKind::SteinNonparamV:
            out.grads_ = stein_nonparametric_fit(train, spec, eta, Statistic::V, &out.diagnostics_).grads;
            if (predictive) {
                SolveDiagnostics inverse_diagnostics;
                out.kinv_ = invert_symmetric(with_ridge(kernel_matrix(spec, train), eta), &inverse_diagnostics);
                if (inverse_diagnostics.jitter_level > out.diagnostics_.jitter_level) {
                    out.diagnostics_ = inverse_diagnostics;
                }
            }
            break;
        case EstimatorKind::SteinNonparamU:
            out.grads_ = stein_nonparametric_fit(train, spec, eta, Statistic::U, &out.diagnostics_).grads;
            break;
        case EstimatorKind::SteinParamV:
            out.coeffs_ = stein_parametric_fit(train, spec.sigma2(), eta, Statistic::V, &out.diagnostics_);
            break;
        case EstimatorKind::SteinParamU:
            out.coeffs_ = stein_parametric_fit(train, spec.sigma2(), eta, Statistic::U, &out.diagnostics_);
            break;
        case EstimatorKind::ScoreMatchRbf:
        case EstimatorKind::ScoreMatchEpanechnikov:
            out.coeffs_ = score_matching_fit(train, spec, eta, &out.diagnostics_);
            break;
        case EstimatorKind::Kde:
            out.grads_ = kde_fit(train, spec).grads;
            break;
    }
    out.validate();
    return out;
}

FittedEstimator FittedEstimator::from_parts(EstimatorKind kind, SampleSet train, KernelSpec spec, double eta,
                                            std::optional<Matrix> grads, std::optional<Vector> coeffs,
                                            std::optional<Matrix> kinv, SolveDiagnostics diagnostics)
{
    require(std::isfinite(eta) && eta >= 0.0, "ridge eta must be non-negative and finite");
    FittedEstimator out(kind, std::move(train), spec, eta);
    out.grads_ = std::move(grads);
    out.coeffs_ = std::move(coeffs);
    out.kinv_ = std::move(kinv);
    out.diagnostics_ = diagnostics;
    out.validate();
    return out;
}

Matrix FittedEstimator::training_gradients() const
{
    if (grads_) {
        return *grads_;
    }
    return score_matching_predict(*coeffs_, train_, spec_, train_.matrix()).grads;
}

Vector FittedEstimator::predict(const Vector& y) const
{
    require(y.size() == train_.dim(), "query dimension does not match the training set");
    require(y.allFinite(), "query point is not finite");

    if (is_parametric()) {
        const Matrix& x = train_.matrix();
        Vector out = Vector::Zero(y.size());
        for (Eigen::Index k = 0; k < x.rows(); ++k) {
            out += (*coeffs_)(k) * spec_.grad_first_arg(y, x.row(k).transpose());
        }
        return out;
    }

    switch (kind_) {
        case EstimatorKind::SteinNonparamV:
            return stein_predict(*this, y);
        case EstimatorKind::Kde: {
            const Matrix& x = train_.matrix();
            double denom = 0.0;
            Vector num = Vector::Zero(y.size());
            for (Eigen::Index k = 0; k < x.rows(); ++k) {
                const Vector xk = x.row(k).transpose();
                denom += spec_.eval(y, xk);
                num += spec_.grad_first_arg(y, xk);
            }
            if (denom == 0.0 || !std::isfinite(denom)) {
                fail(ErrorCode::DegenerateDenominator, "KDE denominator is zero at the query point");
            }
            return num / denom;
        }
        default:
            fail(ErrorCode::Unsupported,
                 std::string(to_string(kind_)) + " has no out-of-sample predictor; use stein_nonparam_v");
    }
}

Matrix FittedEstimator::predict(const Matrix& queries) const
{
    require(queries.cols() == train_.dim(), "query dimension does not match the training set");
    Matrix out(queries.rows(), queries.cols());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        out.row(i) = predict(Vector(queries.row(i).transpose())).transpose();
    }
    return out;
}

Vector stein_predict(const FittedEstimator& fitted, const Vector& y)
{
    if (fitted.kind() != EstimatorKind::SteinNonparamV || !fitted.kinv()) {
        fail(ErrorCode::Unsupported, "stein_predict needs a stein_nonparam_v estimator fitted with prediction enabled");
    }
    const KernelSpec& spec = fitted.spec();
    const Matrix& x = fitted.train().matrix();
    const Matrix& kinv = *fitted.kinv();
    const Matrix& grads = *fitted.grads();
    const Eigen::Index n = x.rows();
    require(y.size() == x.cols(), "query dimension does not match the training set");

    Vector k_yx(n);
    Matrix grad_y(n, x.cols());  // row k: grad_y k(x^k, y)
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vector xk = x.row(k).transpose();
        k_yx(k) = spec.eval(y, xk);
        grad_y.row(k) = spec.grad_first_arg(y, xk).transpose();
    }

    const Vector t = kinv * k_yx;
    const double schur = spec.eval(y, y) + fitted.eta() - k_yx.dot(t);
    if (!(schur > 0.0) || !std::isfinite(schur)) {
        fail(ErrorCode::NumericalDegeneracy, "non-positive Schur complement in stein_predict");
    }
    const Vector numer = grads.transpose() * k_yx - grad_y.transpose() * (t.array() + 1.0).matrix();
    return -numer / schur;
}

}  // namespace steingrad
