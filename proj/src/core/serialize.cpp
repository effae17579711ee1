#include "serialize.hpp"

#include "error.hpp"

#include <json.hpp>

namespace steingrad {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m)
{
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            data.push_back(m(i, j));
        }
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j, const char* field)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
        fail(ErrorCode::Parse, std::string("field '") + field + "' has inconsistent shape");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
        }
    }
    return m;
}

}  // namespace

std::string estimator_to_json(const FittedEstimator& estimator)
{
    json kernel{{"family", std::string(to_string(estimator.spec().family()))}};
    kernel["sigma2"] = estimator.spec().family() == KernelFamily::Rbf ? json(estimator.spec().sigma2()) : json(nullptr);

    json doc{
        {"format", kEstimatorFormat},
        {"version", kEstimatorFormatVersion},
        {"kind", std::string(to_string(estimator.kind()))},
        {"kernel", std::move(kernel)},
        {"eta", estimator.eta()},
        {"train", matrix_to_json(estimator.train().matrix())},
        {"fit_diagnostics",
         {{"jitter_level", estimator.diagnostics().jitter_level}, {"jitter", estimator.diagnostics().jitter}}},
    };
    doc["grads"] = estimator.grads() ? matrix_to_json(*estimator.grads()) : json(nullptr);
    if (estimator.coeffs()) {
        doc["coeffs"] = std::vector<double>(estimator.coeffs()->data(),
                                            estimator.coeffs()->data() + estimator.coeffs()->size());
    } else {
        doc["coeffs"] = nullptr;
    }
    doc["kinv"] = estimator.kinv() ? matrix_to_json(*estimator.kinv()) : json(nullptr);
    return doc.dump(2);
}

FittedEstimator estimator_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("estimator JSON: ") + e.what());
    }

    try {
        if (doc.at("format").get<std::string>() != kEstimatorFormat) {
            fail(ErrorCode::Parse, "not a steingrad estimator document");
        }
        if (doc.at("version").get<int>() != kEstimatorFormatVersion) {
            fail(ErrorCode::Parse, "unsupported estimator format version");
        }

        const EstimatorKind kind = estimator_kind_from_string(doc.at("kind").get<std::string>());
        const json& kj = doc.at("kernel");
        const KernelFamily family = kernel_family_from_string(kj.at("family").get<std::string>());
        const KernelSpec spec =
            family == KernelFamily::Rbf ? KernelSpec::rbf(kj.at("sigma2").get<double>()) : KernelSpec::epanechnikov();

        std::optional<Matrix> grads;
        if (doc.contains("grads") && !doc["grads"].is_null()) {
            grads = matrix_from_json(doc["grads"], "grads");
        }
        std::optional<Vector> coeffs;
        if (doc.contains("coeffs") && !doc["coeffs"].is_null()) {
            const auto c = doc["coeffs"].get<std::vector<double>>();
            coeffs = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
        }
        std::optional<Matrix> kinv;
        if (doc.contains("kinv") && !doc["kinv"].is_null()) {
            kinv = matrix_from_json(doc["kinv"], "kinv");
        }

        SolveDiagnostics diagnostics;
        if (doc.contains("fit_diagnostics")) {
            diagnostics.jitter_level = doc["fit_diagnostics"].value("jitter_level", 0);
            diagnostics.jitter = doc["fit_diagnostics"].value("jitter", 0.0);
        }

        return FittedEstimator::from_parts(kind, SampleSet(matrix_from_json(doc.at("train"), "train")), spec,
                                           doc.at("eta").get<double>(), std::move(grads), std::move(coeffs),
                                           std::move(kinv), diagnostics);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("estimator JSON: ") + e.what());
    }
}

}  // namespace steingrad
