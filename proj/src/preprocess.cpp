#include "survsynth/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace survsynth {

double boxcox(double x, double lambda) {
    if (std::abs(lambda) < 1e-12) return std::log(x);
    return std::expm1(lambda * std::log(x)) / lambda;
}

double inv_boxcox(double y, double lambda) {
    if (std::abs(lambda) < 1e-12) return std::exp(y);
    const double base = std::max(lambda * y + 1.0, 0.0);
    return std::pow(base, 1.0 / lambda);
}

double boxcox_log_likelihood(std::span<const double> x, double lambda) {
    const auto n = static_cast<double>(x.size());
    double sum_log = 0.0;
    double mean = 0.0;
    for (double v : x) {
        sum_log += std::log(v);
        mean += boxcox(v, lambda);
    }
    mean /= n;
    double var = 0.0;
    for (double v : x) {
        const double d = boxcox(v, lambda) - mean;
        var += d * d;
    }
    var /= n;
    if (var <= 0.0 || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return (lambda - 1.0) * sum_log - 0.5 * n * std::log(var);
}

BoxCoxParams fit_boxcox(std::span<const double> values) {
    if (values.empty()) throw DataError("fit_boxcox: no values");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    BoxCoxParams p;
    p.shift = std::max(0.0, kBoxCoxEpsilon - *lo);
    if (*lo == *hi) {
        p.lambda = 1.0;
        p.constant = true;
        return p;
    }
    std::vector<double> x(values.begin(), values.end());
    for (double& v : x) v += p.shift;

    auto f = [&](double l) { return boxcox_log_likelihood(x, l); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = kLambdaLow, b = kLambdaHigh;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-4) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    p.lambda = 0.5 * (a + b);
    return p;
}

// ---------------------------------------------------------------------------

PreprocessModel::PreprocessModel(FeatureSchema schema, std::vector<FeatureTransform> features)
    : schema_(std::move(schema)), features_(std::move(features)) {
    if (features_.size() != schema_.size()) throw DataError("preprocess model does not cover every schema entry");
    for (std::size_t c = 0; c < features_.size(); ++c) {
        const auto& f = features_[c];
        if (f.name != schema_[c].name || f.kind != schema_[c].kind)
            throw DataError("preprocess model entry '" + f.name + "' does not match schema entry '" +
                            schema_[c].name + "'");
        if (f.kind == FeatureKind::Numeric && !f.boxcox.constant && !(f.max > f.min))
            throw DataError("preprocess model: degenerate range for '" + f.name + "'");
    }
}

std::size_t PreprocessModel::numeric_count() const {
    return static_cast<std::size_t>(std::count_if(features_.begin(), features_.end(),
                                                  [](const auto& f) { return f.kind == FeatureKind::Numeric; }));
}

std::size_t PreprocessModel::binary_count() const { return features_.size() - numeric_count(); }

double PreprocessModel::forward(std::size_t col, double raw) const {
    const auto& f = features_.at(col);
    if (f.kind == FeatureKind::Binary) return raw >= 0.5 ? 1.0 : 0.0;
    if (f.boxcox.constant) return 0.0;
    const double shifted = std::max(raw + f.boxcox.shift, kBoxCoxEpsilon * 1e-3);
    const double y = boxcox(shifted, f.boxcox.lambda);
    return std::clamp((y - f.min) / (f.max - f.min), 0.0, 1.0);
}

double PreprocessModel::backward(std::size_t col, double scaled) const {
    const auto& f = features_.at(col);
    if (f.kind == FeatureKind::Binary) return scaled >= 0.5 ? 1.0 : 0.0;
    if (f.boxcox.constant) return f.min;  // min holds the raw constant
    const double y = f.min + scaled * (f.max - f.min);
    double x = inv_boxcox(y, f.boxcox.lambda) - f.boxcox.shift;
    if (schema_[col].role == FeatureRole::Duration) x = std::max(x, 0.0);
    return x;
}

PreprocessModel fit_preprocessor(const Dataset& ds) {
    if (ds.empty()) throw DataError("fit_preprocessor: empty dataset");
    const auto& schema = ds.schema();
    std::vector<FeatureTransform> features;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        FeatureTransform f;
        f.name = schema[c].name;
        f.kind = schema[c].kind;
        if (f.kind == FeatureKind::Numeric) {
            const Vector col = ds.values().col(static_cast<Eigen::Index>(c));
            f.boxcox = fit_boxcox(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
            if (f.boxcox.constant) {
                f.min = f.max = col(0);
            } else {
                f.min = std::numeric_limits<double>::infinity();
                f.max = -std::numeric_limits<double>::infinity();
                for (Eigen::Index i = 0; i < col.size(); ++i) {
                    const double y = boxcox(col(i) + f.boxcox.shift, f.boxcox.lambda);
                    f.min = std::min(f.min, y);
                    f.max = std::max(f.max, y);
                }
            }
        } else {
            f.min = 0.0;
            f.max = 1.0;
        }
        features.push_back(std::move(f));
    }
    return PreprocessModel(schema, std::move(features));
}

Matrix transform(const PreprocessModel& model, const Dataset& ds) {
    if (!(ds.schema() == model.schema())) {
        for (const auto& e : ds.schema().entries())
            if (!model.schema().find(e.name)) throw DataError("transform: unknown feature '" + e.name + "'");
        throw DataError("transform: dataset schema does not match the preprocessing model");
    }
    Matrix out(ds.values().rows(), ds.values().cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            out(r, c) = model.forward(static_cast<std::size_t>(c), ds.values()(r, c));
    return out;
}

Dataset inverse_transform(const PreprocessModel& model, const Matrix& scaled) {
    if (static_cast<std::size_t>(scaled.cols()) != model.schema().size())
        throw DataError("inverse_transform: column count does not match the preprocessing model");
    constexpr double kTol = 1e-9;
    Matrix raw(scaled.rows(), scaled.cols());
    for (Eigen::Index r = 0; r < scaled.rows(); ++r) {
        for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
            const double v = scaled(r, c);
            if (!(v >= -kTol && v <= 1.0 + kTol))
                throw DataError("inverse_transform: value " + format_double(v) + " at row " + std::to_string(r + 1) +
                                ", column '" + model.schema()[static_cast<std::size_t>(c)].name + "' outside [0,1]");
            raw(r, c) = model.backward(static_cast<std::size_t>(c), std::clamp(v, 0.0, 1.0));
        }
    }
    return Dataset(model.schema(), std::move(raw));
}

// ---------------------------------------------------------------------------

std::string preprocess_to_json_text(const PreprocessModel& model) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : model.features()) {
        nlohmann::json j{{"name", f.name}, {"kind", f.kind == FeatureKind::Numeric ? "numeric" : "binary"}};
        if (f.kind == FeatureKind::Numeric) {
            j["lambda"] = f.boxcox.lambda;
            j["shift"] = f.boxcox.shift;
            j["constant"] = f.boxcox.constant;
            j["min"] = f.min;
            j["max"] = f.max;
        }
        features.push_back(std::move(j));
    }
    nlohmann::json out{{"schema", nlohmann::json::parse(schema_to_json_text(model.schema()))}, {"features", features}};
    return out.dump(2) + "\n";
}

PreprocessModel preprocess_from_json_text(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        FeatureSchema schema = schema_from_json_text(j.at("schema").dump());
        std::vector<FeatureTransform> features;
        for (const auto& item : j.at("features")) {
            FeatureTransform f;
            f.name = item.at("name").get<std::string>();
            f.kind = item.at("kind").get<std::string>() == "numeric" ? FeatureKind::Numeric : FeatureKind::Binary;
            if (f.kind == FeatureKind::Numeric) {
                f.boxcox.lambda = item.at("lambda").get<double>();
                f.boxcox.shift = item.at("shift").get<double>();
                f.boxcox.constant = item.value("constant", false);
                f.min = item.at("min").get<double>();
                f.max = item.at("max").get<double>();
            }
            features.push_back(std::move(f));
        }
        return PreprocessModel(std::move(schema), std::move(features));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("preprocess model: ") + e.what());
    }
}

}  // namespace survsynth
