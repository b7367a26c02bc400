#pragma once

#include "survsynth/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace survsynth {

struct BoxCoxParams {
    double lambda = 1.0;
    double shift = 0.0;     // added before the transform so every value is > 0
    bool constant = false;  // fitted on a constant column; identity-like

    bool operator==(const BoxCoxParams&) const = default;
};

inline constexpr double kBoxCoxEpsilon = 1e-6;
inline constexpr double kLambdaLow = -5.0;
inline constexpr double kLambdaHigh = 5.0;

double boxcox(double x, double lambda);
double inv_boxcox(double y, double lambda);

// Profile log-likelihood of the Box-Cox transform for already-positive data.
double boxcox_log_likelihood(std::span<const double> positive_values, double lambda);

// Golden-section maximisation of the log-likelihood on [-5, 5] (tolerance 1e-4).
BoxCoxParams fit_boxcox(std::span<const double> values);

struct FeatureTransform {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    BoxCoxParams boxcox;  // numeric only
    double min = 0.0;     // of the transformed training values
    double max = 1.0;

    bool operator==(const FeatureTransform&) const = default;
};

// Per-feature mapping between raw values and [0,1]. Numeric features go
// through shift + Box-Cox + min-max scaling; binary features pass through.
class PreprocessModel {
public:
    PreprocessModel() = default;
    PreprocessModel(FeatureSchema schema, std::vector<FeatureTransform> features);

    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<FeatureTransform>& features() const noexcept { return features_; }
    std::size_t numeric_count() const;
    std::size_t binary_count() const;

    double forward(std::size_t col, double raw) const;   // clipped to [0,1]
    double backward(std::size_t col, double scaled) const;

    bool operator==(const PreprocessModel&) const = default;

private:
    FeatureSchema schema_;
    std::vector<FeatureTransform> features_;
};

PreprocessModel fit_preprocessor(const Dataset& ds);

// N x D matrix in schema order (duration and event last), entries in [0,1].
Matrix transform(const PreprocessModel& model, const Dataset& ds);

// Inverse mapping. Binaries become 1 iff value >= 0.5, durations are floored
// at 0. Entries must lie in [0,1] up to 1e-9.
Dataset inverse_transform(const PreprocessModel& model, const Matrix& scaled);

std::string preprocess_to_json_text(const PreprocessModel& model);
PreprocessModel preprocess_from_json_text(const std::string& text);

}  // namespace survsynth
