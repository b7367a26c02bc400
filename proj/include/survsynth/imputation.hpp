#pragma once

#include "survsynth/dataset.hpp"

#include <string>
#include <vector>

namespace survsynth {

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;  // true = missing

class ImputationError : public Error {
public:
    using Error::Error;
};

struct MiceOptions {
    int max_iter = 20;
    double tol = 1e-4;  // max |change| of imputed numerics between sweeps
    std::uint64_t seed = 0;
};

struct MiceResult {
    Matrix completed;
    int sweeps = 0;
    bool converged = false;
    std::vector<std::string> log;  // singular-design fallbacks and similar notes
};

// Chained equations: numeric columns by least squares, binary columns by
// logistic regression (IRLS) thresholded at 0.5, each on every other column
// plus an intercept. Observed cells are never written. Column visit order is
// reshuffled per sweep from the seed.
MiceResult mice_impute(const Matrix& table, const MissingMask& missing, const FeatureSchema& schema,
                       const MiceOptions& opts = {});

}  // namespace survsynth
