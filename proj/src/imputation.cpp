#include "survsynth/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace survsynth {

namespace {

Matrix design_without(const Matrix& table, Eigen::Index skip, const std::vector<Eigen::Index>& rows) {
    Matrix x(static_cast<Eigen::Index>(rows.size()), table.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = 1.0;
        Eigen::Index c = 1;
        for (Eigen::Index j = 0; j < table.cols(); ++j)
            if (j != skip) x(r, c++) = table(rows[i], j);
    }
    return x;
}

std::optional<Vector> least_squares(const Matrix& x, const Vector& y) {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < x.cols()) return std::nullopt;
    return Vector(qr.solve(y));
}

std::optional<Vector> logistic_irls(const Matrix& x, const Vector& y) {
    Vector beta = Vector::Zero(x.cols());
    bool solved = false;
    for (int it = 0; it < 25; ++it) {
        const Vector eta = (x * beta).cwiseMax(-30.0).cwiseMin(30.0);
        const Vector p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        const Vector w = (p.array() * (1.0 - p.array())).max(1e-10).matrix();
        const Matrix xtwx = x.transpose() * w.asDiagonal() * x;
        Eigen::LDLT<Matrix> ldlt(xtwx);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) break;
        const Vector step = ldlt.solve(x.transpose() * (y - p));
        if (!step.allFinite()) break;
        beta += step;
        solved = true;
        if (step.cwiseAbs().maxCoeff() < 1e-8) break;
    }
    if (!solved) return std::nullopt;
    return beta;
}

}  // namespace

MiceResult mice_impute(const Matrix& table, const MissingMask& missing, const FeatureSchema& schema,
                       const MiceOptions& opts) {
    if (missing.rows() != table.rows() || missing.cols() != table.cols() ||
        static_cast<std::size_t>(table.cols()) != schema.size())
        throw ImputationError("mice_impute: table, mask and schema shapes disagree");
    if (opts.max_iter < 1) throw ImputationError("mice_impute: max_iter must be >= 1");

    MiceResult res;
    res.completed = table;
    const Eigen::Index n = table.rows();
    const Eigen::Index d = table.cols();
    std::vector<Eigen::Index> incomplete;
    std::vector<std::vector<Eigen::Index>> observed_rows(static_cast<std::size_t>(d));
    std::vector<std::vector<Eigen::Index>> missing_rows(static_cast<std::size_t>(d));
    std::vector<double> fallback(static_cast<std::size_t>(d), 0.0);

    for (Eigen::Index j = 0; j < d; ++j) {
        auto& obs = observed_rows[static_cast<std::size_t>(j)];
        auto& mis = missing_rows[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i) (missing(i, j) ? mis : obs).push_back(i);
        const auto& entry = schema[static_cast<std::size_t>(j)];
        if (obs.empty()) throw ImputationError("mice_impute: column '" + entry.name + "' has no observed value");
        double sum = 0.0;
        for (auto i : obs) sum += table(i, j);
        const double mean = sum / static_cast<double>(obs.size());
        fallback[static_cast<std::size_t>(j)] =
            entry.kind == FeatureKind::Binary ? (mean > 0.5 ? 1.0 : 0.0) : mean;  // ties go to 0
        for (auto i : mis) res.completed(i, j) = fallback[static_cast<std::size_t>(j)];
        if (!mis.empty()) incomplete.push_back(j);
    }
    if (incomplete.empty()) {
        res.converged = true;
        return res;
    }

    auto rng = make_rng(opts.seed, "mice.order");
    for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
        std::shuffle(incomplete.begin(), incomplete.end(), rng);
        double max_change = 0.0;
        bool binary_changed = false;
        bool any_numeric = false;
        for (const Eigen::Index j : incomplete) {
            const auto& entry = schema[static_cast<std::size_t>(j)];
            const auto& obs = observed_rows[static_cast<std::size_t>(j)];
            const auto& mis = missing_rows[static_cast<std::size_t>(j)];
            const Matrix x_obs = design_without(res.completed, j, obs);
            Vector y(static_cast<Eigen::Index>(obs.size()));
            for (std::size_t i = 0; i < obs.size(); ++i) y(static_cast<Eigen::Index>(i)) = table(obs[i], j);

            std::optional<Vector> beta;
            const bool binary = entry.kind == FeatureKind::Binary;
            const bool constant = (y.array() == y(0)).all();
            if (!constant) beta = binary ? logistic_irls(x_obs, y) : least_squares(x_obs, y);
            if (!beta && !constant)
                res.log.push_back("sweep " + std::to_string(sweep) + ": singular design for '" + entry.name +
                                  "', using column " + (binary ? "mode" : "mean"));

            const Matrix x_mis = design_without(res.completed, j, mis);
            for (std::size_t i = 0; i < mis.size(); ++i) {
                double v = constant ? y(0) : fallback[static_cast<std::size_t>(j)];
                if (beta) {
                    const double lin = x_mis.row(static_cast<Eigen::Index>(i)).dot(*beta);
                    v = binary ? (lin >= 0.0 ? 1.0 : 0.0) : lin;  // sigmoid(lin) >= 0.5
                }
                if (entry.role == FeatureRole::Duration) v = std::max(v, 0.0);
                double& cell = res.completed(mis[i], j);
                if (binary) {
                    binary_changed = binary_changed || cell != v;
                } else {
                    any_numeric = true;
                    max_change = std::max(max_change, std::abs(cell - v));
                }
                cell = v;
            }
        }
        res.sweeps = sweep;
        if (any_numeric ? max_change < opts.tol : !binary_changed) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace survsynth
