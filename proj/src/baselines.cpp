#include "survsynth/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace survsynth {

Dataset random_oversample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n == 0) return Dataset(ds.schema(), Matrix(0, static_cast<Eigen::Index>(ds.schema().size())));
    if (ds.empty()) throw DataError("random_oversample: cannot draw from an empty dataset");
    auto rng = make_rng(seed, "baseline.ros");
    std::uniform_int_distribution<std::size_t> pick(0, ds.rows() - 1);
    Matrix out(static_cast<Eigen::Index>(n), ds.values().cols());
    for (std::size_t i = 0; i < n; ++i)
        out.row(static_cast<Eigen::Index>(i)) = ds.values().row(static_cast<Eigen::Index>(pick(rng)));
    return Dataset(ds.schema(), std::move(out), std::vector<std::size_t>(n, kSyntheticRowId));
}

Dataset smote(const Dataset& ds, std::size_t n, std::size_t k, std::uint64_t seed, SmoteProvenance* provenance) {
    if (k < 1) throw DataError("smote: k must be >= 1");
    if (ds.rows() <= k)
        throw DataError("smote: need more than k = " + std::to_string(k) + " rows, got " + std::to_string(ds.rows()));
    const auto& schema = ds.schema();
    const Matrix& v = ds.values();
    std::vector<Eigen::Index> numeric;
    for (std::size_t c = 0; c < schema.size(); ++c)
        if (schema[c].kind == FeatureKind::Numeric) numeric.push_back(static_cast<Eigen::Index>(c));

    const auto rows = static_cast<Eigen::Index>(ds.rows());
    Matrix scaled(rows, static_cast<Eigen::Index>(numeric.size()));
    for (std::size_t j = 0; j < numeric.size(); ++j) {
        const auto col = v.col(numeric[j]);
        const double lo = col.minCoeff(), hi = col.maxCoeff();
        const double span = hi > lo ? hi - lo : 1.0;
        scaled.col(static_cast<Eigen::Index>(j)) = (col.array() - lo) / span;
    }

    // k nearest neighbours of every row, ties broken by row index.
    std::vector<std::vector<std::size_t>> knn(ds.rows());
    std::vector<std::pair<double, std::size_t>> dist(ds.rows() - 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::size_t m = 0;
        for (Eigen::Index j = 0; j < rows; ++j)
            if (j != i)
                dist[m++] = {(scaled.row(i) - scaled.row(j)).squaredNorm(), static_cast<std::size_t>(j)};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t q = 0; q < k; ++q) knn[static_cast<std::size_t>(i)].push_back(dist[q].second);
    }

    auto rng = make_rng(seed, "baseline.smote");
    std::uniform_int_distribution<std::size_t> pick_base(0, ds.rows() - 1);
    std::uniform_int_distribution<std::size_t> pick_nb(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix out(static_cast<Eigen::Index>(n), v.cols());
    if (provenance) *provenance = {};
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t base = pick_base(rng);
        const std::size_t nb = knn[base][pick_nb(rng)];
        const double u = unit(rng);
        const auto r = static_cast<Eigen::Index>(s);
        out.row(r) = v.row(static_cast<Eigen::Index>(base));
        for (const Eigen::Index c : numeric) {
            const double a = v(static_cast<Eigen::Index>(base), c);
            const double b = v(static_cast<Eigen::Index>(nb), c);
            out(r, c) = a + u * (b - a);
        }
        if (provenance) {
            provenance->base.push_back(base);
            provenance->neighbour.push_back(nb);
            provenance->weight.push_back(u);
        }
    }
    return Dataset(schema, std::move(out), std::vector<std::size_t>(n, kSyntheticRowId));
}

}  // namespace survsynth
