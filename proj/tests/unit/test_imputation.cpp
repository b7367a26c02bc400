#include "helpers.hpp"
#include "survsynth/imputation.hpp"

#include <doctest.h>

#include <cmath>

using namespace survsynth;
using survsynth::testing::stub_ckd;
using survsynth::testing::toy_schema;

namespace {

MissingMask random_missing(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
    Rng rng(seed);
    std::bernoulli_distribution miss(rate);
    MissingMask m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = miss(rng);
    return m;
}

}  // namespace

TEST_CASE("a table with nothing missing comes back unchanged") {
    const Matrix& t = stub_ckd().values();
    const auto res = mice_impute(t, MissingMask::Constant(t.rows(), t.cols(), false), stub_ckd().schema());
    CHECK(res.completed == t);
    CHECK(res.converged);
}

TEST_CASE("an exact linear relation is recovered within 1e-6") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::bernoulli_distribution coin(0.5);
    Matrix t(40, 4);
    MissingMask miss = MissingMask::Constant(40, 4, false);
    for (Eigen::Index i = 0; i < 40; ++i) {
        t(i, 0) = u(rng);
        t(i, 1) = coin(rng);
        t(i, 2) = 2.0 * t(i, 0) + 1.0;
        t(i, 3) = coin(rng);
        if (i % 5 == 0) {
            miss(i, 2) = true;
            t(i, 2) = 0.0;
        }
    }
    const auto res = mice_impute(t, miss, toy_schema(), {20, 1e-4, 3});
    for (Eigen::Index i = 0; i < 40; i += 5) CHECK(std::abs(res.completed(i, 2) - (2.0 * t(i, 0) + 1.0)) < 1e-6);
    CHECK(res.converged);
}

TEST_CASE("regression imputation beats the column mean on correlated data") {
    const auto& ds = stub_ckd();
    const auto col = static_cast<Eigen::Index>(ds.schema().index_of("eGFRBaseline"));
    Matrix t = ds.values();
    MissingMask miss = MissingMask::Constant(t.rows(), t.cols(), false);
    for (Eigen::Index i = 0; i < t.rows(); i += 5) miss(i, col) = true, t(i, col) = 0.0;

    double mean = 0.0;
    int observed = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        if (!miss(i, col)) mean += t(i, col), ++observed;
    mean /= observed;

    const auto res = mice_impute(t, miss, ds.schema(), {20, 1e-4, 2});
    double se_mice = 0.0, se_mean = 0.0;
    for (Eigen::Index i = 0; i < t.rows(); i += 5) {
        const double truth = ds.values()(i, col);
        se_mice += std::pow(res.completed(i, col) - truth, 2);
        se_mean += std::pow(mean - truth, 2);
    }
    CHECK(se_mice < se_mean);
}

TEST_CASE("observed cells are never written and imputed cells respect column types") {
    const auto& ds = stub_ckd();
    const MissingMask miss = random_missing(ds.values().rows(), ds.values().cols(), 0.15, 9);
    Matrix t = ds.values();
    for (Eigen::Index i = 0; i < t.size(); ++i)
        if (miss.data()[i]) t.data()[i] = -99.0;
    const auto res = mice_impute(t, miss, ds.schema(), {10, 1e-4, 4});
    for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            if (!miss(r, c)) REQUIRE(res.completed(r, c) == t(r, c));
            const auto& e = ds.schema()[static_cast<std::size_t>(c)];
            if (e.kind == FeatureKind::Binary)
                REQUIRE((res.completed(r, c) == 0.0 || res.completed(r, c) == 1.0));
            if (e.role == FeatureRole::Duration) REQUIRE(res.completed(r, c) >= 0.0);
        }
    CHECK(res.sweeps >= 1);
    CHECK(res.sweeps <= 10);
}

TEST_CASE("imputation is a pure function of the seed") {
    const auto& ds = stub_ckd();
    const MissingMask miss = random_missing(ds.values().rows(), ds.values().cols(), 0.1, 3);
    const auto a = mice_impute(ds.values(), miss, ds.schema(), {5, 1e-4, 7});
    const auto b = mice_impute(ds.values(), miss, ds.schema(), {5, 1e-4, 7});
    CHECK(a.completed == b.completed);
    CHECK(a.sweeps == b.sweeps);
}

TEST_CASE("a column with no observed value is an error") {
    const Matrix t = Matrix::Ones(5, 4);
    MissingMask miss = MissingMask::Constant(5, 4, false);
    miss.col(0).setConstant(true);
    CHECK_THROWS_AS(mice_impute(t, miss, toy_schema()), ImputationError);
    CHECK_THROWS_AS(mice_impute(t, MissingMask::Constant(4, 4, false), toy_schema()), ImputationError);
}
