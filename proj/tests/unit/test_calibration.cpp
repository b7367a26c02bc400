#include "helpers.hpp"
#include "survsynth/calibration.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace survsynth;
using survsynth::testing::small_bundle;
using survsynth::testing::stub_ckd;
using survsynth::testing::vec;

namespace {

CalibrationCurve curve_from(const std::vector<double>& observed, const std::vector<double>& predicted) {
    CalibrationCurve c;
    for (std::size_t i = 0; i < observed.size(); ++i) c.points.push_back({predicted[i], observed[i], 1});
    return c;
}

}  // namespace

TEST_CASE("decile groups partition the ranked population with sizes within 1") {
    Rng rng(4);
    std::uniform_real_distribution<double> u;
    for (Eigen::Index n : {10, 11, 37, 491}) {
        Vector pred(n), dur(n), ev(n);
        for (Eigen::Index i = 0; i < n; ++i) pred(i) = u(rng), dur(i) = 1.0 + u(rng), ev(i) = u(rng) < 0.3;
        const auto c = quantile_calibration(pred, dur, ev, 1.5);
        REQUIRE(c.points.size() == 10);
        std::size_t total = 0, lo = n, hi = 0;
        for (const auto& p : c.points) total += p.size, lo = std::min(lo, p.size), hi = std::max(hi, p.size);
        CHECK(total == static_cast<std::size_t>(n));
        CHECK(hi - lo <= 1);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (c.group[static_cast<std::size_t>(i)] < c.group[static_cast<std::size_t>(j)]) REQUIRE(pred(i) <= pred(j));
        for (std::size_t g = 1; g < 10; ++g) CHECK(c.points[g].predicted >= c.points[g - 1].predicted);
    }
}

TEST_CASE("equal predictions still give q groups split by input order") {
    const auto c = quantile_calibration(Vector::Constant(20, 0.3), Vector::Ones(20), Vector::Zero(20), 1.0);
    CHECK(c.points.size() == 10);
    for (std::size_t i = 0; i < 20; ++i) CHECK(c.group[i] == i / 2);
}

TEST_CASE("ten patients, one early event in the top-risk patient") {
    Vector pred(10), dur = Vector::Constant(10, 5.0), ev = Vector::Zero(10);
    for (Eigen::Index i = 0; i < 10; ++i) pred(i) = 0.05 * static_cast<double>(i + 1);
    ev(9) = 1.0;
    dur(9) = 2.0;
    ev(3) = 1.0;  // after t, so not counted
    const auto c = quantile_calibration(pred, dur, ev, 3.0);
    for (std::size_t g = 0; g < 9; ++g) CHECK(c.points[g].observed == 0.0);
    CHECK(c.points[9].observed == 1.0);
    CHECK(c.points[9].predicted == 0.5);
    CHECK_THROWS_AS(quantile_calibration(pred.head(9), dur.head(9), ev.head(9), 3.0), CalibrationError);
}

TEST_CASE("perfectly calibrated world: decile observed matches predicted within 0.01") {
    const Eigen::Index n = 100000;
    Rng rng(2024);
    std::uniform_real_distribution<double> u;
    Vector pred(n), dur(n), ev(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pred(i) = 0.2 * u(rng);
        const bool event = u(rng) < pred(i);
        ev(i) = event ? 1.0 : 0.0;
        dur(i) = event ? 0.5 : 2.0;
    }
    const auto c = quantile_calibration(pred, dur, ev, 1.0);
    for (const auto& p : c.points) CHECK(std::abs(p.predicted - p.observed) < 0.01);
}

TEST_CASE("calibration slope: exact cases") {
    const std::vector<double> e = {0.0, 0.01, 0.03, 0.05, 0.08, 0.1, 0.15, 0.2, 0.3, 0.4};
    std::vector<double> twice(e);
    for (double& v : twice) v *= 2.0;
    const auto same = calibration_slope(curve_from(e, e));
    CHECK(same.slope == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(same.loss < 1e-15);
    const auto doubled = calibration_slope(curve_from(e, twice));
    CHECK(doubled.slope == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(doubled.loss == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> top(10, 0.0);
    top[9] = 1.0;
    CHECK(calibration_slope(curve_from(top, e)).slope == doctest::Approx(0.4));
    CHECK_THROWS_AS(calibration_slope(curve_from(std::vector<double>(10, 0.0), e)), CalibrationError);
}

TEST_CASE("calibration slope agrees with an independent least-squares solve to 1e-10") {
    Rng rng(8);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> e(10), r(10);
        Matrix a(10, 1);
        Vector b(10);
        for (int i = 0; i < 10; ++i) {
            e[static_cast<std::size_t>(i)] = a(i, 0) = u(rng);
            r[static_cast<std::size_t>(i)] = b(i) = u(rng);
        }
        const double oracle = a.colPivHouseholderQr().solve(b)(0);
        CHECK(std::abs(calibration_slope(curve_from(e, r)).slope - oracle) < 1e-10);
    }
}

TEST_CASE("loss is symmetric about slope 1") {
    const std::vector<double> e = {0.1, 0.2, 0.3, 0.4};
    for (double s : {0.25, 0.8, 1.0, 1.3}) {
        std::vector<double> r1(e), r2(e);
        for (auto& v : r1) v *= s;
        for (auto& v : r2) v *= 2.0 - s;
        CHECK(calibration_slope(curve_from(e, r1)).loss == doctest::Approx(calibration_slope(curve_from(e, r2)).loss));
    }
}

TEST_CASE("percentiles interpolate linearly") {
    CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
    CHECK(percentile({1, 2, 3, 4}, 25) == 1.75);
    CHECK(percentile({7}, 75) == 7.0);
    const auto tp = duration_timepoints(vec({4, 1, 3, 2, 5}));
    CHECK(tp == std::array<double, 3>{2, 3, 4});
}

TEST_CASE("augmenter names parse both ways") {
    for (auto k : {AugmenterKind::None, AugmenterKind::Identity, AugmenterKind::Mcm, AugmenterKind::McmMice,
                   AugmenterKind::RandomOversample, AugmenterKind::Smote})
        CHECK(parse_augmenter(augmenter_name(k)) == k);
    CHECK(parse_augmenter("random_oversample") == AugmenterKind::RandomOversample);
    CHECK_THROWS_AS(parse_augmenter("gan"), CalibrationError);
    AugmenterSpec spec;
    spec.kind = AugmenterKind::Mcm;
    CHECK_THROWS_AS(spec.validate(), CalibrationError);
}

TEST_CASE("without augmentation every patient is averaged over exactly 5 test appearances") {
    const auto& ds = stub_ckd();
    const auto res = cv_mean_lph(ds, split_5x2(ds, 1), {}, StratificationRule::always_true(), {});
    REQUIRE(res.iterations.size() == 1);
    CHECK(res.total_fits == 10);
    for (int a : res.iterations[0].appearances) CHECK(a == 5);
    CHECK(res.iterations[0].models.size() == 10);
}

TEST_CASE("augmented runs fit 50 models from training rows only") {
    const auto& ds = stub_ckd();
    AugmenterSpec aug;
    aug.kind = AugmenterKind::Mcm;
    aug.model = &small_bundle();
    const auto plan = split_5x2(ds, 1);
    const auto res = cv_mean_lph(ds, plan, aug, resolve_stratum("diabetes_true"), {2, 5});
    CHECK(res.total_fits == 50);
    CHECK(res.iterations.size() == 5);
    for (const auto& f : res.folds) {
        const auto& train = plan.repetitions[static_cast<std::size_t>(f.repetition)][static_cast<std::size_t>(f.train_split)];
        for (auto id : f.simulation_input_ids) CHECK(std::binary_search(train.begin(), train.end(), id));
        CHECK(f.simulated_rows == f.simulation_input_rows);
    }
}

TEST_CASE("feeding test rows to the simulator trips the leakage check") {
    const auto& ds = stub_ckd();
    AugmenterSpec aug;
    aug.kind = AugmenterKind::Mcm;
    aug.model = &small_bundle();
    aug.feed_test_rows = true;
    CHECK_THROWS_AS(cv_mean_lph(ds, split_5x2(ds, 1), aug, StratificationRule::always_true(), {}), LeakageError);
}

TEST_CASE("mcm-mice blanks one outcome pair per simulated row and keeps observed cells") {
    const auto& ds = stub_ckd();
    AugmenterSpec aug;
    aug.kind = AugmenterKind::McmMice;
    aug.model = &small_bundle();
    aug.iterations = 1;
    const auto res = cv_mean_lph(ds, split_5x2(ds, 1), aug, resolve_stratum("egfr_normal"), {});
    for (const auto& f : res.folds) {
        CHECK(f.blanked_outcomes == f.simulated_rows);
        CHECK(f.simulated_rows > 0);
        CHECK(f.mice_observed_intact);
    }
}

TEST_CASE("predicted risk uses the mean baseline hazard") {
    const auto& ds = stub_ckd();
    const auto res = cv_mean_lph(ds, split_5x2(ds, 1), {}, StratificationRule::always_true(), {});
    const auto& it = res.iterations[0];
    const double t = 3.0;
    double h0 = 0.0;
    for (const auto& m : it.models) h0 += m.cumulative_hazard(t) / 10.0;
    const Vector risk = predicted_risk(it, t);
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(risk(i) == doctest::Approx(1.0 - std::exp(-h0 * std::exp(it.mean_lph(i)))).epsilon(1e-12));
    CHECK(risk.minCoeff() >= 0.0);
    CHECK(risk.maxCoeff() <= 1.0);
}

TEST_CASE("report sums equal the per-timepoint losses and runs are pure in the seed") {
    const auto& ds = stub_ckd();
    CalibrationOptions opts;
    opts.seed = 5;
    const auto a = general_calibration(ds, {}, opts);
    CHECK(a.sum_of_losses == doctest::Approx(a.loss_mean[0] + a.loss_mean[1] + a.loss_mean[2]).epsilon(1e-12));
    for (const auto& it : a.iterations)
        CHECK(std::abs(it.sum_of_losses - (it.timepoints[0].slope.loss + it.timepoints[1].slope.loss +
                                           it.timepoints[2].slope.loss)) < 1e-12);
    CHECK(a.fits == 10);
    CHECK(a.loss_sd == std::array<double, 3>{0, 0, 0});
    const auto b = general_calibration(ds, {}, opts);
    CHECK(a.sum_of_losses == b.sum_of_losses);
    CHECK(a.slope_mean == b.slope_mean);
}

TEST_CASE("identity augmentation reproduces no augmentation bit for bit") {
    const auto& ds = stub_ckd();
    CalibrationOptions opts;
    opts.seed = 5;
    AugmenterSpec id;
    id.kind = AugmenterKind::Identity;
    const auto rule = resolve_stratum("egfr_nonideal");
    const auto none = stratified_calibration(ds, rule, {}, opts);
    const auto same = stratified_calibration(ds, rule, id, opts);
    CHECK(same.iterations.size() == 5);
    CHECK(same.slope_mean == none.slope_mean);
    CHECK(same.loss_mean == none.loss_mean);
    CHECK(same.sum_of_losses == none.sum_of_losses);
    CHECK(same.fits == 50);
}

TEST_CASE("stratified curves cover only the stratum") {
    const auto& ds = stub_ckd();
    const auto rule = resolve_stratum("cvd_true");
    const auto rep = stratified_calibration(ds, rule, {}, {});
    CHECK(rep.population == stratum_rows(ds, rule).size());
    CHECK(rep.iterations[0].timepoints[0].curve.population == rep.population);
    CHECK(rep.stratum == "cvd_true");
    CHECK_THROWS_AS(stratified_calibration(ds, StratificationRule::always_false(), {}, {}), CalibrationError);
}

TEST_CASE("meta table: a single stratum total equals its sum") {
    const auto& ds = stub_ckd();
    AugmenterSpec ros;
    ros.kind = AugmenterKind::RandomOversample;
    ros.iterations = 2;
    const auto meta = meta_calibration(ds, {resolve_stratum("older=1")}, {AugmenterSpec{}, ros}, {});
    REQUIRE(meta.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(meta.rows[i].total == meta.rows[i].stratum_sums[0]);
        CHECK(meta.rows[i].total == meta.reports[i].sum_of_losses);
    }
    std::ostringstream csv;
    write_meta_csv(csv, meta);
    CHECK(csv.str().find("method") != std::string::npos);
    CHECK_FALSE(render_meta_table(meta).empty());
}

TEST_CASE("ranks ascend with the totals and ties share the lower rank") {
    CHECK(rank_ascending({3.0, 1.0, 2.0}) == std::vector<int>{3, 1, 2});
    CHECK(rank_ascending({2.0, 1.0, 2.0}) == std::vector<int>{2, 1, 2});
}
