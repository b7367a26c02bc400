#pragma once

#include "survsynth/dataset.hpp"
#include "survsynth/imputation.hpp"
#include "survsynth/mcm_net.hpp"
#include "survsynth/survival.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace survsynth {

class CalibrationError : public Error {
public:
    using Error::Error;
};

// Raised when a simulation input overlaps the test half of its fold.
class LeakageError : public CalibrationError {
public:
    using CalibrationError::CalibrationError;
};

// ---------------------------------------------------------------------------
// Quantile calibration

struct CalibrationPoint {
    double predicted = 0.0;  // mean predicted risk in the group (fraction)
    double observed = 0.0;   // events with duration <= t over group size (fraction)
    std::size_t size = 0;
};

struct CalibrationCurve {
    double timepoint = 0.0;
    std::size_t population = 0;
    std::vector<CalibrationPoint> points;  // lowest predicted risk first
    std::vector<std::size_t> group;        // group index of every input patient
};

inline constexpr std::size_t kDefaultQuantiles = 10;

// Patients are ranked by predicted risk (stable, so ties keep input order)
// and rank k goes to group floor(k * q / n).
CalibrationCurve quantile_calibration(const Vector& predicted_risk, const Vector& durations, const Vector& events,
                                      double t, std::size_t q = kDefaultQuantiles);

struct SlopeResult {
    double slope = 0.0;
    double loss = 0.0;  // |1 - slope|
};

// Zero-intercept least squares of predicted on observed.
SlopeResult calibration_slope(const CalibrationCurve& curve);

// Linear-interpolation percentile (p in [0, 100]).
double percentile(std::vector<double> values, double p);
// 25th, 50th and 75th percentiles of the durations.
std::array<double, 3> duration_timepoints(const Vector& durations);

// ---------------------------------------------------------------------------
// Augmenters

enum class AugmenterKind { None, Identity, Mcm, McmMice, RandomOversample, Smote };

std::string augmenter_name(AugmenterKind kind);
// Accepts none, identity, mcm, mcm-mice (mcm+mice), ros (random_oversample), smote.
AugmenterKind parse_augmenter(const std::string& text);

struct AugmenterSpec {
    AugmenterKind kind = AugmenterKind::None;
    double ratio = 0.5;                        // mcm kinds
    std::size_t smote_k = 5;                   // smote
    int iterations = 5;                        // ignored for none
    const McmBundle* model = nullptr;          // required for mcm kinds; pre-trained
    MiceOptions mice;                          // mcm-mice; seed is derived per fold
    bool feed_test_rows = false;               // test hook: simulate from the test half

    bool augments() const noexcept { return kind != AugmenterKind::None; }
    int effective_iterations() const noexcept { return augments() ? iterations : 1; }
    void validate() const;
};

// ---------------------------------------------------------------------------
// 5x2 harness

struct FoldRecord {
    int iteration = 0;
    int repetition = 0;
    int train_split = 0;
    int attempts = 0;                          // CoxPH fits attempted
    std::size_t train_rows = 0;
    std::size_t simulation_input_rows = 0;
    std::size_t simulated_rows = 0;
    std::size_t blanked_outcomes = 0;          // mcm-mice only
    bool mice_converged = true;
    bool mice_observed_intact = true;
    std::vector<std::size_t> simulation_input_ids;
    std::vector<std::string> notes;
};

struct CvIteration {
    Vector mean_lph;                           // per patient of ds
    std::vector<int> appearances;              // test appearances per patient
    std::vector<CoxModel> models;              // 10 fits, repetition-major
};

struct CvOptions {
    int jobs = 1;
    std::uint64_t seed = 0;                    // simulation substreams
};

struct CvResult {
    std::vector<CvIteration> iterations;
    std::vector<FoldRecord> folds;
    std::size_t total_fits = 0;
};

// Alg-1 style LPH aggregation with optional augmentation generated from the
// training half only. rule selects the records that are simulated from.
CvResult cv_mean_lph(const Dataset& ds, const SplitPlan& plan, const AugmenterSpec& augmenter,
                     const StratificationRule& rule, const CvOptions& opts = {});

// Predicted risk at t: mean fold baseline hazard applied to the mean LPH.
Vector predicted_risk(const CvIteration& it, double t);

// ---------------------------------------------------------------------------
// Reports

struct TimepointResult {
    double timepoint = 0.0;
    SlopeResult slope;
    CalibrationCurve curve;
};

struct IterationResult {
    std::array<TimepointResult, 3> timepoints;
    double sum_of_losses = 0.0;
};

struct CalibrationReport {
    std::string method;
    std::string stratum;
    std::string stratum_label;
    std::array<double, 3> timepoints{};
    std::size_t population = 0;
    std::vector<IterationResult> iterations;
    std::array<double, 3> slope_mean{};
    std::array<double, 3> loss_mean{};
    std::array<double, 3> loss_sd{};           // sample sd across iterations; 0 for one iteration
    double sum_of_losses = 0.0;                // sum of loss_mean
    double sum_sd = 0.0;                       // sample sd of per-iteration sums
    std::size_t fits = 0;
    std::vector<std::string> log;
};

struct CalibrationOptions {
    std::uint64_t seed = 0;                    // split plan and simulation
    int jobs = 1;
    std::size_t quantiles = kDefaultQuantiles;
};

// Curves on the patients matching rule; augmentation conditioned on rule.
CalibrationReport stratified_calibration(const Dataset& ds, const StratificationRule& rule,
                                         const AugmenterSpec& augmenter, const CalibrationOptions& opts);
CalibrationReport general_calibration(const Dataset& ds, const AugmenterSpec& augmenter,
                                      const CalibrationOptions& opts);
// Stratified calibration with the mcm-mice augmenter.
CalibrationReport mice_augmented_calibration(const Dataset& ds, const StratificationRule& rule,
                                             const McmBundle& model, const CalibrationOptions& opts,
                                             int iterations = 5);

struct MetaRow {
    std::string method;
    std::vector<double> stratum_sums;
    double total = 0.0;
    int rank = 0;                              // 1 = lowest total
};

struct MetaTable {
    std::vector<std::string> strata;           // labels in column order
    std::vector<MetaRow> rows;
    std::vector<CalibrationReport> reports;    // method-major
};

MetaTable meta_calibration(const Dataset& ds, const std::vector<StratificationRule>& rules,
                           const std::vector<AugmenterSpec>& augmenters, const CalibrationOptions& opts,
                           const std::function<void(const CalibrationReport&)>& on_report = {});

// Ranks by ascending sum of losses (ties share the lower rank).
std::vector<int> rank_ascending(const std::vector<double>& values);

void write_report_csv(std::ostream& out, const std::vector<CalibrationReport>& reports);
void write_curves_csv(std::ostream& out, const std::vector<CalibrationReport>& reports);
// Method, three timepoint losses as mean (sd), sum and rank.
std::string render_report_table(const std::vector<CalibrationReport>& reports);
void write_meta_csv(std::ostream& out, const MetaTable& meta);
std::string render_meta_table(const MetaTable& meta);

}  // namespace survsynth
