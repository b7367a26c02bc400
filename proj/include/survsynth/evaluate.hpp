#pragma once

#include "survsynth/dataset.hpp"
#include "survsynth/survival.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace survsynth {

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);
double median(std::vector<double> v);
// Pearson correlation of the columns. A constant column gets 0 off the
// diagonal; the diagonal is exactly 1.
Matrix pearson_correlation(const Matrix& x);

struct NumericRealism {
    std::string feature;
    double ks = 0.0;
    double median_real = 0.0;
    double median_synth = 0.0;
    double median_diff = 0.0;  // synth - real
};

struct BinaryRealism {
    std::string feature;
    double prevalence_real = 0.0;   // percent
    double prevalence_synth = 0.0;  // percent
    double diff_pp = 0.0;           // synth - real, percentage points
};

inline constexpr std::size_t kHistogramBins = 100;

struct Histogram {
    std::string feature;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> real;
    std::vector<std::size_t> synth;
};

struct RealismReport {
    std::vector<std::string> features;
    std::vector<NumericRealism> numeric;
    std::vector<BinaryRealism> binary;
    Matrix corr_real;
    Matrix corr_synth;
    double corr_frobenius = 0.0;
    std::vector<Histogram> histograms;  // numeric features, shared bin edges
};

RealismReport realism_report(const Dataset& real, const Dataset& synth);

struct HrComparison {
    std::string covariate;
    HazardRatio real;
    HazardRatio synth;
    bool ci_overlap = false;
    bool same_side = false;  // both CIs above 1, both below, or both spanning 1
};

struct UtilityReport {
    KmCurve km_real;
    KmCurve km_synth;
    double km_max_gap = 0.0;
    double km_final_gap = 0.0;  // at the shorter of the two maximum follow-ups
    bool cox_ok = false;
    std::string cox_error;
    std::vector<HrComparison> hazard_ratios;
};

UtilityReport utility_report(const Dataset& real, const Dataset& synth);

// realism_features.csv, correlations_real.csv, correlations_synth.csv,
// histograms.csv, km_real.csv, km_synth.csv, hr_comparison.csv, summary.txt.
void write_evaluation(const std::filesystem::path& dir, const RealismReport& realism, const UtilityReport& utility);

}  // namespace survsynth
