#pragma once

#include "survsynth/dataset.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace survsynth {

class CoxError : public Error {
public:
    enum class Kind { NoEvents, Singular, Separation, BadInput };
    CoxError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct CoxOptions {
    int max_iter = 100;
    double beta_tol = 1e-7;        // max |delta beta|
    double loglik_rel_tol = 1e-9;  // |delta ll| / |ll|
    int max_halvings = 40;
};

struct CoxModel {
    std::vector<std::string> names;
    Vector beta;
    Vector mu;
    Matrix covariance;               // inverse observed information at beta
    std::vector<double> base_times;  // distinct event times, increasing
    std::vector<double> base_cumhaz; // Breslow H0 at each base time
    std::vector<double> loglik_history;  // one entry per accepted iterate, starting at beta = 0
    int iterations = 0;
    // Covariates whose coefficient kept growing while the likelihood had
    // flattened (quasi-separation); the fit is usable but these estimates
    // are not.
    std::vector<std::string> possibly_infinite;

    double log_likelihood() const { return loglik_history.back(); }
    double cumulative_hazard(double t) const;  // step function, 0 before the first event
};

// Efron log partial likelihood at beta for already-centered covariates.
double efron_log_likelihood(const Matrix& xc, const Vector& durations, const Vector& events, const Vector& beta);

CoxModel fit_coxph(const Matrix& x, const Vector& durations, const Vector& events,
                   std::vector<std::string> names = {}, const CoxOptions& opts = {});
// Uses every covariate column of the dataset.
CoxModel fit_coxph(const Dataset& ds, const CoxOptions& opts = {});

Vector log_partial_hazard(const CoxModel& m, const Matrix& x);
double risk_at(const CoxModel& m, double lph, double t);

struct KmCurve {
    std::vector<double> times;  // distinct event times
    std::vector<double> survival;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;

    double survival_at(double t) const;
};

KmCurve fit_km(const Vector& durations, const Vector& events);

struct HazardRatio {
    std::string covariate;
    double beta = 0.0;
    double se = 0.0;
    double hr = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
};

HazardRatio hazard_ratio(const std::string& covariate, double beta, double se);
std::vector<HazardRatio> hazard_ratios(const CoxModel& m);

void write_hr_csv(std::ostream& out, const std::vector<HazardRatio>& hrs);
void write_km_csv(std::ostream& out, const KmCurve& km);

}  // namespace survsynth
