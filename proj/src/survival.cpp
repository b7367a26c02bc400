#include "survsynth/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace survsynth {

namespace {

struct EfronEval {
    double ll = 0.0;
    Vector grad;
    Matrix hess;  // second derivative of ll (negative semidefinite at a maximum)
};

std::vector<std::size_t> time_order(const Vector& t) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(t.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return t(static_cast<Eigen::Index>(a)) < t(static_cast<Eigen::Index>(b));
    });
    return idx;
}

// Risk sets are accumulated from the longest duration down, so each sweep is
// O(n p^2). The log-likelihood is invariant to a common shift of eta, which
// keeps exp() in range.
EfronEval efron_eval(const Matrix& xc, const Vector& t, const Vector& e, const Vector& beta,
                     const std::vector<std::size_t>& order, bool derivs) {
    const Eigen::Index p = xc.cols();
    const Vector eta = xc * beta;
    const double shift = eta.size() ? eta.maxCoeff() : 0.0;
    EfronEval out;
    out.grad = Vector::Zero(p);
    out.hess = Matrix::Zero(p, p);
    double s0 = 0.0;
    Vector s1 = Vector::Zero(p);
    Matrix s2 = Matrix::Zero(p, p);

    std::size_t hi = order.size();
    while (hi > 0) {
        std::size_t lo = hi - 1;
        const double time = t(static_cast<Eigen::Index>(order[lo]));
        while (lo > 0 && t(static_cast<Eigen::Index>(order[lo - 1])) == time) --lo;

        double d0 = 0.0, deta = 0.0;
        int d = 0;
        Vector d1 = Vector::Zero(p);
        Matrix d2 = Matrix::Zero(p, p);
        for (std::size_t k = lo; k < hi; ++k) {
            const auto i = static_cast<Eigen::Index>(order[k]);
            const double w = std::exp(eta(i) - shift);
            s0 += w;
            if (derivs) {
                s1 += w * xc.row(i).transpose();
                s2.noalias() += w * xc.row(i).transpose() * xc.row(i);
            }
            if (e(i) != 0.0) {
                ++d;
                d0 += w;
                deta += eta(i) - shift;
                if (derivs) {
                    d1 += w * xc.row(i).transpose();
                    d2.noalias() += w * xc.row(i).transpose() * xc.row(i);
                    out.grad += xc.row(i).transpose();
                }
            }
        }
        if (d > 0) {
            out.ll += deta;
            for (int l = 0; l < d; ++l) {
                const double f = static_cast<double>(l) / d;
                const double phi = s0 - f * d0;
                out.ll -= std::log(phi);
                if (derivs) {
                    const Vector a = s1 - f * d1;
                    out.grad -= a / phi;
                    out.hess -= (s2 - f * d2) / phi - a * a.transpose() / (phi * phi);
                }
            }
        }
        hi = lo;
    }
    return out;
}

}  // namespace

double CoxModel::cumulative_hazard(double t) const {
    const auto it = std::upper_bound(base_times.begin(), base_times.end(), t);
    if (it == base_times.begin()) return 0.0;
    return base_cumhaz[static_cast<std::size_t>(it - base_times.begin()) - 1];
}

double efron_log_likelihood(const Matrix& xc, const Vector& durations, const Vector& events, const Vector& beta) {
    return efron_eval(xc, durations, events, beta, time_order(durations), false).ll;
}

CoxModel fit_coxph(const Matrix& x, const Vector& t, const Vector& e, std::vector<std::string> names,
                   const CoxOptions& opts) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (t.size() != n || e.size() != n) throw CoxError(CoxError::Kind::BadInput, "fit_coxph: length mismatch");
    if (names.empty())
        for (Eigen::Index k = 0; k < p; ++k) names.push_back("x" + std::to_string(k));
    if (static_cast<Eigen::Index>(names.size()) != p)
        throw CoxError(CoxError::Kind::BadInput, "fit_coxph: covariate name count mismatch");
    if (n < p + 1)
        throw CoxError(CoxError::Kind::BadInput, "fit_coxph: need at least p + 1 = " + std::to_string(p + 1) +
                                                     " records, got " + std::to_string(n));
    if (!x.allFinite() || !t.allFinite() || !e.allFinite())
        throw CoxError(CoxError::Kind::BadInput, "fit_coxph: non-finite input");
    if ((e.array() != 0.0).count() == 0) throw CoxError(CoxError::Kind::NoEvents, "fit_coxph: no events");

    CoxModel m;
    m.names = std::move(names);
    m.mu = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - m.mu.transpose();
    const Vector sd = (xc.array().square().colwise().sum() / static_cast<double>(n)).sqrt().transpose();
    for (Eigen::Index k = 0; k < p; ++k)
        if (!(sd(k) > 0.0))
            throw CoxError(CoxError::Kind::Singular,
                           "fit_coxph: singular information matrix (covariate '" + m.names[static_cast<std::size_t>(k)] +
                               "' is constant)");

    const auto order = time_order(t);
    m.beta = Vector::Zero(p);
    EfronEval cur = efron_eval(xc, t, e, m.beta, order, true);
    m.loglik_history.push_back(cur.ll);

    bool converged = false;
    for (int it = 1; it <= opts.max_iter && !converged; ++it) {
        const Matrix info = -cur.hess;
        Eigen::LLT<Matrix> llt(info);
        if (llt.info() != Eigen::Success) {
            if (it == 1)
                throw CoxError(CoxError::Kind::Singular, "fit_coxph: singular information matrix at beta = 0");
            // Information that was positive definite at the start and vanished
            // along the path means some coefficient is running off to infinity.
            Eigen::Index worst = 0;
            (m.beta.cwiseAbs().cwiseProduct(sd)).maxCoeff(&worst);
            throw CoxError(CoxError::Kind::Separation,
                           "fit_coxph: information matrix lost rank at iteration " + std::to_string(it) +
                               " (likely separation on covariate '" + m.names[static_cast<std::size_t>(worst)] +
                               "', beta = " + format_double(m.beta(worst)) + ")");
        }
        Vector step = llt.solve(cur.grad);
        EfronEval next = efron_eval(xc, t, e, m.beta + step, order, true);
        int halvings = 0;
        while ((!std::isfinite(next.ll) || next.ll < cur.ll) && halvings < opts.max_halvings) {
            step *= 0.5;
            next = efron_eval(xc, t, e, m.beta + step, order, true);
            ++halvings;
        }
        if (!std::isfinite(next.ll) || next.ll < cur.ll) {
            // No ascent direction left at working precision.
            converged = true;
            break;
        }
        m.beta += step;
        const double prev = cur.ll;
        cur = std::move(next);
        m.loglik_history.push_back(cur.ll);
        m.iterations = it;
        if (step.cwiseAbs().maxCoeff() < opts.beta_tol) converged = true;
        else if (std::abs(cur.ll - prev) <= opts.loglik_rel_tol * std::abs(prev)) converged = true;
    }

    if (!converged) {
        Eigen::Index worst = 0;
        (m.beta.cwiseAbs().cwiseProduct(sd)).maxCoeff(&worst);
        throw CoxError(CoxError::Kind::Separation,
                       "fit_coxph: no convergence after " + std::to_string(opts.max_iter) +
                           " iterations (likely separation on covariate '" + m.names[static_cast<std::size_t>(worst)] +
                           "', beta = " + format_double(m.beta(worst)) + ")");
    }
    for (Eigen::Index k = 0; k < p; ++k)
        if (std::abs(m.beta(k)) * sd(k) > 10.0) m.possibly_infinite.push_back(m.names[static_cast<std::size_t>(k)]);
    // A partial likelihood driven to 1 means the covariates order the event
    // times perfectly (complete separation); no coefficient is identified.
    if (!m.possibly_infinite.empty() && cur.ll > -1e-8) {
        Eigen::Index worst = 0;
        (m.beta.cwiseAbs().cwiseProduct(sd)).maxCoeff(&worst);
        throw CoxError(CoxError::Kind::Separation,
                       "fit_coxph: complete separation on covariate '" + m.names[static_cast<std::size_t>(worst)] +
                           "' (log partial likelihood " + format_double(cur.ll) + " at beta = " +
                           format_double(m.beta(worst)) + ")");
    }

    Eigen::LLT<Matrix> llt(-cur.hess);
    if (llt.info() != Eigen::Success)
        throw CoxError(CoxError::Kind::Singular, "fit_coxph: singular information matrix at the optimum");
    m.covariance = llt.solve(Matrix::Identity(p, p));
    m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();

    // Breslow baseline at beta.
    const Vector risk = (xc * m.beta).array().exp();
    double s0 = 0.0;
    std::vector<std::pair<double, double>> increments;  // (time, d / s0), built from the end
    std::size_t hi = order.size();
    while (hi > 0) {
        std::size_t lo = hi - 1;
        const double time = t(static_cast<Eigen::Index>(order[lo]));
        while (lo > 0 && t(static_cast<Eigen::Index>(order[lo - 1])) == time) --lo;
        double d = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto i = static_cast<Eigen::Index>(order[k]);
            s0 += risk(i);
            if (e(i) != 0.0) d += 1.0;
        }
        if (d > 0.0) increments.emplace_back(time, d / s0);
        hi = lo;
    }
    std::reverse(increments.begin(), increments.end());
    double cum = 0.0;
    for (const auto& [time, inc] : increments) {
        cum += inc;
        m.base_times.push_back(time);
        m.base_cumhaz.push_back(cum);
    }
    return m;
}

CoxModel fit_coxph(const Dataset& ds, const CoxOptions& opts) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < ds.schema().covariate_count(); ++k) names.push_back(ds.schema()[k].name);
    return fit_coxph(ds.covariates(), ds.durations(), ds.events(), std::move(names), opts);
}

Vector log_partial_hazard(const CoxModel& m, const Matrix& x) {
    if (x.cols() != m.beta.size())
        throw CoxError(CoxError::Kind::BadInput, "log_partial_hazard: expected " + std::to_string(m.beta.size()) +
                                                     " covariates, got " + std::to_string(x.cols()));
    return (x.rowwise() - m.mu.transpose()) * m.beta;
}

double risk_at(const CoxModel& m, double lph, double t) {
    return -std::expm1(-m.cumulative_hazard(t) * std::exp(lph));
}

// ---------------------------------------------------------------------------

double KmCurve::survival_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve fit_km(const Vector& t, const Vector& e) {
    if (t.size() == 0 || t.size() != e.size()) throw Error("fit_km: empty or mismatched input");
    const auto order = time_order(t);
    KmCurve km;
    double s = 1.0;
    std::size_t at_risk = order.size();
    std::size_t lo = 0;
    while (lo < order.size()) {
        std::size_t hi = lo;
        const double time = t(static_cast<Eigen::Index>(order[lo]));
        std::size_t d = 0;
        while (hi < order.size() && t(static_cast<Eigen::Index>(order[hi])) == time) {
            if (e(static_cast<Eigen::Index>(order[hi])) != 0.0) ++d;
            ++hi;
        }
        if (d > 0) {
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
            km.times.push_back(time);
            km.survival.push_back(s);
            km.at_risk.push_back(at_risk);
            km.events.push_back(d);
        }
        at_risk -= hi - lo;
        lo = hi;
    }
    return km;
}

HazardRatio hazard_ratio(const std::string& covariate, double beta, double se) {
    constexpr double z = 1.96;
    return {covariate, beta, se, std::exp(beta), std::exp(beta - z * se), std::exp(beta + z * se)};
}

std::vector<HazardRatio> hazard_ratios(const CoxModel& m) {
    std::vector<HazardRatio> out;
    for (Eigen::Index k = 0; k < m.beta.size(); ++k)
        out.push_back(hazard_ratio(m.names[static_cast<std::size_t>(k)], m.beta(k),
                                   std::sqrt(std::max(m.covariance(k, k), 0.0))));
    return out;
}

void write_hr_csv(std::ostream& out, const std::vector<HazardRatio>& hrs) {
    out << "covariate,beta,se,hr,ci_low,ci_high\n";
    for (const auto& h : hrs)
        out << h.covariate << ',' << format_double(h.beta) << ',' << format_double(h.se) << ','
            << format_double(h.hr) << ',' << format_double(h.ci_low) << ',' << format_double(h.ci_high) << '\n';
}

void write_km_csv(std::ostream& out, const KmCurve& km) {
    out << "time,survival,at_risk,events\n";
    for (std::size_t i = 0; i < km.times.size(); ++i)
        out << format_double(km.times[i]) << ',' << format_double(km.survival[i]) << ',' << km.at_risk[i] << ','
            << km.events[i] << '\n';
}

}  // namespace survsynth
