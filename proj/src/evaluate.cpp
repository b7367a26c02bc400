#include "survsynth/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace survsynth {

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double median(std::vector<double> v) {
    if (v.empty()) throw Error("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix pearson_correlation(const Matrix& x) {
    const Eigen::Index d = x.cols();
    const Matrix c = x.rowwise() - x.colwise().mean();
    const Vector ss = c.colwise().squaredNorm().transpose();
    Matrix r = Matrix::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            double v = 0.0;
            if (ss(i) > 0.0 && ss(j) > 0.0)
                v = std::clamp(c.col(i).dot(c.col(j)) / std::sqrt(ss(i) * ss(j)), -1.0, 1.0);
            r(i, j) = r(j, i) = v;
        }
    return r;
}

namespace {

std::vector<double> column_values(const Dataset& ds, std::size_t c) {
    const auto col = ds.values().col(static_cast<Eigen::Index>(c));
    return {col.data(), col.data() + col.size()};
}

void require_same_schema(const Dataset& a, const Dataset& b) {
    if (!(a.schema() == b.schema())) throw DataError("evaluate: real and synthetic schemas differ");
    if (a.empty() || b.empty()) throw DataError("evaluate: empty dataset");
}

int ci_side(const HazardRatio& h) {
    if (h.ci_low > 1.0) return 1;
    if (h.ci_high < 1.0) return -1;
    return 0;
}

}  // namespace

RealismReport realism_report(const Dataset& real, const Dataset& synth) {
    require_same_schema(real, synth);
    const auto& schema = real.schema();
    RealismReport rep;
    rep.features = schema.names();
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const auto a = column_values(real, c);
        const auto b = column_values(synth, c);
        if (schema[c].kind == FeatureKind::Numeric) {
            NumericRealism n;
            n.feature = schema[c].name;
            n.ks = ks_statistic(a, b);
            n.median_real = median(a);
            n.median_synth = median(b);
            n.median_diff = n.median_synth - n.median_real;
            rep.numeric.push_back(n);

            Histogram h;
            h.feature = schema[c].name;
            h.lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
            h.hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
            h.real.assign(kHistogramBins, 0);
            h.synth.assign(kHistogramBins, 0);
            const double width = (h.hi - h.lo) / static_cast<double>(kHistogramBins);
            auto bin = [&](double v) {
                if (!(width > 0.0)) return std::size_t{0};
                return std::min(kHistogramBins - 1, static_cast<std::size_t>((v - h.lo) / width));
            };
            for (double v : a) ++h.real[bin(v)];
            for (double v : b) ++h.synth[bin(v)];
            rep.histograms.push_back(std::move(h));
        } else {
            BinaryRealism p;
            p.feature = schema[c].name;
            p.prevalence_real = 100.0 * real.values().col(static_cast<Eigen::Index>(c)).mean();
            p.prevalence_synth = 100.0 * synth.values().col(static_cast<Eigen::Index>(c)).mean();
            p.diff_pp = p.prevalence_synth - p.prevalence_real;
            rep.binary.push_back(p);
        }
    }
    rep.corr_real = pearson_correlation(real.values());
    rep.corr_synth = pearson_correlation(synth.values());
    rep.corr_frobenius = (rep.corr_real - rep.corr_synth).norm();
    return rep;
}

UtilityReport utility_report(const Dataset& real, const Dataset& synth) {
    require_same_schema(real, synth);
    UtilityReport rep;
    rep.km_real = fit_km(real.durations(), real.events());
    rep.km_synth = fit_km(synth.durations(), synth.events());

    std::vector<double> grid = rep.km_real.times;
    grid.insert(grid.end(), rep.km_synth.times.begin(), rep.km_synth.times.end());
    for (double t : grid)
        rep.km_max_gap = std::max(rep.km_max_gap, std::abs(rep.km_real.survival_at(t) - rep.km_synth.survival_at(t)));
    const double horizon = std::min(real.durations().maxCoeff(), synth.durations().maxCoeff());
    rep.km_final_gap = std::abs(rep.km_real.survival_at(horizon) - rep.km_synth.survival_at(horizon));

    try {
        const auto hr_real = hazard_ratios(fit_coxph(real));
        const auto hr_synth = hazard_ratios(fit_coxph(synth));
        for (std::size_t k = 0; k < hr_real.size(); ++k) {
            HrComparison c;
            c.covariate = hr_real[k].covariate;
            c.real = hr_real[k];
            c.synth = hr_synth[k];
            c.ci_overlap = c.real.ci_low <= c.synth.ci_high && c.synth.ci_low <= c.real.ci_high;
            c.same_side = ci_side(c.real) == ci_side(c.synth);
            rep.hazard_ratios.push_back(c);
        }
        rep.cox_ok = true;
    } catch (const CoxError& e) {
        rep.cox_error = e.what();
    }
    return rep;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
}

void write_matrix_csv(const std::filesystem::path& p, const std::vector<std::string>& names, const Matrix& m) {
    auto out = open_out(p);
    out << "feature";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

void write_evaluation(const std::filesystem::path& dir, const RealismReport& realism, const UtilityReport& utility) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "realism_features.csv");
        out << "feature,kind,ks,median_real,median_synth,median_diff,prevalence_real_pct,prevalence_synth_pct,diff_pp\n";
        for (const auto& n : realism.numeric)
            out << n.feature << ",numeric," << format_double(n.ks) << ',' << format_double(n.median_real) << ','
                << format_double(n.median_synth) << ',' << format_double(n.median_diff) << ",,,\n";
        for (const auto& b : realism.binary)
            out << b.feature << ",binary,,,,," << format_double(b.prevalence_real) << ','
                << format_double(b.prevalence_synth) << ',' << format_double(b.diff_pp) << '\n';
    }
    write_matrix_csv(dir / "correlations_real.csv", realism.features, realism.corr_real);
    write_matrix_csv(dir / "correlations_synth.csv", realism.features, realism.corr_synth);
    {
        auto out = open_out(dir / "histograms.csv");
        out << "feature,bin,lo,hi,real,synth\n";
        for (const auto& h : realism.histograms) {
            const double w = (h.hi - h.lo) / static_cast<double>(kHistogramBins);
            for (std::size_t b = 0; b < kHistogramBins; ++b)
                out << h.feature << ',' << b << ',' << format_double(h.lo + w * static_cast<double>(b)) << ','
                    << format_double(h.lo + w * static_cast<double>(b + 1)) << ',' << h.real[b] << ',' << h.synth[b]
                    << '\n';
        }
    }
    {
        auto out = open_out(dir / "km_real.csv");
        write_km_csv(out, utility.km_real);
    }
    {
        auto out = open_out(dir / "km_synth.csv");
        write_km_csv(out, utility.km_synth);
    }
    {
        auto out = open_out(dir / "hr_comparison.csv");
        out << "covariate,hr_real,ci_low_real,ci_high_real,hr_synth,ci_low_synth,ci_high_synth,ci_overlap,same_side\n";
        for (const auto& c : utility.hazard_ratios)
            out << c.covariate << ',' << format_double(c.real.hr) << ',' << format_double(c.real.ci_low) << ','
                << format_double(c.real.ci_high) << ',' << format_double(c.synth.hr) << ','
                << format_double(c.synth.ci_low) << ',' << format_double(c.synth.ci_high) << ','
                << yes_no(c.ci_overlap) << ',' << yes_no(c.same_side) << '\n';
    }
    {
        auto out = open_out(dir / "summary.txt");
        double max_ks = 0.0, max_pp = 0.0;
        for (const auto& n : realism.numeric) max_ks = std::max(max_ks, n.ks);
        for (const auto& b : realism.binary) max_pp = std::max(max_pp, std::abs(b.diff_pp));
        std::size_t same = 0;
        for (const auto& c : utility.hazard_ratios) same += c.same_side;
        out << "max_ks " << format_double(max_ks) << '\n'
            << "max_abs_prevalence_diff_pp " << format_double(max_pp) << '\n'
            << "correlation_frobenius " << format_double(realism.corr_frobenius) << '\n'
            << "km_max_gap " << format_double(utility.km_max_gap) << '\n'
            << "km_final_gap " << format_double(utility.km_final_gap) << '\n';
        if (utility.cox_ok)
            out << "hr_same_side " << same << '/' << utility.hazard_ratios.size() << '\n';
        else
            out << "cox_error " << utility.cox_error << '\n';
    }
}

}  // namespace survsynth
