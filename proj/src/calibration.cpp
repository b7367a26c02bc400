#include "survsynth/calibration.hpp"

#include "survsynth/baselines.hpp"
#include "survsynth/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace survsynth {

// ---------------------------------------------------------------------------
// Quantile calibration

CalibrationCurve quantile_calibration(const Vector& pred, const Vector& durations, const Vector& events, double t,
                                      std::size_t q) {
    const auto n = static_cast<std::size_t>(pred.size());
    if (durations.size() != pred.size() || events.size() != pred.size())
        throw CalibrationError("quantile_calibration: length mismatch");
    if (q < 2) throw CalibrationError("quantile_calibration: need q >= 2");
    if (n < q)
        throw CalibrationError("quantile_calibration: " + std::to_string(n) + " patients for " + std::to_string(q) +
                               " groups");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pred(static_cast<Eigen::Index>(a)) < pred(static_cast<Eigen::Index>(b));
    });

    CalibrationCurve c;
    c.timepoint = t;
    c.population = n;
    c.points.assign(q, {});
    c.group.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const std::size_t g = k * q / n;
        const auto ii = static_cast<Eigen::Index>(i);
        c.group[i] = g;
        auto& pt = c.points[g];
        pt.predicted += pred(ii);
        if (events(ii) != 0.0 && durations(ii) <= t) pt.observed += 1.0;
        ++pt.size;
    }
    for (auto& pt : c.points) {
        pt.predicted /= static_cast<double>(pt.size);
        pt.observed /= static_cast<double>(pt.size);
    }
    return c;
}

SlopeResult calibration_slope(const CalibrationCurve& curve) {
    if (curve.points.size() < 2) throw CalibrationError("calibration_slope: need at least 2 points");
    double er = 0.0, ee = 0.0;
    for (const auto& p : curve.points) {
        er += p.observed * p.predicted;
        ee += p.observed * p.observed;
    }
    if (ee == 0.0)
        throw CalibrationError("calibration_slope: undefined slope, no observed event by t = " +
                               format_double(curve.timepoint));
    SlopeResult s;
    s.slope = er / ee;
    s.loss = std::abs(1.0 - s.slope);
    return s;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw CalibrationError("percentile: no values");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::array<double, 3> duration_timepoints(const Vector& durations) {
    std::vector<double> v(durations.data(), durations.data() + durations.size());
    return {percentile(v, 25.0), percentile(v, 50.0), percentile(v, 75.0)};
}

// ---------------------------------------------------------------------------
// Augmenters

std::string augmenter_name(AugmenterKind kind) {
    switch (kind) {
    case AugmenterKind::None: return "none";
    case AugmenterKind::Identity: return "identity";
    case AugmenterKind::Mcm: return "mcm";
    case AugmenterKind::McmMice: return "mcm-mice";
    case AugmenterKind::RandomOversample: return "ros";
    case AugmenterKind::Smote: return "smote";
    }
    return "?";
}

AugmenterKind parse_augmenter(const std::string& text) {
    if (text == "none") return AugmenterKind::None;
    if (text == "identity") return AugmenterKind::Identity;
    if (text == "mcm") return AugmenterKind::Mcm;
    if (text == "mcm-mice" || text == "mcm+mice") return AugmenterKind::McmMice;
    if (text == "ros" || text == "random_oversample") return AugmenterKind::RandomOversample;
    if (text == "smote") return AugmenterKind::Smote;
    throw CalibrationError("unknown augmenter '" + text + "' (expected none, identity, mcm, mcm-mice, ros, smote)");
}

void AugmenterSpec::validate() const {
    if (augments() && iterations < 1) throw CalibrationError("augmenter: iterations must be >= 1");
    if ((kind == AugmenterKind::Mcm || kind == AugmenterKind::McmMice) && model == nullptr)
        throw CalibrationError("augmenter '" + augmenter_name(kind) + "' needs a trained model");
    if ((kind == AugmenterKind::Mcm || kind == AugmenterKind::McmMice) && !(ratio >= 0.0 && ratio < 1.0))
        throw CalibrationError("augmenter: masking ratio must satisfy 0 <= r < 1");
    if (kind == AugmenterKind::Smote && smote_k < 1) throw CalibrationError("augmenter: smote k must be >= 1");
}

// ---------------------------------------------------------------------------
// 5x2 harness

namespace {

struct FoldTask {
    int iteration;
    int repetition;
    int split;
};

struct FoldOutput {
    CoxModel model;
    std::vector<std::size_t> test_rows;
    Vector lph;
    FoldRecord record;
};

Dataset empty_like(const Dataset& ds) {
    return Dataset(ds.schema(), Matrix(0, static_cast<Eigen::Index>(ds.schema().size())));
}

// Real training rows plus simulated rows whose outcomes are filled in by MICE.
Dataset mice_complete(const Dataset& train, const Dataset& sim, const MiceOptions& base, std::uint64_t seed,
                      FoldRecord& rec) {
    const auto& schema = train.schema();
    Dataset joined = Dataset::concat(train, sim);
    Matrix table = joined.values();
    MissingMask missing = MissingMask::Constant(table.rows(), table.cols(), false);
    const auto dur = static_cast<Eigen::Index>(schema.duration_index());
    const auto ev = static_cast<Eigen::Index>(schema.event_index());
    const auto first = static_cast<Eigen::Index>(train.rows());
    for (Eigen::Index r = first; r < table.rows(); ++r) {
        missing(r, dur) = missing(r, ev) = true;
        table(r, dur) = table(r, ev) = 0.0;
    }
    rec.blanked_outcomes += sim.rows();

    MiceOptions opts = base;
    opts.seed = seed;
    const MiceResult res = mice_impute(table, missing, schema, opts);
    for (Eigen::Index r = 0; r < table.rows(); ++r)
        for (Eigen::Index c = 0; c < table.cols(); ++c)
            if (!missing(r, c) && res.completed(r, c) != table(r, c)) rec.mice_observed_intact = false;
    rec.mice_converged = res.converged;
    for (const auto& line : res.log) rec.notes.push_back("mice: " + line);
    return Dataset(schema, res.completed, joined.ids());
}

FoldOutput run_fold(const Dataset& ds, const SplitPlan& plan, const AugmenterSpec& aug, const StratificationRule& rule,
                    std::uint64_t seed, const FoldTask& task) {
    const auto& train_rows = plan.repetitions[static_cast<std::size_t>(task.repetition)][static_cast<std::size_t>(task.split)];
    const auto& test_rows = plan.repetitions[static_cast<std::size_t>(task.repetition)][static_cast<std::size_t>(1 - task.split)];
    const Dataset train = ds.subset(train_rows);
    const Dataset test = ds.subset(test_rows);
    const std::set<std::size_t> test_ids(test.ids().begin(), test.ids().end());

    FoldOutput out;
    out.test_rows = test_rows;
    FoldRecord& rec = out.record;
    rec.iteration = task.iteration;
    rec.repetition = task.repetition;
    rec.train_split = task.split;
    rec.train_rows = train.rows();
    const std::string where = "iteration " + std::to_string(task.iteration + 1) + ", repetition " +
                              std::to_string(task.repetition + 1) + ", train split " + std::to_string(task.split);

    const int max_attempts = aug.augments() ? 2 : 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const std::uint64_t fold_index =
            (static_cast<std::uint64_t>(task.iteration) << 16) |
            (static_cast<std::uint64_t>(task.repetition * 2 + task.split) << 4) | static_cast<std::uint64_t>(attempt);
        const std::uint64_t sim_seed = substream(seed, "calibration.simulate", fold_index);
        Dataset fit_data = train;

        if (aug.augments()) {
            const Dataset& source = aug.feed_test_rows ? test : train;
            const Dataset input = filter_stratum(source, rule);
            rec.simulation_input_ids = input.ids();
            rec.simulation_input_rows = input.rows();
            for (const std::size_t id : input.ids())
                if (test_ids.count(id))
                    throw LeakageError("leakage: simulation input for " + where + " contains test record " +
                                       std::to_string(id));

            std::optional<Dataset> sim;
            if (input.empty()) {
                rec.notes.push_back("stratum empty in training half; augmentation skipped");
            } else {
                switch (aug.kind) {
                case AugmenterKind::None: break;
                case AugmenterKind::Identity: sim = empty_like(ds); break;
                case AugmenterKind::Mcm: sim = synthesize(*aug.model, input, aug.ratio, sim_seed); break;
                case AugmenterKind::McmMice: {
                    for (int mice_try = 0; mice_try < 2; ++mice_try) {
                        const std::uint64_t s = mice_try == 0 ? sim_seed : substream(sim_seed, "mice.retry");
                        const Dataset simulated = synthesize(*aug.model, input, aug.ratio, s);
                        rec.blanked_outcomes = 0;
                        fit_data = mice_complete(train, simulated, aug.mice, substream(s, "mice"), rec);
                        rec.simulated_rows = simulated.rows();
                        if (rec.mice_converged) break;
                        rec.notes.push_back(mice_try == 0 ? "MICE did not converge; retrying with a new seed"
                                                          : "MICE did not converge on retry; result accepted");
                    }
                    break;
                }
                case AugmenterKind::RandomOversample: sim = random_oversample(input, input.rows(), sim_seed); break;
                case AugmenterKind::Smote:
                    if (input.rows() <= aug.smote_k)
                        rec.notes.push_back("stratum has " + std::to_string(input.rows()) +
                                            " training records, too few for smote; augmentation skipped");
                    else
                        sim = smote(input, input.rows(), aug.smote_k, sim_seed);
                    break;
                }
            }
            if (sim) {
                rec.simulated_rows = sim->rows();
                fit_data = Dataset::concat(train, *sim);
            }
        }

        ++rec.attempts;
        try {
            out.model = fit_coxph(fit_data);
            if (!out.model.possibly_infinite.empty()) {
                std::string names;
                for (const auto& n : out.model.possibly_infinite) names += (names.empty() ? "" : ", ") + n;
                rec.notes.push_back("coefficients may be infinite: " + names);
            }
            break;
        } catch (const CoxError& e) {
            if (attempt + 1 >= max_attempts) throw CalibrationError("CoxPH failed at " + where + ": " + e.what());
            rec.notes.push_back(std::string("CoxPH failed (") + e.what() + "); retrying with a new simulation seed");
        }
    }
    out.lph = log_partial_hazard(out.model, test.covariates());
    return out;
}

}  // namespace

CvResult cv_mean_lph(const Dataset& ds, const SplitPlan& plan, const AugmenterSpec& aug,
                     const StratificationRule& rule, const CvOptions& opts) {
    aug.validate();
    rule.validate(ds.schema());
    if (plan.n != ds.rows()) throw CalibrationError("cv_mean_lph: split plan was built for a different dataset");

    std::vector<FoldTask> tasks;
    const int iterations = aug.effective_iterations();
    for (int i = 0; i < iterations; ++i)
        for (int rep = 0; rep < 5; ++rep)
            for (int s = 0; s < 2; ++s) tasks.push_back({i, rep, s});

    std::vector<FoldOutput> outputs(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
            try {
                outputs[t] = run_fold(ds, plan, aug, rule, opts.seed, tasks[t]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    CvResult res;
    const auto n = static_cast<Eigen::Index>(ds.rows());
    for (int i = 0; i < iterations; ++i) {
        CvIteration it;
        Vector sum = Vector::Zero(n);
        it.appearances.assign(ds.rows(), 0);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (tasks[t].iteration != i) continue;
            auto& o = outputs[t];
            for (std::size_t k = 0; k < o.test_rows.size(); ++k) {
                sum(static_cast<Eigen::Index>(o.test_rows[k])) += o.lph(static_cast<Eigen::Index>(k));
                ++it.appearances[o.test_rows[k]];
            }
            it.models.push_back(std::move(o.model));
            res.folds.push_back(std::move(o.record));
            ++res.total_fits;
        }
        it.mean_lph = Vector(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const int a = it.appearances[static_cast<std::size_t>(r)];
            if (a == 0) throw CalibrationError("cv_mean_lph: patient " + std::to_string(r) + " never tested");
            it.mean_lph(r) = sum(r) / a;
        }
        res.iterations.push_back(std::move(it));
    }
    return res;
}

Vector predicted_risk(const CvIteration& it, double t) {
    if (it.models.empty()) throw CalibrationError("predicted_risk: no fitted models");
    double h0 = 0.0;
    for (const auto& m : it.models) h0 += m.cumulative_hazard(t);
    h0 /= static_cast<double>(it.models.size());
    return (-(-h0 * it.mean_lph.array().exp()).exp() + 1.0).matrix();
}

// ---------------------------------------------------------------------------
// Reports

namespace {

// Exact when every value is equal, so a repeated run averages to itself.
double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x - v.front();
    return v.front() + acc / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fixed(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

CalibrationReport stratified_calibration(const Dataset& ds, const StratificationRule& rule,
                                         const AugmenterSpec& aug, const CalibrationOptions& opts) {
    aug.validate();
    rule.validate(ds.schema());
    const auto rows = stratum_rows(ds, rule);
    if (rows.size() < opts.quantiles)
        throw CalibrationError("stratum '" + rule.name + "' has " + std::to_string(rows.size()) +
                               " patients; calibration needs at least " + std::to_string(opts.quantiles));

    CalibrationReport rep;
    rep.method = augmenter_name(aug.kind);
    rep.stratum = rule.name;
    rep.stratum_label = rule.label.empty() ? rule.name : rule.label;
    rep.population = rows.size();
    rep.timepoints = duration_timepoints(ds.durations());

    const SplitPlan plan = split_5x2(ds, opts.seed);
    for (int r = 0; r < 5; ++r)
        for (int s = 0; s < 2; ++s) {
            const auto& test = plan.repetitions[static_cast<std::size_t>(r)][static_cast<std::size_t>(1 - s)];
            const bool any = std::any_of(test.begin(), test.end(), [&](std::size_t i) { return rule.matches(ds, i); });
            if (!any)
                rep.log.push_back("repetition " + std::to_string(r + 1) + ", train split " + std::to_string(s) +
                                  ": no stratum patient in the test half");
        }

    const CvResult cv = cv_mean_lph(ds, plan, aug, rule, {opts.jobs, substream(opts.seed, "calibration")});
    rep.fits = cv.total_fits;
    for (const auto& f : cv.folds)
        for (const auto& note : f.notes)
            rep.log.push_back("iteration " + std::to_string(f.iteration + 1) + ", repetition " +
                              std::to_string(f.repetition + 1) + ", train split " + std::to_string(f.train_split) +
                              ": " + note);

    const Dataset sub = ds.subset(rows);
    const Vector dur = sub.durations();
    const Vector ev = sub.events();
    for (const auto& it : cv.iterations) {
        IterationResult ir;
        for (std::size_t k = 0; k < 3; ++k) {
            const double t = rep.timepoints[k];
            const Vector all_risk = predicted_risk(it, t);
            Vector risk(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i)
                risk(static_cast<Eigen::Index>(i)) = all_risk(static_cast<Eigen::Index>(rows[i]));
            auto& tp = ir.timepoints[k];
            tp.timepoint = t;
            tp.curve = quantile_calibration(risk, dur, ev, t, opts.quantiles);
            tp.slope = calibration_slope(tp.curve);
            ir.sum_of_losses += tp.slope.loss;
        }
        rep.iterations.push_back(std::move(ir));
    }

    std::vector<double> sums;
    for (const auto& ir : rep.iterations) sums.push_back(ir.sum_of_losses);
    rep.sum_of_losses = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> losses, slopes;
        for (const auto& ir : rep.iterations) {
            losses.push_back(ir.timepoints[k].slope.loss);
            slopes.push_back(ir.timepoints[k].slope.slope);
        }
        rep.loss_mean[k] = mean_of(losses);
        rep.loss_sd[k] = sample_sd(losses);
        rep.slope_mean[k] = mean_of(slopes);
        rep.sum_of_losses += rep.loss_mean[k];
    }
    rep.sum_sd = sample_sd(sums);
    return rep;
}

CalibrationReport general_calibration(const Dataset& ds, const AugmenterSpec& aug, const CalibrationOptions& opts) {
    return stratified_calibration(ds, StratificationRule::always_true(), aug, opts);
}

CalibrationReport mice_augmented_calibration(const Dataset& ds, const StratificationRule& rule, const McmBundle& model,
                                             const CalibrationOptions& opts, int iterations) {
    AugmenterSpec aug;
    aug.kind = AugmenterKind::McmMice;
    aug.model = &model;
    aug.iterations = iterations;
    return stratified_calibration(ds, rule, aug, opts);
}

std::vector<int> rank_ascending(const std::vector<double>& values) {
    std::vector<int> ranks;
    for (double v : values)
        ranks.push_back(1 + static_cast<int>(std::count_if(values.begin(), values.end(), [&](double w) { return w < v; })));
    return ranks;
}

MetaTable meta_calibration(const Dataset& ds, const std::vector<StratificationRule>& rules,
                           const std::vector<AugmenterSpec>& augmenters, const CalibrationOptions& opts,
                           const std::function<void(const CalibrationReport&)>& on_report) {
    if (rules.empty()) throw CalibrationError("meta_calibration: no strata");
    MetaTable meta;
    for (const auto& r : rules) {
        r.validate(ds.schema());
        meta.strata.push_back(r.label.empty() ? r.name : r.label);
    }
    std::vector<double> totals;
    for (const auto& aug : augmenters) {
        MetaRow row;
        row.method = augmenter_name(aug.kind);
        for (const auto& r : rules) {
            auto rep = stratified_calibration(ds, r, aug, opts);
            if (on_report) on_report(rep);
            row.stratum_sums.push_back(rep.sum_of_losses);
            row.total += rep.sum_of_losses;
            meta.reports.push_back(std::move(rep));
        }
        totals.push_back(row.total);
        meta.rows.push_back(std::move(row));
    }
    const auto ranks = rank_ascending(totals);
    for (std::size_t i = 0; i < meta.rows.size(); ++i) meta.rows[i].rank = ranks[i];
    return meta;
}

void write_report_csv(std::ostream& out, const std::vector<CalibrationReport>& reports) {
    out << "method,stratum,percentile,timepoint,slope_mean,loss_mean,loss_sd,iterations,population,fits\n";
    static constexpr const char* kPct[3] = {"25", "50", "75"};
    for (const auto& r : reports) {
        for (std::size_t k = 0; k < 3; ++k)
            out << r.method << ',' << r.stratum << ',' << kPct[k] << ',' << format_double(r.timepoints[k]) << ','
                << format_double(r.slope_mean[k]) << ',' << format_double(r.loss_mean[k]) << ','
                << format_double(r.loss_sd[k]) << ',' << r.iterations.size() << ',' << r.population << ',' << r.fits
                << '\n';
        out << r.method << ',' << r.stratum << ",sum,,," << format_double(r.sum_of_losses) << ','
            << format_double(r.sum_sd) << ',' << r.iterations.size() << ',' << r.population << ',' << r.fits << '\n';
    }
}

void write_curves_csv(std::ostream& out, const std::vector<CalibrationReport>& reports) {
    out << "method,stratum,iteration,percentile,timepoint,group,size,predicted,observed\n";
    static constexpr const char* kPct[3] = {"25", "50", "75"};
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.iterations.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) {
                const auto& c = r.iterations[i].timepoints[k].curve;
                for (std::size_t g = 0; g < c.points.size(); ++g)
                    out << r.method << ',' << r.stratum << ',' << i + 1 << ',' << kPct[k] << ','
                        << format_double(c.timepoint) << ',' << g + 1 << ',' << c.points[g].size << ','
                        << format_double(c.points[g].predicted) << ',' << format_double(c.points[g].observed) << '\n';
            }
}

std::string render_report_table(const std::vector<CalibrationReport>& reports) {
    std::ostringstream os;
    std::vector<std::string> seen;
    for (const auto& first : reports) {
        if (std::find(seen.begin(), seen.end(), first.stratum) != seen.end()) continue;
        seen.push_back(first.stratum);
        std::vector<const CalibrationReport*> group;
        std::vector<double> sums;
        for (const auto& r : reports)
            if (r.stratum == first.stratum) {
                group.push_back(&r);
                sums.push_back(r.sum_of_losses);
            }
        const auto ranks = rank_ascending(sums);
        os << "Stratification: " << first.stratum_label << " (n = " << first.population << ")\n";
        os << pad("Method", 12);
        for (std::size_t k = 0; k < 3; ++k)
            os << pad(std::string(k == 0 ? "25th" : k == 1 ? "50th" : "75th") + " (t=" + fixed(first.timepoints[k], 2) +
                          ")",
                      20);
        os << pad("Sum of Calibration Loss", 26) << "Rank\n";
        for (std::size_t i = 0; i < group.size(); ++i) {
            const auto& r = *group[i];
            const bool spread = r.iterations.size() > 1;
            auto cell = [&](double m, double sd) { return spread ? fixed(m) + " (" + fixed(sd) + ")" : fixed(m); };
            os << pad(r.method, 12);
            for (std::size_t k = 0; k < 3; ++k) os << pad(cell(r.loss_mean[k], r.loss_sd[k]), 20);
            os << pad(cell(r.sum_of_losses, r.sum_sd), 26) << ranks[i] << '\n';
        }
        os << '\n';
    }
    return os.str();
}

void write_meta_csv(std::ostream& out, const MetaTable& meta) {
    out << "method";
    for (const auto& s : meta.strata) out << ",\"" << s << '"';
    out << ",total,rank\n";
    for (const auto& row : meta.rows) {
        out << row.method;
        for (double v : row.stratum_sums) out << ',' << format_double(v);
        out << ',' << format_double(row.total) << ',' << row.rank << '\n';
    }
}

std::string render_meta_table(const MetaTable& meta) {
    std::ostringstream os;
    os << pad("Stratum", 40);
    for (const auto& row : meta.rows) os << pad(row.method, 12);
    os << '\n';
    for (std::size_t s = 0; s < meta.strata.size(); ++s) {
        os << pad(meta.strata[s], 40);
        for (const auto& row : meta.rows) os << pad(fixed(row.stratum_sums[s]), 12);
        os << '\n';
    }
    os << pad("Total", 40);
    for (const auto& row : meta.rows) os << pad(fixed(row.total, 2), 12);
    os << '\n' << pad("Rank", 40);
    for (const auto& row : meta.rows) os << pad(std::to_string(row.rank), 12);
    os << '\n';
    return os.str();
}

}  // namespace survsynth
