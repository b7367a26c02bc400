// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
// Uses the CKD CSV named by SURVIVALSYNTH_CKD_CSV when set, the seeded stub
// otherwise. Criteria whose targets only make sense on the real records print
// SKIP on the stub after running every check that does not depend on them.
// With --require-real the binary exits 77 when no CSV is configured.

#include "survsynth/baselines.hpp"
#include "survsynth/calibration.hpp"
#include "survsynth/evaluate.hpp"
#include "survsynth/mcm_net.hpp"
#include "survsynth/preprocess.hpp"
#include "survsynth/survival.hpp"
#include "survsynth/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

using namespace survsynth;

namespace {

constexpr int kSkipCode = 77;
constexpr std::uint64_t kSeed = 20240;

enum class Status { Pass, Fail, Skip };

int g_failures = 0;

void report(int id, Status s, const std::string& title, const std::string& detail) {
    const char* tag = s == Status::Pass ? "PASS" : s == Status::Fail ? "FAIL" : "SKIP";
    if (s == Status::Fail) ++g_failures;
    std::cout << '[' << tag << "] " << id << ". " << title << ": " << detail << std::endl;
}

std::string num(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// ---------------------------------------------------------------------------
// 1. preprocessing round-trip

void criterion_preprocess(const Dataset& ds) {
    Stopwatch sw;
    const auto model = fit_preprocessor(ds);
    const Dataset back = inverse_transform(model, transform(model, ds));
    const double secs = sw.seconds();
    double worst = 0.0;
    bool binaries_exact = true;
    for (std::size_t c = 0; c < ds.schema().size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        for (Eigen::Index r = 0; r < ds.values().rows(); ++r) {
            const double want = ds.values()(r, col), got = back.values()(r, col);
            if (ds.schema()[c].kind == FeatureKind::Binary)
                binaries_exact = binaries_exact && got == want;
            else
                worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-12));
        }
    }
    const bool ok = worst < 1e-6 && binaries_exact && secs < 1.0;
    report(1, ok ? Status::Pass : Status::Fail, "preprocessing round-trip",
           "max relative error " + sci(worst) + " (< 1e-6), binaries " + (binaries_exact ? "exact" : "NOT exact") +
               ", " + num(secs, 3) + " s (< 1 s)");
}

// ---------------------------------------------------------------------------
// 2. CoxPH against a brute-force grid

double direct_efron(const Vector& x, const Vector& t, const Vector& e, double beta) {
    std::vector<double> times;
    for (Eigen::Index i = 0; i < t.size(); ++i)
        if (e(i) != 0.0) times.push_back(t(i));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double ll = 0.0;
    for (double s : times) {
        double risk = 0.0, tied = 0.0;
        int d = 0;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            if (t(i) >= s) risk += std::exp(beta * x(i));
            if (t(i) == s && e(i) != 0.0) tied += std::exp(beta * x(i)), ll += beta * x(i), ++d;
        }
        for (int l = 0; l < d; ++l) ll -= std::log(risk - static_cast<double>(l) / d * tied);
    }
    return ll;
}

void criterion_cox() {
    struct Toy {
        Vector x, t, e;
    };
    const std::vector<Toy> toys = {
        {vec({0, 1, 0, 1, 1, 0}), vec({1, 2, 3, 4, 5, 6}), vec({1, 1, 0, 1, 1, 0})},
        {vec({0.5, 1.5, -1, 2, 0, 1}), vec({1, 1, 2, 2, 3, 3}), vec({1, 1, 1, 0, 1, 1})},
        {vec({1, 0, 1, 1, 0}), vec({2, 3, 3, 5, 7}), vec({1, 1, 1, 0, 1})},
    };
    Stopwatch sw;
    double worst = 0.0;
    bool monotone = true;
    for (const auto& toy : toys) {
        double best = -5.0, best_ll = -INFINITY;
        for (int i = 0; i <= 10000; ++i) {
            const double b = -5.0 + 1e-3 * i;
            const double ll = direct_efron(toy.x, toy.t, toy.e, b);
            if (ll > best_ll) best_ll = ll, best = b;
        }
        const auto m = fit_coxph(Matrix(toy.x), toy.t, toy.e);
        worst = std::max(worst, std::abs(m.beta(0) - best));
        for (std::size_t i = 1; i < m.loglik_history.size(); ++i)
            monotone = monotone && m.loglik_history[i] >= m.loglik_history[i - 1];
    }
    const double secs = sw.seconds();
    const bool ok = worst < 2e-3 && monotone && secs < 5.0;
    report(2, ok ? Status::Pass : Status::Fail, "CoxPH grid-oracle equivalence",
           "max |beta - grid| " + sci(worst) + " (< 2e-3) over 3 toy sets, log-likelihood " +
               (monotone ? "non-decreasing" : "DECREASED") + ", " + num(secs, 2) + " s (< 5 s)");
}

// ---------------------------------------------------------------------------
// 3. gradient check

double probe_loss(const McmModel& m, const Matrix& target, const Mask& mask) {
    return masked_loss(mcm_forward(m, target.cwiseProduct(mask), mask), target, mask);
}

void criterion_gradient() {
    constexpr std::size_t D = 21, H = 64;
    constexpr Eigen::Index N = 8;
    constexpr double h = 1e-5;
    Stopwatch sw;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t point = 0; point < 3; ++point) {
        McmModel model = McmModel::initialize(D, H, substream(kSeed, "acceptance.gradcheck", point));
        // Move away from the initial gains/offsets so every tensor is exercised.
        auto rng = make_rng(kSeed, "acceptance.gradcheck.params", point);
        std::uniform_real_distribution<double> jitter(-0.2, 0.2);
        for (Matrix* t : model.params.tensors())
            for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += jitter(rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Matrix target(N, static_cast<Eigen::Index>(D));
        for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = unit(rng);
        const Mask mask = random_mask(N, D, D / 2, rng);

        McmParams grad = McmParams::zeros_like(model.params);
        loss_and_gradient(model, target, mask, grad);
        auto ps = model.params.tensors();
        const auto gs = grad.tensors();
        for (std::size_t t = 0; t < McmParams::kTensorCount; ++t)
            for (Eigen::Index i = 0; i < ps[t]->size(); ++i) {
                double& w = ps[t]->data()[i];
                const double saved = w;
                w = saved + h;
                const double up = probe_loss(model, target, mask);
                w = saved - h;
                const double down = probe_loss(model, target, mask);
                w = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double analytic = gs[t]->data()[i];
                worst = std::max(worst, std::abs(numeric - analytic) /
                                            std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
                ++checked;
            }
    }
    const double secs = sw.seconds();
    const bool ok = worst < 1e-4 && secs < 30.0;
    report(3, ok ? Status::Pass : Status::Fail, "MCM gradient vs central differences",
           "max relative error " + sci(worst) + " (< 1e-4) over " + std::to_string(checked) +
               " parameters at 3 points, " + num(secs, 1) + " s (< 30 s)");
}

// ---------------------------------------------------------------------------
// 4. training convergence

McmBundle criterion_training(const Dataset& ds) {
    McmBundle bundle;
    bundle.preprocess = fit_preprocessor(ds);
    const Matrix x = transform(bundle.preprocess, ds);
    TrainConfig cfg;  // 500 epochs, lr 1e-3, H 64
    cfg.seed = substream(kSeed, "acceptance.train");
    Stopwatch sw;
    const auto a = train(x, cfg, ds.schema().hash());
    const double secs = sw.seconds();
    const auto b = train(x, cfg, ds.schema().hash());
    const double first = a.epoch_loss.front(), last = a.epoch_loss.back();
    const bool same = a.model.params == b.model.params && a.epoch_loss == b.epoch_loss;
    const bool ok = std::isfinite(last) && last <= 0.7 * first && same && secs < 300.0;
    report(4, ok ? Status::Pass : Status::Fail, "training convergence",
           "epoch-1 loss " + num(first) + ", epoch-500 loss " + num(last) + " (ratio " + num(last / first, 3) +
               " <= 0.7), rerun " + (same ? "identical" : "DIFFERENT") + ", " + num(secs, 1) + " s (< 300 s)");
    bundle.network = a.model;
    return bundle;
}

// ---------------------------------------------------------------------------
// 5. realism

void criterion_realism(const Dataset& ds, const McmBundle& bundle, bool real) {
    const Dataset synth = synthesize(bundle, ds, kDefaultSynthesisRatio, substream(kSeed, "acceptance.synth"));
    const auto rep = realism_report(ds, synth);
    double max_pp = 0.0, max_ks = 0.0;
    std::string worst_pp, worst_ks;
    for (const auto& b : rep.binary)
        if (std::abs(b.diff_pp) >= max_pp) max_pp = std::abs(b.diff_pp), worst_pp = b.feature;
    for (const auto& n : rep.numeric)
        if (n.ks >= max_ks) max_ks = n.ks, worst_ks = n.feature;
    const auto e = static_cast<Eigen::Index>(ds.schema().index_of("eGFRBaseline"));
    const auto c = static_cast<Eigen::Index>(ds.schema().index_of("CreatinineBaseline"));
    const double r_real = rep.corr_real(e, c), r_synth = rep.corr_synth(e, c);
    const std::string values = "max |prevalence diff| " + num(max_pp, 2) + " pp (" + worst_pp + "; gate 5), max KS " +
                               num(max_ks, 3) + " (" + worst_ks + "; gate 0.2), eGFR-creatinine r real " +
                               num(r_real, 3) + " / synthetic " + num(r_synth, 3) + " (gate: both < 0)";
    const bool finite = std::isfinite(max_pp) && std::isfinite(max_ks) && std::isfinite(r_synth);
    if (!real) {
        report(5, finite ? Status::Pass : Status::Fail, "realism (stub smoke only)",
               std::string("report ") + (finite ? "complete and finite" : "NOT finite") +
                   "; gates apply to real data only, stub values: " + values);
        return;
    }
    const bool ok = max_pp <= 5.0 && max_ks < 0.2 && r_real < 0.0 && r_synth < 0.0;
    report(5, ok ? Status::Pass : Status::Fail, "realism gates", values);
}

// ---------------------------------------------------------------------------
// 6. utility

void criterion_utility(const Dataset& ds, const McmBundle& bundle, bool real) {
    const Dataset synth = synthesize(bundle, ds, kDefaultSynthesisRatio, substream(kSeed, "acceptance.synth"));
    const auto rep = utility_report(ds, synth);
    std::size_t same = 0;
    for (const auto& h : rep.hazard_ratios) same += h.same_side;
    const std::string values = "KM final-survival gap " + num(rep.km_final_gap, 4) + " (gate 0.05), HR CI side " +
                               (rep.cox_ok ? std::to_string(same) + "/" + std::to_string(rep.hazard_ratios.size())
                                           : "unavailable (" + rep.cox_error + ")") +
                               " matching";
    if (!real) {
        report(6, Status::Skip, "utility gates", "needs SURVIVALSYNTH_CKD_CSV; stub values: " + values);
        return;
    }
    const bool ok = rep.cox_ok && rep.km_final_gap < 0.05 && same == rep.hazard_ratios.size();
    report(6, ok ? Status::Pass : Status::Fail, "utility gates", values);
}

// ---------------------------------------------------------------------------
// 7. calibration reproduction

void criterion_calibration(const Dataset& ds, const McmBundle& bundle, bool real) {
    constexpr std::array<double, 3> kSlopes = {0.9880, 0.8255, 0.7710};
    AugmenterSpec none;
    AugmenterSpec mcm;
    mcm.kind = AugmenterKind::Mcm;
    mcm.model = &bundle;

    std::array<double, 3> slope_avg{};
    double none_avg = 0.0, mcm_avg = 0.0;
    int mcm_better = 0;
    for (std::uint64_t run = 0; run < 5; ++run) {
        CalibrationOptions opts;
        opts.seed = substream(kSeed, "acceptance.calibration", run);
        opts.jobs = jobs();
        const auto a = general_calibration(ds, none, opts);
        const auto b = general_calibration(ds, mcm, opts);
        for (std::size_t k = 0; k < 3; ++k) slope_avg[k] += a.slope_mean[k] / 5.0;
        none_avg += a.sum_of_losses / 5.0;
        mcm_avg += b.sum_of_losses / 5.0;
        mcm_better += b.sum_of_losses < a.sum_of_losses;
    }

    std::vector<AugmenterSpec> sweep(4);
    sweep[1] = mcm;
    sweep[2].kind = AugmenterKind::RandomOversample;
    sweep[3].kind = AugmenterKind::Smote;
    CalibrationOptions opts;
    opts.seed = substream(kSeed, "acceptance.meta");
    opts.jobs = jobs();
    Stopwatch sw;
    const auto meta = meta_calibration(ds, ckd_strata_presets(), sweep, opts);
    const double secs = sw.seconds();
    const double total_none = meta.rows[0].total, total_mcm = meta.rows[1].total;

    std::string values = "no-augmentation slopes " + num(slope_avg[0]) + " / " + num(slope_avg[1]) + " / " +
                         num(slope_avg[2]) + " (targets 0.9880 / 0.8255 / 0.7710 +- 0.10), sums none " +
                         num(none_avg) + " (0.4155 +- 0.12) mcm " + num(mcm_avg) + " (0.3508 +- 0.12), mcm lower in " +
                         std::to_string(mcm_better) + "/5 runs (>= 3), meta totals none " + num(total_none, 2) +
                         " (14.93 +- 1.0) mcm " + num(total_mcm, 2) + " (13.54 +- 1.0) ros " +
                         num(meta.rows[2].total, 2) + " smote " + num(meta.rows[3].total, 2) + ", ranks none " +
                         std::to_string(meta.rows[0].rank) + " mcm " + std::to_string(meta.rows[1].rank) +
                         ", sweep " + num(secs, 1) + " s (< 900 s)";
    if (!real) {
        // The runtime bound is the one target that is meaningful on the stub.
        if (secs >= 900.0) {
            report(7, Status::Fail, "calibration reproduction", "stub sweep took " + num(secs, 1) + " s (>= 900 s)");
            return;
        }
        report(7, Status::Skip, "calibration reproduction",
               "needs SURVIVALSYNTH_CKD_CSV; sweep runtime within bound on the stub; stub values: " + values);
        return;
    }
    bool ok = secs < 900.0;
    for (std::size_t k = 0; k < 3; ++k) ok = ok && std::abs(slope_avg[k] - kSlopes[k]) <= 0.10;
    ok = ok && std::abs(none_avg - 0.4155) <= 0.12 && std::abs(mcm_avg - 0.3508) <= 0.12 && mcm_better >= 3;
    ok = ok && std::abs(total_none - 14.93) <= 1.0 && std::abs(total_mcm - 13.54) <= 1.0 &&
         meta.rows[1].rank < meta.rows[0].rank;
    report(7, ok ? Status::Pass : Status::Fail, "calibration reproduction", values);
}

// ---------------------------------------------------------------------------
// 8. MCM + MICE path

void criterion_mice(const Dataset& ds, const McmBundle& bundle, bool real) {
    const auto rule = resolve_stratum("egfr_normal");
    CalibrationOptions opts;
    opts.seed = substream(kSeed, "acceptance.mice");
    opts.jobs = jobs();
    const auto rep = mice_augmented_calibration(ds, rule, bundle, opts);

    // Structural checks on the same folds.
    AugmenterSpec aug;
    aug.kind = AugmenterKind::McmMice;
    aug.model = &bundle;
    const auto cv = cv_mean_lph(ds, split_5x2(ds, opts.seed), aug, rule, {opts.jobs, substream(opts.seed, "calibration")});
    bool blanks = true, intact = true;
    for (const auto& f : cv.folds) {
        blanks = blanks && f.blanked_outcomes == f.simulated_rows;
        intact = intact && f.mice_observed_intact;
    }
    const bool structural = blanks && intact && cv.total_fits == 50;
    const std::string checks = std::to_string(cv.folds.size()) + " folds, blanked outcomes " +
                               (blanks ? "= simulated rows" : "!= simulated rows") + ", observed cells " +
                               (intact ? "intact" : "MODIFIED") + "; normal-eGFR loss sum " + num(rep.sum_of_losses) +
                               " (sd " + num(rep.sum_sd) + "; target 0.5549 +- 0.15)";
    if (!structural) {
        report(8, Status::Fail, "MCM+MICE path", checks);
        return;
    }
    if (!real) {
        report(8, Status::Skip, "MCM+MICE path",
               "structural checks passed; loss target needs SURVIVALSYNTH_CKD_CSV; stub: " + checks);
        return;
    }
    const bool ok = std::abs(rep.sum_of_losses - 0.5549) <= 0.15;
    report(8, ok ? Status::Pass : Status::Fail, "MCM+MICE path", checks);
}

// ---------------------------------------------------------------------------
// 9. harness integrity

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Drops the creation timestamp, the one field allowed to differ.
std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line))
        if (line.find("created_utc") == std::string::npos) out += line + '\n';
    return out;
}

bool run_cli_pipeline(const std::filesystem::path& dir, std::string& error) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string cli = std::string(SURVSYNTH_CLI) + " --seed 7 ";
    const std::string d = dir.string() + "/";
    const std::vector<std::string> commands = {
        cli + "stub --rows 491 --out " + d + "stub.csv",
        cli + "train --data " + d + "stub.csv --epochs 40 --out-model " + d + "model.json",
        cli + "synth --model " + d + "model.json --data " + d + "stub.csv --out " + d + "synth.csv",
        cli + "calibrate --data " + d + "stub.csv --model " + d + "model.json --augmenter none,mcm,mcm-mice,ros,smote " +
            "--stratum cvd_true --jobs 3 --out-dir " + d + "calib",
        cli + "calibrate --data " + d + "stub.csv --model " + d + "model.json --augmenter none,mcm " +
            "--all-strata --iterations 2 --jobs 2 --out-dir " + d + "meta",
        cli + "evaluate --real " + d + "stub.csv --synth " + d + "synth.csv --out-dir " + d + "eval",
    };
    for (const auto& c : commands) {
        if (std::system((c + " > " + d + "cli.log 2>&1").c_str()) != 0) {
            error = "command failed: " + c;
            return false;
        }
    }
    std::filesystem::remove(dir / "cli.log");
    return true;
}

void criterion_harness(const Dataset& ds, const McmBundle& bundle) {
    std::vector<std::string> problems;

    AugmenterSpec leak;
    leak.kind = AugmenterKind::Mcm;
    leak.model = &bundle;
    leak.feed_test_rows = true;
    bool tripped = false;
    try {
        cv_mean_lph(ds, split_5x2(ds, 1), leak, StratificationRule::always_true(), {});
    } catch (const LeakageError&) {
        tripped = true;
    }
    if (!tripped) problems.push_back("leakage tripwire did not fire");

    AugmenterSpec mcm;
    mcm.kind = AugmenterKind::Mcm;
    mcm.model = &bundle;
    const auto cv = cv_mean_lph(ds, split_5x2(ds, 1), mcm, resolve_stratum("cvd_true"), {jobs(), 3});
    if (cv.total_fits != 50) problems.push_back("augmented run made " + std::to_string(cv.total_fits) + " fits");

    // Decile partition on the harness's own predictions.
    const Vector risk = predicted_risk(cv.iterations[0], 3.0);
    const auto curve = quantile_calibration(risk, ds.durations(), ds.events(), 3.0);
    std::size_t total = 0, lo = ds.rows(), hi = 0;
    for (const auto& p : curve.points) total += p.size, lo = std::min(lo, p.size), hi = std::max(hi, p.size);
    bool ordered = true;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        for (std::size_t j = 0; j < ds.rows(); ++j)
            if (curve.group[i] < curve.group[j] && risk(static_cast<Eigen::Index>(i)) > risk(static_cast<Eigen::Index>(j)))
                ordered = false;
    if (total != ds.rows() || hi - lo > 1 || !ordered) problems.push_back("decile partition invariant violated");

    // Slope against a QR least-squares solve.
    auto rng = make_rng(kSeed, "acceptance.slope");
    std::uniform_real_distribution<double> unit;
    double slope_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        CalibrationCurve c;
        Matrix a(10, 1);
        Vector b(10);
        for (int i = 0; i < 10; ++i) {
            a(i, 0) = unit(rng);
            b(i) = unit(rng);
            c.points.push_back({b(i), a(i, 0), 1});
        }
        slope_err = std::max(slope_err, std::abs(calibration_slope(c).slope - a.colPivHouseholderQr().solve(b)(0)));
    }
    if (slope_err >= 1e-10) problems.push_back("slope oracle error " + sci(slope_err));

    // Byte-reproducible CLI runs.
    const auto base = std::filesystem::temp_directory_path() / ("survsynth_acceptance_" + std::to_string(::getpid()));
    std::string error;
    std::size_t compared = 0;
    if (!run_cli_pipeline(base / "a", error) || !run_cli_pipeline(base / "b", error)) {
        problems.push_back(error);
    } else {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(base / "a")) {
            if (!entry.is_regular_file()) continue;
            const auto rel = std::filesystem::relative(entry.path(), base / "a");
            std::string x = slurp(entry.path()), y = slurp(base / "b" / rel);
            if (rel.filename().string().find("provenance") != std::string::npos) {
                x = without_timestamp(x);
                y = without_timestamp(y);
            }
            if (x != y) problems.push_back("output differs between runs: " + rel.string());
            ++compared;
        }
    }
    std::filesystem::remove_all(base);

    std::string detail = std::string("leakage tripwire ") + (tripped ? "fired" : "SILENT") + ", " +
                         std::to_string(cv.total_fits) + " fits per augmented run, decile groups " +
                         std::to_string(lo) + "-" + std::to_string(hi) + " patients, slope oracle error " +
                         sci(slope_err) + " (< 1e-10), " + std::to_string(compared) +
                         " CLI output files identical across two seeded runs";
    for (const auto& p : problems) detail += "; " + p;
    report(9, problems.empty() ? Status::Pass : Status::Fail, "harness integrity", detail);
}

}  // namespace

int main(int argc, char** argv) {
    bool require_real = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--require-real") {
            require_real = true;
        } else {
            std::cerr << "usage: " << argv[0] << " [--require-real]\n";
            return 2;
        }
    }
    const char* csv = std::getenv("SURVIVALSYNTH_CKD_CSV");
    const bool real = csv && *csv;
    if (require_real && !real) {
        std::cout << "SURVIVALSYNTH_CKD_CSV is not set; real-data acceptance skipped\n";
        return kSkipCode;
    }

    try {
        Dataset ds;
        if (real) {
            const char* schema_path = std::getenv("SURVIVALSYNTH_CKD_SCHEMA");
            const auto schema = schema_path && *schema_path ? load_schema(schema_path) : ckd_schema();
            ds = load_dataset(csv, schema);
            std::cout << "data: " << csv << " (" << ds.rows() << " records)\n";
        } else {
            ds = make_stub_dataset(ckd_schema(), ckd_marginals(), 491, substream(kSeed, "acceptance.stub"));
            std::cout << "data: seeded stub (" << ds.rows() << " records); set SURVIVALSYNTH_CKD_CSV for real data\n";
        }

        criterion_preprocess(ds);
        criterion_cox();
        criterion_gradient();
        const McmBundle bundle = criterion_training(ds);
        criterion_realism(ds, bundle, real);
        criterion_utility(ds, bundle, real);
        criterion_calibration(ds, bundle, real);
        criterion_mice(ds, bundle, real);
        criterion_harness(ds, bundle);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] aborted: " << e.what() << '\n';
        return 1;
    }
    std::cout << (g_failures == 0 ? "acceptance: no failures\n" : "acceptance: " + std::to_string(g_failures) + " failed\n");
    return g_failures == 0 ? 0 : 1;
}
