// survivalsynth: train, synthesize and evaluate masked-reconstruction models
// for tabular survival data.

#include "survsynth/baselines.hpp"
#include "survsynth/calibration.hpp"
#include "survsynth/evaluate.hpp"
#include "survsynth/mcm_net.hpp"
#include "survsynth/synthesis.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace survsynth;

namespace {

struct Settings {
    nlohmann::json config = nlohmann::json::object();
    std::optional<std::uint64_t> seed_flag;

    // --seed, then the config file, then SURVIVALSYNTH_SEED, then 0.
    std::uint64_t seed() const {
        if (seed_flag) return *seed_flag;
        if (config.contains("seed")) return config.at("seed").get<std::uint64_t>();
        if (const char* env = std::getenv("SURVIVALSYNTH_SEED")) {
            try {
                std::size_t used = 0;
                const auto v = std::stoull(env, &used);
                if (used == std::string(env).size()) return v;
            } catch (const std::exception&) {
            }
            throw Error("SURVIVALSYNTH_SEED is not an unsigned integer: '" + std::string(env) + "'");
        }
        return 0;
    }

    template <typename T>
    T get(const char* section, const char* key, T fallback) const {
        if (config.contains(section) && config.at(section).contains(key)) return config.at(section).at(key).get<T>();
        return fallback;
    }
};

void load_config(Settings& s, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    try {
        s.config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config file '" + path + "': " + e.what());
    }
}

FeatureSchema schema_from(const std::string& path) { return path.empty() ? ckd_schema() : load_schema(path); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw DataError("cannot write '" + path.string() + "'");
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    write_text(path, os.str());
}

// CLI value overrides the config entry only when given on the command line.
template <typename T>
T pick(const CLI::Option* opt, const T& flag_value, const Settings& s, const char* section, const char* key,
       T fallback) {
    if (opt->count() > 0) return flag_value;
    return s.get<T>(section, key, fallback);
}

// ---------------------------------------------------------------------------

struct StubArgs {
    std::string schema, marginals, out;
    std::size_t rows = 491;
};

void run_stub(const StubArgs& a, const Settings& s) {
    const FeatureSchema schema = schema_from(a.schema);
    const Marginals m = a.marginals.empty() ? ckd_marginals() : load_marginals(a.marginals);
    const Dataset ds = make_stub_dataset(schema, m, a.rows, s.seed());
    write_with(a.out, [&](std::ostream& os) { write_dataset_csv(os, ds); });
    std::cerr << "wrote " << ds.rows() << " stub records to " << a.out << '\n';
}

struct TrainArgs {
    std::string data, schema, out_model, history;
    int epochs = 0;
    double lr = 0.0;
    std::size_t batch = 0, hidden = 0;
    CLI::Option *epochs_opt = nullptr, *lr_opt = nullptr, *batch_opt = nullptr, *hidden_opt = nullptr;
};

void run_train(const TrainArgs& a, const Settings& s) {
    const FeatureSchema schema = schema_from(a.schema);
    const Dataset ds = load_dataset(a.data, schema);
    TrainConfig cfg;
    cfg.epochs = pick(a.epochs_opt, a.epochs, s, "train", "epochs", cfg.epochs);
    cfg.learning_rate = pick(a.lr_opt, a.lr, s, "train", "learning_rate", cfg.learning_rate);
    cfg.batch_size = pick(a.batch_opt, a.batch, s, "train", "batch_size", cfg.batch_size);
    cfg.hidden_dim = pick(a.hidden_opt, a.hidden, s, "train", "hidden_dim", cfg.hidden_dim);
    cfg.mask_min = s.get("train", "mask_min", cfg.mask_min);
    cfg.mask_max = s.get("train", "mask_max", cfg.mask_max);
    cfg.seed = s.seed();

    McmBundle bundle;
    bundle.preprocess = fit_preprocessor(ds);
    const TrainResult res = train(transform(bundle.preprocess, ds), cfg, schema.hash());
    bundle.network = res.model;
    write_text(a.out_model, bundle_to_json_text(bundle));
    const fs::path history = a.history.empty() ? fs::path(a.out_model + ".history.csv") : fs::path(a.history);
    write_with(history, [&](std::ostream& os) {
        os << "epoch,loss\n";
        for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
            os << e + 1 << ',' << format_double(res.epoch_loss[e]) << '\n';
    });
    std::cerr << "trained " << cfg.epochs << " epochs; loss " << format_double(res.epoch_loss.front()) << " -> "
              << format_double(res.epoch_loss.back()) << "; model " << a.out_model << '\n';
}

struct SynthArgs {
    std::string model, data, schema, out;
    double ratio = kDefaultSynthesisRatio;
    CLI::Option* ratio_opt = nullptr;
};

void run_synth(const SynthArgs& a, const Settings& s) {
    const McmBundle bundle = load_bundle(a.model);
    const FeatureSchema schema = a.schema.empty() ? bundle.preprocess.schema() : load_schema(a.schema);
    check_schema(bundle, schema);
    const Dataset ds = load_dataset(a.data, schema);
    const double ratio = pick(a.ratio_opt, a.ratio, s, "synth", "ratio", kDefaultSynthesisRatio);
    const std::uint64_t seed = s.seed();
    const Dataset out = synthesize(bundle, ds, ratio, seed);
    write_with(a.out, [&](std::ostream& os) { write_dataset_csv(os, out); });
    write_provenance(a.out + ".provenance.json", {hex64(bundle.content_hash()), ratio, seed, out.rows(), utc_timestamp()});
    std::cerr << "wrote " << out.rows() << " synthetic records to " << a.out << '\n';
}

struct CalibrateArgs {
    std::string data, schema, model, augmenters = "none", stratum = "all", strata_file, out_dir;
    bool all_strata = false;
    int iterations = 5, jobs = 1;
    double ratio = kDefaultSynthesisRatio;
    CLI::Option *iter_opt = nullptr, *jobs_opt = nullptr, *ratio_opt = nullptr;
};

void run_calibrate(const CalibrateArgs& a, const Settings& s) {
    const FeatureSchema schema = schema_from(a.schema);
    const Dataset ds = load_dataset(a.data, schema);

    std::vector<StratificationRule> rules;
    if (!a.strata_file.empty()) rules = load_strata_file(a.strata_file);
    else if (a.all_strata) rules = ckd_strata_presets();
    else rules.push_back(resolve_stratum(a.stratum));
    for (const auto& r : rules) r.validate(schema);

    std::optional<McmBundle> bundle;
    std::vector<AugmenterSpec> specs;
    std::stringstream list(a.augmenters);
    for (std::string name; std::getline(list, name, ',');) {
        AugmenterSpec spec;
        spec.kind = parse_augmenter(name);
        spec.iterations = pick(a.iter_opt, a.iterations, s, "calibrate", "iterations", 5);
        spec.ratio = pick(a.ratio_opt, a.ratio, s, "calibrate", "ratio", kDefaultSynthesisRatio);
        spec.smote_k = s.get<std::size_t>("calibrate", "smote_k", kDefaultSmoteNeighbours);
        spec.mice.max_iter = s.get("calibrate", "mice_max_iter", spec.mice.max_iter);
        if (spec.kind == AugmenterKind::Mcm || spec.kind == AugmenterKind::McmMice) {
            if (a.model.empty()) throw Error("augmenter '" + name + "' needs --model");
            if (!bundle) {
                bundle = load_bundle(a.model);
                check_schema(*bundle, schema);
            }
        }
        specs.push_back(spec);
    }
    if (specs.empty()) throw Error("no augmenter given");
    for (auto& spec : specs)
        if (bundle) spec.model = &*bundle;

    CalibrationOptions opts;
    opts.seed = s.seed();
    opts.jobs = pick(a.jobs_opt, a.jobs, s, "calibrate", "jobs", 1);
    opts.quantiles = s.get<std::size_t>("calibrate", "quantiles", kDefaultQuantiles);

    auto progress = [](const CalibrationReport& r) {
        std::cerr << r.method << " / " << r.stratum << ": sum " << format_double(r.sum_of_losses) << '\n';
    };
    const MetaTable meta = meta_calibration(ds, rules, specs, opts, progress);

    const fs::path dir = a.out_dir;
    write_with(dir / "calibration_report.csv", [&](std::ostream& os) { write_report_csv(os, meta.reports); });
    write_with(dir / "calibration_curves.csv", [&](std::ostream& os) { write_curves_csv(os, meta.reports); });
    write_text(dir / "calibration_table.txt", render_report_table(meta.reports));
    write_with(dir / "calibration_log.txt", [&](std::ostream& os) {
        for (const auto& r : meta.reports)
            for (const auto& line : r.log) os << r.method << " / " << r.stratum << ": " << line << '\n';
    });
    if (rules.size() > 1) {
        write_with(dir / "meta_calibration.csv", [&](std::ostream& os) { write_meta_csv(os, meta); });
        write_text(dir / "meta_calibration.txt", render_meta_table(meta));
    }
    std::cout << render_report_table(meta.reports);
    if (rules.size() > 1) std::cout << render_meta_table(meta);
}

struct EvaluateArgs {
    std::string real, synth, schema, out_dir;
};

void run_evaluate(const EvaluateArgs& a, const Settings&) {
    const FeatureSchema schema = schema_from(a.schema);
    const Dataset real = load_dataset(a.real, schema);
    const Dataset synth = load_dataset(a.synth, schema);
    const RealismReport realism = realism_report(real, synth);
    const UtilityReport utility = utility_report(real, synth);
    write_evaluation(a.out_dir, realism, utility);
    if (!utility.cox_ok) throw Error("CoxPH failed, partial report written: " + utility.cox_error);
    std::cerr << "wrote evaluation reports to " << a.out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-reconstruction synthesis and calibration for tabular survival data"};
    app.require_subcommand(1);
    app.fallthrough();
    Settings settings;
    std::string config_path;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (fallback: config, SURVIVALSYNTH_SEED)");
    app.add_option("--config", config_path, "JSON config file; flags override its entries");

    StubArgs stub;
    auto* c_stub = app.add_subcommand("stub", "Write a synthetic stand-in dataset matching published marginals");
    c_stub->add_option("--schema", stub.schema, "Schema JSON (default: built-in CKD schema)");
    c_stub->add_option("--marginals", stub.marginals, "Marginals JSON (default: built-in CKD marginals)");
    c_stub->add_option("--rows", stub.rows, "Number of records")->capture_default_str();
    c_stub->add_option("--out", stub.out, "Output CSV")->required();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Fit the preprocessor and the reconstruction network");
    c_train->add_option("--data", tr.data, "Training CSV")->required();
    c_train->add_option("--schema", tr.schema, "Schema JSON (default: built-in CKD schema)");
    c_train->add_option("--out-model", tr.out_model, "Model file to write")->required();
    c_train->add_option("--history", tr.history, "Loss history CSV (default: <out-model>.history.csv)");
    tr.epochs_opt = c_train->add_option("--epochs", tr.epochs, "Training epochs (default 500)");
    tr.lr_opt = c_train->add_option("--lr", tr.lr, "Adam learning rate (default 0.001)");
    tr.batch_opt = c_train->add_option("--batch-size", tr.batch, "Batch size (default 64)");
    tr.hidden_opt = c_train->add_option("--hidden", tr.hidden, "Hidden dimension (default 64)");

    SynthArgs sy;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with a trained model");
    c_synth->add_option("--model", sy.model, "Model file")->required();
    c_synth->add_option("--data", sy.data, "Source CSV")->required();
    c_synth->add_option("--schema", sy.schema, "Schema JSON (default: the model's schema)");
    sy.ratio_opt = c_synth->add_option("--ratio", sy.ratio, "Masking ratio in [0, 1) (default 0.5)");
    c_synth->add_option("--out", sy.out, "Output CSV; provenance goes to <out>.provenance.json")->required();

    CalibrateArgs ca;
    auto* c_cal = app.add_subcommand("calibrate", "5x2 cross-validated calibration, optionally augmented");
    c_cal->add_option("--data", ca.data, "Dataset CSV")->required();
    c_cal->add_option("--schema", ca.schema, "Schema JSON (default: built-in CKD schema)");
    c_cal->add_option("--model", ca.model, "Pre-trained model (needed by mcm and mcm-mice)");
    c_cal->add_option("--augmenter", ca.augmenters, "Comma list of none, identity, mcm, mcm-mice, ros, smote")
        ->capture_default_str();
    auto* strat = c_cal->add_option("--stratum", ca.stratum, "Preset name or expression such as cvd=1 or eGFRBaseline<90")
                      ->capture_default_str();
    auto* all = c_cal->add_flag("--all-strata", ca.all_strata, "Run the ten CKD strata and write the meta table");
    auto* file = c_cal->add_option("--strata-file", ca.strata_file, "JSON list of custom strata");
    strat->excludes(all)->excludes(file);
    all->excludes(file);
    ca.iter_opt = c_cal->add_option("--iterations", ca.iterations, "Simulation iterations per augmenter (default 5)");
    ca.ratio_opt = c_cal->add_option("--ratio", ca.ratio, "Masking ratio for mcm augmenters (default 0.5)");
    ca.jobs_opt = c_cal->add_option("--jobs", ca.jobs, "Parallel folds (default 1)")->check(CLI::PositiveNumber);
    c_cal->add_option("--out-dir", ca.out_dir, "Output directory")->required();

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Realism and utility reports for real vs synthetic data");
    c_eval->add_option("--real", ev.real, "Real CSV")->required();
    c_eval->add_option("--synth", ev.synth, "Synthetic CSV")->required();
    c_eval->add_option("--schema", ev.schema, "Schema JSON (default: built-in CKD schema)");
    c_eval->add_option("--out-dir", ev.out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        load_config(settings, config_path);
        if (seed_opt->count() > 0) settings.seed_flag = seed_value;
        if (c_stub->parsed()) run_stub(stub, settings);
        else if (c_train->parsed()) run_train(tr, settings);
        else if (c_synth->parsed()) run_synth(sy, settings);
        else if (c_cal->parsed()) run_calibrate(ca, settings);
        else if (c_eval->parsed()) run_evaluate(ev, settings);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
