#include "survsynth/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

namespace survsynth {

Dataset synthesize(const McmBundle& bundle, const Dataset& ds, double r, std::uint64_t seed, SynthesisTrace* trace) {
    if (!(r >= 0.0 && r < 1.0)) throw Error("synthesize: masking ratio must satisfy 0 <= r < 1, got " + format_double(r));
    check_schema(bundle, ds.schema());
    const std::size_t d = ds.schema().size();
    const auto k = static_cast<std::size_t>(std::floor(r * static_cast<double>(d)));

    const Matrix x = transform(bundle.preprocess, ds);
    Mask mask(x.rows(), x.cols());
    for (Eigen::Index row = 0; row < x.rows(); ++row) {
        auto rng = make_rng(seed, "synth.mask", static_cast<std::uint64_t>(row));
        mask.row(row) = random_mask(1, d, k, rng);
    }
    Matrix merged = x;
    if (x.rows() > 0 && k > 0) {
        const Matrix v = mcm_forward(bundle.network, x.cwiseProduct(mask), mask);
        merged = mask.cwiseProduct(x) + (1.0 - mask.array()).matrix().cwiseProduct(v);
    }
    Dataset raw = inverse_transform(bundle.preprocess, merged);
    if (trace) *trace = {x, mask, merged};
    return Dataset(ds.schema(), raw.values(), std::vector<std::size_t>(raw.rows(), kSyntheticRowId));
}

Dataset simulate_conditional(const McmBundle& bundle, const Dataset& train, const StratificationRule& rule, double r,
                             std::uint64_t seed, SynthesisTrace* trace) {
    const Dataset filtered = filter_stratum(train, rule);
    if (filtered.empty())
        throw EmptyStratumError("simulate_conditional: no training record matches stratum '" + rule.name + "'");
    return synthesize(bundle, filtered, r, seed, trace);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string provenance_to_json_text(const SynthesisProvenance& p) {
    const nlohmann::json j{{"model_hash", p.model_hash},
                           {"ratio", p.ratio},
                           {"seed", p.seed},
                           {"rows", p.rows},
                           {"created_utc", p.created_utc}};
    return j.dump(2) + "\n";
}

void write_provenance(const std::filesystem::path& path, const SynthesisProvenance& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write provenance file '" + path.string() + "'");
    out << provenance_to_json_text(p);
}

}  // namespace survsynth
