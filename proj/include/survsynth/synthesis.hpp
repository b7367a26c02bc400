#pragma once

#include "survsynth/dataset.hpp"
#include "survsynth/mcm_net.hpp"

#include <filesystem>
#include <string>

namespace survsynth {

// Raised when conditional simulation finds no record in the stratum; the
// calibration harness treats it as "skip augmentation for this fold".
class EmptyStratumError : public Error {
public:
    using Error::Error;
};

// Matrices of the last synthesis call, in preprocessed space.
struct SynthesisTrace {
    Matrix input;   // preprocessed copy of ds
    Mask mask;      // 1 = kept, 0 = replaced
    Matrix merged;  // M (.) X + (1 - M) (.) V
};

inline constexpr double kDefaultSynthesisRatio = 0.5;

// One reconstruction pass: each row hides floor(r * D) features chosen from
// its own seeded stream, the network fills them in, and the merge is mapped
// back to raw units. Output rows carry kSyntheticRowId.
Dataset synthesize(const McmBundle& bundle, const Dataset& ds, double r, std::uint64_t seed,
                   SynthesisTrace* trace = nullptr);

// synthesize() on the rows of train matching rule (1x the filtered size).
Dataset simulate_conditional(const McmBundle& bundle, const Dataset& train, const StratificationRule& rule, double r,
                             std::uint64_t seed, SynthesisTrace* trace = nullptr);

struct SynthesisProvenance {
    std::string model_hash;
    double ratio = kDefaultSynthesisRatio;
    std::uint64_t seed = 0;
    std::size_t rows = 0;
    std::string created_utc;  // ISO 8601; the only non-reproducible field
};

std::string provenance_to_json_text(const SynthesisProvenance& p);
void write_provenance(const std::filesystem::path& path, const SynthesisProvenance& p);
std::string utc_timestamp();

}  // namespace survsynth
