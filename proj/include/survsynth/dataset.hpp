#pragma once

#include "survsynth/common.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace survsynth {

enum class FeatureKind { Numeric, Binary };
enum class FeatureRole { Covariate, Duration, Event };

struct FeatureEntry {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    FeatureRole role = FeatureRole::Covariate;

    bool operator==(const FeatureEntry&) const = default;
};

// Ordered feature list. Entries are stored in canonical order: covariates in
// the order given, then the duration entry, then the event entry. Every
// matrix in the library uses this column order.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureEntry> entries);

    const std::vector<FeatureEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const FeatureEntry& operator[](std::size_t i) const { return entries_.at(i); }

    std::size_t covariate_count() const noexcept { return entries_.size() - 2; }
    std::size_t duration_index() const noexcept { return entries_.size() - 2; }
    std::size_t event_index() const noexcept { return entries_.size() - 1; }

    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;  // throws DataError
    std::vector<std::string> names() const;

    // Stable across platforms and runs; embedded in model files.
    std::uint64_t hash() const;

    bool operator==(const FeatureSchema& other) const { return entries_ == other.entries_; }

private:
    std::vector<FeatureEntry> entries_;
};

FeatureSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const FeatureSchema& schema);
FeatureSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const FeatureSchema& schema);

// Column names of the public CKD EHR release (baseline measurements only).
FeatureSchema ckd_schema();

inline constexpr std::size_t kSyntheticRowId = std::numeric_limits<std::size_t>::max();

// Immutable table of patient records. values() is N x D in schema order.
// ids() carries the ingestion index of each row through subsetting so that
// provenance can be audited; generated rows carry kSyntheticRowId.
class Dataset {
public:
    Dataset() = default;
    Dataset(FeatureSchema schema, Matrix values, std::vector<std::size_t> ids = {});

    const FeatureSchema& schema() const noexcept { return schema_; }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::size_t>& ids() const noexcept { return ids_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    bool empty() const noexcept { return values_.rows() == 0; }

    double at(std::size_t row, std::size_t col) const { return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)); }
    Vector column(const std::string& name) const;
    Vector durations() const;
    Vector events() const;
    Matrix covariates() const;

    Dataset subset(const std::vector<std::size_t>& rows) const;

    // Rows of a followed by rows of b; schemas must match.
    static Dataset concat(const Dataset& a, const Dataset& b);

    bool operator==(const Dataset& other) const;

private:
    FeatureSchema schema_;
    Matrix values_;
    std::vector<std::size_t> ids_;
};

Dataset load_dataset(const std::filesystem::path& path, const FeatureSchema& schema);
Dataset read_dataset_csv(std::istream& in, const FeatureSchema& schema, const std::string& source = "<stream>");
void write_dataset_csv(std::ostream& out, const Dataset& ds);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

// ---------------------------------------------------------------------------
// Stratification

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

struct Condition {
    std::string feature;
    CompareOp op = CompareOp::Equal;
    double threshold = 0.0;
};

// A record matches when any condition holds (or, with negate, when none do).
// An empty condition list never matches, so {negate = true} is always-true.
struct StratificationRule {
    std::string name;
    std::string label;
    std::vector<Condition> any_of;
    bool negate = false;

    bool matches(const Dataset& ds, std::size_t row) const;
    void validate(const FeatureSchema& schema) const;

    static StratificationRule always_true();
    static StratificationRule always_false();
};

Dataset filter_stratum(const Dataset& ds, const StratificationRule& rule);
std::vector<std::size_t> stratum_rows(const Dataset& ds, const StratificationRule& rule);

// The ten subgroups of the CKD analysis, in report column order.
std::vector<StratificationRule> ckd_strata_presets();
std::vector<std::string> ckd_preset_names();

// Resolves a preset name or an expression such as "eGFRBaseline<90",
// "cvd=1" or "HistoryCHD=1|HistoryVascular=1". Derived flags (egfr_nonideal,
// diabetes, hypertension, older, cvd) expand to their history/medication
// conditions. Throws DataError listing the presets when nothing resolves.
StratificationRule resolve_stratum(const std::string& text);

std::vector<StratificationRule> load_strata_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// 5x2 cross-validation plan

struct SplitPlan {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    // repetitions[r][s] holds the sorted row indices of split s.
    std::array<std::array<std::vector<std::size_t>, 2>, 5> repetitions;

    bool operator==(const SplitPlan&) const = default;
};

SplitPlan split_5x2(std::size_t n, std::uint64_t seed);
SplitPlan split_5x2(const Dataset& ds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Statistics-matched stub generator

struct NumericMarginal {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int decimals = -1;                       // -1 keeps full precision
    std::map<std::string, double> loadings;  // latent factor -> loading
};

struct BinaryMarginal {
    double prevalence = 0.0;
    std::string subset_of;                   // parent flag; empty for none
    std::map<std::string, double> loadings;
};

struct FollowUpMarginal {
    double event_rate = 0.0;
    NumericMarginal event_duration;
    NumericMarginal censored_duration;
    double resolution = 1.0 / 12.0;          // durations rounded to this grid
    double max_duration = std::numeric_limits<double>::infinity();  // end of follow-up
    double risk_noise = 1.0;
    std::map<std::string, double> risk_weights;  // feature -> weight on its latent
};

struct Marginals {
    std::map<std::string, NumericMarginal> numeric;
    std::map<std::string, BinaryMarginal> binary;
    FollowUpMarginal follow_up;
};

Marginals load_marginals(const std::filesystem::path& path);
Marginals marginals_from_json_text(const std::string& text);
Marginals ckd_marginals();

Dataset make_stub_dataset(const FeatureSchema& schema, const Marginals& marginals, std::size_t n,
                          std::uint64_t seed);

}  // namespace survsynth
