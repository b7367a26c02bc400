#include "survsynth/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace survsynth {

using nlohmann::json;

std::string format_double(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<FeatureEntry> entries) {
    std::set<std::string> seen;
    std::vector<FeatureEntry> covariates;
    std::optional<FeatureEntry> duration;
    std::optional<FeatureEntry> event;
    for (auto& e : entries) {
        if (e.name.empty()) throw DataError("schema: empty feature name");
        if (!seen.insert(e.name).second) throw DataError("schema: duplicate feature '" + e.name + "'");
        switch (e.role) {
        case FeatureRole::Covariate:
            covariates.push_back(std::move(e));
            break;
        case FeatureRole::Duration:
            if (duration) throw DataError("schema: more than one duration entry");
            if (e.kind != FeatureKind::Numeric) throw DataError("schema: duration must be numeric");
            duration = std::move(e);
            break;
        case FeatureRole::Event:
            if (event) throw DataError("schema: more than one event entry");
            if (e.kind != FeatureKind::Binary) throw DataError("schema: event must be binary");
            event = std::move(e);
            break;
        }
    }
    if (!duration) throw DataError("schema: missing duration entry");
    if (!event) throw DataError("schema: missing event entry");
    if (covariates.empty()) throw DataError("schema: at least one covariate is required");
    entries_ = std::move(covariates);
    entries_.push_back(std::move(*duration));
    entries_.push_back(std::move(*event));
}

std::optional<std::size_t> FeatureSchema::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    return std::nullopt;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw DataError("unknown feature '" + name + "'");
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::uint64_t FeatureSchema::hash() const {
    std::string canon;
    for (const auto& e : entries_) {
        canon += e.name;
        canon += e.kind == FeatureKind::Numeric ? ":numeric:" : ":binary:";
        canon += e.role == FeatureRole::Covariate ? "covariate" : e.role == FeatureRole::Duration ? "duration" : "event";
        canon += ';';
    }
    return fnv1a(canon);
}

namespace {

FeatureKind parse_kind(const std::string& s) {
    if (s == "numeric") return FeatureKind::Numeric;
    if (s == "binary") return FeatureKind::Binary;
    throw DataError("schema: unknown kind '" + s + "' (expected numeric|binary)");
}

FeatureRole parse_role(const std::string& s) {
    if (s == "covariate") return FeatureRole::Covariate;
    if (s == "duration") return FeatureRole::Duration;
    if (s == "event") return FeatureRole::Event;
    throw DataError("schema: unknown role '" + s + "' (expected covariate|duration|event)");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(what + ": " + e.what());
    }
}

}  // namespace

FeatureSchema schema_from_json_text(const std::string& text) {
    json j = parse_json(text, "schema");
    const json& list = j.is_object() ? j.at("features") : j;
    if (!list.is_array()) throw DataError("schema: expected a list of features");
    std::vector<FeatureEntry> entries;
    for (const auto& item : list) {
        FeatureEntry e;
        e.name = item.at("name").get<std::string>();
        e.kind = parse_kind(item.at("kind").get<std::string>());
        e.role = item.contains("role") ? parse_role(item.at("role").get<std::string>()) : FeatureRole::Covariate;
        entries.push_back(std::move(e));
    }
    return FeatureSchema(std::move(entries));
}

std::string schema_to_json_text(const FeatureSchema& schema) {
    json list = json::array();
    for (const auto& e : schema.entries()) {
        list.push_back({{"name", e.name},
                        {"kind", e.kind == FeatureKind::Numeric ? "numeric" : "binary"},
                        {"role", e.role == FeatureRole::Covariate  ? "covariate"
                                 : e.role == FeatureRole::Duration ? "duration"
                                                                   : "event"}});
    }
    return json{{"features", list}}.dump(2) + "\n";
}

FeatureSchema load_schema(const std::filesystem::path& path) {
    try {
        return schema_from_json_text(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError("schema '" + path.string() + "': " + e.what());
    } catch (const DataError& e) {
        throw DataError("schema '" + path.string() + "': " + e.what());
    }
}

void save_schema(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << schema_to_json_text(schema);
}

FeatureSchema ckd_schema() {
    using K = FeatureKind;
    using R = FeatureRole;
    return FeatureSchema({
        {"Sex", K::Binary, R::Covariate},
        {"AgeBaseline", K::Numeric, R::Covariate},
        {"HistorySmoking", K::Binary, R::Covariate},
        {"HistoryObesity", K::Binary, R::Covariate},
        {"CholesterolBaseline", K::Numeric, R::Covariate},
        {"CreatinineBaseline", K::Numeric, R::Covariate},
        {"eGFRBaseline", K::Numeric, R::Covariate},
        {"sBPBaseline", K::Numeric, R::Covariate},
        {"dBPBaseline", K::Numeric, R::Covariate},
        {"BMIBaseline", K::Numeric, R::Covariate},
        {"HistoryDiabetes", K::Binary, R::Covariate},
        {"HistoryCHD", K::Binary, R::Covariate},
        {"HistoryVascular", K::Binary, R::Covariate},
        {"HistoryHTN", K::Binary, R::Covariate},
        {"HistoryDLD", K::Binary, R::Covariate},
        {"DLDmeds", K::Binary, R::Covariate},
        {"DMmeds", K::Binary, R::Covariate},
        {"HTNmeds", K::Binary, R::Covariate},
        {"ACEIARB", K::Binary, R::Covariate},
        {"TimeToEventYears", K::Numeric, R::Duration},
        {"EventCKD35", K::Binary, R::Event},
    });
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

void validate_row(const FeatureSchema& schema, const Matrix& values, Eigen::Index r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const double v = values(r, static_cast<Eigen::Index>(c));
        const auto& e = schema[c];
        if (!std::isfinite(v))
            throw DataError("row " + std::to_string(r + 1) + ", column '" + e.name + "': non-finite value");
        if (e.kind == FeatureKind::Binary && v != 0.0 && v != 1.0)
            throw DataError("row " + std::to_string(r + 1) + ", column '" + e.name + "': binary value " +
                            format_double(v) + " outside {0,1}");
        if (e.role == FeatureRole::Duration && v < 0.0)
            throw DataError("row " + std::to_string(r + 1) + ", column '" + e.name + "': negative duration");
    }
}

}  // namespace

Dataset::Dataset(FeatureSchema schema, Matrix values, std::vector<std::size_t> ids)
    : schema_(std::move(schema)), values_(std::move(values)), ids_(std::move(ids)) {
    if (static_cast<std::size_t>(values_.cols()) != schema_.size() && values_.rows() > 0)
        throw DataError("dataset: " + std::to_string(values_.cols()) + " columns for a schema of " +
                        std::to_string(schema_.size()));
    if (values_.rows() == 0) values_.resize(0, static_cast<Eigen::Index>(schema_.size()));
    if (ids_.empty()) {
        ids_.resize(rows());
        std::iota(ids_.begin(), ids_.end(), std::size_t{0});
    }
    if (ids_.size() != rows()) throw DataError("dataset: id count does not match row count");
    for (Eigen::Index r = 0; r < values_.rows(); ++r) validate_row(schema_, values_, r);
}

Vector Dataset::column(const std::string& name) const {
    return values_.col(static_cast<Eigen::Index>(schema_.index_of(name)));
}

Vector Dataset::durations() const { return values_.col(static_cast<Eigen::Index>(schema_.duration_index())); }
Vector Dataset::events() const { return values_.col(static_cast<Eigen::Index>(schema_.event_index())); }
Matrix Dataset::covariates() const {
    return values_.leftCols(static_cast<Eigen::Index>(schema_.covariate_count()));
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
    std::vector<std::size_t> ids;
    ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= this->rows()) throw DataError("dataset: row index out of range");
        out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
        ids.push_back(ids_[rows[i]]);
    }
    Dataset d;
    d.schema_ = schema_;
    d.values_ = std::move(out);
    d.ids_ = std::move(ids);
    return d;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
    if (!(a.schema_ == b.schema_)) throw DataError("dataset concat: schema mismatch");
    Dataset d;
    d.schema_ = a.schema_;
    d.values_.resize(a.values_.rows() + b.values_.rows(), a.values_.cols());
    d.values_ << a.values_, b.values_;
    d.ids_ = a.ids_;
    d.ids_.insert(d.ids_.end(), b.ids_.begin(), b.ids_.end());
    return d;
}

bool Dataset::operator==(const Dataset& other) const {
    return schema_ == other.schema_ && values_.rows() == other.values_.rows() && values_ == other.values_;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            cur += ch;
        } else if (ch == ',' && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::optional<double> parse_number(const std::string& tok) {
    if (tok.empty()) return std::nullopt;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const FeatureSchema& schema, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": empty file (no header row)");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
    const auto header = split_csv_line(line);

    std::vector<std::size_t> source_col(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), schema[c].name);
        if (it == header.end()) throw DataError(source + ": missing column '" + schema[c].name + "'");
        source_col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto tokens = split_csv_line(line);
        const std::size_t row_no = rows.size() + 1;
        if (tokens.size() != header.size())
            throw DataError(source + ": row " + std::to_string(row_no) + " (line " + std::to_string(line_no) +
                            ") has " + std::to_string(tokens.size()) + " fields, header has " +
                            std::to_string(header.size()));
        std::vector<double> values(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const auto& tok = tokens[source_col[c]];
            const auto& e = schema[c];
            auto v = parse_number(tok);
            const std::string where =
                source + ": row " + std::to_string(row_no) + " (line " + std::to_string(line_no) + "), column '" + e.name + "'";
            if (!v) throw DataError(where + ": non-numeric token '" + tok + "'");
            if (!std::isfinite(*v)) throw DataError(where + ": non-finite value");
            if (e.kind == FeatureKind::Binary && *v != 0.0 && *v != 1.0)
                throw DataError(where + ": binary token '" + tok + "' outside {0,1}");
            if (e.role == FeatureRole::Duration && *v < 0.0) throw DataError(where + ": duration < 0");
            values[c] = *v;
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(source + ": empty dataset (header only)");

    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < schema.size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return Dataset(schema, std::move(m));
}

Dataset load_dataset(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    return read_dataset_csv(in, schema, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
    const auto& schema = ds.schema();
    for (std::size_t c = 0; c < schema.size(); ++c) out << (c ? "," : "") << schema[c].name;
    out << '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t c = 0; c < schema.size(); ++c) out << (c ? "," : "") << format_double(ds.at(r, c));
        out << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_dataset_csv(out, ds);
}

// ---------------------------------------------------------------------------
// Stratification

namespace {

bool compare(double v, CompareOp op, double t) {
    switch (op) {
    case CompareOp::Less: return v < t;
    case CompareOp::LessEqual: return v <= t;
    case CompareOp::Greater: return v > t;
    case CompareOp::GreaterEqual: return v >= t;
    case CompareOp::Equal: return v == t;
    case CompareOp::NotEqual: return v != t;
    }
    return false;
}

CompareOp parse_op(const std::string& s) {
    if (s == "<") return CompareOp::Less;
    if (s == "<=") return CompareOp::LessEqual;
    if (s == ">") return CompareOp::Greater;
    if (s == ">=") return CompareOp::GreaterEqual;
    if (s == "=" || s == "==") return CompareOp::Equal;
    if (s == "!=") return CompareOp::NotEqual;
    throw DataError("unknown comparison operator '" + s + "'");
}

// Derived binary flags of the CKD analysis. Diabetes and hypertension are the
// union of the history flag and the matching medication flag; CVD is the union
// of coronary heart disease and vascular disease history.
const std::map<std::string, std::vector<Condition>>& derived_flags() {
    static const std::map<std::string, std::vector<Condition>> flags = {
        {"egfr_nonideal", {{"eGFRBaseline", CompareOp::Less, 90.0}}},
        {"diabetes", {{"HistoryDiabetes", CompareOp::Equal, 1.0}, {"DMmeds", CompareOp::Equal, 1.0}}},
        {"hypertension", {{"HistoryHTN", CompareOp::Equal, 1.0}, {"ACEIARB", CompareOp::Equal, 1.0}}},
        {"older", {{"AgeBaseline", CompareOp::GreaterEqual, 65.0}}},
        {"cvd", {{"HistoryCHD", CompareOp::Equal, 1.0}, {"HistoryVascular", CompareOp::Equal, 1.0}}},
    };
    return flags;
}

StratificationRule flag_rule(const std::string& name, const std::string& label, const std::string& flag, bool value) {
    StratificationRule r;
    r.name = name;
    r.label = label;
    r.any_of = derived_flags().at(flag);
    r.negate = !value;
    return r;
}

}  // namespace

bool StratificationRule::matches(const Dataset& ds, std::size_t row) const {
    bool any = false;
    for (const auto& c : any_of) {
        const auto col = ds.schema().index_of(c.feature);
        if (compare(ds.at(row, col), c.op, c.threshold)) {
            any = true;
            break;
        }
    }
    return negate ? !any : any;
}

void StratificationRule::validate(const FeatureSchema& schema) const {
    for (const auto& c : any_of)
        if (!schema.find(c.feature))
            throw DataError("stratum '" + name + "' references unknown feature '" + c.feature + "'");
}

StratificationRule StratificationRule::always_true() {
    StratificationRule r;
    r.name = "all";
    r.label = "All patients";
    r.negate = true;
    return r;
}

StratificationRule StratificationRule::always_false() {
    StratificationRule r;
    r.name = "none";
    r.label = "No patients";
    return r;
}

std::vector<std::size_t> stratum_rows(const Dataset& ds, const StratificationRule& rule) {
    rule.validate(ds.schema());
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ds.rows(); ++r)
        if (rule.matches(ds, r)) rows.push_back(r);
    return rows;
}

Dataset filter_stratum(const Dataset& ds, const StratificationRule& rule) {
    return ds.subset(stratum_rows(ds, rule));
}

std::vector<StratificationRule> ckd_strata_presets() {
    return {
        flag_rule("egfr_normal", "Renal Function: Normal (eGFR >= 90)", "egfr_nonideal", false),
        flag_rule("egfr_nonideal", "Renal Function: Non-Ideal (eGFR < 90)", "egfr_nonideal", true),
        flag_rule("diabetes_false", "Diabetes: False", "diabetes", false),
        flag_rule("diabetes_true", "Diabetes: True", "diabetes", true),
        flag_rule("hypertension_false", "Hypertension: False", "hypertension", false),
        flag_rule("hypertension_true", "Hypertension: True", "hypertension", true),
        flag_rule("younger_false", "Younger Age: False (>= 65)", "older", true),
        flag_rule("younger_true", "Younger Age: True (< 65)", "older", false),
        flag_rule("cvd_false", "CVD: False", "cvd", false),
        flag_rule("cvd_true", "CVD: True", "cvd", true),
    };
}

std::vector<std::string> ckd_preset_names() {
    std::vector<std::string> out;
    for (const auto& r : ckd_strata_presets()) out.push_back(r.name);
    return out;
}

StratificationRule resolve_stratum(const std::string& raw) {
    const std::string text = trim(raw);
    for (auto& r : ckd_strata_presets())
        if (r.name == text) return r;
    if (text == "all") return StratificationRule::always_true();

    auto fail = [&](const std::string& why) -> DataError {
        std::string msg = "cannot resolve stratum '" + text + "': " + why + "; presets:";
        for (const auto& n : ckd_preset_names()) msg += " " + n;
        msg += " all";
        return DataError(msg);
    };

    StratificationRule rule;
    rule.name = text;
    rule.label = text;
    std::string body = text;
    if (!body.empty() && body.front() == '!') {
        rule.negate = true;
        body = trim(body.substr(1));
    }
    std::vector<std::string> clauses;
    std::stringstream ss(body);
    for (std::string part; std::getline(ss, part, '|');) clauses.push_back(trim(part));
    if (clauses.empty()) throw fail("empty expression");

    for (const auto& clause : clauses) {
        const auto pos = clause.find_first_of("<>=!");
        if (pos == std::string::npos || pos == 0) throw fail("expected <feature><op><value>");
        std::size_t end = pos;
        while (end < clause.size() && std::string("<>=!").find(clause[end]) != std::string::npos) ++end;
        const std::string feature = trim(clause.substr(0, pos));
        const CompareOp op = parse_op(clause.substr(pos, end - pos));
        const auto value = parse_number(trim(clause.substr(end)));
        if (!value) throw fail("non-numeric threshold in '" + clause + "'");

        if (auto it = derived_flags().find(feature); it != derived_flags().end()) {
            if (clauses.size() != 1 || (op != CompareOp::Equal && op != CompareOp::NotEqual) ||
                (*value != 0.0 && *value != 1.0))
                throw fail("derived flag '" + feature + "' only supports " + feature + "=0|1");
            const bool want = (op == CompareOp::Equal) == (*value == 1.0);
            rule.any_of = it->second;
            rule.negate = rule.negate ? want : !want;
            return rule;
        }
        rule.any_of.push_back({feature, op, *value});
    }
    return rule;
}

std::vector<StratificationRule> load_strata_file(const std::filesystem::path& path) {
    const json j = parse_json(read_text_file(path), "strata file '" + path.string() + "'");
    std::vector<StratificationRule> out;
    try {
        for (const auto& item : j) {
            StratificationRule r;
            r.name = item.at("name").get<std::string>();
            r.label = item.value("label", r.name);
            r.negate = item.value("negate", false);
            for (const auto& c : item.at("any_of"))
                r.any_of.push_back({c.at("feature").get<std::string>(), parse_op(c.at("op").get<std::string>()),
                                    c.at("threshold").get<double>()});
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw DataError("strata file '" + path.string() + "': " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// 5x2 split

SplitPlan split_5x2(std::size_t n, std::uint64_t seed) {
    if (n < 4) throw DataError("split_5x2: dataset too small (" + std::to_string(n) + " records, need >= 4)");
    SplitPlan plan;
    plan.seed = seed;
    plan.n = n;
    for (std::size_t rep = 0; rep < 5; ++rep) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        auto rng = make_rng(seed, "split_5x2", rep);
        std::shuffle(perm.begin(), perm.end(), rng);
        const std::size_t half = (n + 1) / 2;
        std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        plan.repetitions[rep] = {std::move(a), std::move(b)};
    }
    return plan;
}

SplitPlan split_5x2(const Dataset& ds, std::uint64_t seed) { return split_5x2(ds.rows(), seed); }

// ---------------------------------------------------------------------------
// Stub generator

namespace {

NumericMarginal numeric_from_json(const json& j) {
    NumericMarginal m;
    m.median = j.at("median").get<double>();
    m.q1 = j.at("q1").get<double>();
    m.q3 = j.at("q3").get<double>();
    m.decimals = j.value("decimals", -1);
    if (j.contains("loadings")) m.loadings = j.at("loadings").get<std::map<std::string, double>>();
    if (!(m.q1 <= m.median && m.median <= m.q3)) throw DataError("marginals: expected q1 <= median <= q3");
    return m;
}

// Split normal with the requested median and quartiles.
double split_normal(const NumericMarginal& m, double z) {
    constexpr double kQuartileZ = 0.6744897501960817;
    const double sd = z < 0.0 ? (m.median - m.q1) / kQuartileZ : (m.q3 - m.median) / kQuartileZ;
    return m.median + z * sd;
}

double round_to(double v, int decimals) {
    if (decimals < 0) return v;
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

}  // namespace

Marginals marginals_from_json_text(const std::string& text) {
    const json j = parse_json(text, "marginals");
    Marginals m;
    try {
        for (const auto& [name, item] : j.at("numeric").items()) m.numeric[name] = numeric_from_json(item);
        for (const auto& [name, item] : j.at("binary").items()) {
            BinaryMarginal b;
            b.prevalence = item.at("prevalence").get<double>();
            b.subset_of = item.value("subset_of", std::string{});
            if (item.contains("loadings")) b.loadings = item.at("loadings").get<std::map<std::string, double>>();
            m.binary[name] = std::move(b);
        }
        const json& f = j.at("follow_up");
        m.follow_up.event_rate = f.at("event_rate").get<double>();
        m.follow_up.event_duration = numeric_from_json(f.at("event_duration"));
        m.follow_up.censored_duration = numeric_from_json(f.at("censored_duration"));
        m.follow_up.resolution = f.value("resolution", 1.0 / 12.0);
        m.follow_up.risk_noise = f.value("risk_noise", 1.0);
        m.follow_up.max_duration = f.value("max_duration", std::numeric_limits<double>::infinity());
        if (f.contains("risk_weights"))
            m.follow_up.risk_weights = f.at("risk_weights").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("marginals: ") + e.what());
    }
    return m;
}

Marginals load_marginals(const std::filesystem::path& path) {
    try {
        return marginals_from_json_text(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError("'" + path.string() + "': " + e.what());
    }
}

Marginals ckd_marginals() {
    // Medians, quartiles and prevalences of the CKD cohort's descriptive
    // statistics. Loadings on latent factors give the stub its correlation
    // structure (renal: eGFR up / creatinine down, vascular: blood pressure
    // and hypertension, metabolic: BMI, obesity, diabetes, lipids).
    static const char* text = R"json({
  "numeric": {
    "AgeBaseline":         {"median": 54.0,  "q1": 44.0,  "q3": 64.0,  "decimals": 0, "loadings": {"age": 0.9}},
    "CholesterolBaseline": {"median": 5.0,   "q1": 4.2,   "q3": 5.77,  "decimals": 2, "loadings": {"metabolic": 0.3}},
    "CreatinineBaseline":  {"median": 66.0,  "q1": 55.0,  "q3": 78.5,  "decimals": 1, "loadings": {"renal": -0.75, "age": 0.2}},
    "eGFRBaseline":        {"median": 98.1,  "q1": 86.4,  "q3": 109.5, "decimals": 1, "loadings": {"renal": 0.8, "age": -0.45}},
    "sBPBaseline":         {"median": 131.0, "q1": 121.0, "q3": 141.0, "decimals": 0, "loadings": {"vascular": 0.6, "age": 0.3}},
    "dBPBaseline":         {"median": 77.0,  "q1": 69.0,  "q3": 83.0,  "decimals": 0, "loadings": {"vascular": 0.6}},
    "BMIBaseline":         {"median": 30.0,  "q1": 26.0,  "q3": 33.0,  "decimals": 0, "loadings": {"metabolic": 0.6}}
  },
  "binary": {
    "Sex":             {"prevalence": 0.5092},
    "HistorySmoking":  {"prevalence": 0.1527},
    "HistoryObesity":  {"prevalence": 0.5051, "loadings": {"metabolic": 0.7}},
    "HistoryDiabetes": {"prevalence": 0.4379, "loadings": {"metabolic": 0.4, "age": 0.3}},
    "HistoryCHD":      {"prevalence": 0.0916, "loadings": {"age": 0.4, "vascular": 0.3}},
    "HistoryVascular": {"prevalence": 0.0591, "loadings": {"age": 0.4, "vascular": 0.3}},
    "HistoryHTN":      {"prevalence": 0.6823, "loadings": {"vascular": 0.6, "age": 0.4}},
    "HistoryDLD":      {"prevalence": 0.6456, "loadings": {"metabolic": 0.4, "age": 0.2}},
    "DLDmeds":         {"prevalence": 0.5519, "subset_of": "HistoryDLD"},
    "DMmeds":          {"prevalence": 0.3279, "subset_of": "HistoryDiabetes"},
    "HTNmeds":         {"prevalence": 0.6171, "subset_of": "HistoryHTN"},
    "ACEIARB":         {"prevalence": 0.4460, "subset_of": "HistoryHTN"}
  },
  "follow_up": {
    "event_rate": 0.1141,
    "event_duration":    {"median": 4.0, "q1": 2.0, "q3": 7.0},
    "censored_duration": {"median": 8.0, "q1": 7.0, "q3": 8.0},
    "resolution": 0.08333333333333333,
    "max_duration": 9.0,
    "risk_noise": 1.2,
    "risk_weights": {"eGFRBaseline": -0.5, "AgeBaseline": 0.4, "HistoryDiabetes": 0.5, "HistoryHTN": 0.3, "CreatinineBaseline": 0.1}
  }
})json";
    return marginals_from_json_text(text);
}

Dataset make_stub_dataset(const FeatureSchema& schema, const Marginals& marginals, std::size_t n,
                          std::uint64_t seed) {
    if (n == 0) throw DataError("stub: n must be positive");
    const auto N = static_cast<Eigen::Index>(n);
    const auto& fu = marginals.follow_up;
    if (fu.event_rate < 0.0 || fu.event_rate > 1.0) throw DataError("stub: event rate outside [0,1]");
    for (const auto& [name, b] : marginals.binary)
        if (b.prevalence < 0.0 || b.prevalence > 1.0)
            throw DataError("stub: prevalence of '" + name + "' outside [0,1]");
    for (std::size_t c = 0; c < schema.covariate_count(); ++c) {
        const auto& e = schema[c];
        const bool covered = e.kind == FeatureKind::Numeric ? marginals.numeric.count(e.name) > 0
                                                            : marginals.binary.count(e.name) > 0;
        if (!covered) throw DataError("stub: no marginal for feature '" + e.name + "'");
    }

    // Latent factors shared across features.
    std::set<std::string> factor_names;
    for (const auto& [_, m] : marginals.numeric)
        for (const auto& [f, _l] : m.loadings) factor_names.insert(f);
    for (const auto& [_, m] : marginals.binary)
        for (const auto& [f, _l] : m.loadings) factor_names.insert(f);
    std::map<std::string, Vector> factors;
    {
        auto rng = make_rng(seed, "stub.factors");
        std::normal_distribution<double> normal;
        for (const auto& f : factor_names) {
            Vector v(N);
            for (Eigen::Index i = 0; i < N; ++i) v(i) = normal(rng);
            factors[f] = std::move(v);
        }
    }

    // One standard-normal latent per feature, correlated through the factors.
    std::map<std::string, Vector> latent;
    auto make_latent = [&](const std::string& name, const std::map<std::string, double>& loadings) {
        auto rng = make_rng(seed, "stub.latent." + name);
        std::normal_distribution<double> normal;
        double explained = 0.0;
        for (const auto& [_, l] : loadings) explained += l * l;
        if (explained > 1.0) throw DataError("stub: loadings of '" + name + "' exceed unit variance");
        const double noise = std::sqrt(1.0 - explained);
        Vector z(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            double v = noise * normal(rng);
            for (const auto& [f, l] : loadings) v += l * factors.at(f)(i);
            z(i) = v;
        }
        latent[name] = std::move(z);
    };

    Matrix values = Matrix::Zero(N, static_cast<Eigen::Index>(schema.size()));

    for (const auto& [name, m] : marginals.numeric) {
        auto col = schema.find(name);
        if (!col) continue;
        make_latent(name, m.loadings);
        for (Eigen::Index i = 0; i < N; ++i) {
            double v = split_normal(m, latent[name](i));
            v = std::max(v, 0.01 * m.median);
            values(i, static_cast<Eigen::Index>(*col)) = round_to(v, m.decimals);
        }
    }

    // Binary flags take exactly round(prevalence * n) ones, assigned to the
    // highest latents (restricted to parent-positive rows for subset flags).
    std::map<std::string, std::vector<bool>> flags;
    std::function<void(const std::string&)> make_flag = [&](const std::string& name) {
        if (flags.count(name)) return;
        const auto& m = marginals.binary.at(name);
        std::vector<std::size_t> eligible;
        if (!m.subset_of.empty()) {
            if (!marginals.binary.count(m.subset_of))
                throw DataError("stub: '" + name + "' is a subset of unknown flag '" + m.subset_of + "'");
            make_flag(m.subset_of);
            for (std::size_t i = 0; i < n; ++i)
                if (flags[m.subset_of][i]) eligible.push_back(i);
        } else {
            eligible.resize(n);
            std::iota(eligible.begin(), eligible.end(), std::size_t{0});
        }
        make_latent(name, m.loadings);
        const auto& z = latent[name];
        std::stable_sort(eligible.begin(), eligible.end(),
                         [&](std::size_t a, std::size_t b) { return z(static_cast<Eigen::Index>(a)) > z(static_cast<Eigen::Index>(b)); });
        const auto k = std::min(eligible.size(), static_cast<std::size_t>(std::llround(m.prevalence * static_cast<double>(n))));
        std::vector<bool> f(n, false);
        for (std::size_t i = 0; i < k; ++i) f[eligible[i]] = true;
        flags[name] = std::move(f);
    };
    for (const auto& [name, _] : marginals.binary) make_flag(name);
    for (const auto& [name, f] : flags) {
        auto col = schema.find(name);
        if (!col) continue;
        for (std::size_t i = 0; i < n; ++i)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*col)) = f[i] ? 1.0 : 0.0;
    }

    // Outcome: rank by a noisy risk score; the top event_rate share are events
    // and, among events, higher risk maps to shorter time-to-event.
    Vector risk = Vector::Zero(N);
    for (const auto& [name, w] : fu.risk_weights) {
        auto it = latent.find(name);
        if (it == latent.end()) throw DataError("stub: risk weight on unknown feature '" + name + "'");
        risk += w * it->second;
    }
    {
        auto rng = make_rng(seed, "stub.risk_noise");
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < N; ++i) risk(i) += fu.risk_noise * normal(rng);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return risk(static_cast<Eigen::Index>(a)) > risk(static_cast<Eigen::Index>(b)); });
    const auto n_events = static_cast<std::size_t>(std::llround(fu.event_rate * static_cast<double>(n)));

    auto rng = make_rng(seed, "stub.durations");
    std::normal_distribution<double> normal;
    std::vector<double> event_z(n_events);
    for (auto& z : event_z) z = normal(rng);
    std::sort(event_z.begin(), event_z.end());

    const auto dcol = static_cast<Eigen::Index>(schema.duration_index());
    const auto ecol = static_cast<Eigen::Index>(schema.event_index());
    auto snap = [&](double v) {
        const double step = fu.resolution > 0.0 ? fu.resolution : 0.0;
        v = std::min(v, fu.max_duration);
        if (step > 0.0) v = std::round(v / step) * step;
        return std::max(v, step > 0.0 ? step : 0.0);
    };
    for (std::size_t rank = 0; rank < n; ++rank) {
        const auto i = static_cast<Eigen::Index>(order[rank]);
        if (rank < n_events) {
            // Events drawn past the end of follow-up are administratively censored.
            const double d = split_normal(fu.event_duration, event_z[rank]);
            values(i, ecol) = d < fu.max_duration ? 1.0 : 0.0;
            values(i, dcol) = snap(d);
        } else {
            values(i, ecol) = 0.0;
            values(i, dcol) = snap(split_normal(fu.censored_duration, normal(rng)));
        }
    }
    return Dataset(schema, std::move(values));
}

}  // namespace survsynth
