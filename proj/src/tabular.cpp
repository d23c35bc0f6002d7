#include "autostrat/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "autostrat/error.hpp"

namespace autostrat {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(std::move(field));
    return out;
}

std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename Columns>
std::optional<std::size_t> find_by_name(const Columns& cols, std::string_view name) {
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (cols[j].name == name) return j;
    return std::nullopt;
}

double mean_of(std::span<const std::uint8_t> y) {
    if (y.empty()) return 0.0;
    std::size_t s = 0;
    for (auto v : y) s += v;
    return static_cast<double>(s) / static_cast<double>(y.size());
}

}  // namespace

std::string_view to_string(FeatureKind kind) noexcept {
    switch (kind) {
        case FeatureKind::Continuous: return "continuous";
        case FeatureKind::Binary: return "binary";
        case FeatureKind::Nominal: return "nominal";
    }
    return "continuous";
}

FeatureKind parse_feature_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "continuous" || lower == "numeric" || lower == "numerical") return FeatureKind::Continuous;
    if (lower == "binary") return FeatureKind::Binary;
    if (lower == "nominal" || lower == "categorical") return FeatureKind::Nominal;
    throw Error(ErrorCode::InvalidConfig, "unknown feature kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Schema

void Schema::validate() const {
    if (outcome_name.empty()) throw Error(ErrorCode::InvalidConfig, "schema has no outcome name");
    std::set<std::string_view> seen;
    for (const auto& f : features) {
        if (f.name.empty()) throw Error(ErrorCode::InvalidConfig, "schema feature with empty name");
        if (!seen.insert(f.name).second)
            throw Error(ErrorCode::InvalidConfig, "duplicate feature name '" + f.name + "'");
        if (f.name == outcome_name)
            throw Error(ErrorCode::InvalidConfig, "outcome '" + outcome_name + "' listed as a feature");
    }
}

Schema Schema::from_json(const nlohmann::json& j) {
    Schema s;
    try {
        for (const auto& f : j.at("features"))
            s.features.push_back({f.at("name").get<std::string>(), parse_feature_kind(f.at("kind").get<std::string>())});
        s.outcome_name = j.at("outcome").get<std::string>();
        if (j.contains("missing_policy")) {
            const auto p = j.at("missing_policy").get<std::string>();
            if (p == "Error" || p == "error") s.missing_policy = MissingPolicy::Error;
            else if (p == "DropRow" || p == "drop_row") s.missing_policy = MissingPolicy::DropRow;
            else throw Error(ErrorCode::InvalidConfig, "unknown missing_policy '" + p + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed schema: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json Schema::to_json() const {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features) feats.push_back({{"name", f.name}, {"kind", std::string(to_string(f.kind))}});
    return {{"features", feats},
            {"outcome", outcome_name},
            {"missing_policy", missing_policy == MissingPolicy::Error ? "Error" : "DropRow"}};
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open schema " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, "schema " + path.string() + " is not valid JSON: " + e.what());
    }
    return Schema::from_json(j);
}

// ---------------------------------------------------------------------------
// Columns and datasets

Column Column::continuous(std::string name, std::vector<double> values) {
    Column c;
    c.name = std::move(name);
    c.kind = FeatureKind::Continuous;
    c.values = std::move(values);
    return c;
}

Column Column::categorical(std::string name, FeatureKind kind, const std::vector<std::string>& labels) {
    if (kind == FeatureKind::Continuous)
        throw Error(ErrorCode::InvalidArgument, "categorical column '" + name + "' declared continuous");
    Column c;
    c.name = std::move(name);
    c.kind = kind;
    std::set<std::string> uniq(labels.begin(), labels.end());
    c.levels.assign(uniq.begin(), uniq.end());
    c.codes.reserve(labels.size());
    for (const auto& l : labels) {
        const auto it = std::lower_bound(c.levels.begin(), c.levels.end(), l);
        c.codes.push_back(static_cast<std::int32_t>(it - c.levels.begin()));
    }
    return c;
}

Dataset::Dataset(std::vector<Column> columns, std::vector<std::uint8_t> outcome, std::string outcome_name)
    : outcome_(std::move(outcome)), outcome_name_(std::move(outcome_name)) {
    std::set<std::string_view> names;
    for (const auto& c : columns) {
        if (!names.insert(c.name).second) throw Error(ErrorCode::SchemaMismatch, "duplicate column '" + c.name + "'");
        if (c.name == outcome_name_)
            throw Error(ErrorCode::SchemaMismatch, "feature named like the outcome '" + c.name + "'");
        if (c.size() != outcome_.size())
            throw Error(ErrorCode::SchemaMismatch, "column '" + c.name + "' length differs from outcome length");
        if (c.kind == FeatureKind::Binary && c.levels.size() > 2)
            throw Error(ErrorCode::ParseError, "binary column '" + c.name + "' has more than two values");
        for (auto code : c.codes)
            if (code < 0 || static_cast<std::size_t>(code) >= c.levels.size())
                throw Error(ErrorCode::InvalidArgument, "column '" + c.name + "' has an out-of-range code");
    }
    for (auto y : outcome_)
        if (y > 1) throw Error(ErrorCode::NonBinaryOutcome, "outcome values must be 0 or 1");
    columns_ = std::make_shared<const std::vector<Column>>(std::move(columns));
}

std::optional<std::size_t> Dataset::find(std::string_view name) const { return find_by_name(*columns_, name); }

std::size_t Dataset::index_of(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw Error(ErrorCode::UnknownFeature, "no feature named '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : *columns_) out.push_back(c.name);
    return out;
}

double Dataset::outcome_mean() const { return mean_of(outcome_); }

Dataset Dataset::select(const std::vector<std::string>& features) const {
    std::vector<Column> cols;
    for (const auto& f : features) cols.push_back(column(f));
    return Dataset(std::move(cols), outcome_, outcome_name_);
}

Dataset read_csv(std::istream& in, const Schema& schema) {
    schema.validate();
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, "empty CSV (no header)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_record(line);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name(trim(header[i]));
        if (!position.emplace(name, i).second) throw Error(ErrorCode::SchemaMismatch, "duplicate header column '" + name + "'");
    }
    std::vector<std::size_t> feature_pos;
    for (const auto& f : schema.features) {
        const auto it = position.find(f.name);
        if (it == position.end()) throw Error(ErrorCode::SchemaMismatch, "column '" + f.name + "' missing from CSV");
        feature_pos.push_back(it->second);
    }
    const auto out_it = position.find(schema.outcome_name);
    if (out_it == position.end())
        throw Error(ErrorCode::SchemaMismatch, "outcome column '" + schema.outcome_name + "' missing from CSV");
    if (header.size() != schema.features.size() + 1) {
        for (const auto& [name, _] : position) {
            const bool known = name == schema.outcome_name ||
                               std::any_of(schema.features.begin(), schema.features.end(),
                                           [&](const FeatureSpec& f) { return f.name == name; });
            if (!known) throw Error(ErrorCode::SchemaMismatch, "extra column '" + name + "' not in schema");
        }
    }

    const std::size_t m = schema.features.size();
    std::vector<std::vector<double>> reals(m);
    std::vector<std::vector<std::string>> labels(m);
    std::vector<std::uint8_t> outcome;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line);
        if (cells.size() != header.size())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " cells, got " +
                                                   std::to_string(cells.size()));
        bool missing = false;
        const auto ycell = trim(cells[out_it->second]);
        std::uint8_t y = 0;
        if (is_missing(ycell)) {
            missing = true;
        } else {
            const auto v = parse_double(ycell);
            if (!v || (*v != 0.0 && *v != 1.0))
                throw Error(ErrorCode::NonBinaryOutcome,
                            "line " + std::to_string(line_no) + ": outcome '" + std::string(ycell) + "' is not 0/1");
            y = *v == 1.0 ? 1 : 0;
        }
        std::vector<double> row_reals(m, 0.0);
        std::vector<std::string> row_labels(m);
        for (std::size_t j = 0; j < m && !missing; ++j) {
            const auto cell = trim(cells[feature_pos[j]]);
            if (is_missing(cell)) {
                missing = true;
                break;
            }
            if (schema.features[j].kind == FeatureKind::Continuous) {
                const auto v = parse_double(cell);
                if (!v)
                    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": cannot parse '" +
                                                           std::string(cell) + "' in continuous column '" +
                                                           schema.features[j].name + "'");
                row_reals[j] = *v;
            } else {
                row_labels[j] = std::string(cell);
            }
        }
        if (missing) {
            if (schema.missing_policy == MissingPolicy::Error)
                throw Error(ErrorCode::MissingValue, "line " + std::to_string(line_no) + " has a missing cell");
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (schema.features[j].kind == FeatureKind::Continuous) reals[j].push_back(row_reals[j]);
            else labels[j].push_back(std::move(row_labels[j]));
        }
        outcome.push_back(y);
    }

    std::vector<Column> cols;
    cols.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& f = schema.features[j];
        if (f.kind == FeatureKind::Continuous) cols.push_back(Column::continuous(f.name, std::move(reals[j])));
        else cols.push_back(Column::categorical(f.name, f.kind, labels[j]));
    }
    return Dataset(std::move(cols), std::move(outcome), schema.outcome_name);
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t j = 0; j < d.n_features(); ++j) out << csv_escape(d.column(j).name) << ',';
    out << csv_escape(d.outcome_name()) << '\n';
    char buf[64];
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_features(); ++j) {
            const auto& c = d.column(j);
            if (c.is_categorical()) {
                out << csv_escape(c.levels[static_cast<std::size_t>(c.codes[i])]);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", c.values[i]);
                out << buf;
            }
            out << ',';
        }
        out << static_cast<int>(d.outcome()[i]) << '\n';
    }
}

Schema schema_of(const Dataset& d) {
    Schema s;
    for (const auto& c : d.columns()) s.features.push_back({c.name, c.kind});
    s.outcome_name = d.outcome_name();
    return s;
}

// ---------------------------------------------------------------------------
// Discretization

const Binning& DiscretizationSpec::binning_for(std::string_view feature) const {
    if (auto it = overrides.find(feature); it != overrides.end()) return it->second;
    return defaults;
}

namespace {

Binning binning_from_json(const nlohmann::json& j, Binning base) {
    if (j.contains("method")) {
        const auto m = j.at("method").get<std::string>();
        if (m == "EqualFrequency") base.method = BinningMethod::EqualFrequency;
        else if (m == "EqualWidth") base.method = BinningMethod::EqualWidth;
        else throw Error(ErrorCode::InvalidConfig, "unknown binning method '" + m + "'");
    }
    if (j.contains("n_bins")) base.n_bins = j.at("n_bins").get<int>();
    if (base.n_bins < 2) throw Error(ErrorCode::InvalidConfig, "n_bins must be >= 2");
    return base;
}

nlohmann::json binning_to_json(const Binning& b) {
    return {{"method", b.method == BinningMethod::EqualFrequency ? "EqualFrequency" : "EqualWidth"},
            {"n_bins", b.n_bins}};
}

}  // namespace

DiscretizationSpec DiscretizationSpec::from_json(const nlohmann::json& j) {
    DiscretizationSpec s;
    try {
        s.defaults = binning_from_json(j, s.defaults);
        if (j.contains("overrides"))
            for (const auto& [name, b] : j.at("overrides").items()) s.overrides[name] = binning_from_json(b, s.defaults);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed discretization: ") + e.what());
    }
    return s;
}

nlohmann::json DiscretizationSpec::to_json() const {
    auto j = binning_to_json(defaults);
    nlohmann::json ov = nlohmann::json::object();
    for (const auto& [name, b] : overrides) ov[name] = binning_to_json(b);
    j["overrides"] = ov;
    return j;
}

std::vector<double> compute_cut_points(std::span<const double> values, const Binning& binning) {
    if (binning.n_bins < 2) throw Error(ErrorCode::InvalidArgument, "n_bins must be >= 2");
    if (values.empty()) throw Error(ErrorCode::DegenerateColumn, "cannot discretize an empty column");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const auto bins = static_cast<std::size_t>(binning.n_bins);
    const double lo = sorted.front();
    const double hi = sorted.back();

    std::vector<double> cuts;
    for (std::size_t k = 1; k < bins; ++k) {
        double c;
        if (binning.method == BinningMethod::EqualFrequency) {
            // nearest-rank quantile at k/bins
            const std::size_t rank = (k * n + bins - 1) / bins;
            c = sorted[std::max<std::size_t>(rank, 1) - 1];
        } else {
            c = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
        }
        if (c < hi && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
    }
    return cuts;
}

std::int32_t bin_of(std::span<const double> cuts, double value) noexcept {
    return static_cast<std::int32_t>(std::lower_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

std::optional<std::int32_t> DiscreteColumn::code_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<std::int32_t>(i);
    return std::nullopt;
}

DiscreteDataset::DiscreteDataset(std::vector<DiscreteColumn> columns, std::vector<std::uint8_t> outcome)
    : outcome_(std::move(outcome)) {
    for (const auto& c : columns) {
        if (c.codes.size() != outcome_.size())
            throw Error(ErrorCode::SchemaMismatch, "discrete column '" + c.name + "' length differs from outcome");
        for (auto code : c.codes)
            if (code < 0 || static_cast<std::size_t>(code) >= c.labels.size())
                throw Error(ErrorCode::InvalidArgument, "discrete column '" + c.name + "' has an out-of-range code");
    }
    columns_ = std::make_shared<const std::vector<DiscreteColumn>>(std::move(columns));
}

std::optional<std::size_t> DiscreteDataset::find(std::string_view name) const { return find_by_name(*columns_, name); }

std::size_t DiscreteDataset::index_of(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw Error(ErrorCode::UnknownFeature, "no feature named '" + std::string(name) + "'");
}

std::vector<std::string> DiscreteDataset::feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : *columns_) out.push_back(c.name);
    return out;
}

double DiscreteDataset::outcome_mean() const { return mean_of(outcome_); }

DiscreteDataset DiscreteDataset::with_outcome(std::vector<std::uint8_t> outcome) const {
    if (outcome.size() != outcome_.size())
        throw Error(ErrorCode::InvalidArgument, "replacement outcome has the wrong length");
    for (auto y : outcome)
        if (y > 1) throw Error(ErrorCode::NonBinaryOutcome, "outcome values must be 0 or 1");
    DiscreteDataset copy = *this;
    copy.outcome_ = std::move(outcome);
    return copy;
}

DiscreteDataset discretize(const Dataset& d, const DiscretizationSpec& spec) {
    std::vector<DiscreteColumn> cols;
    cols.reserve(d.n_features());
    for (const auto& c : d.columns()) {
        DiscreteColumn dc;
        dc.name = c.name;
        dc.source_kind = c.kind;
        if (c.is_categorical()) {
            dc.labels = c.levels;
            dc.codes = c.codes;
        } else {
            dc.cut_points = compute_cut_points(c.values, spec.binning_for(c.name));
            const auto& cuts = dc.cut_points;
            if (cuts.empty()) {
                dc.labels.push_back("all");
            } else {
                dc.labels.push_back("<=" + shortest(cuts.front()));
                for (std::size_t b = 1; b < cuts.size(); ++b)
                    dc.labels.push_back("(" + shortest(cuts[b - 1]) + "," + shortest(cuts[b]) + "]");
                dc.labels.push_back(">" + shortest(cuts.back()));
            }
            dc.codes.reserve(c.values.size());
            for (double v : c.values) dc.codes.push_back(bin_of(cuts, v));
        }
        cols.push_back(std::move(dc));
    }
    return DiscreteDataset(std::move(cols), std::vector<std::uint8_t>(d.outcome().begin(), d.outcome().end()));
}

nlohmann::json cut_points_json(const DiscreteDataset& d) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t f = 0; f < d.n_features(); ++f) {
        const auto& c = d.column(f);
        if (c.source_kind != FeatureKind::Continuous) continue;
        j[c.name] = {{"cut_points", c.cut_points}, {"labels", c.labels}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// One-hot design

DesignMatrix one_hot(const Dataset& d, const std::vector<std::string>& features) {
    DesignMatrix dm;
    dm.features = features;
    std::vector<std::size_t> idx;
    std::size_t n_cols = 0;
    for (const auto& f : features) {
        const auto j = d.index_of(f);
        idx.push_back(j);
        const auto& c = d.column(j);
        n_cols += c.kind == FeatureKind::Nominal ? (c.arity() > 0 ? c.arity() - 1 : 0) : 1;
    }
    dm.x.resize(static_cast<Eigen::Index>(d.n_rows()), static_cast<Eigen::Index>(n_cols));
    Eigen::Index col = 0;
    for (std::size_t fi = 0; fi < idx.size(); ++fi) {
        const auto& c = d.column(idx[fi]);
        if (c.kind == FeatureKind::Nominal) {
            for (std::size_t level = 1; level < c.arity(); ++level) {
                for (std::size_t i = 0; i < d.n_rows(); ++i)
                    dm.x(static_cast<Eigen::Index>(i), col) = c.codes[i] == static_cast<std::int32_t>(level) ? 1.0 : 0.0;
                dm.column_names.push_back(c.name + "=" + c.levels[level]);
                dm.column_feature.push_back(fi);
                ++col;
            }
        } else {
            for (std::size_t i = 0; i < d.n_rows(); ++i) dm.x(static_cast<Eigen::Index>(i), col) = c.numeric(i);
            dm.column_names.push_back(c.name);
            dm.column_feature.push_back(fi);
            ++col;
        }
    }
    return dm;
}

}  // namespace autostrat
