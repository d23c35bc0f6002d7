#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace autostrat {

enum class FeatureKind { Continuous, Binary, Nominal };
enum class MissingPolicy { Error, DropRow };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view text);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
};

/// Column layout of a CSV input. Feature names are unique and never equal the
/// outcome name.
struct Schema {
    std::vector<FeatureSpec> features;
    std::string outcome_name;
    MissingPolicy missing_policy = MissingPolicy::Error;

    void validate() const;

    static Schema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

Schema load_schema(const std::filesystem::path& path);

/// One typed feature column. Continuous columns keep raw values; binary and
/// nominal columns keep integer codes into `levels`, which are sorted
/// lexicographically so code 0 is always the smallest label.
struct Column {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    std::vector<double> values;
    std::vector<std::int32_t> codes;
    std::vector<std::string> levels;

    static Column continuous(std::string name, std::vector<double> values);
    static Column categorical(std::string name, FeatureKind kind, const std::vector<std::string>& labels);

    bool is_categorical() const noexcept { return kind != FeatureKind::Continuous; }
    std::size_t size() const noexcept { return is_categorical() ? codes.size() : values.size(); }
    std::size_t arity() const noexcept { return levels.size(); }

    /// Raw value for continuous columns, level code for categorical ones.
    double numeric(std::size_t row) const {
        return is_categorical() ? static_cast<double>(codes[row]) : values[row];
    }
};

/// Immutable table of typed features plus a 0/1 outcome. Copies share the
/// column storage.
class Dataset {
public:
    Dataset(std::vector<Column> columns, std::vector<std::uint8_t> outcome, std::string outcome_name = "outcome");

    std::size_t n_rows() const noexcept { return outcome_.size(); }
    std::size_t n_features() const noexcept { return columns_->size(); }

    const Column& column(std::size_t j) const { return (*columns_)[j]; }
    const Column& column(std::string_view name) const { return column(index_of(name)); }
    const std::vector<Column>& columns() const noexcept { return *columns_; }

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws UnknownFeature.
    std::size_t index_of(std::string_view name) const;

    std::vector<std::string> feature_names() const;
    const std::string& outcome_name() const noexcept { return outcome_name_; }
    std::span<const std::uint8_t> outcome() const noexcept { return outcome_; }
    double outcome_mean() const;

    /// Restriction of this dataset to the named features, in the given order.
    Dataset select(const std::vector<std::string>& features) const;

private:
    std::shared_ptr<const std::vector<Column>> columns_;
    std::vector<std::uint8_t> outcome_;
    std::string outcome_name_;
};

Dataset read_csv(std::istream& in, const Schema& schema);
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Writes the dataset as CSV (features in column order, then the outcome).
/// Reals use 17 significant digits so a reload is exact.
void write_csv(std::ostream& out, const Dataset& d);
Schema schema_of(const Dataset& d);

// ---------------------------------------------------------------------------
// Discretization

enum class BinningMethod { EqualFrequency, EqualWidth };

struct Binning {
    BinningMethod method = BinningMethod::EqualFrequency;
    int n_bins = 5;
};

struct DiscretizationSpec {
    Binning defaults;
    std::map<std::string, Binning, std::less<>> overrides;

    const Binning& binning_for(std::string_view feature) const;
    static DiscretizationSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Upper-inclusive cut points for one continuous column. Bin b holds values in
/// (cut[b-1], cut[b]]; the last bin is unbounded above. Duplicate cuts and cuts
/// at or above the column maximum are dropped, so every equal-frequency bin is
/// populated and a constant column yields no cuts (one bin).
std::vector<double> compute_cut_points(std::span<const double> values, const Binning& binning);

/// Bin index of `value` under `cuts` (ties at a cut go to the lower bin).
std::int32_t bin_of(std::span<const double> cuts, double value) noexcept;

struct DiscreteColumn {
    std::string name;
    FeatureKind source_kind = FeatureKind::Nominal;
    std::vector<std::string> labels;
    std::vector<std::int32_t> codes;
    std::vector<double> cut_points;  // continuous sources only

    std::size_t arity() const noexcept { return labels.size(); }
    std::optional<std::int32_t> code_of(std::string_view label) const;
};

/// Every column categorical. Shares column storage across copies so that
/// outcome-resampled replicates are cheap.
class DiscreteDataset {
public:
    DiscreteDataset(std::vector<DiscreteColumn> columns, std::vector<std::uint8_t> outcome);

    std::size_t n_rows() const noexcept { return outcome_.size(); }
    std::size_t n_features() const noexcept { return columns_->size(); }
    const DiscreteColumn& column(std::size_t j) const { return (*columns_)[j]; }
    const DiscreteColumn& column(std::string_view name) const { return column(index_of(name)); }
    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    std::vector<std::string> feature_names() const;

    std::span<const std::uint8_t> outcome() const noexcept { return outcome_; }
    double outcome_mean() const;

    /// Same columns, different outcome vector (length must match).
    DiscreteDataset with_outcome(std::vector<std::uint8_t> outcome) const;

private:
    std::shared_ptr<const std::vector<DiscreteColumn>> columns_;
    std::vector<std::uint8_t> outcome_;
};

DiscreteDataset discretize(const Dataset& d, const DiscretizationSpec& spec = {});

/// Cut points of every continuous source column, keyed by feature name.
nlohmann::json cut_points_json(const DiscreteDataset& d);

// ---------------------------------------------------------------------------
// Design matrices

struct DesignMatrix {
    Eigen::MatrixXd x;                       // n_rows x columns, no intercept
    std::vector<std::string> column_names;   // e.g. "color=red"
    std::vector<std::size_t> column_feature; // index into `features`
    std::vector<std::string> features;
};

/// Continuous and binary features pass through as one column; a nominal
/// feature with c levels becomes c-1 indicators (lexicographically smallest
/// level dropped as reference).
DesignMatrix one_hot(const Dataset& d, const std::vector<std::string>& features);

}  // namespace autostrat
