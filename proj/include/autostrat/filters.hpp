#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

// ---------------------------------------------------------------------------
// Pairwise statistics

/// Sample Pearson correlation. Empty when either input has zero variance.
/// Throws InvalidArgument on unequal lengths or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Point-biserial correlation of a real feature with a 0/1 outcome.
std::optional<double> feature_outcome_corr(std::span<const double> x, std::span<const std::uint8_t> y);

/// Variance inflation factor of `feature` against every other continuous
/// feature of `d`: 1/(1-R^2) from an OLS fit with intercept. Exact
/// collinearity (including a constant target) yields +infinity.
/// Throws InsufficientRows unless there are >= 2 continuous features and
/// more rows than continuous features.
double vif(const Dataset& d, std::string_view feature);

/// VIF of `target` regressed on `others` (all continuous column indices).
double vif_among(const Dataset& d, std::size_t target, std::span<const std::size_t> others);

/// r x c table of non-negative counts.
using ContingencyTable = std::vector<std::vector<double>>;

ContingencyTable crosstab(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

struct ChiSquareResult {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
    double n = 0.0;
    int rows = 0;  // after removing empty rows/columns
    int cols = 0;
};

/// Pearson chi-square test of independence. Empty rows/columns are removed
/// first; DegenerateTable if fewer than two rows or columns remain.
ChiSquareResult chi_square(const ContingencyTable& table);
ChiSquareResult chi_square(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Cramer's V = sqrt(chi2 / (n * min(r-1, c-1))), in [0, 1].
double cramers_v(const ChiSquareResult& chi);
double cramers_v(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Plug-in mutual information in nats between a categorical feature and the
/// outcome. With `normalized`, returns 2 I / (H(f) + H(y)) (0 if either
/// entropy is 0).
double mutual_information(std::span<const std::int32_t> f, std::span<const std::uint8_t> y, bool normalized);
double mutual_information(const ContingencyTable& joint, bool normalized);

// ---------------------------------------------------------------------------
// Filter cascade

struct FilterThresholds {
    double rho_max = 0.9;
    double vif_max = 10.0;
    double chi2_alpha = 0.05;
    double cramers_v_max = 0.9;
    bool normalized_mi = true;

    void validate() const;
    static FilterThresholds from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct PearsonPair {
    std::string a, b;
    std::optional<double> rho;
};
struct VifRecord {
    std::string feature;
    double vif = 1.0;
    int round = 0;
};
struct ChiSquarePair {
    std::string a, b;
    ChiSquareResult chi;
};
struct CramersPair {
    std::string a, b;
    double v = 0.0;
};
struct MutualInfoRecord {
    std::string feature;
    double mi = 0.0;
};
struct DropRecord {
    std::string feature;
    std::string reason;
};

struct FilterDiagnostics {
    std::vector<PearsonPair> pearson_pairs;
    std::vector<VifRecord> vif_values;
    std::vector<ChiSquarePair> chi2_pairs;
    std::vector<CramersPair> cramers_pairs;
    std::vector<MutualInfoRecord> mi_values;
    std::vector<DropRecord> dropped;
    std::vector<std::string> kept_continuous;   // sorted by name
    std::vector<std::string> kept_categorical;  // sorted by name

    /// Survivors of both paths, sorted by name.
    std::vector<std::string> kept() const;
};

/// Correlation/VIF pruning of continuous features and chi-square/Cramer's V/MI
/// pruning of binary and nominal features. Deterministic and independent of
/// column order.
FilterDiagnostics filter_select(const Dataset& d, const FilterThresholds& t = {});

nlohmann::json to_json(const FilterDiagnostics& diag);

}  // namespace autostrat
