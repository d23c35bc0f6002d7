#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autostrat/embedded.hpp"
#include "autostrat/filters.hpp"
#include "autostrat/inference.hpp"
#include "autostrat/mdss.hpp"
#include "autostrat/tabular.hpp"
#include "autostrat/wrapper.hpp"
#include "json.hpp"

namespace autostrat {

inline constexpr int kReportVersion = 1;

enum class Method { FilterWrapper, EmbeddedA, EmbeddedB, Committee, All };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);
/// All expands to the four concrete techniques.
std::vector<Method> expand(Method m);

inline const std::vector<std::size_t> kDefaultSweep{5, 10, 15, 20, 25, 30};

struct PipelineConfig {
    std::filesystem::path data;
    std::filesystem::path schema;
    Method method = Method::Committee;
    std::optional<std::size_t> k;
    std::vector<std::size_t> k_sweep;
    FilterThresholds thresholds;
    GbmConfig gbm_a = GbmConfig::preset_a();
    GbmConfig gbm_b = GbmConfig::preset_b();
    ScanConfig scan;
    DiscretizationSpec discretization;
    std::size_t bootstrap_r = 99;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    int workers = 1;
    double sufficiency_fraction = 0.01;

    /// Copies `seed` into the scan and both GBM configs.
    void apply_seed();
    /// require_k: exactly one of k / k_sweep must be set.
    void validate(bool require_k = false) const;

    static PipelineConfig from_json(const nlohmann::json& j);
    /// Result-affecting settings only (no paths, no worker count).
    nlohmann::json to_json() const;
};

struct SelectionResult {
    Method method = Method::Committee;
    std::size_t k = 0;
    std::vector<std::string> features;  // ranked, most important first
    nlohmann::json diagnostics;
};

/// Runs the selection techniques on one dataset, caching the K-independent
/// work (filter cascade, elimination trace, GBM rankings) across calls.
class FeatureSelector {
public:
    FeatureSelector(Dataset data, PipelineConfig cfg);

    /// Throws KTooLarge when k exceeds the feature count. FilterWrapper
    /// returns every filter survivor when fewer than k survive.
    SelectionResult select(Method method, std::size_t k);

    const Dataset& data() const noexcept { return data_; }

private:
    struct EmbeddedRun {
        TrainedGbm trained;
        FeatureRanking raw;
        FeatureRanking normalized;
    };
    const EmbeddedRun& embedded(GbmPreset preset);
    const FilterDiagnostics& filtered();
    const EliminationTrace& elimination(std::size_t k);

    Dataset data_;
    PipelineConfig cfg_;
    std::optional<FilterDiagnostics> filters_;
    std::optional<EliminationTrace> trace_;
    std::optional<EmbeddedRun> preset_a_;
    std::optional<EmbeddedRun> preset_b_;
};

struct ScanReport {
    std::vector<std::string> features;
    ScoredSubset subset;
    SignificanceResult significance;
    std::optional<EffectEstimate> effect;  // empty when the subset is all rows
    Characterization characterization;
};

/// Scan, empirical p-value, odds ratio and characterization over `features`.
ScanReport run_scan(const DiscreteDataset& d, const std::vector<std::string>& features, const PipelineConfig& cfg);
nlohmann::json to_json(const ScanReport& r, const DiscreteDataset& d, const PipelineConfig& cfg);
/// One replicate score per line under a "replicate,score" header.
std::string replicates_csv(const SignificanceResult& s);

struct SweepRow {
    std::string method;
    std::size_t k = 0;
    double score = 0.0;
    double p_value = 1.0;
    std::optional<EffectEstimate> effect;
    std::int64_t n_members = 0;
    std::vector<std::string> features;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // per (method, K) in sweep order, then the all-features row
    double all_features_score = 0.0;
    std::map<std::string, std::optional<std::size_t>> smallest_sufficient_k;
};

inline constexpr const char* kAllFeaturesLabel = "AllFeatures";

/// select + scan for every (method, K) plus one scan over all features.
SweepResult run_sweep(const Dataset& data, const PipelineConfig& cfg);

/// Long format: method,K,score,p_value,odds_ratio,ci_low,ci_high,n_members.
std::string sweep_csv(const SweepResult& s);
nlohmann::json to_json(const SweepResult& s, const PipelineConfig& cfg);

}  // namespace autostrat
