#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

// ---------------------------------------------------------------------------
// Rankings

enum class RankingSource { PresetA, PresetB, Committee, FilterWrapper };
std::string_view to_string(RankingSource s) noexcept;

/// Per-feature importance scores (non-negative, finite).
struct FeatureRanking {
    std::vector<std::string> features;
    std::vector<double> scores;
    RankingSource source = RankingSource::PresetA;
    bool normalized = false;
    bool degenerate = false;  // min-max of a constant ranking

    void validate() const;
};

/// (s - min) / (max - min); a constant ranking maps to all zeros and is
/// flagged degenerate.
FeatureRanking minmax_normalize(const FeatureRanking& r);

/// Feature-wise mean of normalized rankings over the same feature set.
FeatureRanking committee_vote(std::span<const FeatureRanking> rankings);

/// The k highest-scoring features, descending; equal scores fall back to
/// feature-name order.
std::vector<std::string> top_k(const FeatureRanking& r, std::size_t k);

nlohmann::json to_json(const FeatureRanking& r);

// ---------------------------------------------------------------------------
// Gradient-boosted trees

/// Preset A: one-hot nominal encoding, no row subsampling.
/// Preset B: smoothed target-statistic nominal encoding, 80% row subsampling.
enum class GbmPreset { A, B };

struct GbmConfig {
    GbmPreset preset = GbmPreset::A;
    int n_trees = 200;
    int max_depth = 4;
    double learning_rate = 0.1;
    double min_child_weight = 1.0;
    double l2_reg = 1.0;
    double subsample = 1.0;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;
    double prior_weight = 10.0;  // target-statistic smoothing (preset B)
    int max_bins = 256;

    static GbmConfig preset_a(std::uint64_t seed = 0);
    static GbmConfig preset_b(std::uint64_t seed = 0);

    void validate() const;
    /// Fields present in `j` override `base`.
    static GbmConfig from_json(const nlohmann::json& j, GbmConfig base);
    nlohmann::json to_json() const;
};

struct TreeNode {
    int column = -1;  // encoded column; -1 marks a leaf
    double threshold = 0.0;  // rows with value <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output (already scaled by the learning rate)
    double gain = 0.0;
    double cover = 0.0;  // hessian sum
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

/// Maps dataset columns to the numeric columns the trees split on.
struct EncodedColumn {
    std::string name;
    std::size_t source = 0;  // feature index in the training dataset
    enum class Kind { Raw, Indicator, TargetStat } kind = Kind::Raw;
    std::int32_t level = 0;             // Indicator
    std::vector<double> level_values;   // TargetStat: encoded value per level
    double unseen_value = 0.0;          // TargetStat: value for unseen levels
};

class GbmModel {
public:
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<EncodedColumn>& encoding() const noexcept { return encoding_; }
    const std::vector<Tree>& trees() const noexcept { return trees_; }
    double base_margin() const noexcept { return base_margin_; }
    double total_gain() const noexcept { return total_gain_; }
    GbmPreset preset() const noexcept { return preset_; }

    /// Positive-class probabilities for every row of `d`, which must carry
    /// the training features (matched by name).
    std::vector<double> predict_proba(const Dataset& d) const;

private:
    friend struct GbmTrainer;
    std::vector<std::string> feature_names_;
    std::vector<EncodedColumn> encoding_;
    std::vector<Tree> trees_;
    double base_margin_ = 0.0;
    double total_gain_ = 0.0;
    GbmPreset preset_ = GbmPreset::A;
};

struct FitMetrics {
    double f1 = 0.0;
    double accuracy = 0.0;
    double log_loss = 0.0;
    double holdout_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_holdout = 0;
};

struct TrainedGbm {
    GbmModel model;
    FitMetrics metrics;
};

/// Logistic-loss boosting of depth-limited trees with Newton leaf weights and
/// second-order split gain. Trains on a seeded (1 - holdout_fraction) split
/// and reports metrics on the held-out rows. Throws SingleClassOutcome.
TrainedGbm gbm_train(const Dataset& d, const GbmConfig& cfg);

/// Total split gain per source feature (indicator and encoded columns
/// aggregate back to their feature). Unnormalized.
FeatureRanking extract_importance(const GbmModel& model);

/// F1 of the positive class at threshold 0.5, plus accuracy and log-loss.
FitMetrics evaluate(std::span<const double> proba, std::span<const std::uint8_t> y);

nlohmann::json to_json(const FitMetrics& m);
nlohmann::json to_json(const GbmModel& model);

}  // namespace autostrat
