#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autostrat/mdss.hpp"
#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

struct SignificanceResult {
    double observed_score = 0.0;
    std::vector<double> replicate_scores;
    double p_value = 1.0;
    std::size_t r_replicates = 0;
    std::uint64_t seed = 0;
};

/// (1 + #{replicate >= observed}) / (R + 1).
double empirical_p(double observed, const std::vector<double>& replicates);

/// Parametric bootstrap: each replicate redraws every outcome as
/// Bernoulli(alpha_g) with covariates fixed, rescans with cfg (replicate seed
/// derived from cfg.seed and the replicate index) and keeps the max score.
/// Replicates run on cfg.workers threads. Requires r >= 19.
SignificanceResult empirical_p_value(const DiscreteDataset& d, const std::vector<std::string>& features,
                                     const ScanConfig& cfg, const ScoredSubset& observed, std::size_t r);

struct EffectEstimate {
    // raw 2x2 counts: subset positives/negatives, complement positives/negatives
    std::int64_t a = 0, b = 0, c = 0, d = 0;
    bool corrected = false;  // +0.5 added to every cell because one was zero
    double odds_ratio = 1.0;
    double log_se = 0.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
};

/// Odds ratio from a 2x2 table with Haldane-Anscombe correction and a Wald
/// 95% interval on the log scale. Throws EmptySubset / FullSubset.
EffectEstimate odds_ratio_from_table(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);
EffectEstimate odds_ratio(const DiscreteDataset& d, const SubsetDescriptor& subset);

struct ValueShare {
    std::string label;
    double in_subset = 0.0;    // share of subset members with this value
    double population = 0.0;   // share of all rows with this value
};

struct RestrictionProfile {
    std::string feature;
    std::vector<ValueShare> values;
    double population_prevalence = 0.0;  // share of all rows inside the restriction
    double outcome_rate = 0.0;           // outcome rate of rows inside the restriction alone
};

struct Characterization {
    std::vector<RestrictionProfile> restrictions;
    std::int64_t subset_size = 0;
    std::int64_t population_size = 0;
    double subset_outcome_rate = 0.0;
    double alpha_g = 0.0;
};

Characterization characterize(const DiscreteDataset& d, const ScoredSubset& subset);

nlohmann::json to_json(const SignificanceResult& s);
nlohmann::json to_json(const EffectEstimate& e);
nlohmann::json to_json(const Characterization& c);

}  // namespace autostrat
