#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

struct BernoulliScore {
    double score = 0.0;
    double q_mle = 1.0;  // +infinity when every member has outcome 1
};

/// Log-likelihood ratio of "outcome odds multiplied by q > 1" against the
/// expected odds alpha/(1-alpha), maximized over q in closed form:
/// q = sum_y (1 - alpha) / (alpha (n_s - sum_y)). Scores 0 (q = 1) whenever the
/// subset rate does not exceed alpha. Throws AlphaOutOfRange.
BernoulliScore score_bernoulli(std::int64_t sum_y, std::int64_t n_s, double alpha_g);

/// Conjunction of per-feature value sets (discrete codes). Features absent
/// from the map are unrestricted. Canonical form: codes sorted and unique, no
/// restriction covering a feature's whole domain.
struct SubsetDescriptor {
    std::map<std::string, std::vector<std::int32_t>> restrictions;

    std::size_t n_restricted() const noexcept { return restrictions.size(); }
    bool operator==(const SubsetDescriptor&) const = default;

    /// Stable text form, e.g. "age=0,1;sex=1".
    std::string encode() const;
};

/// Validates against `d` (UnknownFeature / InvalidArgument) and returns the
/// canonical form.
SubsetDescriptor canonicalize(const SubsetDescriptor& s, const DiscreteDataset& d);

/// 1 for rows matching every restriction.
std::vector<std::uint8_t> membership(const DiscreteDataset& d, const SubsetDescriptor& s);

struct ValueRecord {
    std::int32_t value = 0;
    std::int64_t n = 0;
    std::int64_t sum_y = 0;
};

/// Row counts and outcome sums per value of `feature` over rows matching the
/// other restrictions of `conditioning` (a restriction on `feature` itself is
/// ignored). One record per value of the feature's domain.
std::vector<ValueRecord> aggregate_by_value(const DiscreteDataset& d, std::string_view feature,
                                            const SubsetDescriptor& conditioning);

struct ValueSubset {
    std::vector<std::int32_t> values;  // sorted
    double score = 0.0;
    std::int64_t n = 0;
    std::int64_t sum_y = 0;
};

/// Highest-scoring value set: values ranked by outcome rate (zero-count values
/// skipped, equal rates taken together) and the best prefix returned. Score
/// ties prefer the longer prefix; a prefix covering every populated value is
/// returned as the whole domain. Throws EmptyRecords when nothing is
/// populated.
ValueSubset best_value_subset(std::span<const ValueRecord> records, double alpha_g);

struct ScanConfig {
    int n_restarts = 20;
    int max_iterations = 50;
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
    static ScanConfig from_json(const nlohmann::json& j, ScanConfig base);
    nlohmann::json to_json() const;
};

struct ScoredSubset {
    SubsetDescriptor subset;
    double score = 0.0;
    double q_mle = 1.0;
    std::int64_t n_members = 0;
    std::int64_t sum_outcomes = 0;
    double alpha_g = 0.0;
};

/// Counts and score of a descriptor over `d` (alpha from the data).
ScoredSubset evaluate_subset(const DiscreteDataset& d, const SubsetDescriptor& s);

struct RestartTrace {
    std::vector<double> ascent;  // score after every coordinate step
    int cycles = 0;
    bool converged = false;
    ScoredSubset result;
};

struct ScanTrace {
    ScoredSubset best;
    std::size_t best_restart = 0;
    std::vector<RestartTrace> restarts;
};

/// Coordinate ascent over the listed features with random restarts; restart 0
/// starts unrestricted. Deterministic given cfg.seed regardless of
/// cfg.workers. Throws DegenerateOutcome, NoFeatures, UnknownFeature.
ScoredSubset scan(const DiscreteDataset& d, const std::vector<std::string>& features, const ScanConfig& cfg = {});
ScanTrace scan_traced(const DiscreteDataset& d, const std::vector<std::string>& features, const ScanConfig& cfg = {});

/// Restriction map in label form, sorted by feature name.
nlohmann::json subset_json(const SubsetDescriptor& s, const DiscreteDataset& d);
nlohmann::json to_json(const ScoredSubset& s, const DiscreteDataset& d);

}  // namespace autostrat
