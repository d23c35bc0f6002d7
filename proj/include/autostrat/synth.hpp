#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autostrat/mdss.hpp"
#include "autostrat/tabular.hpp"
#include "json.hpp"

namespace autostrat {

/// Planted subgroup: rows matching `restrictions` get their outcome odds
/// multiplied by q_star. Codes index level labels ("A", "B", ...) for
/// categorical features and bins of `SynthSpec::discretization` for
/// continuous ones.
struct PlantSpec {
    SubsetDescriptor restrictions;
    double q_star = 4.0;
};

/// Generated columns, in order: continuous x1..xC (equicorrelated Gaussians),
/// collinear triples tKa, tKb, tKc = tKa + tKb + N(0, 0.01^2), then categorical
/// c1..cG with uniform levels (arity 2 is typed binary, larger nominal).
struct SynthSpec {
    std::size_t n_rows = 1000;
    std::size_t n_continuous = 0;
    double correlation = 0.0;
    std::size_t collinear_triples = 0;
    std::vector<int> categorical_arities;
    double base_rate = 0.2;
    /// Optional additive log-odds effects on continuous or binary features.
    std::map<std::string, double> effects;
    std::optional<PlantSpec> plant;
    DiscretizationSpec discretization;
    std::uint64_t seed = 0;

    std::vector<FeatureSpec> features() const;
    void validate() const;
    static SynthSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SynthResult {
    Dataset data;
    std::optional<SubsetDescriptor> ground_truth;
};

/// Deterministic given spec.seed. Throws InvalidSpec.
SynthResult generate(const SynthSpec& spec);

/// Probability after multiplying the odds of `p` by `q`.
double odds_shift(double p, double q);

/// Ground truth as {"restrictions": {feature: [labels]}, "codes": ..., "q_star"}.
nlohmann::json ground_truth_json(const SynthSpec& spec, const SynthResult& result);

}  // namespace autostrat
