#include "autostrat/inference.hpp"

#include <cmath>

#include "autostrat/error.hpp"
#include "autostrat/parallel.hpp"
#include "autostrat/random.hpp"

namespace autostrat {

namespace {
constexpr double kZ95 = 1.96;
}

double empirical_p(double observed, const std::vector<double>& replicates) {
    std::size_t at_least = 0;
    for (double s : replicates)
        if (s >= observed) ++at_least;
    return static_cast<double>(1 + at_least) / static_cast<double>(replicates.size() + 1);
}

SignificanceResult empirical_p_value(const DiscreteDataset& d, const std::vector<std::string>& features,
                                     const ScanConfig& cfg, const ScoredSubset& observed, std::size_t r) {
    cfg.validate();
    if (r < 19) throw Error(ErrorCode::InvalidArgument, "at least 19 replicates are needed");
    const double alpha = d.outcome_mean();
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::DegenerateOutcome, "outcome is constant");

    SignificanceResult res;
    res.observed_score = observed.score;
    res.r_replicates = r;
    res.seed = cfg.seed;
    res.replicate_scores.assign(r, 0.0);

    ScanConfig inner = cfg;
    inner.workers = 1;
    parallel_for(r, cfg.workers, [&](std::size_t rep) {
        Rng rng(derive_seed(cfg.seed, {0xb007, rep}));
        std::vector<std::uint8_t> y(d.n_rows());
        for (auto& v : y) v = rng.bernoulli(alpha) ? 1 : 0;
        const auto replicate = d.with_outcome(std::move(y));
        const double mean = replicate.outcome_mean();
        if (!(mean > 0.0 && mean < 1.0)) return;  // a constant draw scores 0
        ScanConfig rc = inner;
        rc.seed = derive_seed(cfg.seed, {0x5eed, rep});
        res.replicate_scores[rep] = scan(replicate, features, rc).score;
    });
    res.p_value = empirical_p(observed.score, res.replicate_scores);
    return res;
}

EffectEstimate odds_ratio_from_table(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw Error(ErrorCode::InvalidArgument, "negative 2x2 count");
    if (a + b == 0) throw Error(ErrorCode::EmptySubset, "subset matches no rows");
    if (c + d == 0) throw Error(ErrorCode::FullSubset, "subset matches every row");
    EffectEstimate e{a, b, c, d};
    double fa = static_cast<double>(a), fb = static_cast<double>(b), fc = static_cast<double>(c),
           fd = static_cast<double>(d);
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        e.corrected = true;
        fa += 0.5;
        fb += 0.5;
        fc += 0.5;
        fd += 0.5;
    }
    e.odds_ratio = (fa * fd) / (fb * fc);
    e.log_se = std::sqrt(1.0 / fa + 1.0 / fb + 1.0 / fc + 1.0 / fd);
    const double lo = std::log(e.odds_ratio);
    e.ci_low = std::exp(lo - kZ95 * e.log_se);
    e.ci_high = std::exp(lo + kZ95 * e.log_se);
    return e;
}

EffectEstimate odds_ratio(const DiscreteDataset& d, const SubsetDescriptor& subset) {
    const auto member = membership(d, canonicalize(subset, d));
    std::int64_t a = 0, b = 0, c = 0, dd = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const bool y = d.outcome()[i] == 1;
        if (member[i]) (y ? a : b) += 1;
        else (y ? c : dd) += 1;
    }
    return odds_ratio_from_table(a, b, c, dd);
}

Characterization characterize(const DiscreteDataset& d, const ScoredSubset& subset) {
    Characterization ch;
    ch.population_size = static_cast<std::int64_t>(d.n_rows());
    ch.alpha_g = d.outcome_mean();
    const auto member = membership(d, subset.subset);
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        if (member[i]) {
            ++ch.subset_size;
            pos += d.outcome()[i];
        }
    ch.subset_outcome_rate = ch.subset_size > 0 ? static_cast<double>(pos) / static_cast<double>(ch.subset_size) : 0.0;

    const double n = static_cast<double>(d.n_rows());
    for (const auto& [name, codes] : subset.subset.restrictions) {
        const auto& col = d.column(name);
        RestrictionProfile prof;
        prof.feature = name;
        std::vector<double> in_count(col.arity(), 0.0), pop_count(col.arity(), 0.0);
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            const auto code = static_cast<std::size_t>(col.codes[i]);
            pop_count[code] += 1.0;
            if (member[i]) in_count[code] += 1.0;
        }
        std::vector<char> retained(col.arity(), 0);
        for (auto c : codes) retained[static_cast<std::size_t>(c)] = 1;
        double inside = 0.0, inside_pos = 0.0;
        for (std::size_t i = 0; i < d.n_rows(); ++i)
            if (retained[static_cast<std::size_t>(col.codes[i])]) {
                inside += 1.0;
                inside_pos += d.outcome()[i];
            }
        for (auto c : codes) {
            const auto v = static_cast<std::size_t>(c);
            prof.values.push_back({col.labels[v],
                                   ch.subset_size > 0 ? in_count[v] / static_cast<double>(ch.subset_size) : 0.0,
                                   n > 0 ? pop_count[v] / n : 0.0});
        }
        prof.population_prevalence = n > 0 ? inside / n : 0.0;
        prof.outcome_rate = inside > 0 ? inside_pos / inside : 0.0;
        ch.restrictions.push_back(std::move(prof));
    }
    return ch;
}

nlohmann::json to_json(const SignificanceResult& s) {
    return {{"observed_score", s.observed_score},
            {"p_value", s.p_value},
            {"r_replicates", s.r_replicates},
            {"seed", s.seed},
            {"replicate_scores", s.replicate_scores}};
}

nlohmann::json to_json(const EffectEstimate& e) {
    return {{"table", {{"a", e.a}, {"b", e.b}, {"c", e.c}, {"d", e.d}}},
            {"corrected", e.corrected},
            {"odds_ratio", e.odds_ratio},
            {"log_se", e.log_se},
            {"ci_low", e.ci_low},
            {"ci_high", e.ci_high}};
}

nlohmann::json to_json(const Characterization& c) {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : c.restrictions) {
        nlohmann::json vals = nlohmann::json::array();
        for (const auto& v : r.values)
            vals.push_back({{"value", v.label}, {"in_subset_share", v.in_subset}, {"population_share", v.population}});
        rs.push_back({{"feature", r.feature},
                      {"values", vals},
                      {"population_prevalence", r.population_prevalence},
                      {"outcome_rate", r.outcome_rate}});
    }
    return {{"restrictions", rs},
            {"subset_size", c.subset_size},
            {"population_size", c.population_size},
            {"subset_outcome_rate", c.subset_outcome_rate},
            {"alpha_g", c.alpha_g}};
}

}  // namespace autostrat
