#include "autostrat/synth.hpp"

#include <cmath>
#include <set>

#include "autostrat/error.hpp"
#include "autostrat/random.hpp"

namespace autostrat {

namespace {

std::string level_label(int l) { return std::string(1, static_cast<char>('A' + l)); }

}  // namespace

double odds_shift(double p, double q) { return q * p / (1.0 - p + q * p); }

std::vector<FeatureSpec> SynthSpec::features() const {
    std::vector<FeatureSpec> out;
    for (std::size_t j = 0; j < n_continuous; ++j) out.push_back({"x" + std::to_string(j + 1), FeatureKind::Continuous});
    for (std::size_t t = 0; t < collinear_triples; ++t)
        for (const char* suffix : {"a", "b", "c"})
            out.push_back({"t" + std::to_string(t + 1) + suffix, FeatureKind::Continuous});
    for (std::size_t g = 0; g < categorical_arities.size(); ++g)
        out.push_back({"c" + std::to_string(g + 1),
                       categorical_arities[g] == 2 ? FeatureKind::Binary : FeatureKind::Nominal});
    return out;
}

void SynthSpec::validate() const {
    if (n_rows < 1) throw Error(ErrorCode::InvalidSpec, "n_rows must be positive");
    if (!(correlation >= 0.0 && correlation < 1.0)) throw Error(ErrorCode::InvalidSpec, "correlation must be in [0,1)");
    if (!(base_rate > 0.0 && base_rate < 1.0)) throw Error(ErrorCode::InvalidSpec, "base_rate must be in (0,1)");
    for (int a : categorical_arities)
        if (a < 2 || a > 26) throw Error(ErrorCode::InvalidSpec, "categorical arity must be in [2,26]");
    const auto feats = features();
    auto kind_of = [&](const std::string& name) -> std::optional<FeatureKind> {
        for (const auto& f : feats)
            if (f.name == name) return f.kind;
        return std::nullopt;
    };
    auto arity_of = [&](const std::string& name) {
        for (std::size_t g = 0; g < categorical_arities.size(); ++g)
            if (name == "c" + std::to_string(g + 1)) return categorical_arities[g];
        return discretization.binning_for(name).n_bins;
    };
    for (const auto& [name, beta] : effects) {
        const auto k = kind_of(name);
        if (!k) throw Error(ErrorCode::InvalidSpec, "effect on unknown feature '" + name + "'");
        if (*k == FeatureKind::Nominal) throw Error(ErrorCode::InvalidSpec, "effects apply to continuous/binary features");
        if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidSpec, "effect must be finite");
    }
    if (plant) {
        if (!(plant->q_star > 1.0)) throw Error(ErrorCode::InvalidSpec, "q_star must exceed 1");
        for (const auto& [name, codes] : plant->restrictions.restrictions) {
            if (!kind_of(name)) throw Error(ErrorCode::InvalidSpec, "plant on unknown feature '" + name + "'");
            if (codes.empty()) throw Error(ErrorCode::InvalidSpec, "empty plant restriction on '" + name + "'");
            const int arity = arity_of(name);
            for (auto c : codes)
                if (c < 0 || c >= arity) throw Error(ErrorCode::InvalidSpec, "plant code out of range on '" + name + "'");
        }
    }
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
    SynthSpec s;
    try {
        s.n_rows = j.value("n_rows", s.n_rows);
        s.n_continuous = j.value("n_continuous", s.n_continuous);
        s.correlation = j.value("correlation", s.correlation);
        s.collinear_triples = j.value("collinear_triples", s.collinear_triples);
        s.categorical_arities = j.value("categorical_arities", s.categorical_arities);
        s.base_rate = j.value("base_rate", s.base_rate);
        s.seed = j.value("seed", s.seed);
        if (j.contains("effects")) s.effects = j.at("effects").get<std::map<std::string, double>>();
        if (j.contains("discretization")) s.discretization = DiscretizationSpec::from_json(j.at("discretization"));
        if (j.contains("plant") && !j.at("plant").is_null()) {
            PlantSpec p;
            p.q_star = j.at("plant").value("q_star", p.q_star);
            for (const auto& [name, codes] : j.at("plant").at("restrictions").items()) {
                // labels ("A") for categorical features, bin indices for continuous ones
                std::vector<std::int32_t> cs;
                for (const auto& c : codes) {
                    if (c.is_number_integer()) cs.push_back(c.get<std::int32_t>());
                    else {
                        const auto label = c.get<std::string>();
                        if (label.size() != 1 || label[0] < 'A' || label[0] > 'Z')
                            throw Error(ErrorCode::InvalidSpec, "plant label '" + label + "' is not a level letter");
                        cs.push_back(label[0] - 'A');
                    }
                }
                p.restrictions.restrictions[name] = cs;
            }
            s.plant = p;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("malformed synth spec: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json SynthSpec::to_json() const {
    nlohmann::json j = {{"n_rows", n_rows},
                        {"n_continuous", n_continuous},
                        {"correlation", correlation},
                        {"collinear_triples", collinear_triples},
                        {"categorical_arities", categorical_arities},
                        {"base_rate", base_rate},
                        {"effects", effects},
                        {"discretization", discretization.to_json()},
                        {"seed", seed}};
    if (plant) j["plant"] = {{"q_star", plant->q_star}, {"restrictions", plant->restrictions.restrictions}};
    return j;
}

SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n = spec.n_rows;
    const std::size_t n_trip = spec.collinear_triples;
    const double shared = std::sqrt(spec.correlation);
    const double own = std::sqrt(1.0 - spec.correlation);

    std::vector<std::vector<double>> cont(spec.n_continuous, std::vector<double>(n));
    std::vector<std::vector<double>> trip(3 * n_trip, std::vector<double>(n));
    std::vector<std::vector<std::string>> cat(spec.categorical_arities.size(), std::vector<std::string>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = spec.n_continuous > 0 ? rng.normal() : 0.0;
        for (auto& c : cont) c[i] = shared * z0 + own * rng.normal();
        for (std::size_t t = 0; t < n_trip; ++t) {
            const double a = rng.normal();
            const double b = rng.normal();
            trip[3 * t][i] = a;
            trip[3 * t + 1][i] = b;
            trip[3 * t + 2][i] = a + b + 0.01 * rng.normal();
        }
        for (std::size_t g = 0; g < cat.size(); ++g)
            cat[g][i] = level_label(static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.categorical_arities[g]))));
    }

    const auto feats = spec.features();
    std::vector<Column> cols;
    std::size_t fi = 0;
    for (auto& c : cont) cols.push_back(Column::continuous(feats[fi++].name, std::move(c)));
    for (auto& t : trip) cols.push_back(Column::continuous(feats[fi++].name, std::move(t)));
    for (std::size_t g = 0; g < cat.size(); ++g) {
        auto col = Column::categorical(feats[fi].name, feats[fi].kind, cat[g]);
        // keep the full letter domain even if a level was never drawn
        std::vector<std::string> full;
        for (int l = 0; l < spec.categorical_arities[g]; ++l) full.push_back(level_label(l));
        if (col.levels != full) {
            std::vector<std::int32_t> codes;
            for (const auto& lab : cat[g]) codes.push_back(lab[0] - 'A');
            col.levels = full;
            col.codes = std::move(codes);
        }
        cols.push_back(std::move(col));
        ++fi;
    }

    // Discrete view for plant membership (plants reference bins of continuous features).
    std::vector<std::uint8_t> placeholder(n, 0);
    Dataset features_only(cols, placeholder);
    std::vector<std::uint8_t> in_plant(n, 0);
    std::optional<SubsetDescriptor> truth;
    if (spec.plant) {
        const auto disc = discretize(features_only, spec.discretization);
        const auto canonical = canonicalize(spec.plant->restrictions, disc);
        in_plant = membership(disc, canonical);
        truth = canonical;
    }

    const double base_logit = std::log(spec.base_rate / (1.0 - spec.base_rate));
    std::vector<std::pair<std::size_t, double>> effect_cols;
    for (const auto& [name, beta] : spec.effects) effect_cols.emplace_back(features_only.index_of(name), beta);

    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = spec.base_rate;
        if (!effect_cols.empty()) {
            double logit = base_logit;
            for (const auto& [j, beta] : effect_cols) logit += beta * features_only.column(j).numeric(i);
            p = 1.0 / (1.0 + std::exp(-logit));
        }
        if (in_plant[i]) p = odds_shift(p, spec.plant->q_star);
        y[i] = rng.bernoulli(p) ? 1 : 0;
    }
    return SynthResult{Dataset(std::move(cols), std::move(y), "outcome"), truth};
}

nlohmann::json ground_truth_json(const SynthSpec& spec, const SynthResult& result) {
    if (!result.ground_truth || !spec.plant) return nullptr;
    const auto disc = discretize(result.data, spec.discretization);
    return {{"restrictions", subset_json(*result.ground_truth, disc)},
            {"codes", result.ground_truth->restrictions},
            {"q_star", spec.plant->q_star}};
}

}  // namespace autostrat
