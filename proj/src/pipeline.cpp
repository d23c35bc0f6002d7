#include "autostrat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "autostrat/error.hpp"
#include "autostrat/json_io.hpp"
#include "autostrat/parallel.hpp"

namespace autostrat {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::FilterWrapper: return "FilterWrapper";
        case Method::EmbeddedA: return "EmbeddedA";
        case Method::EmbeddedB: return "EmbeddedB";
        case Method::Committee: return "Committee";
        case Method::All: return "All";
    }
    return "Committee";
}

Method parse_method(std::string_view text) {
    for (auto m : {Method::FilterWrapper, Method::EmbeddedA, Method::EmbeddedB, Method::Committee, Method::All})
        if (text == to_string(m)) return m;
    throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(text) +
                                              "' (expected FilterWrapper, EmbeddedA, EmbeddedB, Committee or All)");
}

std::vector<Method> expand(Method m) {
    if (m == Method::All) return {Method::FilterWrapper, Method::EmbeddedA, Method::EmbeddedB, Method::Committee};
    return {m};
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::apply_seed() {
    scan.seed = seed;
    gbm_a.seed = seed;
    gbm_b.seed = seed;
}

void PipelineConfig::validate(bool require_k) const {
    if (k && !k_sweep.empty()) throw Error(ErrorCode::InvalidConfig, "set either k or k_sweep, not both");
    if (require_k && !k) throw Error(ErrorCode::InvalidConfig, "k is required");
    if (k && *k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    for (auto v : k_sweep)
        if (v < 1) throw Error(ErrorCode::InvalidConfig, "k_sweep values must be >= 1");
    thresholds.validate();
    gbm_a.validate();
    gbm_b.validate();
    scan.validate();
    if (bootstrap_r < 19) throw Error(ErrorCode::InvalidConfig, "bootstrap_r must be >= 19");
    if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
    if (!(sufficiency_fraction >= 0.0 && sufficiency_fraction < 1.0))
        throw Error(ErrorCode::InvalidConfig, "sufficiency_fraction must be in [0,1)");
    if (discretization.defaults.n_bins < 2) throw Error(ErrorCode::InvalidConfig, "n_bins must be >= 2");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
        if (j.contains("data")) c.data = j.at("data").get<std::string>();
        if (j.contains("schema")) c.schema = j.at("schema").get<std::string>();
        if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("k") && !j.at("k").is_null()) c.k = j.at("k").get<std::size_t>();
        if (j.contains("k_sweep")) c.k_sweep = j.at("k_sweep").get<std::vector<std::size_t>>();
        if (j.contains("thresholds")) c.thresholds = FilterThresholds::from_json(j.at("thresholds"));
        if (j.contains("gbm")) {
            const auto& g = j.at("gbm");
            if (g.contains("A")) c.gbm_a = GbmConfig::from_json(g.at("A"), c.gbm_a);
            if (g.contains("B")) c.gbm_b = GbmConfig::from_json(g.at("B"), c.gbm_b);
        }
        if (j.contains("scan")) c.scan = ScanConfig::from_json(j.at("scan"), c.scan);
        if (j.contains("discretization")) c.discretization = DiscretizationSpec::from_json(j.at("discretization"));
        c.bootstrap_r = j.value("bootstrap_r", c.bootstrap_r);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.sufficiency_fraction = j.value("sufficiency_fraction", c.sufficiency_fraction);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed pipeline config: ") + e.what());
    }
    c.apply_seed();
    c.validate();
    return c;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j = {{"method", std::string(to_string(method))},
                        {"thresholds", thresholds.to_json()},
                        {"gbm", {{"A", gbm_a.to_json()}, {"B", gbm_b.to_json()}}},
                        {"scan", scan.to_json()},
                        {"discretization", discretization.to_json()},
                        {"bootstrap_r", bootstrap_r},
                        {"seed", seed},
                        {"sufficiency_fraction", sufficiency_fraction}};
    if (k) j["k"] = *k;
    if (!k_sweep.empty()) j["k_sweep"] = k_sweep;
    return j;
}

// ---------------------------------------------------------------------------
// Selection

FeatureSelector::FeatureSelector(Dataset data, PipelineConfig cfg) : data_(std::move(data)), cfg_(std::move(cfg)) {}

const FilterDiagnostics& FeatureSelector::filtered() {
    if (!filters_) filters_ = filter_select(data_, cfg_.thresholds);
    return *filters_;
}

const EliminationTrace& FeatureSelector::elimination(std::size_t k) {
    // a deeper trace contains every shallower one as a prefix
    if (!trace_ || trace_->final_features.size() > k) trace_ = backward_eliminate(data_, filtered().kept(), k);
    return *trace_;
}

const FeatureSelector::EmbeddedRun& FeatureSelector::embedded(GbmPreset preset) {
    auto& slot = preset == GbmPreset::A ? preset_a_ : preset_b_;
    if (!slot) {
        auto trained = gbm_train(data_, preset == GbmPreset::A ? cfg_.gbm_a : cfg_.gbm_b);
        auto raw = extract_importance(trained.model);
        auto norm = minmax_normalize(raw);
        slot = EmbeddedRun{std::move(trained), std::move(raw), std::move(norm)};
    }
    return *slot;
}

SelectionResult FeatureSelector::select(Method method, std::size_t k) {
    if (method == Method::All) throw Error(ErrorCode::InvalidArgument, "select one concrete method at a time");
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    if (k > data_.n_features())
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds the " +
                                              std::to_string(data_.n_features()) + " available features");
    SelectionResult res;
    res.method = method;
    res.k = k;

    auto embedded_json = [&](GbmPreset preset) {
        const auto& run = embedded(preset);
        return nlohmann::json{{"gbm_config", (preset == GbmPreset::A ? cfg_.gbm_a : cfg_.gbm_b).to_json()},
                              {"fit_metrics", to_json(run.trained.metrics)},
                              {"ranking_raw", to_json(run.raw)},
                              {"ranking_normalized", to_json(run.normalized)}};
    };

    switch (method) {
        case Method::FilterWrapper: {
            const auto& diag = filtered();
            const auto candidates = diag.kept();
            if (candidates.empty()) throw Error(ErrorCode::NoFeatures, "every feature was removed by the filters");
            const std::size_t k_eff = std::min(k, candidates.size());
            const auto& trace = elimination(k_eff);
            // final survivors by significance, then the most recently dropped first
            std::vector<std::string> ranking = trace.final_features;
            for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) ranking.push_back(it->dropped);
            res.features.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k_eff));
            res.diagnostics = {{"filters", to_json(diag)},
                               {"elimination", to_json(trace)},
                               {"k_effective", k_eff},
                               {"ranking", ranking}};
            break;
        }
        case Method::EmbeddedA:
        case Method::EmbeddedB: {
            const auto preset = method == Method::EmbeddedA ? GbmPreset::A : GbmPreset::B;
            res.features = top_k(embedded(preset).normalized, k);
            res.diagnostics = embedded_json(preset);
            break;
        }
        case Method::Committee: {
            const std::vector<FeatureRanking> both{embedded(GbmPreset::A).normalized, embedded(GbmPreset::B).normalized};
            const auto committee = committee_vote(both);
            res.features = top_k(committee, k);
            res.diagnostics = {{"preset_a", embedded_json(GbmPreset::A)},
                               {"preset_b", embedded_json(GbmPreset::B)},
                               {"committee", to_json(committee)}};
            break;
        }
        case Method::All: break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scan reports

ScanReport run_scan(const DiscreteDataset& d, const std::vector<std::string>& features, const PipelineConfig& cfg) {
    if (features.empty()) throw Error(ErrorCode::NoFeatures, "no features to scan");
    ScanReport r;
    // name order makes the scan independent of how the list was ranked
    r.features = features;
    std::sort(r.features.begin(), r.features.end());
    ScanConfig sc = cfg.scan;
    sc.workers = cfg.workers;
    r.subset = scan(d, r.features, sc);
    r.significance = empirical_p_value(d, r.features, sc, r.subset, cfg.bootstrap_r);
    try {
        r.effect = odds_ratio(d, r.subset.subset);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::FullSubset && e.code() != ErrorCode::EmptySubset) throw;
    }
    r.characterization = characterize(d, r.subset);
    return r;
}

nlohmann::json to_json(const ScanReport& r, const DiscreteDataset& d, const PipelineConfig& cfg) {
    auto sig = to_json(r.significance);
    sig.erase("replicate_scores");
    return {{"report_version", kReportVersion},
            {"features", r.features},
            {"scan_config", cfg.scan.to_json()},
            {"discretization", cfg.discretization.to_json()},
            {"subset", to_json(r.subset, d)},
            {"significance", sig},
            {"effect", r.effect ? to_json(*r.effect) : nlohmann::json(nullptr)},
            {"characterization", to_json(r.characterization)}};
}

std::string replicates_csv(const SignificanceResult& s) {
    std::string out = "replicate,score\n";
    for (std::size_t i = 0; i < s.replicate_scores.size(); ++i)
        out += std::to_string(i) + "," + format_double(s.replicate_scores[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Sweep

SweepResult run_sweep(const Dataset& data, const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> ks = cfg.k_sweep;
    if (ks.empty()) ks = cfg.k ? std::vector<std::size_t>{*cfg.k} : kDefaultSweep;

    FeatureSelector selector(data, cfg);
    struct Cell {
        std::string method;
        std::size_t k;
        std::vector<std::string> features;
    };
    std::vector<Cell> cells;
    for (auto m : expand(cfg.method))
        for (auto k : ks) cells.push_back({std::string(to_string(m)), k, selector.select(m, k).features});
    cells.push_back({kAllFeaturesLabel, data.n_features(), data.feature_names()});

    // identical feature sets give identical scans; run each distinct set once
    std::map<std::vector<std::string>, std::size_t> distinct;
    std::vector<std::vector<std::string>> jobs;
    std::vector<std::size_t> job_of(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto key = cells[i].features;
        std::sort(key.begin(), key.end());
        auto [it, inserted] = distinct.emplace(key, jobs.size());
        if (inserted) jobs.push_back(key);
        job_of[i] = it->second;
    }

    const auto disc = discretize(data, cfg.discretization);
    PipelineConfig inner = cfg;
    inner.workers = 1;
    std::vector<ScanReport> reports(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) { reports[j] = run_scan(disc, jobs[j], inner); });

    SweepResult out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& rep = reports[job_of[i]];
        SweepRow row;
        row.method = cells[i].method;
        row.k = cells[i].k;
        row.score = rep.subset.score;
        row.p_value = rep.significance.p_value;
        row.effect = rep.effect;
        row.n_members = rep.subset.n_members;
        row.features = cells[i].features;
        out.rows.push_back(std::move(row));
    }
    out.all_features_score = out.rows.back().score;
    const double needed = (1.0 - cfg.sufficiency_fraction) * out.all_features_score;
    for (auto m : expand(cfg.method)) {
        const std::string name(to_string(m));
        std::optional<std::size_t> best;
        for (const auto& row : out.rows)
            if (row.method == name && row.score >= needed && (!best || row.k < *best)) best = row.k;
        out.smallest_sufficient_k[name] = best;
    }
    return out;
}

std::string sweep_csv(const SweepResult& s) {
    std::ostringstream out;
    out << "method,K,score,p_value,odds_ratio,ci_low,ci_high,n_members\n";
    for (const auto& r : s.rows) {
        out << r.method << ',' << r.k << ',' << format_double(r.score) << ',' << format_double(r.p_value) << ',';
        if (r.effect)
            out << format_double(r.effect->odds_ratio) << ',' << format_double(r.effect->ci_low) << ','
                << format_double(r.effect->ci_high);
        else
            out << "NA,NA,NA";
        out << ',' << r.n_members << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const SweepResult& s, const PipelineConfig& cfg) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"method", r.method},
                        {"K", r.k},
                        {"score", r.score},
                        {"p_value", r.p_value},
                        {"effect", r.effect ? to_json(*r.effect) : nlohmann::json(nullptr)},
                        {"n_members", r.n_members},
                        {"features", r.features}});
    nlohmann::json suff = nlohmann::json::object();
    for (const auto& [m, k] : s.smallest_sufficient_k) suff[m] = k ? nlohmann::json(*k) : nlohmann::json(nullptr);
    return {{"report_version", kReportVersion},
            {"config", cfg.to_json()},
            {"rows", rows},
            {"all_features_score", s.all_features_score},
            {"smallest_sufficient_k", suff}};
}

}  // namespace autostrat
