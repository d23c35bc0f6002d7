// autostrat command-line front end: select, scan, sweep, synth, pvalue.
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autostrat/error.hpp"
#include "autostrat/json_io.hpp"
#include "autostrat/pipeline.hpp"
#include "autostrat/synth.hpp"

namespace fs = std::filesystem;
using namespace autostrat;

namespace {

struct Overrides {
    std::string config;
    std::string data;
    std::string schema;
    std::string method;
    std::optional<std::size_t> k;
    std::vector<std::size_t> k_sweep;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::size_t> bootstrap_r;
    std::optional<int> restarts;
    std::optional<int> bins;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "pipeline config JSON");
    cmd->add_option("--data", o.data, "data CSV");
    cmd->add_option("--schema", o.schema, "schema JSON");
    cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("-j,--workers", o.workers, "worker threads");
    cmd->add_option("--bootstrap-r", o.bootstrap_r, "bootstrap replicates");
    cmd->add_option("--restarts", o.restarts, "scan restarts");
    cmd->add_option("--bins", o.bins, "quantile bins for continuous features");
}

PipelineConfig build_config(const Overrides& o) {
    PipelineConfig cfg;
    if (!o.config.empty()) cfg = PipelineConfig::from_json(read_json_file(o.config));
    if (!o.data.empty()) cfg.data = o.data;
    if (!o.schema.empty()) cfg.schema = o.schema;
    if (!o.method.empty()) cfg.method = parse_method(o.method);
    if (o.k) {
        cfg.k = o.k;
        cfg.k_sweep.clear();
    }
    if (!o.k_sweep.empty()) {
        cfg.k_sweep = o.k_sweep;
        cfg.k.reset();
    }
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.bootstrap_r) cfg.bootstrap_r = *o.bootstrap_r;
    if (o.restarts) cfg.scan.n_restarts = *o.restarts;
    if (o.bins) cfg.discretization.defaults.n_bins = *o.bins;
    cfg.apply_seed();
    if (cfg.data.empty() || cfg.schema.empty())
        throw Error(ErrorCode::InvalidConfig, "both a data CSV and a schema JSON are required");
    return cfg;
}

Dataset load_data(const PipelineConfig& cfg) {
    return load_csv(cfg.data, load_schema(cfg.schema));
}

void log(const std::string& msg) { std::cerr << "[autostrat] " << msg << '\n'; }

void write_metadata(const fs::path& dir, const std::string& command, const std::vector<std::string>& argv) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    nlohmann::json meta = {{"command", command}, {"argv", argv}, {"timestamp", stamp}};
    write_file_atomic(dir / "run_metadata.json", dump_json(meta) + "\n");
}

std::vector<std::string> read_feature_list(const std::string& spec, const Dataset& data) {
    if (spec == "all") return data.feature_names();
    std::vector<std::string> out;
    if (fs::path(spec).extension() == ".json") {
        const auto j = read_json_file(spec);
        if (!j.contains("features") || !j.at("features").is_array())
            throw Error(ErrorCode::InvalidConfig, "feature JSON has no 'features' array: " + spec);
        for (const auto& f : j.at("features")) out.push_back(f.get<std::string>());
    } else {
        std::ifstream in(spec);
        if (!in) throw Error(ErrorCode::Io, "cannot open feature list " + spec);
        std::string line;
        while (std::getline(in, line)) {
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos || line[b] == '#') continue;
            const auto e = line.find_last_not_of(" \t\r");
            out.push_back(line.substr(b, e - b + 1));
        }
    }
    if (out.empty()) throw Error(ErrorCode::NoFeatures, "feature list is empty: " + spec);
    std::set<std::string> seen;
    for (const auto& f : out) {
        data.index_of(f);
        if (!seen.insert(f).second) throw Error(ErrorCode::InvalidConfig, "feature listed twice: " + f);
    }
    return out;
}

std::string default_scan_name(const std::string& spec) {
    if (spec == "all") return "all";
    return fs::path(spec).stem().string();
}

int cmd_select(const PipelineConfig& cfg) {
    cfg.validate(true);
    const auto data = load_data(cfg);
    log("loaded " + std::to_string(data.n_rows()) + " rows, " + std::to_string(data.n_features()) + " features");
    FeatureSelector selector(data, cfg);
    fs::create_directories(cfg.output_dir);
    std::map<Method, std::vector<std::string>> chosen;
    for (auto m : expand(cfg.method)) {
        log("selecting with " + std::string(to_string(m)));
        auto res = selector.select(m, *cfg.k);
        nlohmann::json j = {{"report_version", kReportVersion},
                            {"method", std::string(to_string(m))},
                            {"k", res.k},
                            {"features", res.features},
                            {"diagnostics", res.diagnostics},
                            {"config", cfg.to_json()}};
        const auto file = cfg.output_dir / ("selection_" + std::string(to_string(m)) + "_k" + std::to_string(res.k) + ".json");
        write_file_atomic(file, dump_json(j) + "\n");
        log("wrote " + file.string());
        chosen[m] = res.features;
    }
    if (chosen.count(Method::EmbeddedA) && chosen.count(Method::EmbeddedB)) {
        const auto& a = chosen[Method::EmbeddedA];
        std::set<std::string> b(chosen[Method::EmbeddedB].begin(), chosen[Method::EmbeddedB].end());
        std::vector<std::string> shared;
        for (const auto& f : a)
            if (b.count(f)) shared.push_back(f);
        std::sort(shared.begin(), shared.end());
        nlohmann::json j = {{"report_version", kReportVersion},
                            {"k", *cfg.k},
                            {"embedded_overlap", shared.size()},
                            {"shared_features", shared}};
        write_file_atomic(cfg.output_dir / "selection_overlap.json", dump_json(j) + "\n");
        log("EmbeddedA/EmbeddedB overlap: " + std::to_string(shared.size()) + "/" + std::to_string(a.size()));
    }
    return 0;
}

int cmd_scan(const PipelineConfig& cfg, const std::string& feature_spec, std::string name) {
    cfg.validate();
    const auto data = load_data(cfg);
    const auto features = read_feature_list(feature_spec, data);
    if (name.empty()) name = default_scan_name(feature_spec);
    const auto disc = discretize(data, cfg.discretization);
    log("scanning " + std::to_string(features.size()) + " features with R=" + std::to_string(cfg.bootstrap_r));
    const auto report = run_scan(disc, features, cfg);
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / ("scan_" + name + ".json"), dump_json(to_json(report, disc, cfg)) + "\n");
    write_file_atomic(cfg.output_dir / ("replicates_" + name + ".csv"), replicates_csv(report.significance));
    log("score " + format_double(report.subset.score) + ", p " + format_double(report.significance.p_value));
    return 0;
}

int cmd_sweep(const PipelineConfig& cfg) {
    const auto data = load_data(cfg);
    log("sweeping over " + std::to_string(data.n_features()) + " features");
    const auto result = run_sweep(data, cfg);
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "sweep.csv", sweep_csv(result));
    write_file_atomic(cfg.output_dir / "sweep_summary.json", dump_json(to_json(result, cfg)) + "\n");
    log("wrote " + std::to_string(result.rows.size()) + " sweep rows");
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    auto spec = SynthSpec::from_json(read_json_file(spec_path));
    if (seed) spec.seed = *seed;
    spec.validate();
    const auto result = generate(spec);
    const fs::path dir = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    write_csv(csv, result.data);
    write_file_atomic(dir / "data.csv", csv.str());
    write_file_atomic(dir / "schema.json", dump_json(schema_of(result.data).to_json()) + "\n");
    write_file_atomic(dir / "ground_truth.json", dump_json(ground_truth_json(spec, result)) + "\n");
    write_file_atomic(dir / "synth_spec.json", dump_json(spec.to_json()) + "\n");
    log("generated " + std::to_string(result.data.n_rows()) + " rows into " + dir.string());
    return 0;
}

int cmd_pvalue(PipelineConfig cfg, const std::string& report_path, std::size_t r) {
    const auto report = read_json_file(report_path);
    if (!report.contains("features")) throw Error(ErrorCode::InvalidConfig, "not a scan report: " + report_path);
    const auto features = report.at("features").get<std::vector<std::string>>();
    if (report.contains("scan_config")) cfg.scan = ScanConfig::from_json(report.at("scan_config"), cfg.scan);
    if (report.contains("discretization"))
        cfg.discretization = DiscretizationSpec::from_json(report.at("discretization"));
    cfg.bootstrap_r = r;
    cfg.validate();
    const auto data = load_data(cfg);
    const auto disc = discretize(data, cfg.discretization);
    ScanConfig sc = cfg.scan;
    sc.workers = cfg.workers;
    const auto observed = scan(disc, features, sc);
    const auto sig = empirical_p_value(disc, features, sc, observed, r);
    nlohmann::json out = to_json(sig);
    out.erase("replicate_scores");
    out["report_version"] = kReportVersion;
    out["source_report"] = fs::path(report_path).filename().string();
    out["features"] = features;
    const std::string name = fs::path(report_path).stem().string();
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / ("pvalue_" + name + ".json"), dump_json(out) + "\n");
    write_file_atomic(cfg.output_dir / ("pvalue_replicates_" + name + ".csv"), replicates_csv(sig));
    log("p " + format_double(sig.p_value) + " with R=" + std::to_string(r));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"autostrat: feature selection and subgroup scanning for binary outcomes"};
    app.require_subcommand(1);

    Overrides sel, scn, swp, pv;
    std::string feature_spec = "all", scan_name, synth_spec, synth_out, report_path;
    std::optional<std::uint64_t> synth_seed;
    std::size_t pvalue_r = 99;

    auto* select = app.add_subcommand("select", "rank features and keep the top K");
    add_common(select, sel);
    select->add_option("-m,--method", sel.method, "FilterWrapper, EmbeddedA, EmbeddedB, Committee or All");
    select->add_option("-k,--k", sel.k, "number of features to keep");

    auto* scan_cmd = app.add_subcommand("scan", "scan a feature list for the most anomalous subgroup");
    add_common(scan_cmd, scn);
    scan_cmd->add_option("-f,--features", feature_spec, "feature list file, selection JSON or 'all'");
    scan_cmd->add_option("--name", scan_name, "report name suffix");

    auto* sweep = app.add_subcommand("sweep", "select and scan for every method and K");
    add_common(sweep, swp);
    sweep->add_option("-m,--method", swp.method, "method or All");
    sweep->add_option("--k-sweep", swp.k_sweep, "K values")->delimiter(',');

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("-s,--spec", synth_spec, "synth spec JSON")->required();
    synth->add_option("-o,--output-dir", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "seed override");

    auto* pvalue = app.add_subcommand("pvalue", "recompute the empirical p-value of a scan report");
    add_common(pvalue, pv);
    pvalue->add_option("-r,--report", report_path, "scan report JSON")->required();
    pvalue->add_option("-R,--replicates", pvalue_r, "bootstrap replicates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    std::vector<std::string> args(argv, argv + argc);
    try {
        if (*synth) {
            const int rc = cmd_synth(synth_spec, synth_out, synth_seed);
            write_metadata(synth_out.empty() ? fs::path("out") : fs::path(synth_out), "synth", args);
            return rc;
        }
        const std::pair<CLI::App*, Overrides*> cmds[] = {{select, &sel}, {scan_cmd, &scn}, {sweep, &swp}, {pvalue, &pv}};
        for (auto [cmd, o] : cmds) {
            if (!*cmd) continue;
            const auto cfg = build_config(*o);
            int rc = 0;
            if (cmd == select) rc = cmd_select(cfg);
            else if (cmd == scan_cmd) rc = cmd_scan(cfg, feature_spec, scan_name);
            else if (cmd == sweep) rc = cmd_sweep(cfg);
            else rc = cmd_pvalue(cfg, report_path, pvalue_r);
            write_metadata(cfg.output_dir, cmd->get_name(), args);
            return rc;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: InvalidConfig: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: Io: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
