#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "autostrat/error.hpp"
#include "autostrat/json_io.hpp"
#include "autostrat/pipeline.hpp"
#include "support.hpp"

using namespace autostrat;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

SynthSpec wide(std::uint64_t seed) {
    SynthSpec s;
    s.n_rows = 800;
    s.n_continuous = 10;
    s.categorical_arities = {2, 3, 4, 3, 2};
    s.base_rate = 0.25;
    s.seed = seed;
    return s;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("autostrat_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_dataset(const fs::path& dir, const Dataset& d) {
    std::ofstream csv(dir / "data.csv");
    write_csv(csv, d);
    std::ofstream schema(dir / "schema.json");
    schema << dump_json(schema_of(d).to_json());
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(AUTOSTRAT_CLI) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("methods", "[pipeline]") {
    CHECK(expand(Method::All).size() == 4);
    CHECK(expand(Method::EmbeddedB) == std::vector<Method>{Method::EmbeddedB});
    CHECK(parse_method("Committee") == Method::Committee);
    CHECK_THROWS_AS(parse_method("Lasso"), Error);
}

TEST_CASE("pipeline config", "[pipeline]") {
    const auto cfg = PipelineConfig::from_json(nlohmann::json::parse(R"({
        "method": "All", "k_sweep": [2, 4], "seed": 12, "bootstrap_r": 39,
        "scan": {"n_restarts": 7}, "gbm": {"B": {"n_trees": 30}}})"));
    CHECK(cfg.method == Method::All);
    CHECK(cfg.k_sweep == std::vector<std::size_t>{2, 4});
    CHECK(cfg.scan.n_restarts == 7);
    CHECK(cfg.scan.seed == 12);
    CHECK(cfg.gbm_a.seed == 12);
    CHECK(cfg.gbm_b.seed == 12);
    CHECK(cfg.gbm_b.n_trees == 30);
    CHECK(cfg.gbm_b.preset == GbmPreset::B);
    CHECK(cfg.bootstrap_r == 39);
    CHECK_FALSE(cfg.to_json().contains("workers"));

    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"k": 3, "k_sweep": [2]})")), Error);
    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"bootstrap_r": 5})")), Error);
    CHECK_THROWS_AS(PipelineConfig{}.validate(true), Error);
}

TEST_CASE("selection contracts", "[pipeline]") {
    const auto gen = generate(wide(2));
    PipelineConfig cfg;
    cfg.seed = 2;
    cfg.apply_seed();
    FeatureSelector sel(gen.data, cfg);

    const auto committee = sel.select(Method::Committee, 10);
    CHECK(committee.features.size() == 10);
    CHECK(committee.diagnostics.contains("preset_a"));
    CHECK(committee.diagnostics.contains("preset_b"));
    CHECK(committee.diagnostics.at("preset_a").contains("fit_metrics"));

    const auto fw = sel.select(Method::FilterWrapper, 4);
    CHECK(fw.features.size() == 4);
    CHECK(fw.diagnostics.contains("filters"));
    CHECK(fw.diagnostics.contains("elimination"));
    // the deeper trace keeps every shallower selection
    const auto fw2 = sel.select(Method::FilterWrapper, 2);
    CHECK(std::vector<std::string>(fw.features.begin(), fw.features.begin() + 2) == fw2.features);
    const auto fw6 = sel.select(Method::FilterWrapper, 6);
    CHECK(std::vector<std::string>(fw6.features.begin(), fw6.features.begin() + 4) == fw.features);

    try {
        sel.select(Method::EmbeddedA, 16);
        FAIL("expected KTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KTooLarge);
        CHECK(exit_code_for(e.code()) == 1);
    }
}

TEST_CASE("sweep rows and sufficiency", "[pipeline]") {
    const auto gen = generate(wide(4));
    PipelineConfig cfg;
    cfg.method = Method::All;
    cfg.k_sweep = {2, 15};
    cfg.bootstrap_r = 19;
    cfg.seed = 4;
    cfg.apply_seed();
    const auto res = run_sweep(gen.data, cfg);
    REQUIRE(res.rows.size() == 4 * 2 + 1);
    CHECK(res.rows.back().method == kAllFeaturesLabel);
    // selecting every feature reproduces the all-features scan
    for (const auto& row : res.rows)
        if (row.k == 15 && row.features.size() == 15) CHECK(row.score == res.all_features_score);
    for (const auto& [m, k] : res.smallest_sufficient_k)
        if (m != "FilterWrapper") CHECK(k == std::optional<std::size_t>(15));

    const auto csv = sweep_csv(res);
    CHECK(csv.rfind("method,K,score,p_value,odds_ratio,ci_low,ci_high,n_members\n", 0) == 0);
    const auto j = to_json(res, cfg);
    CHECK(j.at("report_version") == 1);
    CHECK(j.at("rows").size() == 9);
}

TEST_CASE("concentrated signal needs few features", "[pipeline]") {
    // noise-bin restrictions add O(1) to the score; enough rows keep that under the 1% tolerance
    for (std::uint64_t seed : {6, 7}) {
        SynthSpec s;
        s.n_rows = 4000;
        s.n_continuous = 20;
        s.seed = seed;
        s.effects = {{"x1", 1.5}, {"x2", 1.3}, {"x3", -1.4}, {"x4", 1.2}, {"x5", -1.3}};
        const auto gen = generate(s);
        PipelineConfig cfg;
        cfg.method = Method::All;
        cfg.k_sweep = {5, 10, 15, 20};
        cfg.bootstrap_r = 19;
        cfg.seed = seed;
        cfg.apply_seed();
        const auto res = run_sweep(gen.data, cfg);
        for (const char* m : {"EmbeddedA", "EmbeddedB", "Committee"}) {
            INFO(m << " seed " << seed);
            const auto k = res.smallest_sufficient_k.at(m);
            REQUIRE(k.has_value());
            CHECK(*k <= 10);
        }
    }
}

TEST_CASE("scan reports are deterministic", "[pipeline]") {
    const auto gen = generate(planted_spec(3));
    const auto d = discretize(gen.data);
    PipelineConfig cfg;
    cfg.bootstrap_r = 19;
    cfg.seed = 1;
    cfg.apply_seed();
    const auto a = run_scan(d, {"c2", "c1", "x1"}, cfg);
    cfg.workers = 4;
    const auto b = run_scan(d, {"x1", "c1", "c2"}, cfg);
    CHECK(dump_json(to_json(a, d, cfg)) == dump_json(to_json(b, d, cfg)));
    CHECK(replicates_csv(a.significance) == replicates_csv(b.significance));
    const auto j = to_json(a, d, cfg);
    CHECK(j.at("report_version") == 1);
    CHECK(j.at("effect").at("odds_ratio").get<double>() > 1.0);
}

TEST_CASE("cli exit codes and outputs", "[pipeline][cli]") {
    const auto dir = scratch("cli");
    write_dataset(dir, generate(wide(9)).data);
    const std::string io = "--data " + (dir / "data.csv").string() + " --schema " + (dir / "schema.json").string();
    const std::string out = " -o " + (dir / "out").string();

    CHECK(run_cli("select " + io + out + " -m Committee -k 3 --seed 2") == 0);
    CHECK(fs::exists(dir / "out" / "selection_Committee_k3.json"));
    CHECK(fs::exists(dir / "out" / "run_metadata.json"));
    const auto sel = read_json_file(dir / "out" / "selection_Committee_k3.json");
    CHECK(sel.at("features").size() == 3);

    CHECK(run_cli("select " + io + out + " -m EmbeddedA -k 99") == 1);
    CHECK(run_cli("select " + io + out + " -m Lasso -k 2") == 1);
    CHECK(run_cli("select --data /nonexistent.csv --schema " + (dir / "schema.json").string() + out + " -k 2") == 2);
    CHECK(run_cli("bogus") == 1);

    std::ofstream(dir / "empty.txt") << "\n# nothing\n";
    CHECK(run_cli("scan " + io + out + " -f " + (dir / "empty.txt").string()) == 1);

    CHECK(run_cli("scan " + io + out + " --bootstrap-r 19 --seed 4 -f " +
                  (dir / "out" / "selection_Committee_k3.json").string() + " --name committee") == 0);
    CHECK(fs::exists(dir / "out" / "scan_committee.json"));
    CHECK(fs::exists(dir / "out" / "replicates_committee.csv"));
    CHECK(run_cli("pvalue " + io + out + " --seed 4 -R 19 -r " + (dir / "out" / "scan_committee.json").string()) == 0);
    const auto pv = read_json_file(dir / "out" / "pvalue_scan_committee.json");
    const auto scan = read_json_file(dir / "out" / "scan_committee.json");
    CHECK(pv.at("p_value") == scan.at("significance").at("p_value"));

    // flag-free rerun through a config file gives the same bytes
    std::ofstream(dir / "cfg.json") << dump_json({{"data", (dir / "data.csv").string()},
                                                  {"schema", (dir / "schema.json").string()},
                                                  {"bootstrap_r", 19},
                                                  {"seed", 4},
                                                  {"output_dir", (dir / "out2").string()}});
    CHECK(run_cli("scan -c " + (dir / "cfg.json").string() + " -j 3 -f " +
                  (dir / "out" / "selection_Committee_k3.json").string() + " --name committee") == 0);
    CHECK(slurp(dir / "out" / "scan_committee.json") == slurp(dir / "out2" / "scan_committee.json"));
}

TEST_CASE("cli scan on the 12-row fixture", "[pipeline][cli]") {
    const auto dir = scratch("fixture");
    const std::string data = std::string(AUTOSTRAT_TEST_DATA);
    CHECK(run_cli("scan --data " + data + "/fixture12.csv --schema " + data + "/fixture12_schema.json -o " +
                  (dir / "out").string() + " --bootstrap-r 19") == 0);
    const auto report = read_json_file(dir / "out" / "scan_all.json");
    const auto d = discretize(load_csv(data + "/fixture12.csv", load_schema(data + "/fixture12_schema.json")));
    const auto oracle = brute_force_scan(d, {"f", "g"});
    CHECK(report.at("subset").at("score").get<double>() == oracle.score);
    CHECK(report.at("subset").at("n_members") == oracle.n);
}

TEST_CASE("cli synth and sweep", "[pipeline][cli]") {
    const auto dir = scratch("synth");
    std::ofstream(dir / "spec.json") << dump_json(planted_spec(5).to_json());
    CHECK(run_cli("synth -s " + (dir / "spec.json").string() + " -o " + (dir / "gen").string()) == 0);
    for (const char* f : {"data.csv", "schema.json", "ground_truth.json"}) CHECK(fs::exists(dir / "gen" / f));
    CHECK(run_cli("sweep --data " + (dir / "gen" / "data.csv").string() + " --schema " +
                  (dir / "gen" / "schema.json").string() + " -o " + (dir / "sw").string() +
                  " -m FilterWrapper --k-sweep 2,3 --bootstrap-r 19") == 0);
    const auto csv = slurp(dir / "sw" / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 + 1);
    CHECK(fs::exists(dir / "sw" / "sweep_summary.json"));
}
