#include "catch_amalgamated.hpp"

#include <cmath>
#include <sstream>

#include "autostrat/error.hpp"
#include "autostrat/random.hpp"
#include "autostrat/tabular.hpp"

using namespace autostrat;
using Catch::Matchers::WithinAbs;

namespace {

Schema schema_xy() {
    return Schema::from_json(nlohmann::json::parse(R"({
        "features": [{"name": "x", "kind": "continuous"}, {"name": "g", "kind": "nominal"}],
        "outcome": "y"})"));
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an autostrat::Error");
    return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("schema parsing and validation", "[tabular]") {
    const auto s = schema_xy();
    REQUIRE(s.features.size() == 2);
    CHECK(s.features[1].kind == FeatureKind::Nominal);
    CHECK(s.missing_policy == MissingPolicy::Error);
    CHECK(Schema::from_json(s.to_json()).outcome_name == "y");

    CHECK(code_of([] {
              Schema::from_json(nlohmann::json::parse(
                  R"({"features": [{"name": "a", "kind": "binary"}, {"name": "a", "kind": "binary"}], "outcome": "y"})"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] {
              Schema::from_json(
                  nlohmann::json::parse(R"({"features": [{"name": "y", "kind": "binary"}], "outcome": "y"})"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_feature_kind("ordinal"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("csv loading", "[tabular]") {
    const auto s = schema_xy();

    SECTION("three rows read back") {
        std::istringstream in("x,g,y\n1.5,a,0\n2.5,b,1\n-3,a,0\n");
        const auto d = read_csv(in, s);
        CHECK(d.n_rows() == 3);
        CHECK_THAT(d.outcome_mean(), WithinAbs(1.0 / 3.0, 1e-15));
        CHECK(d.column("x").values == std::vector<double>{1.5, 2.5, -3.0});
        CHECK(d.column("g").levels == std::vector<std::string>{"a", "b"});
        CHECK(d.column("g").codes == std::vector<std::int32_t>{0, 1, 0});
    }
    SECTION("column order in the file does not matter") {
        std::istringstream in("y,g,x\n0,a,1\n1,b,2\n");
        const auto d = read_csv(in, s);
        CHECK(d.feature_names() == std::vector<std::string>{"x", "g"});
        CHECK(d.column("x").values == std::vector<double>{1.0, 2.0});
    }
    SECTION("non-binary outcome") {
        std::istringstream in("x,g,y\n1,a,0\n2,b,2\n");
        CHECK(code_of([&] { read_csv(in, s); }) == ErrorCode::NonBinaryOutcome);
    }
    SECTION("unparseable continuous cell") {
        std::istringstream in("x,g,y\n1,a,0\nabc,b,1\n");
        CHECK(code_of([&] { read_csv(in, s); }) == ErrorCode::ParseError);
    }
    SECTION("header mismatch") {
        std::istringstream missing("x,y\n1,0\n");
        CHECK(code_of([&] { read_csv(missing, s); }) == ErrorCode::SchemaMismatch);
        std::istringstream extra("x,g,z,y\n1,a,3,0\n");
        CHECK(code_of([&] { read_csv(extra, s); }) == ErrorCode::SchemaMismatch);
    }
    SECTION("missing cells follow the policy") {
        std::string text = "x,g,y\n";
        for (int i = 0; i < 10; ++i) text += (i == 4 ? std::string("") : std::to_string(i)) + ",a," + (i % 2 ? "1" : "0") + "\n";
        std::istringstream strict(text);
        CHECK(code_of([&] { read_csv(strict, s); }) == ErrorCode::MissingValue);
        auto lenient = s;
        lenient.missing_policy = MissingPolicy::DropRow;
        std::istringstream in(text);
        CHECK(read_csv(in, lenient).n_rows() == 9);
    }
    SECTION("unknown file") {
        CHECK(code_of([&] { load_csv("/nonexistent/data.csv", s); }) == ErrorCode::Io);
    }
}

TEST_CASE("csv round trip is exact", "[tabular]") {
    Rng rng(4);
    std::vector<double> x(50);
    std::vector<std::string> g(50);
    std::vector<std::uint8_t> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x[i] = rng.normal() * 1e3;
        g[i] = rng.bernoulli(0.5) ? "p" : "q";
        y[i] = rng.bernoulli(0.3);
    }
    const Dataset d({Column::continuous("x", x), Column::categorical("g", FeatureKind::Nominal, g)}, y, "y");
    std::stringstream buf;
    write_csv(buf, d);
    const auto back = read_csv(buf, schema_of(d));
    CHECK(back.column("x").values == x);
    CHECK(back.column("g").codes == d.column("g").codes);
    CHECK(std::vector<std::uint8_t>(back.outcome().begin(), back.outcome().end()) == y);
}

TEST_CASE("equal-frequency cut points", "[tabular]") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
    const auto cuts = compute_cut_points(v, {BinningMethod::EqualFrequency, 4});
    CHECK(cuts == std::vector<double>{2, 4, 6});
    std::vector<std::int32_t> bins;
    for (double x : v) bins.push_back(bin_of(cuts, x));
    CHECK(bins == std::vector<std::int32_t>{0, 0, 1, 1, 2, 2, 3, 3});

    CHECK(compute_cut_points(std::vector<double>{5, 5, 5, 5}, {}).empty());
    CHECK_THROWS_AS(compute_cut_points(std::vector<double>{}, {}), Error);

    const auto width = compute_cut_points(std::vector<double>{0, 10}, {BinningMethod::EqualWidth, 5});
    CHECK(width == std::vector<double>{2, 4, 6, 8});
}

TEST_CASE("discretize keeps categorical columns and labels bins", "[tabular]") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<std::string> b{"0", "1", "0", "1", "0", "1", "0", "1"};
    const Dataset d({Column::continuous("x", x), Column::continuous("flat", std::vector<double>(8, 5.0)),
                     Column::categorical("b", FeatureKind::Binary, b)},
                    {0, 1, 0, 1, 0, 0, 1, 1});
    DiscretizationSpec spec;
    spec.defaults.n_bins = 4;
    const auto dd = discretize(d, spec);
    CHECK(dd.n_rows() == 8);
    CHECK(dd.column("x").labels == std::vector<std::string>{"<=2", "(2,4]", "(4,6]", ">6"});
    CHECK(dd.column("flat").labels == std::vector<std::string>{"all"});
    CHECK(dd.column("flat").codes == std::vector<std::int32_t>(8, 0));
    CHECK(dd.column("b").codes == d.column("b").codes);
    CHECK(dd.column("b").labels == d.column("b").levels);
    CHECK(cut_points_json(dd).contains("x"));
    CHECK_FALSE(cut_points_json(dd).contains("b"));
}

TEST_CASE("discretization round trip and balance", "[tabular][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        std::vector<double> x(300);
        for (auto& v : x) v = std::round(rng.normal() * 4.0) / 2.0;  // many ties
        const auto cuts = compute_cut_points(x, {BinningMethod::EqualFrequency, 5});
        std::vector<int> pop(cuts.size() + 1, 0);
        for (double v : x) {
            const auto b = static_cast<std::size_t>(bin_of(cuts, v));
            if (b > 0) CHECK(v > cuts[b - 1]);
            if (b < cuts.size()) CHECK(v <= cuts[b]);
            ++pop[b];
        }
        for (int p : pop) CHECK(p > 0);
    }
}

TEST_CASE("one-hot encoding", "[tabular]") {
    const Dataset d({Column::categorical("color", FeatureKind::Nominal, {"B", "A", "C", "A"}),
                     Column::categorical("flag", FeatureKind::Binary, {"0", "1", "1", "0"}),
                     Column::continuous("z", {0.5, 1.5, 2.5, 3.5})},
                    {0, 1, 0, 1});
    const auto m = one_hot(d, {"color", "flag", "z"});
    CHECK(m.x.cols() == 2 + 1 + 1);
    CHECK(m.x.rows() == 4);
    CHECK(m.column_names == std::vector<std::string>{"color=B", "color=C", "flag", "z"});
    CHECK(m.column_feature == std::vector<std::size_t>{0, 0, 1, 2});
    CHECK(m.x(0, 0) == 1.0);
    CHECK(m.x(2, 1) == 1.0);
    CHECK(m.x(1, 0) + m.x(1, 1) == 0.0);
    CHECK(m.x(1, 2) == 1.0);

    const auto empty = one_hot(d, {});
    CHECK(empty.x.cols() == 0);
    CHECK(empty.x.rows() == 4);
    CHECK(code_of([&] { one_hot(d, {"nope"}); }) == ErrorCode::UnknownFeature);
}
