#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>

#include "autostrat/error.hpp"
#include "autostrat/filters.hpp"
#include "autostrat/random.hpp"
#include "support.hpp"

using namespace autostrat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::pair<std::vector<std::int32_t>, std::vector<std::int32_t>> expand_table(const ContingencyTable& t) {
    std::vector<std::int32_t> a, b;
    for (std::size_t r = 0; r < t.size(); ++r)
        for (std::size_t c = 0; c < t[r].size(); ++c)
            for (int k = 0; k < static_cast<int>(t[r][c]); ++k) a.push_back(static_cast<int>(r)), b.push_back(static_cast<int>(c));
    return {a, b};
}

std::vector<double> normals(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("pearson hand values", "[filters]") {
    const std::vector<double> x{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1};
    CHECK_THAT(*pearson(x, up), WithinAbs(1.0, 1e-12));
    CHECK_THAT(*pearson(x, down), WithinAbs(-1.0, 1e-12));
    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
    CHECK_THAT(*pearson(a, b), WithinAbs(0.8, 1e-12));
    const std::vector<double> flat{5, 5, 5, 5};
    CHECK_FALSE(pearson(a, flat).has_value());
}

TEST_CASE("pearson is symmetric and affine invariant", "[filters][property]") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(seed);
        auto x = normals(rng, 40), y = normals(rng, 40);
        const double r = *pearson(x, y);
        CHECK_THAT(*pearson(y, x), WithinAbs(r, 1e-12));
        std::vector<double> ax(x.size());
        const double scale = 0.1 + 10.0 * rng.uniform(), shift = rng.normal() * 50.0;
        std::transform(x.begin(), x.end(), ax.begin(), [&](double v) { return scale * v + shift; });
        CHECK_THAT(*pearson(ax, y), WithinAbs(r, 1e-10));
        CHECK(std::abs(r) <= 1.0);
    }
}

TEST_CASE("point-biserial correlation", "[filters]") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    CHECK_THAT(*feature_outcome_corr(x, y), WithinAbs(2.0 / std::sqrt(5.0), 1e-12));
    const std::vector<double> same{0, 1, 1, 0};
    const std::vector<std::uint8_t> ys{0, 1, 1, 0};
    CHECK_THAT(*feature_outcome_corr(same, ys), WithinAbs(1.0, 1e-12));
}

TEST_CASE("variance inflation factor", "[filters]") {
    Rng rng(11);
    const std::size_t n = 400;
    auto f1 = normals(rng, n), f2 = normals(rng, n);
    std::vector<double> f3(n);
    for (std::size_t i = 0; i < n; ++i) f3[i] = f1[i] + f2[i] + 0.01 * rng.normal();
    const std::vector<std::uint8_t> y(n, 0);

    SECTION("orthogonal columns give 1") {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = (i % 2) ? 1.0 : -1.0;
            b[i] = ((i / 2) % 2) ? 1.0 : -1.0;
        }
        const Dataset d({Column::continuous("a", a), Column::continuous("b", b)}, y);
        CHECK_THAT(vif(d, "a"), WithinAbs(1.0, 1e-12));
    }
    SECTION("duplicated column is infinite") {
        const Dataset d({Column::continuous("f1", f1), Column::continuous("f1b", f1), Column::continuous("f2", f2)}, y);
        CHECK(std::isinf(vif(d, "f1")));
        CHECK(std::isinf(vif(d, "f1b")));
    }
    SECTION("collinear trio exceeds the threshold") {
        const Dataset d({Column::continuous("f1", f1), Column::continuous("f2", f2), Column::continuous("f3", f3)}, y);
        CHECK(vif(d, "f3") > 10.0);
        CHECK(vif(d, "f3") > 1000.0);
    }
    SECTION("too few rows") {
        const Dataset d({Column::continuous("a", {1, 2}), Column::continuous("b", {3, 1})}, {0, 1});
        CHECK_THROWS_AS(vif(d, "a"), Error);
    }
}

TEST_CASE("chi-square hand values", "[filters]") {
    const ContingencyTable t{{10, 20}, {20, 10}};
    const auto r = chi_square(t);
    CHECK_THAT(r.chi2, WithinAbs(20.0 / 3.0, 1e-12));
    CHECK(r.dof == 1);
    CHECK_THAT(r.p_value, WithinAbs(0.009823274507519235, 1e-12));
    CHECK_THAT(cramers_v(r), WithinAbs(1.0 / 3.0, 1e-12));

    const auto [a, b] = expand_table(t);
    CHECK_THAT(chi_square(a, b).chi2, WithinAbs(20.0 / 3.0, 1e-12));
    CHECK_THAT(cramers_v(a, b), WithinAbs(1.0 / 3.0, 1e-12));

    std::vector<std::int32_t> same(60);
    for (int i = 0; i < 60; ++i) same[i] = i % 2;
    const auto perfect = chi_square(same, same);
    CHECK_THAT(perfect.chi2, WithinAbs(60.0, 1e-9));
    CHECK(perfect.p_value < 1e-13);
    CHECK_THAT(cramers_v(same, same), WithinAbs(1.0, 1e-12));
}

TEST_CASE("chi-square drops empty margins and rejects degenerate tables", "[filters]") {
    const ContingencyTable padded{{10, 0, 20}, {0, 0, 0}, {20, 0, 10}};
    const auto r = chi_square(padded);
    CHECK(r.rows == 2);
    CHECK(r.cols == 2);
    CHECK_THAT(r.chi2, WithinAbs(20.0 / 3.0, 1e-12));
    CHECK_THROWS_AS(chi_square(ContingencyTable{{3, 4}}), Error);
}

TEST_CASE("chi-square is near its dof on independent draws", "[filters][property]") {
    double total = 0.0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(derive_seed(3, {static_cast<std::uint64_t>(rep)}));
        std::vector<std::int32_t> a(300), b(300);
        for (auto& v : a) v = static_cast<int>(rng.below(3));
        for (auto& v : b) v = static_cast<int>(rng.below(4));
        const auto r = chi_square(a, b);
        REQUIRE(r.dof == 6);
        total += r.chi2;
        CHECK(cramers_v(r) >= 0.0);
        CHECK(cramers_v(r) <= 1.0);
    }
    CHECK_THAT(total / reps, WithinAbs(6.0, 0.6));
}

TEST_CASE("mutual information", "[filters]") {
    // plug-in value for [[4,1],[1,4]]: 0.8 ln 1.6 + 0.2 ln 0.4
    const ContingencyTable joint{{4, 1}, {1, 4}};
    CHECK_THAT(mutual_information(joint, false), WithinAbs(0.19274475702175753, 1e-12));

    const std::vector<std::int32_t> f{0, 1, 0, 1, 1, 0};
    const std::vector<std::uint8_t> y{0, 1, 0, 1, 1, 0};
    CHECK_THAT(mutual_information(f, y, true), WithinAbs(1.0, 1e-12));
    CHECK_THAT(mutual_information(f, y, false), WithinAbs(std::log(2.0), 1e-12));

    const ContingencyTable product{{2, 4}, {3, 6}};
    CHECK_THAT(mutual_information(product, false), WithinAbs(0.0, 1e-12));
    CHECK_THAT(mutual_information(product, true), WithinAbs(0.0, 1e-12));
}

TEST_CASE("filter cascade", "[filters]") {
    Rng rng(21);
    const std::size_t n = 600;
    auto f1 = normals(rng, n), f2 = normals(rng, n), g = normals(rng, n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-f1[i] - 0.5 * f2[i])));

    SECTION("exact duplicate keeps the alphabetically first") {
        const Dataset d({Column::continuous("b_dup", f1), Column::continuous("a_orig", f1), Column::continuous("g", g)}, y);
        const auto diag = filter_select(d);
        const auto kept = diag.kept();
        CHECK(std::count(kept.begin(), kept.end(), "a_orig") == 1);
        CHECK(std::count(kept.begin(), kept.end(), "b_dup") == 0);
        CHECK(kept.size() == 2);
    }
    SECTION("independent features all survive") {
        const Dataset d({Column::continuous("f1", f1), Column::continuous("f2", f2)}, y);
        const auto diag = filter_select(d);
        CHECK(diag.dropped.empty());
        CHECK(diag.kept().size() == 2);
    }
    SECTION("collinear trio loses its max-VIF member") {
        std::vector<double> f3(n);
        for (std::size_t i = 0; i < n; ++i) f3[i] = f1[i] + f2[i] + 0.01 * rng.normal();
        const Dataset d({Column::continuous("f1", f1), Column::continuous("f2", f2), Column::continuous("f3", f3),
                         Column::continuous("g", g)},
                        y);
        FilterThresholds t;
        t.rho_max = 0.99;
        const auto diag = filter_select(d, t);
        REQUIRE(diag.dropped.size() == 1);
        CHECK(diag.dropped.front().feature == "f3");
    }
    SECTION("strongly associated categoricals keep the more informative member") {
        std::vector<std::string> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = y[i] ? "yes" : "no";
            b[i] = rng.bernoulli(0.97) ? a[i] : (a[i] == "yes" ? "no" : "yes");
        }
        const Dataset d({Column::categorical("a", FeatureKind::Binary, a), Column::categorical("b", FeatureKind::Binary, b),
                         Column::continuous("g", g)},
                        y);
        const auto kept = filter_select(d).kept();
        CHECK(std::count(kept.begin(), kept.end(), "a") == 1);
        CHECK(std::count(kept.begin(), kept.end(), "b") == 0);
    }
}

TEST_CASE("filter thresholds validate", "[filters]") {
    FilterThresholds t;
    CHECK_NOTHROW(t.validate());
    t.cramers_v_max = 1.5;
    CHECK_THROWS_AS(t.validate(), Error);
    const auto round = FilterThresholds::from_json(FilterThresholds{}.to_json());
    CHECK(round.vif_max == FilterThresholds{}.vif_max);
}
