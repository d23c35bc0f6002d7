#include "catch_amalgamated.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>

#include "autostrat/error.hpp"
#include "autostrat/random.hpp"
#include "autostrat/wrapper.hpp"

using namespace autostrat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXd random_design(Rng& rng, std::size_t n, std::size_t p) {
    Eigen::MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("exact linear fit", "[wrapper]") {
    Eigen::MatrixXd x(6, 1);
    std::vector<double> y(6);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = i;
        y[i] = 2.0 * i + 1.0;
    }
    const auto fit = ols_fit(x, y);
    CHECK_THAT(fit.coefficients[0], WithinAbs(2.0, 1e-12));
    CHECK_THAT(fit.intercept, WithinAbs(1.0, 1e-12));
    CHECK_THAT(fit.r_squared, WithinAbs(1.0, 1e-12));
    CHECK(fit.residual_dof == 4);
    CHECK_FALSE(fit.regularized);
}

TEST_CASE("noise coefficients are rarely significant", "[wrapper]") {
    int insignificant = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(55, {seed}));
        const auto x = random_design(rng, 1000, 1);
        std::vector<double> y(1000);
        for (auto& v : y) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
        insignificant += ols_fit(x, y).p_values[0] > 0.05;
    }
    CHECK(insignificant >= 90);
}

TEST_CASE("duplicated column takes the regularized path", "[wrapper]") {
    Rng rng(8);
    Eigen::MatrixXd x = random_design(rng, 100, 2);
    Eigen::MatrixXd dup(100, 3);
    dup << x, x.col(0);
    std::vector<double> y(100);
    for (int i = 0; i < 100; ++i) y[i] = x(i, 0) + rng.normal();
    const auto fit = ols_fit(dup, y);
    CHECK(fit.regularized);
    CHECK(fit.coefficients.size() == 3);
    for (double p : fit.p_values) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    // the shared effect splits between the copies
    CHECK_THAT(fit.coefficients[0] + fit.coefficients[2], WithinAbs(ols_fit(x, y).coefficients[0], 1e-4));
}

TEST_CASE("ols invariants", "[wrapper][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 80, p = 4;
        const auto x = random_design(rng, n, p);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = 0.5 * x(i, 0) - 0.2 * x(i, 2) + rng.normal();
        const auto fit = ols_fit(x, y);
        REQUIRE_FALSE(fit.regularized);
        REQUIRE(fit.p_values.size() == p);

        // residuals orthogonal to every design column
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double pred = fit.intercept;
            for (std::size_t j = 0; j < p; ++j) pred += fit.coefficients[j] * x(i, j);
            r(i) = y[i] - pred;
        }
        const double bound = 1e-8 * static_cast<double>(n) * x.cwiseAbs().maxCoeff();
        CHECK((x.transpose() * r).cwiseAbs().maxCoeff() <= bound);
        CHECK(std::abs(r.sum()) <= bound);

        // scaling a column scales its coefficient inversely, p unchanged
        Eigen::MatrixXd scaled = x;
        scaled.col(1) *= 7.5;
        const auto fit2 = ols_fit(scaled, y);
        CHECK_THAT(fit2.coefficients[1] * 7.5, WithinAbs(fit.coefficients[1], 1e-10));
        for (std::size_t j = 0; j < p; ++j) CHECK_THAT(fit2.p_values[j], WithinAbs(fit.p_values[j], 1e-9));

        // p-values agree with an independent t distribution
        boost::math::students_t dist(fit.residual_dof);
        for (std::size_t j = 0; j < p; ++j) {
            const double want = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(fit.t_stats[j])));
            CHECK_THAT(fit.p_values[j], WithinAbs(want, 1e-9));
        }
    }
}

TEST_CASE("ols rejects too few rows", "[wrapper]") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 3, 4, 5, 7;
    CHECK_THROWS_AS(ols_fit(x, std::vector<double>{1, 0, 1}), Error);
}

TEST_CASE("backward elimination", "[wrapper]") {
    Rng rng(31);
    const std::size_t n = 2000;
    std::vector<double> f1(n), f2(n), f3(n);
    std::vector<std::string> g(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        f1[i] = rng.normal();
        f2[i] = rng.normal();
        f3[i] = rng.normal();
        g[i] = std::string(1, static_cast<char>('a' + rng.below(3)));
        y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-2.0 * f1[i] - (g[i] == "c" ? 1.0 : 0.0))));
    }
    const Dataset d({Column::continuous("f1", f1), Column::continuous("f2", f2), Column::continuous("f3", f3),
                     Column::categorical("g", FeatureKind::Nominal, g)},
                    y);

    SECTION("trace shape") {
        const auto trace = backward_eliminate(d, {"f1", "f2", "f3", "g"}, 2);
        CHECK(trace.steps.size() == 2);
        CHECK(trace.final_features.size() == 2);
        std::set<std::string> final(trace.final_features.begin(), trace.final_features.end());
        CHECK(final == std::set<std::string>{"f1", "g"});
        CHECK(trace.final_features.front() == "f1");
        CHECK(trace.steps[0].survivors.size() == 3);
        CHECK(trace.steps[1].survivors.size() == 2);
        CHECK(trace.survivors_at(4) == std::vector<std::string>{"f1", "f2", "f3", "g"});
        CHECK(trace.survivors_at(2) == std::vector<std::string>{"f1", "g"});
    }
    SECTION("k equal to the candidate count takes no steps") {
        const auto trace = backward_eliminate(d, {"f1", "f2"}, 2);
        CHECK(trace.steps.empty());
        CHECK(trace.final_features.size() == 2);
    }
    SECTION("k above the candidate count") {
        try {
            backward_eliminate(d, {"f1", "f2"}, 3);
            FAIL("expected KTooLarge");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::KTooLarge);
        }
    }
    SECTION("identical noise features drop the name-later copy") {
        const Dataset twin({Column::continuous("f1", f1), Column::continuous("n_a", f2), Column::continuous("n_b", f2)},
                           y);
        const auto trace = backward_eliminate(twin, {"f1", "n_a", "n_b"}, 2);
        REQUIRE(trace.steps.size() == 1);
        CHECK(trace.steps[0].dropped == "n_b");
    }
}
