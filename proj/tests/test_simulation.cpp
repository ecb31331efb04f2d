#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "funcirc/errors.hpp"
#include "funcirc/simulation.hpp"
#include "test_support.hpp"

using namespace funcirc;
using std::numbers::pi;

TEST_CASE("regression_truth") {
    CHECK(regression_truth_from_integral(RegressionKind::r1, 2.5).radians() ==
          doctest::Approx(0.8760580505981934).epsilon(1e-14));
    CHECK(regression_truth_from_integral(RegressionKind::r2, 2.5).radians() ==
          doctest::Approx(2.4188584057763776).epsilon(1e-14));
    CHECK(regression_truth_from_integral(RegressionKind::r2, 0.0).radians() ==
          doctest::Approx(std::fmod(1.25 * pi, 2 * pi)).epsilon(1e-14));
    CHECK(regression_truth_from_integral(RegressionKind::r1, 0.0).radians() == doctest::Approx(pi / 2));
    CHECK_THROWS_AS(regression_truth_from_integral(RegressionKind::r2, 2.6), InvalidArgument);
    CHECK_THROWS_AS(regression_truth_from_integral(RegressionKind::r2, -3.4), InvalidArgument);

    auto g = Grid::uniform(3);
    const Curve c(g, {2.5, 2.5, 2.5});
    CHECK(regression_truth(RegressionKind::r1, c).radians() == doctest::Approx(0.8760580505981934));
    CHECK(parse_regression_kind("r2") == RegressionKind::r2);
    CHECK_THROWS_AS(parse_regression_kind("r3"), InvalidArgument);
}

TEST_CASE("config validation") {
    ScenarioConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.n = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.kappa = -1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.grid_size = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("generate_dataset") {
    ScenarioConfig cfg;
    cfg.n = 30;
    Rng a(11), b(11);
    const SimulatedSample s1 = generate_dataset(cfg, a);
    const SimulatedSample s2 = generate_dataset(cfg, b);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        REQUIRE(s1.data.responses()[i] == s2.data.responses()[i]);
        REQUIRE(std::ranges::equal(s1.data.curves()[i].values(), s2.data.curves()[i].values()));
        const double integral = integrate_curve(s1.data.curves()[i]);
        REQUIRE(integral >= 0.0);
        REQUIRE(integral <= 2.5 + 1e-9);
        REQUIRE(s1.truth[i] == regression_truth(cfg.regression_kind, s1.data.curves()[i]));
    }
    CHECK(s1.data.grid()->size() == 101);

    cfg.kappa = 1e6;
    Rng c(12);
    const SimulatedSample quiet = generate_dataset(cfg, c);
    CHECK(case_error(quiet.data.responses(), quiet.truth) < 1e-5);

    cfg.kappa = 5;
    cfg.n = 10000;
    cfg.regression_kind = RegressionKind::r2;
    cfg.grid_size = 11;
    Rng e(13);
    const SimulatedSample noisy = generate_dataset(cfg, e);
    const double expected = 1.0 - testing::bessel_ratio(5.0);
    CHECK(expected == doctest::Approx(0.1066169).epsilon(1e-6));
    CHECK(std::fabs(case_error(noisy.data.responses(), noisy.truth) - expected) < 0.01);
}

TEST_CASE("replicates") {
    ScenarioConfig cfg;
    cfg.n = 30;
    cfg.replicates = 6;
    cfg.seed = 3;
    BandwidthGridParams grid;
    grid.size = 10;
    for (EstimatorMode mode : {EstimatorMode::nw, EstimatorMode::knn}) {
        cfg.estimator = mode;
        const AggregateRow row = run_replicates(cfg, grid, 2);
        REQUIRE(row.replicates.size() == 6);
        for (const ReplicateResult& r : row.replicates) {
            if (!r.excluded) {
                REQUIRE(r.case_oracle <= r.case_cv);
            }
        }
        CHECK(row.mean_case_oracle <= row.mean_case_cv);
        const AggregateRow again = run_replicates(cfg, grid, 1);
        CHECK(again.mean_case_cv == row.mean_case_cv);
        CHECK(again.mean_case_oracle == row.mean_case_oracle);
        const ReplicateResult single = run_replicate(cfg, grid, 4);
        CHECK(single.case_cv == row.replicates[4].case_cv);
        CHECK(single.param_cv == row.replicates[4].param_cv);
    }
}

TEST_CASE("verify_variance_identity") {
    const auto quiet = verify_variance_identity(1e6, Angle::from_radians(1.0), 10000);
    CHECK(quiet.sigma1_sq < 1e-5);
    CHECK(quiet.sigma2_sq < 1e-5);
    CHECK(quiet.s1_sq < 1e-5);
    CHECK(quiet.s2_sq < 1e-5);

    for (double kappa : {0.5, 2.0, 5.0, 10.0}) {
        for (double dir : {0.0, 1.0, 4.0}) {
            const auto d = verify_variance_identity(kappa, Angle::from_radians(dir), 20000, 9);
            REQUIRE(d.gap < 4 * d.gap_se);
        }
    }

    const auto d = verify_variance_identity(5.0, Angle::from_radians(pi / 3), 100000, 2);
    const double sigma1 = (1.0 - testing::bessel_i(2, 5.0) / testing::bessel_i(0, 5.0)) / 2.0;
    CHECK(sigma1 == doctest::Approx(0.178677).epsilon(1e-5));
    CHECK(std::fabs(d.sigma1_sq - sigma1) < 0.01);
    CHECK_THROWS_AS(verify_variance_identity(5.0, Angle{}, 9999), InvalidArgument);
}

TEST_CASE("standardized_error_sample") {
    ScenarioConfig cfg;
    cfg.n = 60;
    cfg.kernel = Kernel::uniform;
    cfg.grid_size = 21;
    const Curve chi = simulate_curve(0.5, Grid::uniform(cfg.grid_size));
    const StandardizedErrors s = standardized_error_sample(cfg, chi, 10);
    CHECK(s.values.size() + s.degenerate == 10);
    for (double v : s.values) {
        CHECK(std::isfinite(v));
    }
    cfg.kernel = Kernel::quadratic;
    CHECK_THROWS_AS(standardized_error_sample(cfg, chi, 10), UnsupportedKernel);
}

TEST_CASE("parse_scenario") {
    const auto j = nlohmann::json::parse(R"({
        "regression_kind": ["r1", "r2"], "n": [50, 100], "kappa": 5, "replicates": 7,
        "grid_size": 51, "seed": 9, "estimator": "knn", "kernel": "uniform",
        "bandwidth_grid": {"size": 12, "lo_q": 0.1, "hi_q": 0.9}})");
    const Scenario s = parse_scenario(j);
    REQUIRE(s.cells.size() == 4);
    CHECK(s.grid.size == 12);
    CHECK(s.grid.lo_q == 0.1);
    for (const ScenarioConfig& c : s.cells) {
        CHECK(c.replicates == 7);
        CHECK(c.grid_size == 51);
        CHECK(c.seed == 9);
        CHECK(c.estimator == EstimatorMode::knn);
        CHECK(c.kernel == Kernel::uniform);
    }
    CHECK_THROWS_AS(parse_scenario(nlohmann::json::parse(R"({"n": 50, "bogus": 1})")), FormatError);
    CHECK_THROWS_AS(parse_scenario(nlohmann::json::parse(R"({"n": 1})")), FormatError);
    CHECK_THROWS_AS(parse_scenario(nlohmann::json::parse(R"({"n": "fifty"})")), FormatError);
    CHECK(parse_scenario(nlohmann::json::object()).cells.size() == 1);

    std::ostringstream out;
    write_results_header(out);
    AggregateRow row;
    row.config = s.cells.front();
    row.mean_case_cv = 0.5;
    write_results_row(out, row);
    CHECK(out.str().rfind("kind,estimator,n,kappa,replicates,mean_case_cv,mean_case_oracle,excluded\n", 0) == 0);
}
