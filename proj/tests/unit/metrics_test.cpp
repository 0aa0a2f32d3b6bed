#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tkre/metrics.hpp"

using namespace tkre;

TEST_CASE("mse basics") {
  const std::vector<double> y{1.0, 2.0, 3.0};
  REQUIRE(mse(y, y) == 0.0);

  const std::vector<double> yhat{1.0, 2.0, 4.0};
  REQUIRE(mse(y, yhat) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

  // invariant under a common permutation
  const std::vector<double> yp{3.0, 1.0, 2.0};
  const std::vector<double> yhatp{4.0, 1.0, 2.0};
  REQUIRE(mse(y, yhat) == mse(yp, yhatp));

  const std::vector<double> shorter{1.0};
  REQUIRE_THROWS_AS(mse(y, shorter), std::invalid_argument);
  const std::vector<double> empty;
  REQUIRE_THROWS_AS(mse(empty, empty), std::invalid_argument);
}

TEST_CASE("r_squared fixtures are exact") {
  const std::vector<double> y{1.0, 2.0, 3.0};

  const std::vector<double> mean_model{2.0, 2.0, 2.0};
  REQUIRE(std::abs(r_squared(y, mean_model, 2.0) - 0.0) <= 1e-12);

  REQUIRE(std::abs(r_squared(y, y, 2.0) - 1.0) <= 1e-12);

  const std::vector<double> yhat{1.0, 2.0, 4.0};
  REQUIRE(std::abs(r_squared(y, yhat, 2.0) - 0.5) <= 1e-12);
}

TEST_CASE("r_squared can go negative and flags the degenerate case") {
  const std::vector<double> y{1.0, 2.0, 3.0};
  const std::vector<double> awful{10.0, 10.0, 10.0};
  REQUIRE(r_squared(y, awful, 2.0) < 0.0);

  const std::vector<double> constant{5.0, 5.0, 5.0};
  const std::vector<double> anything{1.0, 2.0, 3.0};
  REQUIRE(std::isnan(r_squared(constant, anything, 5.0)));  // sentinel, never silent 0
}

TEST_CASE("r_squared invariances") {
  const std::vector<double> y{0.5, 1.5, 4.0, -2.0};
  const std::vector<double> yhat{0.7, 1.2, 3.5, -1.0};
  const double base = r_squared(y, yhat, 1.0);

  SECTION("shifting everything by a constant") {
    std::vector<double> ys = y, yhs = yhat;
    for (auto& v : ys) v += 100.0;
    for (auto& v : yhs) v += 100.0;
    REQUIRE(r_squared(ys, yhs, 101.0) == Catch::Approx(base).epsilon(1e-12));
  }
  SECTION("common positive rescale") {
    std::vector<double> ys = y, yhs = yhat;
    for (auto& v : ys) v *= 7.0;
    for (auto& v : yhs) v *= 7.0;
    REQUIRE(r_squared(ys, yhs, 7.0) == Catch::Approx(base).epsilon(1e-12));
  }
  SECTION("strictly decreasing in model error") {
    std::vector<double> worse = yhat;
    worse[0] += 1.0;  // strictly larger residual on one row
    REQUIRE(mse(y, worse) > mse(y, yhat));
    REQUIRE(r_squared(y, worse, 1.0) < base);
  }
}

TEST_CASE("aggregate groups by scenario and model") {
  auto make = [](const std::string& scenario, const std::string& model, std::size_t rep,
                 double r2, double m) {
    TrialResult t;
    t.scenario = scenario;
    t.model = model;
    t.replicate = rep;
    t.r2_test = r2;
    t.mse_test = m;
    return t;
  };

  SECTION("single result: mean is the value, sd is zero") {
    const std::vector<TrialResult> one{make("s", "v1", 0, 0.42, 1.5)};
    const auto rows = aggregate(one);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].count == 1);
    REQUIRE(rows[0].r2_mean == 0.42);
    REQUIRE(rows[0].r2_sd == 0.0);
  }
  SECTION("two values average") {
    const std::vector<TrialResult> two{make("s", "v1", 0, 0.4, 1.0),
                                       make("s", "v1", 1, 0.6, 2.0)};
    const auto rows = aggregate(two);
    REQUIRE(rows[0].r2_mean == Catch::Approx(0.5));
    REQUIRE(rows[0].mse_mean == Catch::Approx(1.5));
    REQUIRE(rows[0].r2_min == 0.4);
    REQUIRE(rows[0].r2_max == 0.6);
  }
  SECTION("grouping cardinality and deterministic order") {
    std::vector<TrialResult> many;
    for (const char* model : {"v2", "v1"})
      for (std::size_t rep = 0; rep < 10; ++rep)
        many.push_back(make("cell", model, rep, 0.1 * rep, 1.0));
    const auto rows = aggregate(many);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].model == "v1");  // ordered by group key
    REQUIRE(rows[1].model == "v2");
    REQUIRE(rows[0].count == 10);
  }
  SECTION("NaN r2 rows are counted as undefined, not averaged") {
    std::vector<TrialResult> mixed{make("s", "v1", 0, 0.5, 1.0),
                                   make("s", "v1", 1,
                                        std::numeric_limits<double>::quiet_NaN(), 1.0)};
    const auto rows = aggregate(mixed);
    REQUIRE(rows[0].count == 1);
    REQUIRE(rows[0].undefined == 1);
    REQUIRE(rows[0].r2_mean == 0.5);
  }
  SECTION("empty input is an error") {
    const std::vector<TrialResult> none;
    REQUIRE_THROWS_AS(aggregate(none), std::invalid_argument);
  }
}
