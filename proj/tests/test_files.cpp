#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "swarm/errors.hpp"
#include "swarm/game_file.hpp"
#include "swarm/scenario.hpp"

using namespace swarm;
using namespace swarm::sim;
using nlohmann::json;

namespace {

json base_scenario() {
  return json::parse(R"({
    "schema_version": 1,
    "seed": 11,
    "duration_ms": 30000,
    "nodes": [
      {
        "name_prefix": "worker",
        "count": 3,
        "behavior": "honest",
        "skills": ["summarize"],
        "quality": {"summarize": {"mean": [0.6, 0.9], "success_rate": "mean"}}
      }
    ],
    "workload": {
      "arrival_rate_per_s": 5.0,
      "skills": {"summarize": 1.0},
      "pool_credits": 1.0,
      "redundancy": {"1": 1.0}
    }
  })");
}

}  // namespace

TEST_CASE("scenario round trip preserves the spec") {
  ScenarioSpec spec = ScenarioSpec::from_json(base_scenario());
  CHECK(spec.groups.size() == 1);
  CHECK(spec.groups[0].count == 3);
  CHECK(spec.groups[0].quality.at("summarize").mean.lo == doctest::Approx(0.6));
  CHECK(spec.groups[0].quality.at("summarize").mean.hi == doctest::Approx(0.9));
  CHECK(spec.groups[0].quality.at("summarize").success_rate.lo < 0);  // tracks mean

  ScenarioSpec again = ScenarioSpec::from_json(spec.to_json());
  CHECK(again.to_json() == spec.to_json());
}

TEST_CASE("spread resolution is linear across the group") {
  Spread s{0.5, 0.9};
  CHECK(s.resolve(0, 5) == doctest::Approx(0.5));
  CHECK(s.resolve(4, 5) == doctest::Approx(0.9));
  CHECK(s.resolve(2, 5) == doctest::Approx(0.7));
  CHECK(Spread{0.3, 0.3}.resolve(0, 1) == doctest::Approx(0.3));
}

TEST_CASE("validation errors carry field paths") {
  auto expect_path = [](json j, const std::string& fragment) {
    try {
      ScenarioSpec::from_json(j);
      FAIL_CHECK("expected ValidationError mentioning " << fragment);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };

  json j = base_scenario();
  j["duration_ms"] = -5;
  expect_path(j, "duration_ms");

  j = base_scenario();
  j["nodes"][0]["count"] = 0;
  expect_path(j, "nodes[0].count");

  j = base_scenario();
  j["nodes"][0]["behavior"] = "mystery";
  expect_path(j, "nodes[0].behavior");

  j = base_scenario();
  j["nodes"][0]["skills"] = json::array();
  expect_path(j, "nodes[0].skills");

  j = base_scenario();
  j["workload"]["arrival_rate_per_s"] = -1.0;
  expect_path(j, "workload.arrival_rate_per_s");

  j = base_scenario();
  j["params"] = {{"alpha", 1.5}};
  expect_path(j, "params.alpha");

  j = base_scenario();
  j["params"] = {{"weights", {{"w1", 0.9}, {"w2", 0.9}, {"w3", 0.0}, {"w4", 0.0}}}};
  expect_path(j, "params.weights");

  j = base_scenario();
  j["nodes"][0]["typo_field"] = 1;
  expect_path(j, "typo_field");

  j = base_scenario();
  j["churn"] = {{"leave_rate", 0.1}, {"replace", true}};
  expect_path(j, "churn.template_group");
}

TEST_CASE("latency matrix must match the node count and forbid churn") {
  json j = base_scenario();
  j["latency"] = {{"matrix", {{0, 1}, {1, 0}}}};  // 2x2 for 3 nodes
  CHECK_THROWS_AS(ScenarioSpec::from_json(j), ValidationError);

  j["latency"] = {{"matrix", {{0, 1, 2}, {1, 0, 3}, {2, 3, 0}}}};
  CHECK_NOTHROW(ScenarioSpec::from_json(j));
}

TEST_CASE("table game: hand values and completeness check") {
  CoalitionGame game = parse_game_json(R"({
    "members": ["n1", "n2"],
    "table": {"": 0.0, "n1": 0.5, "n2": 0.3, "n1,n2": 1.0}
  })");
  CHECK(game.size() == 2);
  CHECK(game.fn(0) == 0.0);
  CHECK(game.fn(0b01) == doctest::Approx(0.5));
  CHECK(game.fn(0b10) == doctest::Approx(0.3));
  CHECK(game.fn(0b11) == doctest::Approx(1.0));

  CHECK_THROWS_AS(parse_game_json(R"({
    "members": ["n1", "n2"],
    "table": {"": 0.0, "n1": 0.5, "n1,n2": 1.0}
  })"),
                  ValidationError);  // missing subset "n2"

  CHECK_THROWS_AS(parse_game_json(R"({
    "members": ["n1"],
    "table": {"": 0.25, "n1": 0.5}
  })"),
                  ValidationError);  // empty coalition must be 0
}

TEST_CASE("model games parse and evaluate") {
  CoalitionGame pipeline = parse_game_json(R"({
    "model": "pipeline", "observed_quality": 0.9, "time_shares": [0.5, 0.3, 0.2]
  })");
  CHECK(pipeline.size() == 3);
  CHECK(pipeline.fn(0b101) == doctest::Approx(0.9 * 0.7));

  CoalitionGame ensemble = parse_game_json(R"({
    "model": "ensemble", "observed_quality": 1.0, "accuracies": [1, 1], "gamma": 0.5
  })");
  CHECK(ensemble.fn(0b01) == doctest::Approx(std::sqrt(0.5)));

  CoalitionGame single = parse_game_json(R"({
    "model": "single", "observed_quality": 0.7
  })");
  CHECK(single.fn(1) == doctest::Approx(0.7));

  CHECK_THROWS_AS(parse_game_json(R"({"model": "unknown"})"), ValidationError);
}
