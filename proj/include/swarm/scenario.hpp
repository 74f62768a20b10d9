#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarm/credit.hpp"
#include "swarm/registry.hpp"
#include "swarm/router.hpp"

namespace swarm::sim {

inline constexpr int kScenarioSchemaVersion = 1;

enum class Behavior { Honest, NeverAccept, FreeRider, Sybil, CollusionRing };

std::string behavior_name(Behavior b);
std::optional<Behavior> behavior_from_name(const std::string& name);

/// A numeric field that may be a single value or a [lo,hi] range spread
/// linearly across the nodes of a group.
struct Spread {
  double lo = 0.0;
  double hi = 0.0;
  double resolve(int index, int count) const {
    if (count <= 1) return lo;
    return lo + (hi - lo) * static_cast<double>(index) / (count - 1);
  }
};

struct QualityProfileSpec {
  Spread mean{0.8, 0.8};
  double jitter = 0.05;
  // probability an accepted attempt succeeds; negative means "track mean"
  Spread success_rate{-1.0, -1.0};
  double service_median_ms = 400.0;
  double service_sigma = 0.4;
};

/// Resolved per-node quality for one skill.
struct QualityProfile {
  double mean = 0.8;
  double jitter = 0.05;
  double success_rate = 0.8;
  double service_median_ms = 400.0;
  double service_sigma = 0.4;
};

struct NodeGroupSpec {
  std::string name_prefix = "node";
  int count = 1;
  Behavior behavior = Behavior::Honest;
  std::vector<std::string> skills;
  ResourceVector resources{8192, 0.5, 100.0};
  int capacity = 4;
  std::string origin;  // empty: one origin per node
  bool genesis_unlocked = false;
  double initial_credit = 0.0;
  std::int64_t join_time_ms = 0;
  std::map<std::string, QualityProfileSpec> quality;
  // adversary knobs
  std::int64_t submit_period_ms = 5000;       // free riders / sybils
  std::int64_t fabrication_period_ms = 2000;  // collusion ring
  double fabrication_pool = 1.0;              // credits per fabricated record
  double compromised_fraction = 0.0;          // honest submitters the ring owns
};

struct WorkloadSpec {
  double arrival_rate_per_s = 0.0;
  std::map<std::string, double> skill_weights;
  double pool_credits = 1.0;
  std::optional<std::pair<double, double>> pool_uniform;
  std::map<int, double> redundancy_weights = {{1, 1.0}};
  // funded_uniform: uniform over honest nodes that can pay (or hold a
  // grant); uniform: uniform over all honest nodes, refusals possible
  std::string submitter_policy = "funded_uniform";
};

struct LatencySpec {
  double uniform_lo_ms = 5.0;
  double uniform_hi_ms = 50.0;
  std::vector<std::vector<double>> matrix;  // non-empty overrides uniform
};

struct ChurnSpec {
  double leave_rate = 0.0;  // per node per refresh period
  double join_rate = 0.0;   // chance of one fresh join per period
  bool replace = false;     // one fresh join per departure
  std::string template_group;  // group cloned for churn joins
};

struct ParamsSpec {
  UtilityWeights weights{};
  double alpha = 0.1;
  DecayParams decay{0.1, 24LL * 3600'000};
  int samples = 100;
  RegistryConfig registry{};
  std::uint32_t puzzle_difficulty = 8;
  double genesis_c0 = 10.0;
  int genesis_k0 = 10;
  int grant_limit_per_origin = 5;
  std::int64_t grant_window_ms = 24LL * 3600'000;
  int max_attempts = 3;
  bool require_skill = true;
  std::int64_t sample_period_ms = 1000;
  double ensemble_gamma = 0.5;
  std::int64_t attempt_timeout_ms = 2000;

  GenesisConfig genesis_config() const;
};

struct ScenarioSpec {
  int schema_version = kScenarioSchemaVersion;
  std::uint64_t seed = 0;
  std::int64_t duration_ms = 60'000;
  std::vector<NodeGroupSpec> groups;
  LatencySpec latency{};
  ChurnSpec churn{};
  WorkloadSpec workload{};
  ParamsSpec params{};

  void validate() const;  // throws ValidationError with a field path
  int total_nodes() const;

  nlohmann::json to_json() const;
  static ScenarioSpec from_json(const nlohmann::json& j);
  static ScenarioSpec load_file(const std::string& path);
  void save_file(const std::string& path) const;
};

}  // namespace swarm::sim
