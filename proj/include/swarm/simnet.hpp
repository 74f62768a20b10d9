#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarm/credit.hpp"
#include "swarm/registry.hpp"
#include "swarm/router.hpp"
#include "swarm/scenario.hpp"

namespace swarm::sim {

/// Append-only run log. Each event is one canonical JSON line; the digest
/// is SHA-256 over the line bytes (each line newline-terminated), so two
/// runs match exactly when their logs are byte-identical.
class EventLog {
 public:
  void append(std::int64_t t, const std::string& kind, nlohmann::json payload);
  const std::vector<std::string>& lines() const { return lines_; }
  std::uint64_t next_seq() const { return next_seq_; }
  Bytes32 digest() const;
  void write_to(const std::string& path) const;  // atomic: temp + rename
  static std::vector<std::string> read_lines(const std::string& path);

 private:
  std::vector<std::string> lines_;
  std::uint64_t next_seq_ = 1;
};

/// Per-node series sampled on the metrics grid.
struct NodeSeries {
  std::string name;
  std::string node_hex;
  std::string behavior;
  std::vector<double> balance;  // spendable credits
  std::vector<double> trust;
  std::vector<double> load;       // in-flight / capacity
  std::vector<double> task_share; // cumulative share of served tasks
  std::vector<double> specialization;
  std::vector<double> dispatches;  // cumulative attempts routed to this node
};

struct SwarmMetrics {
  std::vector<std::int64_t> sample_times;
  std::vector<NodeSeries> nodes;
  std::vector<double> gini;
  std::vector<double> mean_specialization;
  std::vector<double> max_load_share;
  double overall_max_load_share = 0.0;
  std::map<std::string, std::int64_t> cold_start_ms;  // node -> join to 1st credit

  std::uint64_t tasks_arrived = 0;
  std::uint64_t tasks_served = 0;
  std::uint64_t tasks_exhausted = 0;
  std::uint64_t tasks_refused = 0;

  std::string to_csv() const;
};

/// Pure function of the log: replays events and samples the series on the
/// period recorded in the run footer.
SwarmMetrics collect_metrics(const EventLog& log);
SwarmMetrics collect_metrics(const std::vector<std::string>& lines);

/// Gini coefficient by the mean-absolute-difference formula; 0 for empty
/// input or an all-zero distribution.
double gini_coefficient(std::vector<double> values);

/// Recomputes every balance from the event log and checks that credit is
/// only ever created by genesis unlocks, grants, and scenario deposits.
struct ConservationReport {
  bool exact = false;
  Credit total_balance = 0;    // replayed final sum
  Credit expected_total = 0;   // initial + unlocked + grant injections
};
ConservationReport conservation_check(const std::vector<std::string>& lines);

struct AccountSnapshot {
  std::string name;
  std::string behavior;
  Credit balance = 0;
  Credit locked = 0;
  bool genesis_unlocked = false;
  double trust = 0.0;
  int grants_used = 0;
  std::uint64_t served = 0;
  std::uint64_t dispatches = 0;
};

/// Candidate table captured for `route explain`.
struct ExplainCapture {
  std::uint64_t task_id = 0;
  std::string skill;
  UtilityWeights weights{};
  struct Row {
    std::string name;
    std::string node_hex;
    bool has_skill = false;
    double load = 0, rtt_ms = 0, trust = 0;
    double score = 0;
    int rank = 0;
    bool chosen = false;
  };
  std::vector<Row> rows;
};

struct SimResult {
  EventLog log;
  SwarmMetrics metrics;
  std::vector<AccountSnapshot> accounts;

  Credit total_balance = 0;
  Credit expected_total = 0;  // initial + unlocked genesis + grant injections
  Credit injected_initial = 0;
  Credit injected_unlocked = 0;
  Credit injected_grants = 0;
  int grants_issued = 0;
  int grants_refused = 0;
  int quarantined = 0;
  std::uint64_t fabrications = 0;

  std::uint64_t tasks_arrived = 0;
  std::uint64_t tasks_served = 0;
  std::uint64_t tasks_exhausted = 0;
  std::uint64_t tasks_refused = 0;

  std::optional<ExplainCapture> explain;
};

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::uint64_t> explain_task_id;
};

/// Executes the full protocol loop on a virtual clock: bootstrap,
/// advertise/refresh, routed dispatch, execution, attribution with
/// countersigning, ledger application, trust decay, churn. Identical spec
/// (and options) -> identical log digest.
SimResult run(const ScenarioSpec& spec, const RunOptions& options = {});

/// The identity a scenario node gets for a given run seed; stable across
/// tools so names printed by one command match another's.
NodeIdentity scenario_node_identity(std::uint64_t seed, const std::string& name);

}  // namespace swarm::sim
