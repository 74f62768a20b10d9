#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swarm/bytes.hpp"
#include "swarm/rng.hpp"

namespace swarm {

struct UtilityWeights {
  double w1 = 0.4;  // capability match
  double w2 = 0.2;  // idle fraction
  double w3 = 0.2;  // latency headroom
  double w4 = 0.2;  // trust
  double d_max_ms = 500.0;

  void validate() const;  // weights sum to 1 (1e-9), d_max > 0
};

struct CandidateObservation {
  Bytes32 node_id{};
  bool has_skill = false;
  double load = 0.0;    // in [0,1]
  double rtt_ms = 0.0;  // >= 0
  double trust = 0.0;   // in [0,1]

  void validate() const;
};

/// Candidate score: w1*[skill] + w2*(1-load) + w3*(1-min(rtt,dmax)/dmax)
/// + w4*trust. Latency above the ceiling clamps its term to zero, keeping
/// the result in [0,1] for normalized weights. The formula itself accepts
/// unnormalized weights; validation happens at selection time.
double utility(const CandidateObservation& c, const UtilityWeights& w);

/// Indices of candidates in descending-utility order. Exact utility ties
/// are permuted uniformly at random.
std::vector<std::size_t> rank_candidates(std::span<const CandidateObservation> candidates,
                                         const UtilityWeights& w, Rng& rng);

/// Full preference list: head is the dispatch target, the rest is the
/// fallback chain. Throws NoCandidateError on an empty set.
std::vector<CandidateObservation> select(std::vector<CandidateObservation> candidates,
                                         const UtilityWeights& w, Rng& rng);

/// First min(k, n) node ids of the select ordering.
std::vector<Bytes32> select_top_k(std::span<const CandidateObservation> candidates,
                                  const UtilityWeights& w, int k, Rng& rng);

struct RouterConfig {
  UtilityWeights weights{};
  int max_attempts = 3;
  // Eq-style scoring keeps skill-less candidates with an indicator of 0;
  // in practice dispatching to them is useless, so they are filtered
  // before scoring unless this is disabled.
  bool require_skill = true;

  void validate() const;
};

enum class AttemptOutcome { Success, Failure, Timeout };

struct AttemptRecord {
  Bytes32 node_id{};
  AttemptOutcome outcome = AttemptOutcome::Failure;
  double quality = 0.0;  // meaningful on success
  std::int64_t completed_at = 0;
};

enum class DispatchStatus { Success, NoCandidates, Exhausted };

struct RouterTask {
  std::uint64_t task_id = 0;
  std::string skill;
  int redundancy_k = 1;
};

struct DispatchRecord {
  std::uint64_t task_id = 0;
  DispatchStatus status = DispatchStatus::NoCandidates;
  std::vector<Bytes32> chosen;           // attempted nodes, in attempt order
  std::vector<AttemptRecord> attempts;   // one per attempted node
  std::int64_t completion_time_ms = 0;
};

/// Environment the router dispatches through: candidate discovery and
/// attempt execution. The simulator provides the event-driven version;
/// tests provide scripted fakes.
class DispatchEnv {
 public:
  virtual ~DispatchEnv() = default;
  virtual std::vector<CandidateObservation> candidates(const std::string& skill) = 0;
  virtual AttemptRecord attempt(const Bytes32& node_id, const RouterTask& task) = 0;
};

/// Synchronous dispatch: tries the preference list head-first until success
/// or max_attempts; with redundancy_k > 1 dispatches to the whole top-K and
/// records every outcome. Stateless: identical observations and seeds give
/// identical records.
DispatchRecord dispatch(const RouterTask& task, DispatchEnv& env,
                        const RouterConfig& config, Rng& rng);

}  // namespace swarm
