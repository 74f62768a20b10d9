#include "swarm/router.hpp"

#include <algorithm>
#include <cmath>

#include "swarm/errors.hpp"

namespace swarm {

void UtilityWeights::validate() const {
  double sum = w1 + w2 + w3 + w4;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("utility weights must sum to 1");
  }
  if (w1 < 0 || w2 < 0 || w3 < 0 || w4 < 0) {
    throw ValidationError("utility weights must be non-negative");
  }
  if (!(d_max_ms > 0.0)) throw ValidationError("d_max_ms must be positive");
}

void CandidateObservation::validate() const {
  if (load < 0.0 || load > 1.0) throw ValidationError("load must be in [0,1]");
  if (trust < 0.0 || trust > 1.0) throw ValidationError("trust must be in [0,1]");
  if (rtt_ms < 0.0) throw ValidationError("rtt_ms must be >= 0");
}

double utility(const CandidateObservation& c, const UtilityWeights& w) {
  double latency_term = 1.0 - std::min(c.rtt_ms, w.d_max_ms) / w.d_max_ms;
  return w.w1 * (c.has_skill ? 1.0 : 0.0) + w.w2 * (1.0 - c.load) +
         w.w3 * latency_term + w.w4 * c.trust;
}

std::vector<std::size_t> rank_candidates(std::span<const CandidateObservation> candidates,
                                         const UtilityWeights& w, Rng& rng) {
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = utility(candidates[i], w);
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // shuffle, then stable sort: exact ties end up uniformly permuted
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

std::vector<CandidateObservation> select(std::vector<CandidateObservation> candidates,
                                         const UtilityWeights& w, Rng& rng) {
  w.validate();
  if (candidates.empty()) throw NoCandidateError("no candidates to select from");
  for (const auto& c : candidates) c.validate();
  std::vector<std::size_t> order = rank_candidates(candidates, w, rng);
  std::vector<CandidateObservation> out;
  out.reserve(candidates.size());
  for (std::size_t idx : order) out.push_back(candidates[idx]);
  return out;
}

std::vector<Bytes32> select_top_k(std::span<const CandidateObservation> candidates,
                                  const UtilityWeights& w, int k, Rng& rng) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::vector<CandidateObservation> ordered =
      select(std::vector<CandidateObservation>(candidates.begin(), candidates.end()),
             w, rng);
  std::vector<Bytes32> out;
  for (const auto& c : ordered) {
    out.push_back(c.node_id);
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

void RouterConfig::validate() const {
  weights.validate();
  if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

DispatchRecord dispatch(const RouterTask& task, DispatchEnv& env,
                        const RouterConfig& config, Rng& rng) {
  config.validate();
  if (task.skill.empty()) throw ValidationError("task skill must be non-empty");
  if (task.redundancy_k < 1) throw ValidationError("redundancy_k must be >= 1");

  DispatchRecord record;
  record.task_id = task.task_id;

  std::vector<CandidateObservation> candidates = env.candidates(task.skill);
  if (config.require_skill) {
    std::erase_if(candidates, [](const CandidateObservation& c) { return !c.has_skill; });
  }
  if (candidates.empty()) {
    record.status = DispatchStatus::NoCandidates;
    return record;
  }

  std::vector<CandidateObservation> ordered =
      select(std::move(candidates), config.weights, rng);

  if (task.redundancy_k == 1) {
    int attempts = std::min<int>(config.max_attempts,
                                 static_cast<int>(ordered.size()));
    for (int i = 0; i < attempts; ++i) {
      const Bytes32& target = ordered[static_cast<std::size_t>(i)].node_id;
      record.chosen.push_back(target);
      AttemptRecord attempt = env.attempt(target, task);
      attempt.node_id = target;
      record.attempts.push_back(attempt);
      record.completion_time_ms = attempt.completed_at;
      if (attempt.outcome == AttemptOutcome::Success) {
        record.status = DispatchStatus::Success;
        return record;
      }
    }
    record.status = DispatchStatus::Exhausted;
    return record;
  }

  // redundant dispatch: the whole top-K, every outcome recorded
  std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(task.redundancy_k),
                                        ordered.size());
  bool any_success = false;
  for (std::size_t i = 0; i < k; ++i) {
    const Bytes32& target = ordered[i].node_id;
    record.chosen.push_back(target);
    AttemptRecord attempt = env.attempt(target, task);
    attempt.node_id = target;
    any_success |= attempt.outcome == AttemptOutcome::Success;
    record.completion_time_ms = std::max(record.completion_time_ms, attempt.completed_at);
    record.attempts.push_back(attempt);
  }
  record.status = any_success ? DispatchStatus::Success : DispatchStatus::Exhausted;
  return record;
}

}  // namespace swarm
