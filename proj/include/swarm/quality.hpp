#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace swarm {

/// Characteristic function of a coalition game over k members. Bit i of the
/// mask means member i is present. Empty coalition is worth 0 by convention.
using CoalitionValueFn = std::function<double(std::uint64_t mask)>;

/// Pipeline chain: dropping a stage degrades throughput by its processing
/// time share, so the value of a sub-coalition is the observed quality
/// scaled by the shares it covers. Additive, which gives a closed-form
/// Shapley value (observed_quality * share_i).
struct PipelineModel {
  double observed_quality = 0.0;     // in [0,1]
  std::vector<double> time_shares;   // positive, sums to 1

  void validate() const;  // throws ValidationError
  CoalitionValueFn fn() const;
  double value(std::uint64_t mask) const;
};

/// Ensemble inference: dropping a member raises variance in proportion to
/// its historical accuracy differential. Concretized as a power law over
/// the covered accuracy mass; gamma < 1 makes the game strictly concave so
/// attribution is genuinely non-additive.
struct EnsembleModel {
  double observed_quality = 0.0;
  std::vector<double> accuracies;  // all > 0
  double gamma = 0.5;              // in (0,1]

  void validate() const;
  CoalitionValueFn fn() const;
  double value(std::uint64_t mask) const;
};

/// Single-node task: direct assignment.
struct SingleNodeModel {
  double observed_quality = 0.0;

  void validate() const;
  CoalitionValueFn fn() const;
  double value(std::uint64_t mask) const;
};

/// One node's response in a redundant top-K dispatch.
struct RedundantOutcome {
  double quality = 0.0;   // quality of this node's individual result
  double accuracy = 0.0;  // historical accuracy differential, > 0
};

/// Builds the ensemble game used to attribute a redundant dispatch.
/// Merge rule: the merged result is as good as the best individual one.
EnsembleModel merge_redundant(std::span<const RedundantOutcome> outcomes,
                              double gamma = 0.5);

}  // namespace swarm
