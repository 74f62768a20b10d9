#include "swarm/quality.hpp"

#include <cmath>

#include "swarm/errors.hpp"

namespace swarm {

namespace {
constexpr double kShareSumTolerance = 1e-9;
}

void PipelineModel::validate() const {
  if (observed_quality < 0.0 || observed_quality > 1.0) {
    throw ValidationError("pipeline observed_quality must be in [0,1]");
  }
  if (time_shares.empty()) throw ValidationError("pipeline time_shares empty");
  double sum = 0.0;
  for (double s : time_shares) {
    if (s <= 0.0) throw ValidationError("pipeline time_shares must be positive");
    sum += s;
  }
  if (std::abs(sum - 1.0) > kShareSumTolerance) {
    throw ValidationError("pipeline time_shares must sum to 1");
  }
}

double PipelineModel::value(std::uint64_t mask) const {
  double share = 0.0;
  for (std::size_t i = 0; i < time_shares.size(); ++i) {
    if (mask & (std::uint64_t{1} << i)) share += time_shares[i];
  }
  return observed_quality * share;
}

CoalitionValueFn PipelineModel::fn() const {
  return [m = *this](std::uint64_t mask) { return m.value(mask); };
}

void EnsembleModel::validate() const {
  if (observed_quality < 0.0 || observed_quality > 1.0) {
    throw ValidationError("ensemble observed_quality must be in [0,1]");
  }
  if (accuracies.empty()) throw ValidationError("ensemble accuracies empty");
  for (double a : accuracies) {
    if (a <= 0.0) throw ValidationError("ensemble accuracies must be positive");
  }
  if (gamma <= 0.0 || gamma > 1.0) {
    throw ValidationError("ensemble gamma must be in (0,1]");
  }
}

double EnsembleModel::value(std::uint64_t mask) const {
  double total = 0.0;
  double covered = 0.0;
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    total += accuracies[i];
    if (mask & (std::uint64_t{1} << i)) covered += accuracies[i];
  }
  if (covered <= 0.0) return 0.0;
  std::uint64_t full = (accuracies.size() >= 64)
                           ? ~std::uint64_t{0}
                           : ((std::uint64_t{1} << accuracies.size()) - 1);
  if ((mask & full) == full) return observed_quality;  // exact at the full set
  return observed_quality * std::pow(covered / total, gamma);
}

CoalitionValueFn EnsembleModel::fn() const {
  return [m = *this](std::uint64_t mask) { return m.value(mask); };
}

void SingleNodeModel::validate() const {
  if (observed_quality < 0.0 || observed_quality > 1.0) {
    throw ValidationError("single-node observed_quality must be in [0,1]");
  }
}

double SingleNodeModel::value(std::uint64_t mask) const {
  return (mask & 1) ? observed_quality : 0.0;
}

CoalitionValueFn SingleNodeModel::fn() const {
  return [m = *this](std::uint64_t mask) { return m.value(mask); };
}

EnsembleModel merge_redundant(std::span<const RedundantOutcome> outcomes,
                              double gamma) {
  if (outcomes.empty()) throw ValidationError("merge_redundant: no outcomes");
  EnsembleModel model;
  model.gamma = gamma;
  model.observed_quality = 0.0;
  for (const auto& o : outcomes) {
    model.observed_quality = std::max(model.observed_quality, o.quality);
    model.accuracies.push_back(o.accuracy);
  }
  model.validate();
  return model;
}

}  // namespace swarm
