#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swarm/scenario.hpp"
#include "swarm/simnet.hpp"

namespace swarm::sim {

// Bundled scenarios. The emergence experiments encode their thresholds in
// run_preset so CI can gate on `experiments all`.
ScenarioSpec minimal_scenario();
ScenarioSpec specialization_scenario();
ScenarioSpec starvation_scenario();
ScenarioSpec sybil_scenario();
ScenarioSpec collusion_scenario();

struct PresetCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct PresetReport {
  std::string preset;
  std::vector<PresetCheck> checks;
  std::optional<ScenarioSpec> scenario;  // set for simulation presets
  std::optional<SimResult> result;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

std::vector<std::string> preset_names();
PresetReport run_preset(const std::string& name);

/// Monte-Carlo convergence study used by the convergence preset: empirical
/// stderr of sampled Shapley values against 1/sqrt(M).
struct ConvergenceStudy {
  std::vector<int> sample_counts;
  std::vector<double> mean_stderr;       // pooled over games, per M
  double r_squared = 0.0;                // regression of stderr on 1/sqrt(M)
  double worst_stderr_at_100 = 0.0;      // max per-node stderr at M=100
  double worst_range_at_100 = 1.0;       // quality range of that game
};
ConvergenceStudy convergence_study(std::uint64_t seed);

}  // namespace swarm::sim
