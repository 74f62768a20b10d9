#include "swarm/presets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "swarm/errors.hpp"

namespace swarm::sim {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

NodeGroupSpec honest_group(const std::string& prefix, int count, double quality_mean,
                           const std::string& skill) {
  NodeGroupSpec g;
  g.name_prefix = prefix;
  g.count = count;
  g.behavior = Behavior::Honest;
  g.skills = {skill};
  QualityProfileSpec q;
  q.mean = Spread{quality_mean, quality_mean};
  q.jitter = 0.05;
  q.success_rate = Spread{-1, -1};  // track the mean
  q.service_median_ms = 400;
  q.service_sigma = 0.4;
  g.quality[skill] = q;
  return g;
}

}  // namespace

ScenarioSpec minimal_scenario() {
  ScenarioSpec s;
  s.seed = 7;
  s.duration_ms = 60'000;
  s.groups.push_back(honest_group("node", 2, 0.8, "echo"));
  s.workload.arrival_rate_per_s = 0.0;
  return s;
}

ScenarioSpec specialization_scenario() {
  ScenarioSpec s;
  s.seed = 1101;
  s.duration_ms = 420'000;
  const char* skill = "infer";
  const double tiers[] = {0.5, 0.6, 0.7, 0.8, 0.9};
  for (int t = 0; t < 5; ++t) {
    NodeGroupSpec g = honest_group("tier" + std::to_string(t + 1), 4, tiers[t], skill);
    g.capacity = 10;  // headroom so the load term can steer before saturation
    s.groups.push_back(g);
  }
  s.workload.arrival_rate_per_s = 100.0;
  s.workload.skill_weights = {{skill, 1.0}};
  s.workload.pool_credits = 1.0;
  s.workload.redundancy_weights = {{1, 1.0}};
  s.latency.uniform_lo_ms = 5;
  s.latency.uniform_hi_ms = 30;
  // a heavy load weight makes busy leaders spill traffic deep into the
  // preference list, so every node keeps getting sampled and trust settles
  // at its quality fixed point instead of freezing early random winners
  s.params.weights = UtilityWeights{0.3, 0.4, 0.1, 0.2, 500.0};
  // decay on a run-relevant timescale: idle nodes lose their edge, which
  // rotates sampling through same-quality siblings
  s.params.decay = DecayParams{0.2, 30'000};
  return s;
}

ScenarioSpec starvation_scenario() {
  ScenarioSpec s;
  s.seed = 2202;
  s.duration_ms = 300'000;
  const char* skill = "infer";
  s.groups.push_back(honest_group("honest", 10, 0.8, skill));
  NodeGroupSpec idle = honest_group("idle", 1, 0.8, skill);
  idle.behavior = Behavior::NeverAccept;
  s.groups.push_back(idle);
  s.workload.arrival_rate_per_s = 10.0;
  s.workload.skill_weights = {{skill, 1.0}};
  s.latency.uniform_lo_ms = 5;
  s.latency.uniform_hi_ms = 30;
  return s;
}

ScenarioSpec sybil_scenario() {
  ScenarioSpec s;
  s.seed = 3303;
  s.duration_ms = 120'000;
  const char* skill = "infer";
  s.groups.push_back(honest_group("honest", 5, 0.8, skill));
  NodeGroupSpec sybil;
  sybil.name_prefix = "sybil";
  sybil.count = 100;
  sybil.behavior = Behavior::Sybil;
  sybil.origin = "sybil-net";
  sybil.submit_period_ms = 10'000;
  s.groups.push_back(sybil);
  s.workload.arrival_rate_per_s = 5.0;
  s.workload.skill_weights = {{skill, 1.0}};
  return s;
}

ScenarioSpec collusion_scenario() {
  ScenarioSpec s;
  s.seed = 4404;
  s.duration_ms = 400'000;
  const char* skill = "infer";
  s.groups.push_back(honest_group("honest", 10, 0.8, skill));
  NodeGroupSpec ring;
  ring.name_prefix = "ring";
  ring.count = 5;
  ring.behavior = Behavior::CollusionRing;
  ring.fabrication_period_ms = 2'000;
  ring.fabrication_pool = 1.0;
  ring.compromised_fraction = 0.0;
  s.groups.push_back(ring);
  s.workload.arrival_rate_per_s = 25.0;
  s.workload.skill_weights = {{skill, 1.0}};
  return s;
}

std::vector<std::string> preset_names() {
  return {"specialization", "starvation", "sybil", "collusion", "convergence"};
}

namespace {

// node quality rank for the specialization check: quality mean per node,
// resolved the same way the simulator resolves groups
std::vector<std::pair<double, std::string>> node_qualities(const ScenarioSpec& spec,
                                                           const std::string& skill) {
  std::vector<std::pair<double, std::string>> out;
  for (const auto& g : spec.groups) {
    auto it = g.quality.find(skill);
    if (it == g.quality.end()) continue;
    for (int i = 0; i < g.count; ++i) {
      std::string name =
          g.count == 1 ? g.name_prefix : g.name_prefix + "-" + std::to_string(i);
      out.emplace_back(it->second.mean.resolve(i, g.count), name);
    }
  }
  return out;
}

PresetReport specialization_report() {
  PresetReport report;
  report.preset = "specialization";
  ScenarioSpec spec = specialization_scenario();
  SimResult result = run(spec);

  std::map<std::string, std::uint64_t> served;
  for (const auto& acct : result.accounts) served[acct.name] = acct.served;

  // sort by (quality asc, served asc); inversions can then only surface
  // across strict quality increases
  auto ranked = node_qualities(spec, "infer");
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return served[a.second] < served[b.second];
  });
  int inversions = 0;
  for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
    if (served[ranked[i + 1].second] < served[ranked[i].second]) ++inversions;
  }
  report.checks.push_back(
      {"task-share-monotone-in-quality (inversions <= 2)", inversions <= 2,
       "inversions=" + std::to_string(inversions)});

  report.checks.push_back(
      {"no-node-saturates (max sampled load share < 1)",
       result.metrics.overall_max_load_share < 1.0,
       "max_load_share=" + fmt(result.metrics.overall_max_load_share)});

  report.checks.push_back({"workload-served (>= 9000 tasks)",
                           result.tasks_served >= 9000,
                           "served=" + std::to_string(result.tasks_served)});

  report.scenario = spec;
  report.result = std::move(result);
  return report;
}

PresetReport starvation_report() {
  PresetReport report;
  report.preset = "starvation";
  ScenarioSpec spec = starvation_scenario();
  SimResult result = run(spec);

  const NodeSeries* idle = nullptr;
  std::vector<const NodeSeries*> honest;
  for (const auto& n : result.metrics.nodes) {
    if (n.behavior == "never_accept") {
      idle = &n;
    } else if (n.behavior == "honest") {
      honest.push_back(&n);
    }
  }
  if (!idle || honest.empty()) {
    report.checks.push_back({"preset-shape", false, "missing idle or honest series"});
    return report;
  }

  bool monotone = true;
  for (std::size_t i = 0; i + 1 < idle->trust.size(); ++i) {
    if (idle->trust[i + 1] > idle->trust[i] + 1e-12) {
      monotone = false;
      break;
    }
  }
  report.checks.push_back({"idle-trust-non-increasing", monotone, ""});

  // dispatch rate over the last quarter of the run
  std::size_t samples = idle->dispatches.size();
  std::size_t from = samples - samples / 4;
  auto window_rate = [&](const NodeSeries& n) {
    return n.dispatches.back() - n.dispatches[from];
  };
  double idle_rate = window_rate(*idle);
  double honest_sum = 0;
  for (const auto* h : honest) honest_sum += window_rate(*h);
  double honest_mean = honest_sum / static_cast<double>(honest.size());
  bool starved = idle_rate < 0.25 * honest_mean;
  report.checks.push_back(
      {"idle-dispatch-rate-below-25pct-of-honest", starved,
       "idle=" + fmt(idle_rate) + " honest_mean=" + fmt(honest_mean)});

  report.scenario = spec;
  report.result = std::move(result);
  return report;
}

PresetReport sybil_report() {
  PresetReport report;
  report.preset = "sybil";
  ScenarioSpec spec = sybil_scenario();
  SimResult result = run(spec);

  Credit sybil_spendable = 0;
  int sybil_count = 0;
  for (const auto& acct : result.accounts) {
    if (acct.behavior == "sybil_controller") {
      sybil_spendable += acct.balance;
      ++sybil_count;
    }
  }
  report.checks.push_back({"sybil-population (100 identities)", sybil_count == 100,
                           "count=" + std::to_string(sybil_count)});
  report.checks.push_back(
      {"sybil-spendable-credit-exactly-zero", sybil_spendable == 0,
       "total_micro=" + std::to_string(sybil_spendable)});

  // grant quota over the shared origin, recomputed from the log
  int issued = 0;
  int refused_quota = 0;
  for (const auto& line : result.log.lines()) {
    auto j = nlohmann::json::parse(line);
    std::string ev = j.value("ev", "");
    if (ev == "grant_issued" && j.value("origin", "") == "sybil-net") ++issued;
    if (ev == "grant_refused" && j.value("origin", "") == "sybil-net") ++refused_quota;
  }
  report.checks.push_back({"grant-quota-exactly-5-per-origin", issued == 5,
                           "issued=" + std::to_string(issued)});
  report.checks.push_back({"excess-grant-requests-refused", refused_quota >= 95,
                           "refused=" + std::to_string(refused_quota)});

  report.scenario = spec;
  report.result = std::move(result);
  return report;
}

PresetReport collusion_report() {
  PresetReport report;
  report.preset = "collusion";
  ScenarioSpec spec = collusion_scenario();
  SimResult result = run(spec);

  Credit ring_balance = 0;
  for (const auto& acct : result.accounts) {
    if (acct.behavior == "collusion_ring_member") ring_balance += acct.balance;
  }
  report.checks.push_back({"ring-net-credit-not-positive", ring_balance <= 0,
                           "total_micro=" + std::to_string(ring_balance)});
  report.checks.push_back(
      {"all-fabrications-quarantined",
       result.fabrications > 0 &&
           result.quarantined == static_cast<int>(result.fabrications),
       "fabrications=" + std::to_string(result.fabrications) +
           " quarantined=" + std::to_string(result.quarantined)});
  report.checks.push_back({"workload-served (>= 9000 tasks)",
                           result.tasks_served >= 9000,
                           "served=" + std::to_string(result.tasks_served)});

  report.scenario = spec;
  report.result = std::move(result);
  return report;
}

PresetReport convergence_report() {
  PresetReport report;
  report.preset = "convergence";
  ConvergenceStudy study = convergence_study(515);

  report.checks.push_back({"stderr-regression-r2 (>= 0.95)", study.r_squared >= 0.95,
                           "r2=" + fmt(study.r_squared)});
  bool sub_pct = study.worst_stderr_at_100 < 0.01 * study.worst_range_at_100;
  report.checks.push_back(
      {"stderr-at-M100-below-1pct-of-range", sub_pct,
       "stderr=" + fmt(study.worst_stderr_at_100) +
           " range=" + fmt(study.worst_range_at_100)});
  return report;
}

}  // namespace

ConvergenceStudy convergence_study(std::uint64_t seed) {
  constexpr int kGames = 10;
  constexpr int kMembers = 10;
  constexpr int kReps = 120;
  ConvergenceStudy study;
  study.sample_counts = {25, 100, 400, 1600};

  Rng game_rng = Rng::derive(seed, "convergence-games");
  std::vector<double> per_m_sum(study.sample_counts.size(), 0.0);
  double min_r2 = 1.0;

  double worst_ratio = -1.0;
  for (int g = 0; g < kGames; ++g) {
    EnsembleModel model;
    model.observed_quality = game_rng.uniform(0.5, 1.0);
    model.gamma = 0.5;
    for (int i = 0; i < kMembers; ++i) {
      model.accuracies.push_back(game_rng.uniform(0.5, 2.0));
    }
    CoalitionValueFn fn = model.fn();
    double range = model.observed_quality;  // q(full) - q(empty)

    Rng est_rng = Rng::derive(seed, "convergence-est-" + std::to_string(g));
    std::vector<double> xs, ys;  // this game's (1/sqrt(M), stderr) points
    for (std::size_t mi = 0; mi < study.sample_counts.size(); ++mi) {
      int m = study.sample_counts[mi];
      // empirical stderr over repetitions, averaged across members
      std::vector<double> sum(kMembers, 0.0), sumsq(kMembers, 0.0);
      for (int rep = 0; rep < kReps; ++rep) {
        std::vector<double> phi = sample_shapley(fn, kMembers, m, est_rng);
        for (int i = 0; i < kMembers; ++i) {
          sum[static_cast<std::size_t>(i)] += phi[static_cast<std::size_t>(i)];
          sumsq[static_cast<std::size_t>(i)] +=
              phi[static_cast<std::size_t>(i)] * phi[static_cast<std::size_t>(i)];
        }
      }
      double mean_se = 0.0;
      double max_se = 0.0;
      for (int i = 0; i < kMembers; ++i) {
        double mu = sum[static_cast<std::size_t>(i)] / kReps;
        double var = sumsq[static_cast<std::size_t>(i)] / kReps - mu * mu;
        double se = std::sqrt(std::max(0.0, var));
        mean_se += se;
        max_se = std::max(max_se, se);
      }
      mean_se /= kMembers;
      xs.push_back(1.0 / std::sqrt(static_cast<double>(m)));
      ys.push_back(mean_se);
      per_m_sum[mi] += mean_se;
      if (m == 100 && max_se / range > worst_ratio) {
        worst_ratio = max_se / range;
        study.worst_stderr_at_100 = max_se;
        study.worst_range_at_100 = range;
      }
    }

    // per-game ordinary least squares of stderr on 1/sqrt(M); the study
    // reports the worst fit across games
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    double mean_y = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double fit = intercept + slope * xs[i];
      ss_res += (ys[i] - fit) * (ys[i] - fit);
      ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    min_r2 = std::min(min_r2, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0);
  }
  for (std::size_t mi = 0; mi < per_m_sum.size(); ++mi) {
    study.mean_stderr.push_back(per_m_sum[mi] / kGames);
  }
  study.r_squared = min_r2;
  return study;
}

PresetReport run_preset(const std::string& name) {
  if (name == "specialization") return specialization_report();
  if (name == "starvation") return starvation_report();
  if (name == "sybil") return sybil_report();
  if (name == "collusion") return collusion_report();
  if (name == "convergence") return convergence_report();
  throw ValidationError("unknown preset '" + name + "'; valid: specialization, " +
                        "starvation, sybil, collusion, convergence");
}

}  // namespace swarm::sim
