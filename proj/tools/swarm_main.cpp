#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "swarm/credit.hpp"
#include "swarm/errors.hpp"
#include "swarm/game_file.hpp"
#include "swarm/presets.hpp"
#include "swarm/simnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace swarm;
using namespace swarm::sim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitThreshold = 3;

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("SWARM_OUT_DIR")) return env;
  return "out";
}

json run_report_json(const std::string& scenario_path, const ScenarioSpec& spec,
                     std::uint64_t effective_seed, const SimResult& result,
                     const fs::path& events_path, const fs::path& metrics_path) {
  Credit sybil_spendable = 0;
  Credit ring_balance = 0;
  for (const auto& acct : result.accounts) {
    if (acct.behavior == "sybil_controller") sybil_spendable += acct.balance;
    if (acct.behavior == "collusion_ring_member") ring_balance += acct.balance;
  }
  json cold = json::object();
  for (const auto& [name, ms] : result.metrics.cold_start_ms) cold[name] = ms;

  json j;
  j["scenario"] = scenario_path;
  j["seed"] = effective_seed;
  j["duration_ms"] = spec.duration_ms;
  j["event_count"] = result.log.lines().size();
  j["log_digest"] = to_hex(result.log.digest());
  j["summary"] = {
      {"final_gini", result.metrics.gini.empty() ? 0.0 : result.metrics.gini.back()},
      {"mean_specialization", result.metrics.mean_specialization.empty()
                                  ? 0.0
                                  : result.metrics.mean_specialization.back()},
      {"max_load_share", result.metrics.overall_max_load_share},
      {"task_success_rate",
       result.tasks_arrived > 0
           ? static_cast<double>(result.tasks_served) / result.tasks_arrived
           : 0.0},
      {"tasks",
       {{"arrived", result.tasks_arrived},
        {"served", result.tasks_served},
        {"exhausted", result.tasks_exhausted},
        {"refused", result.tasks_refused}}},
      {"conservation",
       {{"total_balance_micro", result.total_balance},
        {"expected_micro", result.expected_total},
        {"exact", result.total_balance == result.expected_total}}},
      {"adversaries",
       {{"sybil_spendable_micro", sybil_spendable},
        {"ring_balance_micro", ring_balance},
        {"fabrications", result.fabrications},
        {"quarantined", result.quarantined},
        {"grants_issued", result.grants_issued},
        {"grants_refused", result.grants_refused}}},
      {"cold_start_ms", cold}};
  j["outputs"] = {{"events", events_path.string()}, {"metrics", metrics_path.string()}};
  return j;
}

void write_run_artifacts(const fs::path& dir, const std::string& scenario_path,
                         const ScenarioSpec& spec, std::uint64_t effective_seed,
                         const SimResult& result) {
  fs::create_directories(dir);
  fs::path events = dir / "events.jsonl";
  fs::path metrics = dir / "metrics.csv";
  fs::path report = dir / "report.json";
  result.log.write_to(events.string());
  write_atomic(metrics, result.metrics.to_csv());
  write_atomic(report,
               run_report_json(scenario_path, spec, effective_seed, result, events,
                               metrics)
                       .dump(2) +
                   "\n");
}

int cmd_sim_run(const std::string& scenario_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed_override) {
  ScenarioSpec spec = ScenarioSpec::load_file(scenario_path);
  RunOptions opts;
  opts.seed_override = seed_override;
  SimResult result = run(spec, opts);
  std::uint64_t seed = seed_override.value_or(spec.seed);
  write_run_artifacts(out_dir, scenario_path, spec, seed, result);
  std::printf("scenario   %s\n", scenario_path.c_str());
  std::printf("seed       %llu\n", static_cast<unsigned long long>(seed));
  std::printf("events     %zu\n", result.log.lines().size());
  std::printf("digest     %s\n", to_hex(result.log.digest()).c_str());
  std::printf("served     %llu / %llu arrived\n",
              static_cast<unsigned long long>(result.tasks_served),
              static_cast<unsigned long long>(result.tasks_arrived));
  std::printf("report     %s/report.json\n", out_dir.c_str());
  return kExitOk;
}

int cmd_sim_replay(const std::string& log_path, const std::string& scenario_path) {
  std::vector<std::string> logged = EventLog::read_lines(log_path);
  for (std::size_t i = 0; i < logged.size(); ++i) {
    try {
      auto j = json::parse(logged[i]);
      (void)j;
    } catch (const json::exception& e) {
      std::fprintf(stderr, "corrupt log at line %zu: %s\n", i + 1, e.what());
      return kExitUsage;
    }
  }
  ScenarioSpec spec = ScenarioSpec::load_file(scenario_path);
  SimResult result = run(spec);
  const auto& rerun = result.log.lines();

  std::size_t n = std::min(logged.size(), rerun.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (logged[i] != rerun[i]) {
      std::printf("MISMATCH at event %zu\n  logged: %s\n  replay: %s\n", i + 1,
                  logged[i].c_str(), rerun[i].c_str());
      return kExitRuntime;
    }
  }
  if (logged.size() != rerun.size()) {
    std::printf("MISMATCH at event %zu (length %zu vs %zu)\n", n + 1, logged.size(),
                rerun.size());
    return kExitRuntime;
  }
  std::printf("MATCH (%zu events, digest %s)\n", rerun.size(),
              to_hex(result.log.digest()).c_str());
  return kExitOk;
}

int cmd_attr_eval(const std::string& game_path, double pool_credits, double alpha,
                  int samples, std::uint64_t seed, bool force_exact,
                  double trust_before_all) {
  CoalitionGame game = load_game_file(game_path);
  const int k = game.size();
  if (force_exact && k > kExactShapleyMaxMembers) {
    throw TractabilityError("--exact requested but k = " + std::to_string(k) +
                            " exceeds the cap of " +
                            std::to_string(kExactShapleyMaxMembers));
  }
  Credit pool = to_micro(pool_credits);
  AttributionParams params{alpha, samples};
  std::vector<double> trust_before(static_cast<std::size_t>(k), trust_before_all);
  Rng rng = Rng::derive(seed, "attr-eval");
  AttributionOutcome out =
      attribute(pool, game.fn, k, params, trust_before, rng);

  std::printf("game: %s (%s, k=%d)  pool=%.6f  alpha=%.3f  M=%d  seed=%llu\n",
              game_path.c_str(), game.model_kind.c_str(), k, credits(pool), alpha,
              samples, static_cast<unsigned long long>(seed));
  if (out.uniform_fallback) {
    std::printf("note: no positive sampled contribution; uniform fallback split\n");
  }
  std::printf("%-12s %12s %12s %8s %8s\n", "member", "phi_hat", "delta", "tau_in",
              "tau_out");
  for (int i = 0; i < k; ++i) {
    std::size_t idx = static_cast<std::size_t>(i);
    std::printf("%-12s %12.6f %12.6f %8.4f %8.4f\n", game.members[idx].c_str(),
                out.sampled_phi[idx], credits(out.deltas[idx]), trust_before[idx],
                out.trust_after[idx]);
  }
  std::printf("sum(delta) = %.6f  submitter_debit = %.6f\n",
              credits(std::accumulate(out.deltas.begin(), out.deltas.end(),
                                      Credit{0})),
              credits(out.submitter_debit));

  if (k <= kExactShapleyMaxMembers) {
    std::vector<double> exact = exact_shapley(game.fn, k);
    double max_err = 0;
    std::printf("%-12s %12s\n", "member", "phi_exact");
    for (int i = 0; i < k; ++i) {
      std::size_t idx = static_cast<std::size_t>(i);
      std::printf("%-12s %12.6f\n", game.members[idx].c_str(), exact[idx]);
      max_err = std::max(max_err, std::abs(exact[idx] - out.sampled_phi[idx]));
    }
    std::printf("max |phi_hat - phi_exact| = %.6f\n", max_err);
  }
  return kExitOk;
}

int cmd_dht_trace(const std::string& scenario_path, const std::string& skill) {
  ScenarioSpec spec = ScenarioSpec::load_file(scenario_path);
  Overlay overlay(spec.params.registry, spec.params.puzzle_difficulty);

  std::vector<Bytes32> ids;
  std::vector<std::string> names;
  for (const auto& g : spec.groups) {
    for (int i = 0; i < g.count; ++i) {
      std::string name =
          g.count == 1 ? g.name_prefix : g.name_prefix + "-" + std::to_string(i);
      NodeIdentity identity = scenario_node_identity(spec.seed, name);
      RegistrationRecord reg =
          make_registration(identity, spec.params.puzzle_difficulty);
      std::vector<Bytes32> boot;
      if (!ids.empty()) boot.push_back(ids.front());
      overlay.join(reg, ExplicitPeerList(boot));
      bool advertises =
          g.behavior == Behavior::Honest || g.behavior == Behavior::NeverAccept;
      if (advertises && !g.skills.empty()) {
        Advertisement ad = make_advertisement(identity, g.skills, g.resources, 0.0, 0);
        overlay.publish(identity.node_id, ad);
      }
      ids.push_back(identity.node_id);
      names.push_back(name);
    }
  }
  if (ids.empty()) throw ValidationError("scenario has no nodes");

  Bytes32 key = skill_key(skill).digest;
  std::printf("skill '%s'  key %s\n", skill.c_str(), to_hex(key).c_str());
  std::printf("lookup from %s (%s)\n", names.front().c_str(),
              to_hex(ids.front()).c_str());
  LookupResult lr = overlay.lookup(ids.front(), skill, 0);
  for (std::size_t r = 0; r < lr.trace.size(); ++r) {
    std::printf("round %zu:\n", r + 1);
    for (const auto& [node, dist] : lr.trace[r].queried) {
      std::printf("  query %s  distance %s\n", to_hex(node).c_str(),
                  to_hex(dist).c_str());
    }
  }
  std::printf("%d rounds, status %s, %zu live advertisement(s)\n", lr.rounds,
              lr.status == LookupStatus::Ok ? "ok" : "no-route", lr.ads.size());
  for (const auto& ad : lr.ads) {
    std::printf("  node %s published_at %lld trust %.4f\n", to_hex(ad.node_id).c_str(),
                static_cast<long long>(ad.published_at), ad.trust);
  }
  return kExitOk;
}

int cmd_route_explain(const std::string& scenario_path, std::uint64_t task_id) {
  ScenarioSpec spec = ScenarioSpec::load_file(scenario_path);
  RunOptions opts;
  opts.explain_task_id = task_id;
  SimResult result = run(spec, opts);
  if (!result.explain) {
    std::fprintf(stderr,
                 "task %llu was never dispatched in this run "
                 "(%llu tasks arrived)\n",
                 static_cast<unsigned long long>(task_id),
                 static_cast<unsigned long long>(result.tasks_arrived));
    return kExitRuntime;
  }
  const ExplainCapture& cap = *result.explain;
  const UtilityWeights& w = cap.weights;
  std::printf("task %llu  skill '%s'  weights (%.2f, %.2f, %.2f, %.2f)  d_max %.0fms\n",
              static_cast<unsigned long long>(cap.task_id), cap.skill.c_str(), w.w1,
              w.w2, w.w3, w.w4, w.d_max_ms);
  std::printf("%-4s %-14s %-7s %8s %8s %8s %8s %9s %7s\n", "rank", "node", "skill",
              "w1*cap", "w2*idle", "w3*lat", "w4*trust", "utility", "chosen");
  for (const auto& row : cap.rows) {
    double lat_term = 1.0 - std::min(row.rtt_ms, w.d_max_ms) / w.d_max_ms;
    std::printf("%-4d %-14s %-7s %8.4f %8.4f %8.4f %8.4f %9.5f %7s\n", row.rank,
                row.name.c_str(), row.has_skill ? "yes" : "no",
                w.w1 * (row.has_skill ? 1 : 0), w.w2 * (1.0 - row.load),
                w.w3 * lat_term, w.w4 * row.trust, row.score,
                row.chosen ? "*" : "");
  }
  return kExitOk;
}

int cmd_experiments(const std::string& preset, const std::string& out_dir) {
  std::vector<std::string> to_run;
  if (preset == "all") {
    to_run = preset_names();
  } else {
    to_run.push_back(preset);
  }
  bool all_passed = true;
  for (const auto& name : to_run) {
    PresetReport report = run_preset(name);
    if (report.result && report.scenario) {
      fs::path dir = fs::path(out_dir) / name;
      fs::create_directories(dir);
      report.scenario->save_file((dir / "scenario.json").string());
      write_run_artifacts(dir, (dir / "scenario.json").string(), *report.scenario,
                          report.scenario->seed, *report.result);
    }
    for (const auto& check : report.checks) {
      std::printf("[%s] %-55s %s%s%s\n", report.preset.c_str(), check.name.c_str(),
                  check.passed ? "PASS" : "FAIL",
                  check.detail.empty() ? "" : "  ", check.detail.c_str());
      all_passed &= check.passed;
    }
  }
  return all_passed ? kExitOk : kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SwarmHarness protocol simulator and tooling"};
  app.require_subcommand(1);

  // sim run / sim replay
  auto* sim_cmd = app.add_subcommand("sim", "scenario execution and replay");
  sim_cmd->require_subcommand(1);
  std::string scenario_path, out_dir = default_out_dir(), log_path;
  std::uint64_t seed_override_val = 0;
  bool have_seed_override = false;
  auto* sim_run = sim_cmd->add_subcommand("run", "run a scenario file");
  sim_run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  sim_run->add_option("--out", out_dir, "output directory");
  sim_run->add_option("--seed-override", seed_override_val, "override scenario seed")
      ->each([&](const std::string&) { have_seed_override = true; });
  auto* sim_replay = sim_cmd->add_subcommand("replay", "verify a run log");
  sim_replay->add_option("--log", log_path, "events.jsonl from a previous run")
      ->required();
  sim_replay->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  // attr eval
  auto* attr_cmd = app.add_subcommand("attr", "credit attribution tools");
  attr_cmd->require_subcommand(1);
  std::string game_path;
  double pool = 10.0, alpha = 0.1, trust0 = 0.5;
  int samples = 100;
  std::uint64_t eval_seed = 1;
  bool force_exact = false;
  auto* attr_eval = attr_cmd->add_subcommand("eval", "attribute a coalition game");
  attr_eval->add_option("--game", game_path, "coalition game JSON file")->required();
  attr_eval->add_option("--pool", pool, "credit pool C(T)");
  attr_eval->add_option("--alpha", alpha, "trust learning rate");
  attr_eval->add_option("--samples", samples, "permutation sample count M");
  attr_eval->add_option("--seed", eval_seed, "sampling seed");
  attr_eval->add_option("--trust", trust0, "trust before, applied to every member");
  attr_eval->add_flag("--exact", force_exact, "require the exact oracle column");

  // dht trace
  auto* dht_cmd = app.add_subcommand("dht", "registry overlay tools");
  dht_cmd->require_subcommand(1);
  std::string skill;
  auto* dht_trace = dht_cmd->add_subcommand("trace", "print an iterative lookup");
  dht_trace->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  dht_trace->add_option("--skill", skill, "skill name to look up")->required();

  // route explain
  auto* route_cmd = app.add_subcommand("route", "router tools");
  route_cmd->require_subcommand(1);
  std::uint64_t explain_task = 1;
  auto* route_explain = route_cmd->add_subcommand("explain", "candidate table for a task");
  route_explain->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  route_explain->add_option("--task", explain_task, "task id to explain")->required();

  // experiments
  std::string preset;
  auto* experiments = app.add_subcommand("experiments", "bundled experiment presets");
  experiments
      ->add_option("preset", preset,
                   "specialization|starvation|sybil|collusion|convergence|all")
      ->required();
  experiments->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim_run->parsed()) {
      return cmd_sim_run(scenario_path, out_dir,
                         have_seed_override
                             ? std::optional<std::uint64_t>(seed_override_val)
                             : std::nullopt);
    }
    if (sim_replay->parsed()) return cmd_sim_replay(log_path, scenario_path);
    if (attr_eval->parsed()) {
      return cmd_attr_eval(game_path, pool, alpha, samples, eval_seed, force_exact,
                           trust0);
    }
    if (dht_trace->parsed()) return cmd_dht_trace(scenario_path, skill);
    if (route_explain->parsed()) return cmd_route_explain(scenario_path, explain_task);
    if (experiments->parsed()) return cmd_experiments(preset, out_dir);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const TractabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
