#include "swarm/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swarm/errors.hpp"

namespace swarm::sim {

using nlohmann::json;

std::string behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::NeverAccept: return "never_accept";
    case Behavior::FreeRider: return "free_rider";
    case Behavior::Sybil: return "sybil_controller";
    case Behavior::CollusionRing: return "collusion_ring_member";
  }
  return "honest";
}

std::optional<Behavior> behavior_from_name(const std::string& name) {
  if (name == "honest") return Behavior::Honest;
  if (name == "never_accept") return Behavior::NeverAccept;
  if (name == "free_rider") return Behavior::FreeRider;
  if (name == "sybil_controller") return Behavior::Sybil;
  if (name == "collusion_ring_member") return Behavior::CollusionRing;
  return std::nullopt;
}

GenesisConfig ParamsSpec::genesis_config() const {
  GenesisConfig cfg;
  cfg.c0 = to_micro(genesis_c0);
  cfg.k0 = genesis_k0;
  cfg.grant_limit_per_origin = grant_limit_per_origin;
  cfg.grant_window_ms = grant_window_ms;
  return cfg;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

void expect_keys(const json& j, const std::string& path,
                 const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown field");
  }
}

double get_num(const json& j, const std::string& path, const char* key,
               double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& j, const std::string& path, const char* key,
                     std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Spread get_spread(const json& j, const std::string& path, const char* key,
                  Spread fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number()) {
    double x = v.get<double>();
    return Spread{x, x};
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return Spread{v[0].get<double>(), v[1].get<double>()};
  }
  fail(path + "." + key, "expected a number or a [lo, hi] pair");
}

json spread_json(const Spread& s) {
  if (s.lo == s.hi) return json(s.lo);
  return json::array({s.lo, s.hi});
}

}  // namespace

int ScenarioSpec::total_nodes() const {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

void ScenarioSpec::validate() const {
  if (schema_version != kScenarioSchemaVersion) {
    fail("schema_version", "unsupported version (expected " +
                               std::to_string(kScenarioSchemaVersion) + ")");
  }
  if (duration_ms <= 0) fail("duration_ms", "must be positive");
  if (groups.empty()) fail("nodes", "at least one node group required");

  std::set<std::string> prefixes;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    std::string path = "nodes[" + std::to_string(gi) + "]";
    if (g.name_prefix.empty()) fail(path + ".name_prefix", "must be non-empty");
    if (!prefixes.insert(g.name_prefix).second) {
      fail(path + ".name_prefix", "duplicate group prefix '" + g.name_prefix + "'");
    }
    if (g.count < 1) fail(path + ".count", "must be >= 1");
    if (g.capacity < 1) fail(path + ".capacity", "must be >= 1");
    if (g.initial_credit < 0) fail(path + ".initial_credit", "must be >= 0");
    if (g.join_time_ms < 0) fail(path + ".join_time_ms", "must be >= 0");
    try {
      g.resources.validate();
    } catch (const ValidationError& e) {
      fail(path + ".resources", e.what());
    }
    bool advertises = g.behavior == Behavior::Honest ||
                      g.behavior == Behavior::NeverAccept;
    if (advertises && g.skills.empty()) {
      fail(path + ".skills", "advertising behaviors need at least one skill");
    }
    for (const auto& s : g.skills) {
      if (s.empty()) fail(path + ".skills", "skill names must be non-empty");
    }
    for (const auto& [skill, q] : g.quality) {
      std::string qp = path + ".quality." + skill;
      if (q.mean.lo < 0 || q.mean.lo > 1 || q.mean.hi < 0 || q.mean.hi > 1) {
        fail(qp + ".mean", "must be in [0,1]");
      }
      if (q.jitter < 0) fail(qp + ".jitter", "must be >= 0");
      bool tracks_mean = q.success_rate.lo < 0;
      if (!tracks_mean &&
          (q.success_rate.lo > 1 || q.success_rate.hi > 1 || q.success_rate.hi < 0)) {
        fail(qp + ".success_rate", "must be in [0,1] or \"mean\"");
      }
      if (q.service_median_ms <= 0) fail(qp + ".service_median_ms", "must be > 0");
      if (q.service_sigma < 0) fail(qp + ".service_sigma", "must be >= 0");
    }
    if (g.submit_period_ms <= 0) fail(path + ".submit_period_ms", "must be > 0");
    if (g.fabrication_period_ms <= 0) {
      fail(path + ".fabrication_period_ms", "must be > 0");
    }
    if (g.fabrication_pool <= 0) fail(path + ".fabrication_pool", "must be > 0");
    if (g.compromised_fraction < 0 || g.compromised_fraction > 1) {
      fail(path + ".compromised_fraction", "must be in [0,1]");
    }
  }

  if (latency.matrix.empty()) {
    if (latency.uniform_lo_ms < 0) fail("latency.uniform_ms", "lo must be >= 0");
    if (latency.uniform_hi_ms < latency.uniform_lo_ms) {
      fail("latency.uniform_ms", "hi must be >= lo");
    }
  } else {
    std::size_t n = static_cast<std::size_t>(total_nodes());
    if (latency.matrix.size() != n) {
      fail("latency.matrix", "must be square over the initial node count");
    }
    for (const auto& row : latency.matrix) {
      if (row.size() != n) fail("latency.matrix", "rows must have one entry per node");
      for (double v : row) {
        if (v < 0) fail("latency.matrix", "entries must be >= 0");
      }
    }
    if (churn.leave_rate > 0 || churn.join_rate > 0) {
      fail("latency.matrix", "matrix latency requires churn to be disabled");
    }
  }

  if (churn.leave_rate < 0 || churn.leave_rate > 1) {
    fail("churn.leave_rate", "must be in [0,1]");
  }
  if (churn.join_rate < 0 || churn.join_rate > 1) {
    fail("churn.join_rate", "must be in [0,1]");
  }
  if ((churn.join_rate > 0 || churn.replace) && !churn.template_group.empty()) {
    bool found = false;
    for (const auto& g : groups) found |= g.name_prefix == churn.template_group;
    if (!found) fail("churn.template_group", "names no existing group");
  }
  if ((churn.join_rate > 0 || churn.replace) && churn.template_group.empty()) {
    fail("churn.template_group", "required when churn joins are enabled");
  }

  if (workload.arrival_rate_per_s < 0) {
    fail("workload.arrival_rate_per_s", "must be >= 0");
  }
  if (workload.arrival_rate_per_s > 0) {
    if (workload.skill_weights.empty()) {
      fail("workload.skills", "required when tasks arrive");
    }
    double wsum = 0;
    for (const auto& [name, wgt] : workload.skill_weights) {
      if (name.empty()) fail("workload.skills", "skill names must be non-empty");
      if (wgt < 0) fail("workload.skills." + name, "weight must be >= 0");
      wsum += wgt;
    }
    if (wsum <= 0) fail("workload.skills", "weights must sum to > 0");
    if (workload.pool_uniform) {
      if (workload.pool_uniform->first <= 0 ||
          workload.pool_uniform->second < workload.pool_uniform->first) {
        fail("workload.pool_uniform", "needs 0 < lo <= hi");
      }
    } else if (workload.pool_credits <= 0) {
      fail("workload.pool_credits", "must be > 0");
    }
    double rsum = 0;
    for (const auto& [k, wgt] : workload.redundancy_weights) {
      if (k < 1) fail("workload.redundancy", "K must be >= 1");
      if (wgt < 0) fail("workload.redundancy", "weights must be >= 0");
      rsum += wgt;
    }
    if (rsum <= 0) fail("workload.redundancy", "weights must sum to > 0");
    if (workload.submitter_policy != "funded_uniform" &&
        workload.submitter_policy != "uniform") {
      fail("workload.submitter_policy", "must be funded_uniform or uniform");
    }
  }

  try {
    params.weights.validate();
  } catch (const ValidationError& e) {
    fail("params.weights", e.what());
  }
  if (params.alpha <= 0 || params.alpha >= 1) fail("params.alpha", "must be in (0,1)");
  try {
    params.decay.validate();
  } catch (const ValidationError& e) {
    fail("params", e.what());
  }
  if (params.samples < 1) fail("params.samples", "must be >= 1");
  try {
    params.registry.validate();
  } catch (const ValidationError& e) {
    fail("params", e.what());
  }
  if (params.puzzle_difficulty > kMaxPuzzleDifficulty) {
    fail("params.puzzle_difficulty", "exceeds cap of 24");
  }
  try {
    params.genesis_config().validate();
  } catch (const ValidationError& e) {
    fail("params.genesis", e.what());
  }
  if (params.max_attempts < 1) fail("params.max_attempts", "must be >= 1");
  if (params.sample_period_ms <= 0) fail("params.sample_period_ms", "must be > 0");
  if (params.ensemble_gamma <= 0 || params.ensemble_gamma > 1) {
    fail("params.ensemble_gamma", "must be in (0,1]");
  }
  if (params.attempt_timeout_ms <= 0) fail("params.attempt_timeout_ms", "must be > 0");
}

json ScenarioSpec::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["seed"] = seed;
  j["duration_ms"] = duration_ms;

  json nodes = json::array();
  for (const auto& g : groups) {
    json n;
    n["name_prefix"] = g.name_prefix;
    n["count"] = g.count;
    n["behavior"] = behavior_name(g.behavior);
    n["skills"] = g.skills;
    n["resources"] = {{"vram_mb", g.resources.vram_mb},
                      {"cpu_fraction", g.resources.cpu_fraction},
                      {"bandwidth_mbps", g.resources.bandwidth_mbps}};
    n["capacity"] = g.capacity;
    if (!g.origin.empty()) n["origin"] = g.origin;
    if (g.genesis_unlocked) n["genesis_unlocked"] = true;
    if (g.initial_credit != 0) n["initial_credit"] = g.initial_credit;
    if (g.join_time_ms != 0) n["join_time_ms"] = g.join_time_ms;
    if (!g.quality.empty()) {
      json q;
      for (const auto& [skill, prof] : g.quality) {
        json p;
        p["mean"] = spread_json(prof.mean);
        p["jitter"] = prof.jitter;
        if (prof.success_rate.lo < 0) {
          p["success_rate"] = "mean";
        } else {
          p["success_rate"] = spread_json(prof.success_rate);
        }
        p["service_median_ms"] = prof.service_median_ms;
        p["service_sigma"] = prof.service_sigma;
        q[skill] = p;
      }
      n["quality"] = q;
    }
    if (g.behavior == Behavior::FreeRider || g.behavior == Behavior::Sybil) {
      n["submit_period_ms"] = g.submit_period_ms;
    }
    if (g.behavior == Behavior::CollusionRing) {
      n["fabrication_period_ms"] = g.fabrication_period_ms;
      n["fabrication_pool"] = g.fabrication_pool;
      n["compromised_fraction"] = g.compromised_fraction;
    }
    nodes.push_back(n);
  }
  j["nodes"] = nodes;

  if (latency.matrix.empty()) {
    j["latency"] = {{"uniform_ms", {latency.uniform_lo_ms, latency.uniform_hi_ms}}};
  } else {
    j["latency"] = {{"matrix", latency.matrix}};
  }

  if (churn.leave_rate > 0 || churn.join_rate > 0 || churn.replace) {
    json c;
    c["leave_rate"] = churn.leave_rate;
    c["join_rate"] = churn.join_rate;
    c["replace"] = churn.replace;
    if (!churn.template_group.empty()) c["template_group"] = churn.template_group;
    j["churn"] = c;
  }

  json w;
  w["arrival_rate_per_s"] = workload.arrival_rate_per_s;
  if (!workload.skill_weights.empty()) w["skills"] = workload.skill_weights;
  if (workload.pool_uniform) {
    w["pool_uniform"] = {workload.pool_uniform->first, workload.pool_uniform->second};
  } else {
    w["pool_credits"] = workload.pool_credits;
  }
  json red;
  for (const auto& [k, wgt] : workload.redundancy_weights) {
    red[std::to_string(k)] = wgt;
  }
  w["redundancy"] = red;
  w["submitter_policy"] = workload.submitter_policy;
  j["workload"] = w;

  json p;
  p["weights"] = {{"w1", params.weights.w1},
                  {"w2", params.weights.w2},
                  {"w3", params.weights.w3},
                  {"w4", params.weights.w4},
                  {"d_max_ms", params.weights.d_max_ms}};
  p["alpha"] = params.alpha;
  p["beta"] = params.decay.beta;
  p["t0_ms"] = params.decay.t0_ms;
  p["samples"] = params.samples;
  p["t_refresh_ms"] = params.registry.t_refresh_ms;
  p["k_bucket_size"] = params.registry.k_bucket_size;
  p["gossip_fanout"] = params.registry.gossip_fanout;
  p["gossip_period_ms"] = params.registry.gossip_period_ms;
  p["gossip_repeat"] = params.registry.gossip_repeat;
  p["puzzle_difficulty"] = params.puzzle_difficulty;
  p["genesis"] = {{"c0", params.genesis_c0},
                  {"k0", params.genesis_k0},
                  {"grant_limit_per_origin", params.grant_limit_per_origin},
                  {"grant_window_ms", params.grant_window_ms}};
  p["max_attempts"] = params.max_attempts;
  p["require_skill"] = params.require_skill;
  p["sample_period_ms"] = params.sample_period_ms;
  p["ensemble_gamma"] = params.ensemble_gamma;
  p["attempt_timeout_ms"] = params.attempt_timeout_ms;
  j["params"] = p;
  return j;
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  expect_keys(j, "scenario",
              {"schema_version", "seed", "duration_ms", "nodes", "latency", "churn",
               "workload", "params"});
  ScenarioSpec s;
  s.schema_version = static_cast<int>(get_int(j, "scenario", "schema_version", 1));
  s.seed = static_cast<std::uint64_t>(get_int(j, "scenario", "seed", 0));
  s.duration_ms = get_int(j, "scenario", "duration_ms", 60'000);

  if (!j.contains("nodes") || !j.at("nodes").is_array()) {
    fail("nodes", "required array of node groups");
  }
  std::size_t gi = 0;
  for (const json& n : j.at("nodes")) {
    std::string path = "nodes[" + std::to_string(gi) + "]";
    expect_keys(n, path,
                {"name_prefix", "count", "behavior", "skills", "resources", "capacity",
                 "origin", "genesis_unlocked", "initial_credit", "join_time_ms",
                 "quality", "submit_period_ms", "fabrication_period_ms",
                 "fabrication_pool", "compromised_fraction"});
    NodeGroupSpec g;
    g.name_prefix = get_str(n, path, "name_prefix", "node" + std::to_string(gi));
    g.count = static_cast<int>(get_int(n, path, "count", 1));
    std::string bname = get_str(n, path, "behavior", "honest");
    auto b = behavior_from_name(bname);
    if (!b) fail(path + ".behavior", "unknown behavior '" + bname + "'");
    g.behavior = *b;
    if (n.contains("skills")) {
      if (!n.at("skills").is_array()) fail(path + ".skills", "expected an array");
      for (const json& sk : n.at("skills")) {
        if (!sk.is_string()) fail(path + ".skills", "expected strings");
        g.skills.push_back(sk.get<std::string>());
      }
    }
    if (n.contains("resources")) {
      const json& r = n.at("resources");
      expect_keys(r, path + ".resources", {"vram_mb", "cpu_fraction", "bandwidth_mbps"});
      g.resources.vram_mb =
          static_cast<std::uint64_t>(get_int(r, path + ".resources", "vram_mb", 8192));
      g.resources.cpu_fraction = get_num(r, path + ".resources", "cpu_fraction", 0.5);
      g.resources.bandwidth_mbps =
          get_num(r, path + ".resources", "bandwidth_mbps", 100.0);
    }
    g.capacity = static_cast<int>(get_int(n, path, "capacity", 4));
    g.origin = get_str(n, path, "origin", "");
    g.genesis_unlocked = get_bool(n, path, "genesis_unlocked", false);
    g.initial_credit = get_num(n, path, "initial_credit", 0.0);
    g.join_time_ms = get_int(n, path, "join_time_ms", 0);
    if (n.contains("quality")) {
      const json& q = n.at("quality");
      if (!q.is_object()) fail(path + ".quality", "expected an object keyed by skill");
      for (auto it = q.begin(); it != q.end(); ++it) {
        std::string qp = path + ".quality." + it.key();
        const json& prof = it.value();
        expect_keys(prof, qp,
                    {"mean", "jitter", "success_rate", "service_median_ms",
                     "service_sigma"});
        QualityProfileSpec qs;
        qs.mean = get_spread(prof, qp, "mean", Spread{0.8, 0.8});
        qs.jitter = get_num(prof, qp, "jitter", 0.05);
        if (prof.contains("success_rate") && prof.at("success_rate").is_string()) {
          if (prof.at("success_rate").get<std::string>() != "mean") {
            fail(qp + ".success_rate", "string form must be \"mean\"");
          }
          qs.success_rate = Spread{-1.0, -1.0};
        } else {
          qs.success_rate = get_spread(prof, qp, "success_rate", Spread{-1.0, -1.0});
        }
        qs.service_median_ms = get_num(prof, qp, "service_median_ms", 400.0);
        qs.service_sigma = get_num(prof, qp, "service_sigma", 0.4);
        g.quality[it.key()] = qs;
      }
    }
    g.submit_period_ms = get_int(n, path, "submit_period_ms", 5000);
    g.fabrication_period_ms = get_int(n, path, "fabrication_period_ms", 2000);
    g.fabrication_pool = get_num(n, path, "fabrication_pool", 1.0);
    g.compromised_fraction = get_num(n, path, "compromised_fraction", 0.0);
    s.groups.push_back(std::move(g));
    ++gi;
  }

  if (j.contains("latency")) {
    const json& l = j.at("latency");
    expect_keys(l, "latency", {"uniform_ms", "matrix"});
    if (l.contains("matrix")) {
      const json& m = l.at("matrix");
      if (!m.is_array()) fail("latency.matrix", "expected an array of arrays");
      for (const json& row : m) {
        if (!row.is_array()) fail("latency.matrix", "expected an array of arrays");
        std::vector<double> r;
        for (const json& v : row) {
          if (!v.is_number()) fail("latency.matrix", "entries must be numbers");
          r.push_back(v.get<double>());
        }
        s.latency.matrix.push_back(std::move(r));
      }
    } else if (l.contains("uniform_ms")) {
      const json& u = l.at("uniform_ms");
      if (!u.is_array() || u.size() != 2 || !u[0].is_number() || !u[1].is_number()) {
        fail("latency.uniform_ms", "expected [lo_ms, hi_ms]");
      }
      s.latency.uniform_lo_ms = u[0].get<double>();
      s.latency.uniform_hi_ms = u[1].get<double>();
    }
  }

  if (j.contains("churn")) {
    const json& c = j.at("churn");
    expect_keys(c, "churn", {"leave_rate", "join_rate", "replace", "template_group"});
    s.churn.leave_rate = get_num(c, "churn", "leave_rate", 0.0);
    s.churn.join_rate = get_num(c, "churn", "join_rate", 0.0);
    s.churn.replace = get_bool(c, "churn", "replace", false);
    s.churn.template_group = get_str(c, "churn", "template_group", "");
  }

  if (j.contains("workload")) {
    const json& w = j.at("workload");
    expect_keys(w, "workload",
                {"arrival_rate_per_s", "skills", "pool_credits", "pool_uniform",
                 "redundancy", "submitter_policy"});
    s.workload.arrival_rate_per_s = get_num(w, "workload", "arrival_rate_per_s", 0.0);
    if (w.contains("skills")) {
      const json& sk = w.at("skills");
      if (!sk.is_object()) fail("workload.skills", "expected an object of weights");
      for (auto it = sk.begin(); it != sk.end(); ++it) {
        if (!it.value().is_number()) {
          fail("workload.skills." + it.key(), "weight must be a number");
        }
        s.workload.skill_weights[it.key()] = it.value().get<double>();
      }
    }
    if (w.contains("pool_uniform")) {
      const json& u = w.at("pool_uniform");
      if (!u.is_array() || u.size() != 2 || !u[0].is_number() || !u[1].is_number()) {
        fail("workload.pool_uniform", "expected [lo, hi]");
      }
      s.workload.pool_uniform = {u[0].get<double>(), u[1].get<double>()};
    }
    s.workload.pool_credits = get_num(w, "workload", "pool_credits", 1.0);
    if (w.contains("redundancy")) {
      const json& r = w.at("redundancy");
      if (!r.is_object()) fail("workload.redundancy", "expected an object of weights");
      s.workload.redundancy_weights.clear();
      for (auto it = r.begin(); it != r.end(); ++it) {
        int k = 0;
        try {
          k = std::stoi(it.key());
        } catch (...) {
          fail("workload.redundancy", "keys must be integer K values");
        }
        if (!it.value().is_number()) {
          fail("workload.redundancy", "weights must be numbers");
        }
        s.workload.redundancy_weights[k] = it.value().get<double>();
      }
    }
    s.workload.submitter_policy =
        get_str(w, "workload", "submitter_policy", "funded_uniform");
  }

  if (j.contains("params")) {
    const json& p = j.at("params");
    expect_keys(p, "params",
                {"weights", "alpha", "beta", "t0_ms", "samples", "t_refresh_ms",
                 "k_bucket_size", "gossip_fanout", "gossip_period_ms", "gossip_repeat",
                 "puzzle_difficulty", "genesis", "max_attempts", "require_skill",
                 "sample_period_ms", "ensemble_gamma", "attempt_timeout_ms"});
    if (p.contains("weights")) {
      const json& w = p.at("weights");
      expect_keys(w, "params.weights", {"w1", "w2", "w3", "w4", "d_max_ms"});
      s.params.weights.w1 = get_num(w, "params.weights", "w1", 0.4);
      s.params.weights.w2 = get_num(w, "params.weights", "w2", 0.2);
      s.params.weights.w3 = get_num(w, "params.weights", "w3", 0.2);
      s.params.weights.w4 = get_num(w, "params.weights", "w4", 0.2);
      s.params.weights.d_max_ms = get_num(w, "params.weights", "d_max_ms", 500.0);
    }
    s.params.alpha = get_num(p, "params", "alpha", 0.1);
    s.params.decay.beta = get_num(p, "params", "beta", 0.1);
    s.params.decay.t0_ms = get_int(p, "params", "t0_ms", 24LL * 3600'000);
    s.params.samples = static_cast<int>(get_int(p, "params", "samples", 100));
    s.params.registry.t_refresh_ms = get_int(p, "params", "t_refresh_ms", 10'000);
    s.params.registry.k_bucket_size =
        static_cast<int>(get_int(p, "params", "k_bucket_size", 20));
    s.params.registry.gossip_fanout =
        static_cast<int>(get_int(p, "params", "gossip_fanout", 3));
    s.params.registry.gossip_period_ms = get_int(p, "params", "gossip_period_ms", 1000);
    s.params.registry.gossip_repeat =
        static_cast<int>(get_int(p, "params", "gossip_repeat", 3));
    s.params.puzzle_difficulty =
        static_cast<std::uint32_t>(get_int(p, "params", "puzzle_difficulty", 8));
    if (p.contains("genesis")) {
      const json& g = p.at("genesis");
      expect_keys(g, "params.genesis",
                  {"c0", "k0", "grant_limit_per_origin", "grant_window_ms"});
      s.params.genesis_c0 = get_num(g, "params.genesis", "c0", 10.0);
      s.params.genesis_k0 = static_cast<int>(get_int(g, "params.genesis", "k0", 10));
      s.params.grant_limit_per_origin =
          static_cast<int>(get_int(g, "params.genesis", "grant_limit_per_origin", 5));
      s.params.grant_window_ms =
          get_int(g, "params.genesis", "grant_window_ms", 24LL * 3600'000);
    }
    s.params.max_attempts = static_cast<int>(get_int(p, "params", "max_attempts", 3));
    s.params.require_skill = get_bool(p, "params", "require_skill", true);
    s.params.sample_period_ms = get_int(p, "params", "sample_period_ms", 1000);
    s.params.ensemble_gamma = get_num(p, "params", "ensemble_gamma", 0.5);
    s.params.attempt_timeout_ms = get_int(p, "params", "attempt_timeout_ms", 2000);
  }

  s.validate();
  return s;
}

ScenarioSpec ScenarioSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("scenario parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

void ScenarioSpec::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file: " + path);
  out << to_json().dump(2) << "\n";
}

}  // namespace swarm::sim
