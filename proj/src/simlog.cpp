#include <sodium.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swarm/errors.hpp"
#include "swarm/simnet.hpp"

namespace swarm::sim {

using nlohmann::json;

void EventLog::append(std::int64_t t, const std::string& kind, json payload) {
  payload["ev"] = kind;
  payload["seq"] = next_seq_;
  payload["t"] = t;
  next_seq_ += 1;
  lines_.push_back(payload.dump());
}

Bytes32 EventLog::digest() const {
  crypto_hash_sha256_state state;
  crypto_hash_sha256_init(&state);
  for (const auto& line : lines_) {
    crypto_hash_sha256_update(&state,
                              reinterpret_cast<const unsigned char*>(line.data()),
                              line.size());
    crypto_hash_sha256_update(&state, reinterpret_cast<const unsigned char*>("\n"), 1);
  }
  Bytes32 out{};
  crypto_hash_sha256_final(&state, out.data());
  return out;
}

void EventLog::write_to(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ValidationError("cannot write log file: " + path);
    for (const auto& line : lines_) out << line << "\n";
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> EventLog::read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read log file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double gini_coefficient(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    weighted += static_cast<double>(i + 1) * values[i];
  }
  if (sum <= 0.0) return 0.0;
  double n = static_cast<double>(values.size());
  return (2.0 * weighted - (n + 1.0) * sum) / (n * sum);
}

namespace {

struct ReplayNode {
  std::string name;
  std::string hex;
  std::string behavior;
  int capacity = 1;
  std::int64_t joined_at = 0;
  bool alive = true;
  Credit balance = 0;
  Credit locked = 0;
  double trust = 0.0;
  std::int64_t trust_anchor = 0;
  int in_flight = 0;
  std::uint64_t served = 0;
  std::uint64_t dispatches = 0;
  std::map<std::string, std::uint64_t> served_by_skill;
  std::int64_t first_credit_at = -1;
};

struct TaskInfo {
  std::string skill;
  std::string funding;
  Credit pool = 0;
};

struct PendingAttr {
  std::string submitter;
  std::vector<std::string> members;
  std::vector<Credit> deltas;
  std::vector<double> trust_after;
  Credit pool = 0;
  std::string funding;
};

json parse_line(const std::string& line, std::size_t idx) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError("log line " + std::to_string(idx + 1) +
                          ": parse error: " + e.what());
  }
}

}  // namespace

SwarmMetrics collect_metrics(const EventLog& log) { return collect_metrics(log.lines()); }

SwarmMetrics collect_metrics(const std::vector<std::string>& lines) {
  // footer first: decay/sampling parameters live in run_end so that logged
  // protocol events stay insensitive to tuning knobs until they matter
  json footer;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    json j = parse_line(*it, static_cast<std::size_t>(lines.rend() - it) - 1);
    if (j.value("ev", "") == "run_end") {
      footer = j;
      break;
    }
  }
  if (footer.is_null()) throw ValidationError("event log has no run_end footer");

  DecayParams decay{footer.at("beta").get<double>(), footer.at("t0_ms").get<std::int64_t>()};
  const std::int64_t period = footer.at("sample_period_ms").get<std::int64_t>();
  const std::int64_t duration = footer.at("duration_ms").get<std::int64_t>();

  SwarmMetrics metrics;
  std::map<std::string, ReplayNode> nodes;       // keyed by node hex
  std::vector<std::string> node_order;
  std::map<std::uint64_t, TaskInfo> task_info;
  std::map<std::uint64_t, PendingAttr> pending;
  std::map<std::string, bool> attempt_accepted;  // task:node -> accepted

  auto sample = [&](std::int64_t at) {
    metrics.sample_times.push_back(at);
    double total_served = 0;
    for (const auto& hex : node_order) total_served += nodes[hex].served;
    double gsum = 0;
    std::vector<double> balances;
    double spec_sum = 0;
    int spec_n = 0;
    double max_load = 0.0;
    for (std::size_t i = 0; i < node_order.size(); ++i) {
      ReplayNode& n = nodes[node_order[i]];
      NodeSeries& s = metrics.nodes[i];
      double bal = credits(n.balance);
      double tr = decay_trust(n.trust, std::max<std::int64_t>(0, at - n.trust_anchor),
                              decay);
      double load = n.alive && n.capacity > 0
                        ? std::min(1.0, static_cast<double>(n.in_flight) / n.capacity)
                        : 0.0;
      double share = total_served > 0 ? n.served / total_served : 0.0;
      double spec = 0.0;
      if (n.served > 0) {
        std::uint64_t modal = 0;
        for (const auto& [skill, c] : n.served_by_skill) modal = std::max(modal, c);
        spec = static_cast<double>(modal) / static_cast<double>(n.served);
        spec_sum += spec;
        spec_n += 1;
      }
      s.balance.push_back(bal);
      s.trust.push_back(tr);
      s.load.push_back(load);
      s.task_share.push_back(share);
      s.specialization.push_back(spec);
      s.dispatches.push_back(static_cast<double>(n.dispatches));
      balances.push_back(bal);
      max_load = std::max(max_load, load);
      (void)gsum;
    }
    metrics.gini.push_back(gini_coefficient(std::move(balances)));
    metrics.mean_specialization.push_back(spec_n > 0 ? spec_sum / spec_n : 0.0);
    metrics.max_load_share.push_back(max_load);
    metrics.overall_max_load_share =
        std::max(metrics.overall_max_load_share, max_load);
  };

  std::int64_t next_sample = 0;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    json j = parse_line(lines[li], li);
    std::string ev = j.value("ev", "");
    std::int64_t t = j.value("t", std::int64_t{0});

    while (next_sample <= duration && next_sample < t) {
      sample(next_sample);
      next_sample += period;
    }

    if (ev == "join") {
      std::string hex = j.at("node").get<std::string>();
      ReplayNode n;
      n.name = j.at("name").get<std::string>();
      n.hex = hex;
      n.behavior = j.at("behavior").get<std::string>();
      n.capacity = j.at("capacity").get<int>();
      n.joined_at = t;
      n.balance = j.at("balance0").get<Credit>();
      n.locked = j.at("locked0").get<Credit>();
      n.trust = 0.0;
      n.trust_anchor = t;
      if (!nodes.count(hex)) {
        node_order.push_back(hex);
        NodeSeries series;
        series.name = n.name;
        series.node_hex = hex;
        series.behavior = n.behavior;
        // backfill zeros for the samples taken before this node joined
        std::size_t filled = metrics.sample_times.size();
        series.balance.assign(filled, 0.0);
        series.trust.assign(filled, 0.0);
        series.load.assign(filled, 0.0);
        series.task_share.assign(filled, 0.0);
        series.specialization.assign(filled, 0.0);
        series.dispatches.assign(filled, 0.0);
        metrics.nodes.push_back(std::move(series));
      }
      nodes[hex] = std::move(n);
    } else if (ev == "leave") {
      auto it = nodes.find(j.at("node").get<std::string>());
      if (it != nodes.end()) it->second.alive = false;
    } else if (ev == "arrival") {
      metrics.tasks_arrived += 1;
      TaskInfo info;
      info.skill = j.at("skill").get<std::string>();
      info.funding = j.at("funding").get<std::string>();
      info.pool = j.at("pool").get<Credit>();
      task_info[j.at("task").get<std::uint64_t>()] = std::move(info);
    } else if (ev == "refused") {
      metrics.tasks_refused += 1;
    } else if (ev == "attempt") {
      std::string hex = j.at("node").get<std::string>();
      auto it = nodes.find(hex);
      if (it != nodes.end()) {
        it->second.dispatches += 1;
        bool accepted = j.at("accepted").get<bool>();
        attempt_accepted[j.at("task").dump() + ":" + hex] = accepted;
        if (accepted) it->second.in_flight += 1;
      }
    } else if (ev == "result") {
      std::string hex = j.at("node").get<std::string>();
      auto key = j.at("task").dump() + ":" + hex;
      auto acc_it = attempt_accepted.find(key);
      auto it = nodes.find(hex);
      if (it != nodes.end() && acc_it != attempt_accepted.end()) {
        if (acc_it->second && it->second.in_flight > 0) it->second.in_flight -= 1;
        attempt_accepted.erase(acc_it);
      }
      if (it != nodes.end() && j.at("outcome").get<std::string>() == "success") {
        it->second.served += 1;
        auto ti = task_info.find(j.at("task").get<std::uint64_t>());
        if (ti != task_info.end()) it->second.served_by_skill[ti->second.skill] += 1;
      }
    } else if (ev == "trust_penalty" || ev == "quarantined") {
      std::string hex = j.at(ev == "quarantined" ? "submitter" : "node")
                            .get<std::string>();
      auto it = nodes.find(hex);
      if (it != nodes.end()) {
        it->second.trust = j.at("trust").get<double>();
        it->second.trust_anchor = t;
      }
    } else if (ev == "attr") {
      PendingAttr p;
      p.submitter = j.at("submitter").get<std::string>();
      p.members = j.at("members").get<std::vector<std::string>>();
      p.deltas = j.at("deltas").get<std::vector<Credit>>();
      p.trust_after = j.at("trust_after").get<std::vector<double>>();
      p.pool = j.at("pool").get<Credit>();
      p.funding = j.at("funding").get<std::string>();
      pending[j.at("task").get<std::uint64_t>()] = std::move(p);
    } else if (ev == "applied") {
      auto pit = pending.find(j.at("task").get<std::uint64_t>());
      if (pit == pending.end()) continue;
      const PendingAttr& p = pit->second;
      auto sub = nodes.find(p.submitter);
      if (sub != nodes.end()) {
        if (p.funding == "grant") {
          sub->second.balance += p.pool;  // minted through the submitter
        }
        sub->second.balance -= p.pool;
      }
      bool first_pass = true;
      for (std::size_t i = 0; i < p.members.size(); ++i) {
        auto m = nodes.find(p.members[i]);
        if (m == nodes.end()) continue;
        m->second.balance += p.deltas[i];
        m->second.trust = p.trust_after[i];
        m->second.trust_anchor = t;
        if (p.deltas[i] > 0 && m->second.first_credit_at < 0) {
          m->second.first_credit_at = t;
        }
        (void)first_pass;
      }
      for (const auto& unlocked_hex :
           j.at("unlocked").get<std::vector<std::string>>()) {
        auto m = nodes.find(unlocked_hex);
        if (m != nodes.end()) {
          m->second.balance += m->second.locked;
          m->second.locked = 0;
        }
      }
      pending.erase(pit);
      metrics.tasks_served += 1;
    } else if (ev == "task_failed" || ev == "no_candidates") {
      metrics.tasks_exhausted += 1;
    }
  }

  while (next_sample <= duration) {
    sample(next_sample);
    next_sample += period;
  }

  for (const auto& hex : node_order) {
    const ReplayNode& n = nodes[hex];
    if (n.first_credit_at >= 0) {
      metrics.cold_start_ms[n.name] = n.first_credit_at - n.joined_at;
    }
  }
  return metrics;
}

ConservationReport conservation_check(const std::vector<std::string>& lines) {
  std::map<std::string, Credit> balance;
  std::map<std::string, Credit> locked;
  std::map<std::uint64_t, PendingAttr> pending;
  Credit injected_initial = 0;
  Credit injected_unlocked = 0;
  Credit injected_grants = 0;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    json j = parse_line(lines[li], li);
    std::string ev = j.value("ev", "");
    if (ev == "join") {
      std::string hex = j.at("node").get<std::string>();
      Credit b0 = j.at("balance0").get<Credit>();
      balance[hex] = b0;
      locked[hex] = j.at("locked0").get<Credit>();
      injected_initial += b0;
    } else if (ev == "attr") {
      PendingAttr p;
      p.submitter = j.at("submitter").get<std::string>();
      p.members = j.at("members").get<std::vector<std::string>>();
      p.deltas = j.at("deltas").get<std::vector<Credit>>();
      p.pool = j.at("pool").get<Credit>();
      p.funding = j.at("funding").get<std::string>();
      pending[j.at("task").get<std::uint64_t>()] = std::move(p);
    } else if (ev == "applied") {
      auto pit = pending.find(j.at("task").get<std::uint64_t>());
      if (pit == pending.end()) continue;
      const PendingAttr& p = pit->second;
      if (p.funding == "grant") {
        balance[p.submitter] += p.pool;
        injected_grants += p.pool;
      }
      balance[p.submitter] -= p.pool;
      for (std::size_t i = 0; i < p.members.size(); ++i) {
        balance[p.members[i]] += p.deltas[i];
      }
      for (const auto& hex : j.at("unlocked").get<std::vector<std::string>>()) {
        balance[hex] += locked[hex];
        injected_unlocked += locked[hex];
        locked[hex] = 0;
      }
      pending.erase(pit);
    }
  }

  ConservationReport report;
  for (const auto& [hex, b] : balance) report.total_balance += b;
  report.expected_total = injected_initial + injected_unlocked + injected_grants;
  report.exact = report.total_balance == report.expected_total;
  return report;
}

std::string SwarmMetrics::to_csv() const {
  std::ostringstream out;
  out << "t_ms,gini,mean_specialization,max_load_share";
  for (const auto& n : nodes) {
    out << ",balance_" << n.name << ",trust_" << n.name << ",load_" << n.name
        << ",share_" << n.name << ",spec_" << n.name << ",dispatches_" << n.name;
  }
  out << "\n";
  char buf[64];
  auto fmt = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    (void)ec;
  };
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    out << sample_times[i];
    fmt(gini[i]);
    fmt(mean_specialization[i]);
    fmt(max_load_share[i]);
    for (const auto& n : nodes) {
      fmt(n.balance[i]);
      fmt(n.trust[i]);
      fmt(n.load[i]);
      fmt(n.task_share[i]);
      fmt(n.specialization[i]);
      fmt(n.dispatches[i]);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace swarm::sim
