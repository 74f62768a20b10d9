#include <algorithm>
#include <cmath>
#include <queue>

#include "swarm/errors.hpp"
#include "swarm/simnet.hpp"

namespace swarm::sim {

using nlohmann::json;

namespace {

struct SimNode {
  // resolved configuration
  std::string name;
  Behavior behavior = Behavior::Honest;
  std::vector<std::string> skills;
  ResourceVector resources{};
  int capacity = 4;
  std::string origin;
  bool genesis_unlocked_init = false;
  Credit initial_credit = 0;
  std::map<std::string, QualityProfile> quality;
  std::int64_t submit_period_ms = 5000;
  std::int64_t fabrication_period_ms = 2000;
  Credit fabrication_pool = kCreditScale;
  double compromised_fraction = 0.0;
  int index = 0;  // position in the initial node list (latency matrix)

  // runtime state
  NodeIdentity identity{};
  RegistrationRecord reg{};
  bool alive = false;
  int in_flight = 0;
  std::uint64_t dispatches = 0;
  std::uint64_t served = 0;
  std::int64_t joined_at = -1;
};

struct AttemptResult {
  Bytes32 node{};
  bool accepted = false;
  AttemptOutcome outcome = AttemptOutcome::Failure;
  double quality = 0.0;
};

struct TaskState {
  std::string skill;
  Credit pool = 0;
  int redundancy = 1;
  Bytes32 submitter{};
  bool grant_funded = false;
  std::vector<Bytes32> order;
  int next_idx = 0;
  int max_attempts = 0;
  int pending = 0;
  std::vector<AttemptResult> done;
};

const char* outcome_name(AttemptOutcome o) {
  switch (o) {
    case AttemptOutcome::Success: return "success";
    case AttemptOutcome::Failure: return "failure";
    case AttemptOutcome::Timeout: return "timeout";
  }
  return "failure";
}

class Simulator {
 public:
  Simulator(const ScenarioSpec& spec, const RunOptions& opts)
      : spec_(spec),
        seed_(opts.seed_override.value_or(spec.seed)),
        opts_(opts),
        route_rng_(Rng::derive(seed_, "route")),
        attr_rng_(Rng::derive(seed_, "attribution")),
        churn_rng_(Rng::derive(seed_, "churn")),
        workload_rng_(Rng::derive(seed_, "workload")),
        quality_rng_(Rng::derive(seed_, "quality")),
        gossip_rng_(Rng::derive(seed_, "gossip")),
        adversary_rng_(Rng::derive(seed_, "adversary")),
        overlay_(spec.params.registry, spec.params.puzzle_difficulty),
        ledger_(spec.params.decay, spec.params.genesis_config(), spec.params.alpha) {}

  SimResult run();

 private:
  struct QEntry {
    std::int64_t t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct QCmp {
    bool operator()(const QEntry& a, const QEntry& b) const {
      return a.t > b.t || (a.t == b.t && a.seq > b.seq);
    }
  };

  void at(std::int64_t t, std::function<void()> fn) {
    queue_.push(QEntry{t, event_seq_++, std::move(fn)});
  }

  json hexj(const Bytes32& id) const { return json(to_hex(id)); }

  SimNode& node_of(const Bytes32& id) { return nodes_.at(id); }

  double latency_ms(const Bytes32& a, const Bytes32& b) const {
    if (a == b) return 0.0;
    if (!spec_.latency.matrix.empty()) {
      int ia = nodes_.at(a).index;
      int ib = nodes_.at(b).index;
      return spec_.latency.matrix[static_cast<std::size_t>(ia)]
                                 [static_cast<std::size_t>(ib)];
    }
    return spec_.latency.uniform_lo_ms +
           (spec_.latency.uniform_hi_ms - spec_.latency.uniform_lo_ms) *
               hash_uniform(seed_, "latency", a, b);
  }

  std::vector<Bytes32> bootstrap_peers(const Bytes32& self) const {
    std::vector<Bytes32> peers;
    for (const Bytes32& id : join_order_) {
      if (id != self && nodes_.at(id).alive) {
        peers.push_back(id);
        if (peers.size() == 3) break;
      }
    }
    return peers;
  }

  SimNode resolve_node(const NodeGroupSpec& g, int index_in_group,
                       const std::string& name) {
    SimNode n;
    n.name = name;
    n.behavior = g.behavior;
    n.skills = g.skills;
    n.resources = g.resources;
    n.capacity = g.capacity;
    n.origin = g.origin.empty() ? ("origin-" + name) : g.origin;
    n.genesis_unlocked_init = g.genesis_unlocked;
    n.initial_credit = to_micro(g.initial_credit);
    n.submit_period_ms = g.submit_period_ms;
    n.fabrication_period_ms = g.fabrication_period_ms;
    n.fabrication_pool = to_micro(g.fabrication_pool);
    n.compromised_fraction = g.compromised_fraction;
    for (const auto& skill : g.skills) {
      QualityProfile prof;
      auto it = g.quality.find(skill);
      if (it != g.quality.end()) {
        const QualityProfileSpec& qs = it->second;
        prof.mean = std::clamp(qs.mean.resolve(index_in_group, g.count), 0.0, 1.0);
        prof.jitter = qs.jitter;
        prof.success_rate =
            qs.success_rate.lo < 0
                ? prof.mean
                : std::clamp(qs.success_rate.resolve(index_in_group, g.count), 0.0, 1.0);
        prof.service_median_ms = qs.service_median_ms;
        prof.service_sigma = qs.service_sigma;
      } else {
        prof.success_rate = prof.mean;
      }
      n.quality[skill] = prof;
    }
    return n;
  }

  void spawn(SimNode cfg, std::int64_t when) {
    cfg.identity = scenario_node_identity(seed_, cfg.name);
    cfg.reg = make_registration(cfg.identity, spec_.params.puzzle_difficulty);
    Bytes32 id = cfg.identity.node_id;
    cfg.index = static_cast<int>(join_order_.size());
    join_order_.push_back(id);
    name_to_id_[cfg.name] = id;
    nodes_.emplace(id, std::move(cfg));
    at(when, [this, id] { handle_join(id); });
  }

  void handle_join(const Bytes32& id) {
    SimNode& n = node_of(id);
    n.alive = true;
    n.joined_at = now_;

    ledger_.register_account(id, n.identity.public_key, now_, 0.0);
    if (n.initial_credit > 0) ledger_.deposit(id, n.initial_credit);
    ledger_.genesis_endow(id);
    if (n.genesis_unlocked_init) ledger_.force_unlock(id);
    const LedgerAccount& acct = ledger_.account(id);

    overlay_.join(n.reg, ExplicitPeerList(bootstrap_peers(id)));

    log_.append(now_, "join",
                {{"node", to_hex(id)},
                 {"name", n.name},
                 {"behavior", behavior_name(n.behavior)},
                 {"origin", n.origin},
                 {"capacity", n.capacity},
                 {"skills", n.skills},
                 {"puzzle_nonce", n.reg.puzzle.nonce},
                 {"balance0", acct.balance},
                 {"locked0", acct.genesis_locked}});

    bool advertises =
        n.behavior == Behavior::Honest || n.behavior == Behavior::NeverAccept;
    if (advertises) {
      publish_ads(id);
      at(now_ + spec_.params.registry.t_refresh_ms, [this, id] { handle_refresh(id); });
    }
    at(now_ + spec_.params.registry.gossip_period_ms, [this, id] { handle_gossip(id); });

    if (n.behavior == Behavior::FreeRider || n.behavior == Behavior::Sybil) {
      at(now_ + n.submit_period_ms, [this, id] { handle_adversary_submit(id); });
    }
    if (n.behavior == Behavior::CollusionRing) {
      at(now_ + n.fabrication_period_ms, [this, id] { handle_fabrication(id); });
    }
  }

  void publish_ads(const Bytes32& id) {
    SimNode& n = node_of(id);
    double trust = ledger_.trust_of(id, now_);
    Advertisement ad =
        make_advertisement(n.identity, n.skills, n.resources, trust, now_);
    PublishResult pr = overlay_.publish(id, ad);
    log_.append(now_, "publish",
                {{"node", to_hex(id)},
                 {"stored_on", pr.stored_on},
                 {"rejected", pr.rejected}});
  }

  void handle_refresh(const Bytes32& id) {
    SimNode& n = node_of(id);
    if (!n.alive) return;
    std::size_t evicted = overlay_.evict_stale(id, now_);
    if (evicted > 0) {
      log_.append(now_, "evict", {{"node", to_hex(id)}, {"count", evicted}});
    }
    publish_ads(id);
    at(now_ + spec_.params.registry.t_refresh_ms, [this, id] { handle_refresh(id); });
  }

  void handle_gossip(const Bytes32& id) {
    SimNode& n = node_of(id);
    if (!n.alive) return;
    std::size_t msgs = overlay_.gossip_round(id, gossip_rng_);
    if (msgs > 0) {
      log_.append(now_, "gossip", {{"node", to_hex(id)}, {"msgs", msgs}});
    }
    at(now_ + spec_.params.registry.gossip_period_ms, [this, id] { handle_gossip(id); });
  }

  void handle_churn_tick() {
    int leaves = 0;
    std::vector<Bytes32> alive_honest;
    for (const Bytes32& id : join_order_) {
      if (nodes_.at(id).alive && nodes_.at(id).behavior == Behavior::Honest) {
        alive_honest.push_back(id);
      }
    }
    for (const Bytes32& id : alive_honest) {
      if (static_cast<int>(alive_honest.size()) - leaves <= 1) break;  // keep one up
      if (churn_rng_.bernoulli(spec_.churn.leave_rate)) {
        SimNode& n = node_of(id);
        n.alive = false;
        overlay_.leave(id);
        log_.append(now_, "leave", {{"node", to_hex(id)}, {"name", n.name}});
        ++leaves;
      }
    }
    int joins = spec_.churn.replace
                    ? leaves
                    : (spec_.churn.join_rate > 0 &&
                               churn_rng_.bernoulli(spec_.churn.join_rate)
                           ? 1
                           : 0);
    if (joins > 0) {
      const NodeGroupSpec* tmpl = nullptr;
      for (const auto& g : spec_.groups) {
        if (g.name_prefix == spec_.churn.template_group) tmpl = &g;
      }
      if (tmpl) {
        for (int i = 0; i < joins; ++i) {
          int idx = churn_spawn_ % std::max(1, tmpl->count);
          std::string name = "churn-" + std::to_string(churn_spawn_++);
          spawn(resolve_node(*tmpl, idx, name), now_);
        }
      }
    }
    at(now_ + spec_.params.registry.t_refresh_ms, [this] { handle_churn_tick(); });
  }

  // -- workload ------------------------------------------------------------

  template <typename K>
  K categorical(const std::map<K, double>& weights, Rng& rng) {
    double total = 0;
    for (const auto& [k, w] : weights) total += w;
    double x = rng.uniform() * total;
    for (const auto& [k, w] : weights) {
      x -= w;
      if (x <= 0) return k;
    }
    return weights.rbegin()->first;
  }

  void schedule_next_arrival() {
    double rate_per_ms = spec_.workload.arrival_rate_per_s / 1000.0;
    std::int64_t dt =
        std::max<std::int64_t>(1, std::llround(workload_rng_.exponential(rate_per_ms)));
    at(now_ + dt, [this] { handle_arrival(); });
  }

  void handle_arrival() {
    if (now_ > spec_.duration_ms) return;
    schedule_next_arrival();

    std::string skill = categorical(spec_.workload.skill_weights, workload_rng_);
    int redundancy = categorical(spec_.workload.redundancy_weights, workload_rng_);
    Credit pool = spec_.workload.pool_uniform
                      ? to_micro(workload_rng_.uniform(spec_.workload.pool_uniform->first,
                                                       spec_.workload.pool_uniform->second))
                      : to_micro(spec_.workload.pool_credits);

    std::vector<Bytes32> honest;
    for (const Bytes32& id : join_order_) {
      const SimNode& n = nodes_.at(id);
      if (n.alive && n.behavior == Behavior::Honest) honest.push_back(id);
    }
    if (honest.empty()) {
      log_.append(now_, "refused", {{"reason", "no_alive_submitter"}});
      ++tasks_refused_;
      return;
    }

    Bytes32 submitter{};
    bool found = false;
    if (spec_.workload.submitter_policy == "funded_uniform") {
      std::vector<Bytes32> funded;
      for (const Bytes32& id : honest) {
        if (ledger_.spendable(id) >= pool) funded.push_back(id);
      }
      if (!funded.empty()) {
        submitter = funded[workload_rng_.uniform_u64(funded.size())];
        found = true;
      } else {
        std::vector<Bytes32> grantable;
        for (const Bytes32& id : honest) {
          if (!ledger_.account(id).grant_received) grantable.push_back(id);
        }
        if (!grantable.empty()) {
          submitter = grantable[workload_rng_.uniform_u64(grantable.size())];
          found = true;
        }
      }
    } else {
      submitter = honest[workload_rng_.uniform_u64(honest.size())];
      found = true;
    }
    if (!found) {
      log_.append(now_, "refused", {{"reason", "no_funded_submitter"}});
      ++tasks_refused_;
      return;
    }
    submit_task(submitter, skill, pool, redundancy);
  }

  void submit_task(const Bytes32& submitter, const std::string& skill, Credit pool,
                   int redundancy) {
    bool grant_funded = false;
    if (ledger_.spendable(submitter) >= pool) {
      bool ok = ledger_.reserve(submitter, pool);
      if (!ok) {
        log_.append(now_, "refused",
                    {{"submitter", to_hex(submitter)}, {"reason", "insufficient_balance"}});
        ++tasks_refused_;
        return;
      }
    } else {
      const SimNode& n = node_of(submitter);
      Ledger::GrantDecision grant =
          ledger_.grant_genesis_task(submitter, n.origin, now_);
      if (!grant.granted) {
        log_.append(now_, "grant_refused",
                    {{"node", to_hex(submitter)}, {"origin", n.origin},
                     {"reason", grant.refusal}});
        log_.append(now_, "refused",
                    {{"submitter", to_hex(submitter)},
                     {"reason", "insufficient_balance"}});
        ++tasks_refused_;
        return;
      }
      log_.append(now_, "grant_issued",
                  {{"node", to_hex(submitter)}, {"origin", n.origin}});
      grant_funded = true;
      pool = ledger_.genesis_config().unit_task_cost();
    }

    std::uint64_t task_id = next_task_id_++;
    ++tasks_arrived_;
    log_.append(now_, "arrival",
                {{"task", task_id},
                 {"submitter", to_hex(submitter)},
                 {"skill", skill},
                 {"pool", pool},
                 {"k", redundancy},
                 {"funding", grant_funded ? "grant" : "balance"}});

    TaskState st;
    st.skill = skill;
    st.pool = pool;
    st.redundancy = redundancy;
    st.submitter = submitter;
    st.grant_funded = grant_funded;

    LookupResult lr = overlay_.lookup(submitter, skill, now_);
    std::vector<CandidateObservation> observations;
    for (const Advertisement& ad : lr.ads) {
      auto it = nodes_.find(ad.node_id);
      if (it == nodes_.end()) continue;
      CandidateObservation obs;
      obs.node_id = ad.node_id;
      obs.has_skill =
          std::find(ad.skills.begin(), ad.skills.end(), skill) != ad.skills.end();
      obs.load = it->second.alive
                     ? std::min(1.0, static_cast<double>(it->second.in_flight) /
                                         std::max(1, it->second.capacity))
                     : 0.0;
      obs.rtt_ms = latency_ms(submitter, ad.node_id);
      obs.trust = ledger_.trust_of(ad.node_id, now_);
      observations.push_back(obs);
    }
    if (spec_.params.require_skill) {
      std::erase_if(observations,
                    [](const CandidateObservation& o) { return !o.has_skill; });
    }
    if (lr.status == LookupStatus::NoRoute || observations.empty()) {
      release_funding(st);
      log_.append(now_, "no_candidates", {{"task", task_id}});
      ++tasks_exhausted_;
      return;
    }

    std::vector<std::size_t> ranking =
        rank_candidates(observations, spec_.params.weights, route_rng_);
    for (std::size_t idx : ranking) st.order.push_back(observations[idx].node_id);

    if (opts_.explain_task_id && *opts_.explain_task_id == task_id) {
      ExplainCapture cap;
      cap.task_id = task_id;
      cap.skill = skill;
      cap.weights = spec_.params.weights;
      for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
        const CandidateObservation& o = observations[ranking[rank]];
        ExplainCapture::Row row;
        row.name = node_of(o.node_id).name;
        row.node_hex = to_hex(o.node_id);
        row.has_skill = o.has_skill;
        row.load = o.load;
        row.rtt_ms = o.rtt_ms;
        row.trust = o.trust;
        row.score = utility(o, cap.weights);
        row.rank = static_cast<int>(rank) + 1;
        row.chosen = rank < static_cast<std::size_t>(std::max(1, st.redundancy));
        cap.rows.push_back(row);
      }
      explain_ = std::move(cap);
    }

    st.max_attempts = std::min<int>(spec_.params.max_attempts,
                                    static_cast<int>(st.order.size()));
    auto [it, inserted] = tasks_.emplace(task_id, std::move(st));
    TaskState& state = it->second;
    if (state.redundancy == 1) {
      state.next_idx = 1;
      start_attempt(task_id, state.order[0]);
    } else {
      int k = std::min<int>(state.redundancy, static_cast<int>(state.order.size()));
      state.pending = k;
      for (int i = 0; i < k; ++i) start_attempt(task_id, state.order[static_cast<std::size_t>(i)]);
    }
  }

  void release_funding(const TaskState& st) {
    if (!st.grant_funded) ledger_.release(st.submitter, st.pool);
    // grants are single-use; an exhausted grant task burns the token
  }

  void start_attempt(std::uint64_t task_id, const Bytes32& target_id) {
    SimNode& target = node_of(target_id);
    target.dispatches += 1;
    const TaskState& st = tasks_.at(task_id);
    double rtt = latency_ms(st.submitter, target_id);

    bool accepted = false;
    AttemptOutcome outcome = AttemptOutcome::Timeout;
    double quality = 0.0;
    std::int64_t finish_at = now_ + spec_.params.attempt_timeout_ms;

    if (!target.alive) {
      // unreachable: timeout after the full window
    } else if (target.behavior == Behavior::NeverAccept) {
      outcome = AttemptOutcome::Failure;  // explicit refusal
      finish_at = now_ + std::max<std::int64_t>(1, std::llround(2 * rtt));
    } else if (target.in_flight >= target.capacity) {
      outcome = AttemptOutcome::Timeout;  // busy signal, not a quality failure
      finish_at = now_ + std::max<std::int64_t>(1, std::llround(2 * rtt));
    } else {
      accepted = true;
      target.in_flight += 1;
      auto qit = target.quality.find(st.skill);
      QualityProfile prof = qit != target.quality.end() ? qit->second : QualityProfile{};
      bool success = quality_rng_.bernoulli(prof.success_rate);
      quality = std::clamp(prof.mean + quality_rng_.uniform(-prof.jitter, prof.jitter),
                           0.0, 1.0);
      double service =
          quality_rng_.lognormal_median(prof.service_median_ms, prof.service_sigma);
      outcome = success ? AttemptOutcome::Success : AttemptOutcome::Failure;
      finish_at = now_ + std::max<std::int64_t>(1, std::llround(rtt + service));
    }

    log_.append(now_, "attempt",
                {{"task", task_id}, {"node", to_hex(target_id)}, {"accepted", accepted}});
    at(finish_at, [this, task_id, target_id, accepted, outcome, quality] {
      finish_attempt(task_id, target_id, accepted, outcome, quality);
    });
  }

  void finish_attempt(std::uint64_t task_id, const Bytes32& target_id, bool accepted,
                      AttemptOutcome outcome, double quality) {
    SimNode& target = node_of(target_id);
    if (accepted) {
      if (target.in_flight > 0) target.in_flight -= 1;
      if (!target.alive) {
        outcome = AttemptOutcome::Timeout;  // departed mid-service
        quality = 0.0;
      }
    }
    json payload = {{"task", task_id},
                    {"node", to_hex(target_id)},
                    {"outcome", outcome_name(outcome)}};
    if (outcome == AttemptOutcome::Success) {
      payload["q"] = quality;
      target.served += 1;
    }
    log_.append(now_, "result", payload);

    if (outcome == AttemptOutcome::Failure) {
      double tau = ledger_.trust_of(target_id, now_);
      double after = tau - spec_.params.alpha * tau;
      ledger_.write_trust(target_id, after, now_);
      log_.append(now_, "trust_penalty",
                  {{"node", to_hex(target_id)}, {"trust", after}});
    }

    auto task_it = tasks_.find(task_id);
    if (task_it == tasks_.end()) return;
    TaskState& st = task_it->second;
    st.done.push_back({target_id, accepted, outcome, quality});

    if (st.redundancy == 1) {
      if (outcome == AttemptOutcome::Success) {
        complete_task(task_id, st);
        tasks_.erase(task_it);
      } else if (st.next_idx < st.max_attempts) {
        const Bytes32 next = st.order[static_cast<std::size_t>(st.next_idx++)];
        start_attempt(task_id, next);
      } else {
        exhaust_task(task_id, st);
        tasks_.erase(task_it);
      }
      return;
    }

    st.pending -= 1;
    if (st.pending > 0) return;
    bool any_success = false;
    for (const auto& a : st.done) any_success |= a.outcome == AttemptOutcome::Success;
    if (any_success) {
      complete_task(task_id, st);
    } else {
      exhaust_task(task_id, st);
    }
    tasks_.erase(task_it);
  }

  void complete_task(std::uint64_t task_id, TaskState& st) {
    std::vector<Bytes32> members;
    std::vector<RedundantOutcome> outcomes;
    for (const auto& a : st.done) {
      if (a.outcome != AttemptOutcome::Success) continue;
      members.push_back(a.node);
      const SimNode& n = nodes_.at(a.node);
      auto qit = n.quality.find(st.skill);
      double accuracy = qit != n.quality.end() ? std::max(1e-6, qit->second.mean) : 0.5;
      outcomes.push_back(RedundantOutcome{a.quality, accuracy});
    }
    const int k = static_cast<int>(members.size());

    CoalitionValueFn fn;
    if (k == 1) {
      SingleNodeModel model{outcomes[0].quality};
      fn = model.fn();
    } else {
      EnsembleModel model = merge_redundant(outcomes, spec_.params.ensemble_gamma);
      fn = model.fn();
    }

    std::vector<double> trust_before;
    for (const Bytes32& m : members) trust_before.push_back(ledger_.trust_of(m, now_));

    AttributionParams params{spec_.params.alpha, spec_.params.samples};
    AttributionOutcome ao =
        attribute(st.pool, fn, k, params, trust_before, attr_rng_);

    AttributionRecord record;
    record.task_id = task_id;
    record.submitter = st.submitter;
    record.members = members;
    record.deltas = ao.deltas;
    record.trust_after = ao.trust_after;
    record.pool = st.pool;
    record.uniform_fallback = ao.uniform_fallback;

    const SimNode& submitter = nodes_.at(st.submitter);
    Bytes64 sig = countersign(submitter.identity, record);

    ApplyReport report = ledger_.apply_attribution(record, sig, now_, st.grant_funded,
                                                   !st.grant_funded);

    json members_json = json::array();
    json deltas_json = json::array();
    json trust_json = json::array();
    for (int i = 0; i < k; ++i) {
      members_json.push_back(to_hex(members[static_cast<std::size_t>(i)]));
      deltas_json.push_back(ao.deltas[static_cast<std::size_t>(i)]);
      trust_json.push_back(ao.trust_after[static_cast<std::size_t>(i)]);
    }
    log_.append(now_, "attr",
                {{"task", task_id},
                 {"submitter", to_hex(st.submitter)},
                 {"members", members_json},
                 {"deltas", deltas_json},
                 {"trust_after", trust_json},
                 {"pool", st.pool},
                 {"fallback", ao.uniform_fallback},
                 {"funding", st.grant_funded ? "grant" : "balance"}});

    if (report.status == ApplyStatus::Applied) {
      json unlocked = json::array();
      for (const Bytes32& u : report.unlocked) unlocked.push_back(to_hex(u));
      log_.append(now_, "applied",
                  {{"task", task_id}, {"unlocked", unlocked},
                   {"injected", report.injected}});
      ++tasks_served_;
    } else {
      // should not happen for simulator-generated records
      log_.append(now_, "apply_failed",
                  {{"task", task_id}, {"status", static_cast<int>(report.status)}});
    }
  }

  void exhaust_task(std::uint64_t task_id, TaskState& st) {
    release_funding(st);
    log_.append(now_, "task_failed", {{"task", task_id}, {"reason", "exhausted"}});
    ++tasks_exhausted_;
  }

  // -- adversaries ----------------------------------------------------------

  std::string adversary_skill() {
    if (!spec_.workload.skill_weights.empty()) {
      return categorical(spec_.workload.skill_weights, adversary_rng_);
    }
    for (const auto& g : spec_.groups) {
      if (!g.skills.empty() &&
          (g.behavior == Behavior::Honest || g.behavior == Behavior::NeverAccept)) {
        return g.skills.front();
      }
    }
    return "skill";
  }

  void handle_adversary_submit(const Bytes32& id) {
    SimNode& n = node_of(id);
    if (!n.alive || now_ > spec_.duration_ms) return;
    at(now_ + n.submit_period_ms, [this, id] { handle_adversary_submit(id); });

    Credit pool = ledger_.genesis_config().unit_task_cost();
    submit_task(id, adversary_skill(), pool, 1);
  }

  void handle_fabrication(const Bytes32& id) {
    SimNode& n = node_of(id);
    if (!n.alive || now_ > spec_.duration_ms) return;
    at(now_ + n.fabrication_period_ms, [this, id] { handle_fabrication(id); });

    std::vector<Bytes32> victims;
    std::vector<Bytes32> ring;
    for (const Bytes32& nid : join_order_) {
      const SimNode& other = nodes_.at(nid);
      if (!other.alive) continue;
      if (other.behavior == Behavior::Honest) victims.push_back(nid);
      if (other.behavior == Behavior::CollusionRing) ring.push_back(nid);
    }
    if (victims.empty() || ring.empty()) return;
    ++fabrications_;

    const Bytes32 victim = victims[adversary_rng_.uniform_u64(victims.size())];
    std::vector<double> weights(ring.size(), 1.0);
    std::vector<Credit> deltas = apportion(weights, n.fabrication_pool);
    std::vector<double> trust_after;
    for (const Bytes32& m : ring) {
      double tau = ledger_.trust_of(m, now_);
      trust_after.push_back(tau + spec_.params.alpha * (1.0 - tau));
    }

    AttributionRecord record;
    record.task_id = (std::uint64_t{1} << 63) | next_fabrication_id_++;
    record.submitter = victim;
    record.members = ring;
    record.deltas = deltas;
    record.trust_after = trust_after;
    record.pool = n.fabrication_pool;
    record.uniform_fallback = false;

    bool compromised =
        hash_uniform(seed_, "compromised", victim, victim) < n.compromised_fraction;
    Bytes64 sig = compromised ? countersign(nodes_.at(victim).identity, record)
                              : countersign(n.identity, record);

    json members_json = json::array();
    json deltas_json = json::array();
    json trust_json = json::array();
    for (std::size_t i = 0; i < ring.size(); ++i) {
      members_json.push_back(to_hex(ring[i]));
      deltas_json.push_back(deltas[i]);
      trust_json.push_back(trust_after[i]);
    }
    log_.append(now_, "attr",
                {{"task", record.task_id},
                 {"submitter", to_hex(victim)},
                 {"members", members_json},
                 {"deltas", deltas_json},
                 {"trust_after", trust_json},
                 {"pool", record.pool},
                 {"fallback", false},
                 {"funding", "fabricated"}});

    ApplyReport report = ledger_.apply_attribution(record, sig, now_, false, false);
    if (report.status == ApplyStatus::Applied) {
      json unlocked = json::array();
      for (const Bytes32& u : report.unlocked) unlocked.push_back(to_hex(u));
      log_.append(now_, "applied",
                  {{"task", record.task_id}, {"unlocked", unlocked}, {"injected", 0}});
    } else if (report.status == ApplyStatus::QuarantinedBadSignature) {
      log_.append(now_, "quarantined",
                  {{"task", record.task_id},
                   {"submitter", to_hex(victim)},
                   {"trust", report.submitter_trust_after}});
    } else {
      log_.append(now_, "fabrication_refused",
                  {{"task", record.task_id}, {"status", static_cast<int>(report.status)}});
    }
  }

  // -- members --------------------------------------------------------------

  ScenarioSpec spec_;
  std::uint64_t seed_;
  RunOptions opts_;
  std::int64_t now_ = 0;
  std::uint64_t event_seq_ = 0;
  std::priority_queue<QEntry, std::vector<QEntry>, QCmp> queue_;

  Rng route_rng_, attr_rng_, churn_rng_, workload_rng_, quality_rng_, gossip_rng_,
      adversary_rng_;

  Overlay overlay_;
  Ledger ledger_;
  EventLog log_;

  std::vector<Bytes32> join_order_;
  std::map<Bytes32, SimNode> nodes_;
  std::map<std::string, Bytes32> name_to_id_;

  std::map<std::uint64_t, TaskState> tasks_;
  std::uint64_t next_task_id_ = 1;
  std::uint64_t next_fabrication_id_ = 1;
  int churn_spawn_ = 0;

  std::uint64_t tasks_arrived_ = 0, tasks_served_ = 0, tasks_exhausted_ = 0,
                tasks_refused_ = 0, fabrications_ = 0;
  std::optional<ExplainCapture> explain_;
};

SimResult Simulator::run() {
  log_.append(0, "run_start",
              {{"schema_version", spec_.schema_version},
               {"seed", seed_},
               {"initial_nodes", spec_.total_nodes()}});

  for (const auto& g : spec_.groups) {
    for (int i = 0; i < g.count; ++i) {
      std::string name = g.count == 1 ? g.name_prefix
                                      : g.name_prefix + "-" + std::to_string(i);
      spawn(resolve_node(g, i, name), g.join_time_ms);
    }
  }
  if (spec_.churn.leave_rate > 0 || spec_.churn.join_rate > 0 || spec_.churn.replace) {
    at(spec_.params.registry.t_refresh_ms, [this] { handle_churn_tick(); });
  }
  if (spec_.workload.arrival_rate_per_s > 0) {
    schedule_next_arrival();
  }

  while (!queue_.empty()) {
    QEntry entry = queue_.top();
    queue_.pop();
    if (entry.t > spec_.duration_ms) continue;  // drain without executing
    now_ = entry.t;
    entry.fn();
  }
  now_ = spec_.duration_ms;

  log_.append(now_, "run_end",
              {{"duration_ms", spec_.duration_ms},
               {"sample_period_ms", spec_.params.sample_period_ms},
               {"alpha", spec_.params.alpha},
               {"beta", spec_.params.decay.beta},
               {"t0_ms", spec_.params.decay.t0_ms},
               {"tasks_arrived", tasks_arrived_},
               {"tasks_served", tasks_served_},
               {"tasks_exhausted", tasks_exhausted_},
               {"tasks_refused", tasks_refused_},
               {"fabrications", fabrications_}});

  SimResult result;
  result.metrics = collect_metrics(log_);
  result.log = std::move(log_);

  for (const Bytes32& id : join_order_) {
    const SimNode& n = nodes_.at(id);
    const LedgerAccount& acct = ledger_.account(id);
    AccountSnapshot snap;
    snap.name = n.name;
    snap.behavior = behavior_name(n.behavior);
    snap.balance = acct.balance;
    snap.locked = acct.genesis_locked;
    snap.genesis_unlocked = acct.genesis_unlocked;
    snap.trust = ledger_.trust_of(id, now_);
    snap.grants_used = acct.grants_used;
    snap.served = n.served;
    snap.dispatches = n.dispatches;
    result.accounts.push_back(std::move(snap));
  }
  result.total_balance = ledger_.total_balance();
  result.expected_total = ledger_.expected_total();
  result.injected_initial = ledger_.injected_initial();
  result.injected_unlocked = ledger_.injected_unlocked();
  result.injected_grants = ledger_.injected_grants();
  result.grants_issued = ledger_.grants_issued();
  result.grants_refused = ledger_.grants_refused();
  result.quarantined = ledger_.quarantined_count();
  result.fabrications = fabrications_;
  result.tasks_arrived = tasks_arrived_;
  result.tasks_served = tasks_served_;
  result.tasks_exhausted = tasks_exhausted_;
  result.tasks_refused = tasks_refused_;
  result.explain = std::move(explain_);
  return result;
}

}  // namespace

NodeIdentity scenario_node_identity(std::uint64_t seed, const std::string& name) {
  Writer w;
  w.u64(seed);
  w.str("node-identity");
  w.str(name);
  return generate_identity(sha256(w.data()));
}

SimResult run(const ScenarioSpec& spec, const RunOptions& options) {
  spec.validate();
  Simulator sim(spec, options);
  return sim.run();
}

}  // namespace swarm::sim
