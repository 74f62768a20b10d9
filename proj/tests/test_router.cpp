#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "swarm/errors.hpp"
#include "swarm/router.hpp"
#include "swarm/rng.hpp"

using namespace swarm;

namespace {

Bytes32 id_of(std::uint8_t tag) {
  Bytes32 b{};
  b[0] = tag;
  return b;
}

CandidateObservation cand(std::uint8_t tag, bool skill, double load, double rtt,
                          double trust) {
  return CandidateObservation{id_of(tag), skill, load, rtt, trust};
}

UtilityWeights default_weights() { return UtilityWeights{0.4, 0.2, 0.2, 0.2, 500.0}; }

CandidateObservation random_candidate(Rng& rng, std::uint8_t tag) {
  return cand(tag, rng.bernoulli(0.8), rng.uniform(), rng.uniform(0, 900),
              rng.uniform());
}

}  // namespace

TEST_CASE("utility formula endpoints and the worked example") {
  UtilityWeights w = default_weights();
  CHECK(utility(cand(1, true, 0, 0, 1), w) == doctest::Approx(1.0).epsilon(1e-12));
  UtilityWeights w2{0.4, 0.2, 0.2, 0.2, 100.0};
  CHECK(utility(cand(1, true, 0.5, 50, 0.8), w2) ==
        doctest::Approx(0.76).epsilon(1e-12));
  CHECK(utility(cand(1, false, 1.0, 100.0, 0.0), w2) == doctest::Approx(0.0));
  // above-ceiling latency clamps the term rather than going negative
  CHECK(utility(cand(1, false, 1.0, 5000.0, 0.0), w2) == doctest::Approx(0.0));
}

TEST_CASE("utility stays in [0,1] under fuzzing") {
  Rng rng(1001);
  UtilityWeights w = default_weights();
  for (int i = 0; i < 5000; ++i) {
    double u = utility(random_candidate(rng, 1), w);
    CHECK(u >= 0.0);
    CHECK(u <= 1.0 + 1e-12);
  }
}

TEST_CASE("select: singleton and strict dominance") {
  UtilityWeights w{0.4, 0.2, 0.2, 0.2, 100.0};
  for (std::uint64_t seed : {1ULL, 2ULL, 77ULL}) {
    Rng rng(seed);
    auto one = select({cand(9, true, 0.1, 10, 0.5)}, w, rng);
    CHECK(one.size() == 1);
    CHECK(one[0].node_id == id_of(9));

    auto two = select({cand(1, true, 0.5, 50, 0.8), cand(2, false, 0.9, 400, 0.1)},
                      w, rng);
    CHECK(two[0].node_id == id_of(1));  // 0.76 beats 0.14 for any seed
  }
  Rng rng(5);
  CHECK_THROWS_AS(select({}, w, rng), NoCandidateError);
}

TEST_CASE("tie-break is uniform over identical candidates") {
  UtilityWeights w = default_weights();
  Rng rng(606);
  std::map<int, int> first_counts;
  for (int trial = 0; trial < 6000; ++trial) {
    auto ordered = select({cand(1, true, 0.5, 50, 0.5), cand(2, true, 0.5, 50, 0.5),
                           cand(3, true, 0.5, 50, 0.5)},
                          w, rng);
    first_counts[ordered[0].node_id[0]] += 1;
  }
  for (const auto& [tag, count] : first_counts) {
    CHECK(count >= 1850);
    CHECK(count <= 2150);
  }
}

TEST_CASE("select_top_k prefixes and saturation") {
  UtilityWeights w = default_weights();
  Rng rng_a(99), rng_b(99);
  std::vector<CandidateObservation> cands;
  for (std::uint8_t i = 0; i < 10; ++i) {
    cands.push_back(cand(i + 1, true, 0.05 * i, 10.0 * i, 1.0 - 0.07 * i));
  }
  auto full = select(cands, w, rng_a);
  auto top1 = select_top_k(cands, w, 1, rng_b);
  CHECK(top1.size() == 1);
  CHECK(top1[0] == full[0].node_id);

  Rng rng_c(99);
  auto all = select_top_k(cands, w, 50, rng_c);
  CHECK(all.size() == cands.size());

  // distinct utilities: brute-force sort oracle
  std::vector<std::pair<double, Bytes32>> oracle;
  for (const auto& c : cands) oracle.emplace_back(utility(c, w), c.node_id);
  std::sort(oracle.begin(), oracle.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  Rng rng_d(7);
  auto top3 = select_top_k(cands, w, 3, rng_d);
  REQUIRE(top3.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(top3[static_cast<std::size_t>(i)] == oracle[static_cast<std::size_t>(i)].second);
  }
}

TEST_CASE("monotonicity: higher trust or lower load never lowers the rank") {
  Rng rng(2002);
  UtilityWeights w = default_weights();
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CandidateObservation> cands;
    for (std::uint8_t i = 0; i < 6; ++i) cands.push_back(random_candidate(rng, i + 1));
    std::size_t probe = rng.uniform_u64(cands.size());

    Rng tie_a(trial), tie_b(trial);
    auto rank_of = [&](const std::vector<std::size_t>& order) {
      return std::find(order.begin(), order.end(), probe) - order.begin();
    };
    auto base_order = rank_candidates(cands, w, tie_a);
    auto improved = cands;
    if (rng.bernoulli(0.5)) {
      improved[probe].trust = std::min(1.0, improved[probe].trust + rng.uniform());
    } else {
      improved[probe].load = std::max(0.0, improved[probe].load - rng.uniform());
    }
    auto better_order = rank_candidates(improved, w, tie_b);
    CHECK(rank_of(better_order) <= rank_of(base_order));
  }
}

TEST_CASE("uniform rtt shifts and weight scaling preserve the ordering") {
  Rng rng(3003);
  UtilityWeights w = default_weights();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<CandidateObservation> cands;
    for (std::uint8_t i = 0; i < 5; ++i) {
      auto c = random_candidate(rng, i + 1);
      c.rtt_ms = rng.uniform(0, 200);  // leave room below the 500ms ceiling
      cands.push_back(c);
    }
    Rng tie_a(trial), tie_b(trial), tie_c(trial);
    auto base = rank_candidates(cands, w, tie_a);

    double shift = rng.uniform(0, 250);
    auto shifted = cands;
    for (auto& c : shifted) c.rtt_ms += shift;
    CHECK(rank_candidates(shifted, w, tie_b) == base);

    double scale = rng.uniform(0.1, 5.0);
    UtilityWeights scaled{w.w1 * scale, w.w2 * scale, w.w3 * scale, w.w4 * scale,
                          w.d_max_ms};
    CHECK(rank_candidates(cands, scaled, tie_c) == base);
  }
}

namespace {

// scripted dispatch environment: fixed candidate set, per-node outcomes
class FakeEnv : public DispatchEnv {
 public:
  std::vector<CandidateObservation> pool;
  std::map<std::uint8_t, AttemptOutcome> script;
  std::vector<Bytes32> attempted;

  std::vector<CandidateObservation> candidates(const std::string&) override {
    return pool;
  }
  AttemptRecord attempt(const Bytes32& node, const RouterTask&) override {
    attempted.push_back(node);
    AttemptRecord r;
    r.node_id = node;
    auto it = script.find(node[0]);
    r.outcome = it == script.end() ? AttemptOutcome::Success : it->second;
    r.quality = 0.8;
    r.completed_at = static_cast<std::int64_t>(attempted.size());
    return r;
  }
};

}  // namespace

TEST_CASE("dispatch: single healthy candidate succeeds") {
  FakeEnv env;
  env.pool = {cand(1, true, 0.1, 10, 0.5)};
  RouterConfig cfg;
  Rng rng(1);
  DispatchRecord rec = dispatch({1, "skill", 1}, env, cfg, rng);
  CHECK(rec.status == DispatchStatus::Success);
  REQUIRE(rec.attempts.size() == 1);
  CHECK(rec.attempts[0].outcome == AttemptOutcome::Success);
}

TEST_CASE("dispatch: fallback follows descending utility") {
  FakeEnv env;
  env.pool = {cand(1, true, 0.0, 10, 0.9),   // best
              cand(2, true, 0.3, 50, 0.6)};  // second best
  env.script[1] = AttemptOutcome::Failure;
  RouterConfig cfg;
  Rng rng(1);
  DispatchRecord rec = dispatch({2, "skill", 1}, env, cfg, rng);
  CHECK(rec.status == DispatchStatus::Success);
  REQUIRE(rec.chosen.size() == 2);
  CHECK(rec.chosen[0] == id_of(1));
  CHECK(rec.chosen[1] == id_of(2));
  CHECK(rec.attempts[0].outcome == AttemptOutcome::Failure);
  CHECK(rec.attempts[1].outcome == AttemptOutcome::Success);
}

TEST_CASE("dispatch: redundancy hits exactly the top-K") {
  FakeEnv env;
  for (std::uint8_t i = 0; i < 5; ++i) {
    env.pool.push_back(cand(i + 1, true, 0.1 * i, 10.0 * i, 0.9 - 0.1 * i));
  }
  RouterConfig cfg;
  Rng rng_oracle(12), rng_run(12);
  auto expected = select_top_k(env.pool, cfg.weights, 3, rng_oracle);
  DispatchRecord rec = dispatch({3, "skill", 3}, env, cfg, rng_run);
  CHECK(rec.status == DispatchStatus::Success);
  REQUIRE(rec.chosen.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(rec.chosen[static_cast<std::size_t>(i)] == expected[static_cast<std::size_t>(i)]);
  }
  CHECK(rec.attempts.size() == 3);
}

TEST_CASE("dispatch: error statuses") {
  FakeEnv empty;
  RouterConfig cfg;
  Rng rng(4);
  CHECK(dispatch({4, "skill", 1}, empty, cfg, rng).status ==
        DispatchStatus::NoCandidates);

  FakeEnv skilless;
  skilless.pool = {cand(1, false, 0.1, 10, 0.5)};
  CHECK(dispatch({5, "skill", 1}, skilless, cfg, rng).status ==
        DispatchStatus::NoCandidates);  // require_skill filters it

  FakeEnv failing;
  failing.pool = {cand(1, true, 0, 0, 1), cand(2, true, 0, 0, 1),
                  cand(3, true, 0, 0, 1), cand(4, true, 0, 0, 1)};
  for (std::uint8_t i = 1; i <= 4; ++i) failing.script[i] = AttemptOutcome::Timeout;
  DispatchRecord rec = dispatch({6, "skill", 1}, failing, cfg, rng);
  CHECK(rec.status == DispatchStatus::Exhausted);
  CHECK(rec.attempts.size() == 3);  // max_attempts bounds the fallback chain
}

TEST_CASE("router statelessness: identical inputs, identical records") {
  auto build_env = [] {
    FakeEnv env;
    for (std::uint8_t i = 0; i < 6; ++i) {
      env.pool.push_back(cand(i + 1, true, 0.1, 25, 0.5));  // all tie
    }
    env.script[3] = AttemptOutcome::Failure;
    return env;
  };
  RouterConfig cfg;
  FakeEnv env_a = build_env();
  FakeEnv env_b = build_env();
  Rng rng_a(42), rng_b(42);
  DispatchRecord a = dispatch({7, "skill", 2}, env_a, cfg, rng_a);
  DispatchRecord b = dispatch({7, "skill", 2}, env_b, cfg, rng_b);
  CHECK(a.chosen == b.chosen);
  CHECK(a.status == b.status);
  REQUIRE(a.attempts.size() == b.attempts.size());
  for (std::size_t i = 0; i < a.attempts.size(); ++i) {
    CHECK(a.attempts[i].node_id == b.attempts[i].node_id);
    CHECK(a.attempts[i].outcome == b.attempts[i].outcome);
  }
}

TEST_CASE("weight validation") {
  UtilityWeights bad{0.4, 0.2, 0.2, 0.3, 500};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  UtilityWeights neg{0.5, 0.5, 0.2, -0.2, 500};
  CHECK_THROWS_AS(neg.validate(), ValidationError);
  UtilityWeights zero_ceiling{0.4, 0.2, 0.2, 0.2, 0.0};
  CHECK_THROWS_AS(zero_ceiling.validate(), ValidationError);
}
