#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "swarm/credit.hpp"
#include "swarm/errors.hpp"
#include "swarm/quality.hpp"
#include "swarm/rng.hpp"

using namespace swarm;

TEST_CASE("pipeline value: shares cover the observed quality") {
  PipelineModel m{0.9, {0.5, 0.3, 0.2}};
  m.validate();
  CHECK(m.value(0b111) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(m.value(0) == 0.0);
  CHECK(m.value(0b101) == doctest::Approx(0.9 * 0.7).epsilon(1e-12));
}

TEST_CASE("pipeline validation") {
  PipelineModel shares_short{0.9, {0.5, 0.3}};
  PipelineModel quality_high{1.5, {1.0}};
  PipelineModel empty{0.9, {}};
  CHECK_THROWS_AS(shares_short.validate(), ValidationError);
  CHECK_THROWS_AS(quality_high.validate(), ValidationError);
  CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("ensemble with gamma=1 is the additive pipeline form") {
  EnsembleModel e{0.8, {2.0, 1.0, 1.0}, 1.0};
  PipelineModel p{0.8, {0.5, 0.25, 0.25}};
  for (std::uint64_t mask = 0; mask < 8; ++mask) {
    CHECK(e.value(mask) == doctest::Approx(p.value(mask)).epsilon(1e-12));
  }
}

TEST_CASE("ensemble square-root case") {
  EnsembleModel e{1.0, {1.0, 1.0}, 0.5};
  e.validate();
  CHECK(e.value(0b01) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(e.value(0b11) == 1.0);
  CHECK(e.value(0) == 0.0);
}

TEST_CASE("symmetric ensemble splits the exact Shapley value equally") {
  EnsembleModel e{0.9, {1.0, 1.0, 1.0}, 0.5};
  std::vector<double> phi = exact_shapley(e.fn(), 3);
  for (double p : phi) CHECK(p == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("pipeline model has a closed-form exact Shapley value") {
  PipelineModel m{0.9, {0.5, 0.3, 0.2}};
  std::vector<double> phi = exact_shapley(m.fn(), 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(phi[i] - 0.9 * m.time_shares[i]) <= 1e-12);
  }
}

TEST_CASE("single-node model") {
  SingleNodeModel s{0.7};
  s.validate();
  CHECK(s.value(1) == 0.7);
  CHECK(s.value(0) == 0.0);
}

TEST_CASE("merge_redundant uses the max-quality rule") {
  std::vector<RedundantOutcome> outcomes{{0.6, 1.0}, {0.9, 1.0}};
  EnsembleModel merged = merge_redundant(outcomes);
  CHECK(merged.observed_quality == doctest::Approx(0.9));
  CHECK(merged.accuracies.size() == 2);

  std::vector<RedundantOutcome> one{{0.6, 1.0}};
  EnsembleModel single = merge_redundant(one);
  CHECK(single.value(1) == doctest::Approx(0.6));
  CHECK(single.value(0) == 0.0);
}

TEST_CASE("three equal-accuracy outcomes attribute equally") {
  std::vector<RedundantOutcome> outcomes{{0.8, 1.0}, {0.7, 1.0}, {0.8, 1.0}};
  EnsembleModel merged = merge_redundant(outcomes);
  std::vector<double> phi = exact_shapley(merged.fn(), 3);
  CHECK(phi[0] == doctest::Approx(phi[1]).epsilon(1e-12));
  CHECK(phi[1] == doctest::Approx(phi[2]).epsilon(1e-12));

  Rng rng(3);
  std::vector<double> trust{0.5, 0.5, 0.5};
  AttributionOutcome out = attribute(9 * kCreditScale, merged.fn(), 3,
                                     AttributionParams{0.1, 500}, trust, rng);
  CHECK(out.deltas[0] + out.deltas[1] + out.deltas[2] == 9 * kCreditScale);
}

TEST_CASE("monotonicity and range over fuzzed subsets") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    int k = 1 + static_cast<int>(rng.uniform_u64(8));
    std::uint64_t full = (std::uint64_t{1} << k) - 1;

    PipelineModel pipe;
    pipe.observed_quality = rng.uniform();
    double total = 0;
    for (int i = 0; i < k; ++i) {
      pipe.time_shares.push_back(0.05 + rng.uniform());
      total += pipe.time_shares.back();
    }
    for (auto& s : pipe.time_shares) s /= total;

    EnsembleModel ens;
    ens.observed_quality = rng.uniform();
    ens.gamma = 0.1 + 0.9 * rng.uniform();
    for (int i = 0; i < k; ++i) ens.accuracies.push_back(0.1 + rng.uniform());

    std::uint64_t sub = rng.next_u64() & full;
    std::uint64_t super = sub | (rng.next_u64() & full);
    CHECK(pipe.value(sub) <= pipe.value(super) + 1e-12);
    CHECK(ens.value(sub) <= ens.value(super) + 1e-12);
    CHECK(pipe.value(sub) >= 0.0);
    CHECK(pipe.value(sub) <= pipe.observed_quality + 1e-12);
    CHECK(ens.value(sub) >= 0.0);
    CHECK(ens.value(sub) <= ens.observed_quality + 1e-12);
    // normalization is exact at the endpoints
    CHECK(pipe.value(0) == 0.0);
    CHECK(ens.value(0) == 0.0);
    CHECK(ens.value(full) == ens.observed_quality);
  }
}
