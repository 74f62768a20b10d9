#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarm/bytes.hpp"
#include "swarm/identity.hpp"
#include "swarm/quality.hpp"
#include "swarm/rng.hpp"

namespace swarm {

// Credit amounts are held in integer micro-credits so ledger conservation
// is exact. 1.0 credit == 1'000'000 micro.
using Credit = std::int64_t;
inline constexpr Credit kCreditScale = 1'000'000;

inline double credits(Credit micro) {
  return static_cast<double>(micro) / static_cast<double>(kCreditScale);
}
Credit to_micro(double credit_units);  // nearest-micro rounding

inline constexpr int kExactShapleyMaxMembers = 15;

/// Exact Shapley values by subset enumeration, O(2^k * k).
/// Throws TractabilityError for k above the cap.
std::vector<double> exact_shapley(const CoalitionValueFn& fn, int k);

/// Shapley estimate by uniform random permutation sampling: for each of
/// `samples` permutations, every member accumulates its marginal
/// contribution against the members preceding it; estimates are the means.
std::vector<double> sample_shapley(const CoalitionValueFn& fn, int k, int samples,
                                   Rng& rng);

struct AttributionParams {
  double alpha = 0.1;  // trust learning rate, in (0,1)
  int samples = 100;   // permutation sample count M
  void validate() const;
};

struct AttributionOutcome {
  std::vector<double> sampled_phi;
  std::vector<Credit> deltas;      // non-negative, sums to the pool exactly
  std::vector<double> trust_after;
  Credit submitter_debit = 0;
  bool uniform_fallback = false;
};

/// Full attribution pipeline: sampled Shapley values, positive-part
/// normalization onto the credit pool (uniform split when no member beats
/// the empty-coalition baseline), trust updates, submitter debit.
AttributionOutcome attribute(Credit pool, const CoalitionValueFn& fn, int k,
                             const AttributionParams& params,
                             std::span<const double> trust_before, Rng& rng);

/// Splits `pool` micro-credits proportionally to non-negative weights with
/// largest-remainder rounding; the shares sum to the pool exactly. All-zero
/// weights split uniformly.
std::vector<Credit> apportion(std::span<const double> weights, Credit pool);

struct DecayParams {
  double beta = 0.1;                     // per-period decay rate, in (0,1)
  std::int64_t t0_ms = 24LL * 3600'000;  // normalization period
  void validate() const;
};

/// Multiplicative inactivity decay: trust * (1 - beta)^(dt / t0).
double decay_trust(double trust, std::int64_t dt_ms, const DecayParams& params);

struct GenesisConfig {
  Credit c0 = 10 * kCreditScale;  // locked starter endowment
  int k0 = 10;                    // tasks c0 is sized to cover
  int grant_limit_per_origin = 5;
  std::int64_t grant_window_ms = 24LL * 3600'000;

  Credit unit_task_cost() const { return c0 / k0; }
  void validate() const;
};

/// Signed, countersignable attribution record. The canonical encoding is
/// length-prefixed field concatenation in declaration order.
struct AttributionRecord {
  std::uint64_t task_id = 0;
  Bytes32 submitter{};
  std::vector<Bytes32> members;
  std::vector<Credit> deltas;
  std::vector<double> trust_after;
  Credit pool = 0;
  bool uniform_fallback = false;

  std::vector<std::uint8_t> signing_payload() const;
};

Bytes64 countersign(const NodeIdentity& submitter_identity,
                    const AttributionRecord& record);
bool verify_countersignature(const Bytes32& submitter_public_key,
                             const AttributionRecord& record, const Bytes64& sig);

struct LedgerAccount {
  Bytes32 node_id{};
  Bytes32 public_key{};
  Credit balance = 0;   // spendable (excludes locked genesis)
  Credit reserved = 0;  // earmarked by in-flight task reservations
  Credit genesis_locked = 0;
  bool genesis_endowed = false;
  bool genesis_unlocked = false;
  bool grant_received = false;  // one free-task grant per keypair, ever
  int grants_used = 0;
  double trust = 0.0;               // value as of trust_anchor_ms
  std::int64_t trust_anchor_ms = 0;  // last trust write; decay accrues from here
  std::int64_t last_task_at = -1;    // last positive-delta task
};

enum class ApplyStatus {
  Applied,
  QuarantinedBadSignature,
  RefusedInsufficientBalance,
  RefusedUnknownAccount,
  RefusedMalformed,
};

enum class UnlockStatus {
  Unlocked,
  RefusedSelfSigned,
  RefusedBadSignature,
  RefusedNotBeneficiary,
  RefusedNoLockedGenesis,
  RefusedUnknownAccount,
};

struct ApplyReport {
  ApplyStatus status = ApplyStatus::RefusedMalformed;
  std::vector<Bytes32> unlocked;  // members whose genesis pool opened
  double submitter_trust_after = 0.0;
  Credit injected = 0;  // minted micro-credits (grant-funded pools)
};

/// Per-swarm credit ledger. In the simulator each account is owned by its
/// node actor and all mutation happens on the event loop; the class itself
/// is single-threaded.
class Ledger {
 public:
  Ledger(DecayParams decay, GenesisConfig genesis, double alpha);

  LedgerAccount& register_account(const Bytes32& node_id, const Bytes32& public_key,
                                  std::int64_t now_ms, double initial_trust = 0.0);
  bool has_account(const Bytes32& node_id) const;
  const LedgerAccount& account(const Bytes32& node_id) const;

  /// Trust with inactivity decay applied lazily as of now.
  double trust_of(const Bytes32& node_id, std::int64_t now_ms) const;
  void write_trust(const Bytes32& node_id, double value, std::int64_t now_ms);

  Credit spendable(const Bytes32& node_id) const;  // balance - reserved

  /// Earmarks pool micro-credits against the spendable balance; refuses if
  /// overlapping reservations would overdraw (double-spend guard).
  bool reserve(const Bytes32& node_id, Credit pool);
  void release(const Bytes32& node_id, Credit pool);

  void deposit(const Bytes32& node_id, Credit amount);  // scenario bootstrap

  void genesis_endow(const Bytes32& node_id);  // throws on repeat endowment
  /// Scenario-level override: open the locked pool without a receipt.
  void force_unlock(const Bytes32& node_id);

  struct GrantDecision {
    bool granted = false;
    std::string refusal;  // "keypair" | "origin-quota" when refused
  };
  GrantDecision grant_genesis_task(const Bytes32& submitter, const std::string& origin,
                                   std::int64_t now_ms);

  UnlockStatus unlock_genesis(const Bytes32& node_id, const AttributionRecord& receipt,
                              const Bytes64& receipt_sig);

  /// Atomic countersigned application. `reserved` selects whether the
  /// submitter debit consumes a prior reservation or checks spendable
  /// directly; `grant_funded` mints the pool instead of debiting.
  ApplyReport apply_attribution(const AttributionRecord& record,
                                const Bytes64& submitter_sig, std::int64_t now_ms,
                                bool grant_funded = false, bool reserved = false);

  // conservation accounting
  Credit total_balance() const;
  Credit total_locked() const;
  Credit injected_initial() const { return injected_initial_; }
  Credit injected_unlocked() const { return injected_unlocked_; }
  Credit injected_grants() const { return injected_grants_; }
  Credit expected_total() const {
    return injected_initial_ + injected_unlocked_ + injected_grants_;
  }
  int grants_issued() const { return grants_issued_; }
  int grants_refused() const { return grants_refused_; }
  int quarantined_count() const { return quarantined_; }

  const std::map<Bytes32, LedgerAccount>& accounts() const { return accounts_; }
  const DecayParams& decay_params() const { return decay_; }
  const GenesisConfig& genesis_config() const { return genesis_; }

 private:
  LedgerAccount& acc(const Bytes32& node_id);

  DecayParams decay_;
  GenesisConfig genesis_;
  double alpha_;
  std::map<Bytes32, LedgerAccount> accounts_;
  std::map<std::string, std::deque<std::int64_t>> origin_grants_;
  Credit injected_initial_ = 0;
  Credit injected_unlocked_ = 0;
  Credit injected_grants_ = 0;
  int grants_issued_ = 0;
  int grants_refused_ = 0;
  int quarantined_ = 0;
};

}  // namespace swarm
