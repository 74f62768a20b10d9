#include "swarm/credit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "swarm/errors.hpp"

namespace swarm {

Credit to_micro(double credit_units) {
  return static_cast<Credit>(std::llround(credit_units * kCreditScale));
}

namespace {

// Memoizes coalition values so attribution costs at most
// min(samples * k, 2^k) distinct evaluations.
class MemoizedGame {
 public:
  MemoizedGame(const CoalitionValueFn& fn, int k) : fn_(fn), k_(k) {
    if (k <= 20) {
      dense_.assign(std::size_t{1} << k, 0.0);
      seen_.assign(std::size_t{1} << k, false);
    }
  }

  double operator()(std::uint64_t mask) {
    if (!dense_.empty()) {
      if (!seen_[mask]) {
        dense_[mask] = fn_(mask);
        seen_[mask] = true;
      }
      return dense_[mask];
    }
    auto it = sparse_.find(mask);
    if (it != sparse_.end()) return it->second;
    double v = fn_(mask);
    sparse_.emplace(mask, v);
    return v;
  }

 private:
  const CoalitionValueFn& fn_;
  int k_;
  std::vector<double> dense_;
  std::vector<bool> seen_;
  std::unordered_map<std::uint64_t, double> sparse_;
};

void check_members(int k, int cap) {
  if (k < 1) throw ValidationError("coalition must have at least one member");
  if (k > cap) {
    throw TractabilityError("coalition size " + std::to_string(k) +
                            " exceeds cap " + std::to_string(cap));
  }
}

}  // namespace

std::vector<double> exact_shapley(const CoalitionValueFn& fn, int k) {
  check_members(k, kExactShapleyMaxMembers);
  MemoizedGame q(fn, k);

  // weight(s) = s! (k-s-1)! / k!  for a coalition of size s not containing i
  std::vector<double> factorial(static_cast<std::size_t>(k) + 1, 1.0);
  for (int i = 1; i <= k; ++i) factorial[i] = factorial[i - 1] * i;
  std::vector<double> weight(static_cast<std::size_t>(k), 0.0);
  for (int s = 0; s < k; ++s) {
    weight[s] = factorial[s] * factorial[k - s - 1] / factorial[k];
  }

  std::vector<double> phi(static_cast<std::size_t>(k), 0.0);
  const std::uint64_t full = (std::uint64_t{1} << k) - 1;
  for (std::uint64_t mask = 0; mask <= full; ++mask) {
    double base = q(mask);
    double w = weight[static_cast<std::size_t>(std::popcount(mask))];
    for (int i = 0; i < k; ++i) {
      std::uint64_t bit = std::uint64_t{1} << i;
      if (mask & bit) continue;
      phi[i] += w * (q(mask | bit) - base);
    }
  }
  return phi;
}

std::vector<double> sample_shapley(const CoalitionValueFn& fn, int k, int samples,
                                   Rng& rng) {
  check_members(k, 63);
  if (samples < 1) throw ValidationError("sample count must be >= 1");
  MemoizedGame q(fn, k);

  std::vector<double> phi(static_cast<std::size_t>(k), 0.0);
  for (int m = 0; m < samples; ++m) {
    std::vector<std::uint32_t> pi = rng.permutation(static_cast<std::uint32_t>(k));
    std::uint64_t mask = 0;
    double prev = q(0);
    for (std::uint32_t idx : pi) {
      mask |= std::uint64_t{1} << idx;
      double cur = q(mask);
      phi[idx] += cur - prev;
      prev = cur;
    }
  }
  for (double& p : phi) p /= samples;
  return phi;
}

void AttributionParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must be in (0,1)");
  }
  if (samples < 1) throw ValidationError("samples must be >= 1");
}

std::vector<Credit> apportion(std::span<const double> weights, Credit pool) {
  if (weights.empty()) throw ValidationError("apportion: no weights");
  if (pool < 0) throw ValidationError("apportion: negative pool");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("apportion: negative weight");
    total += w;
  }

  const std::size_t k = weights.size();
  std::vector<Credit> shares(k, 0);
  std::vector<double> frac(k, 0.0);
  Credit assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double raw = (total > 0.0)
                     ? weights[i] / total * static_cast<double>(pool)
                     : static_cast<double>(pool) / static_cast<double>(k);
    double fl = std::floor(raw);
    shares[i] = static_cast<Credit>(fl);
    frac[i] = raw - fl;
    assigned += shares[i];
  }

  // distribute the remainder by largest fractional part, ties to lower index
  Credit remainder = pool - assigned;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  std::size_t cursor = 0;
  while (remainder > 0) {
    shares[order[cursor % k]] += 1;
    ++cursor;
    --remainder;
  }
  while (remainder < 0) {  // floor made the sum overshoot (fp edge); trim
    std::size_t idx = order[k - 1 - (cursor % k)];
    if (shares[idx] > 0) {
      shares[idx] -= 1;
      ++remainder;
    }
    ++cursor;
  }
  return shares;
}

AttributionOutcome attribute(Credit pool, const CoalitionValueFn& fn, int k,
                             const AttributionParams& params,
                             std::span<const double> trust_before, Rng& rng) {
  params.validate();
  if (pool <= 0) throw ValidationError("credit pool must be positive");
  if (static_cast<int>(trust_before.size()) != k) {
    throw ValidationError("trust_before size must match member count");
  }

  AttributionOutcome out;
  out.sampled_phi = sample_shapley(fn, k, params.samples, rng);

  std::vector<double> clamped(out.sampled_phi.size());
  double positive_mass = 0.0;
  for (std::size_t i = 0; i < clamped.size(); ++i) {
    clamped[i] = std::max(out.sampled_phi[i], 0.0);
    positive_mass += clamped[i];
  }
  out.uniform_fallback = !(positive_mass > 0.0);
  if (out.uniform_fallback) {
    std::fill(clamped.begin(), clamped.end(), 1.0);
  }
  out.deltas = apportion(clamped, pool);

  out.trust_after.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double tau = trust_before[static_cast<std::size_t>(i)];
    if (out.deltas[static_cast<std::size_t>(i)] > 0) {
      tau = tau + params.alpha * (1.0 - tau);
    } else {
      tau = tau - params.alpha * tau;
    }
    out.trust_after[static_cast<std::size_t>(i)] = std::clamp(tau, 0.0, 1.0);
  }
  out.submitter_debit = pool;
  return out;
}

void DecayParams::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must be in (0,1)");
  if (t0_ms <= 0) throw ValidationError("t0_ms must be positive");
}

double decay_trust(double trust, std::int64_t dt_ms, const DecayParams& params) {
  if (dt_ms < 0) throw ValidationError("decay_trust: negative elapsed time");
  if (dt_ms == 0) return trust;
  double exponent = static_cast<double>(dt_ms) / static_cast<double>(params.t0_ms);
  return trust * std::pow(1.0 - params.beta, exponent);
}

void GenesisConfig::validate() const {
  if (c0 <= 0) throw ValidationError("genesis c0 must be positive");
  if (k0 <= 0) throw ValidationError("genesis k0 must be positive");
  if (grant_limit_per_origin <= 0) {
    throw ValidationError("grant_limit_per_origin must be positive");
  }
  if (grant_window_ms <= 0) throw ValidationError("grant_window_ms must be positive");
}

std::vector<std::uint8_t> AttributionRecord::signing_payload() const {
  Writer w;
  w.str("swarm.attribution.v1");
  w.u64(task_id);
  w.raw(submitter);
  w.u32(static_cast<std::uint32_t>(members.size()));
  for (const auto& m : members) w.raw(m);
  for (Credit d : deltas) w.i64(d);
  for (double t : trust_after) w.f64(t);
  w.i64(pool);
  w.u8(uniform_fallback ? 1 : 0);
  return w.take();
}

Bytes64 countersign(const NodeIdentity& submitter_identity,
                    const AttributionRecord& record) {
  auto payload = record.signing_payload();
  return sign(submitter_identity, payload);
}

bool verify_countersignature(const Bytes32& submitter_public_key,
                             const AttributionRecord& record, const Bytes64& sig) {
  auto payload = record.signing_payload();
  return verify(submitter_public_key, payload, sig);
}

Ledger::Ledger(DecayParams decay, GenesisConfig genesis, double alpha)
    : decay_(decay), genesis_(genesis), alpha_(alpha) {
  decay_.validate();
  genesis_.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
}

LedgerAccount& Ledger::register_account(const Bytes32& node_id,
                                        const Bytes32& public_key,
                                        std::int64_t now_ms, double initial_trust) {
  auto [it, inserted] = accounts_.try_emplace(node_id);
  if (inserted) {
    it->second.node_id = node_id;
    it->second.public_key = public_key;
    it->second.trust = std::clamp(initial_trust, 0.0, 1.0);
    it->second.trust_anchor_ms = now_ms;
  }
  return it->second;
}

bool Ledger::has_account(const Bytes32& node_id) const {
  return accounts_.count(node_id) != 0;
}

const LedgerAccount& Ledger::account(const Bytes32& node_id) const {
  auto it = accounts_.find(node_id);
  if (it == accounts_.end()) throw ValidationError("unknown ledger account");
  return it->second;
}

LedgerAccount& Ledger::acc(const Bytes32& node_id) {
  auto it = accounts_.find(node_id);
  if (it == accounts_.end()) throw ValidationError("unknown ledger account");
  return it->second;
}

double Ledger::trust_of(const Bytes32& node_id, std::int64_t now_ms) const {
  const LedgerAccount& a = account(node_id);
  std::int64_t dt = now_ms > a.trust_anchor_ms ? now_ms - a.trust_anchor_ms : 0;
  return decay_trust(a.trust, dt, decay_);
}

void Ledger::write_trust(const Bytes32& node_id, double value, std::int64_t now_ms) {
  LedgerAccount& a = acc(node_id);
  a.trust = std::clamp(value, 0.0, 1.0);
  a.trust_anchor_ms = now_ms;
}

Credit Ledger::spendable(const Bytes32& node_id) const {
  const LedgerAccount& a = account(node_id);
  return a.balance - a.reserved;
}

bool Ledger::reserve(const Bytes32& node_id, Credit pool) {
  LedgerAccount& a = acc(node_id);
  if (a.balance - a.reserved < pool) return false;
  a.reserved += pool;
  return true;
}

void Ledger::release(const Bytes32& node_id, Credit pool) {
  LedgerAccount& a = acc(node_id);
  a.reserved = std::max<Credit>(0, a.reserved - pool);
}

void Ledger::deposit(const Bytes32& node_id, Credit amount) {
  if (amount < 0) throw ValidationError("deposit must be non-negative");
  acc(node_id).balance += amount;
  injected_initial_ += amount;
}

void Ledger::genesis_endow(const Bytes32& node_id) {
  LedgerAccount& a = acc(node_id);
  if (a.genesis_endowed) throw ValidationError("repeat genesis endowment refused");
  a.genesis_endowed = true;
  a.genesis_locked = genesis_.c0;
}

void Ledger::force_unlock(const Bytes32& node_id) {
  LedgerAccount& a = acc(node_id);
  if (a.genesis_unlocked || a.genesis_locked == 0) return;
  a.balance += a.genesis_locked;
  injected_unlocked_ += a.genesis_locked;
  a.genesis_locked = 0;
  a.genesis_unlocked = true;
}

Ledger::GrantDecision Ledger::grant_genesis_task(const Bytes32& submitter,
                                                 const std::string& origin,
                                                 std::int64_t now_ms) {
  LedgerAccount& a = acc(submitter);
  if (a.grant_received) {
    ++grants_refused_;
    return {false, "keypair"};
  }
  auto& stamps = origin_grants_[origin];
  while (!stamps.empty() && now_ms - stamps.front() >= genesis_.grant_window_ms) {
    stamps.pop_front();
  }
  if (static_cast<int>(stamps.size()) >= genesis_.grant_limit_per_origin) {
    ++grants_refused_;
    return {false, "origin-quota"};
  }
  stamps.push_back(now_ms);
  a.grant_received = true;
  a.grants_used += 1;
  ++grants_issued_;
  return {true, {}};
}

UnlockStatus Ledger::unlock_genesis(const Bytes32& node_id,
                                    const AttributionRecord& receipt,
                                    const Bytes64& receipt_sig) {
  auto it = accounts_.find(node_id);
  if (it == accounts_.end()) return UnlockStatus::RefusedUnknownAccount;
  LedgerAccount& a = it->second;
  if (a.genesis_unlocked || a.genesis_locked == 0) {
    return UnlockStatus::RefusedNoLockedGenesis;
  }
  if (receipt.submitter == node_id) return UnlockStatus::RefusedSelfSigned;

  bool beneficiary = false;
  for (std::size_t i = 0; i < receipt.members.size(); ++i) {
    if (receipt.members[i] == node_id && i < receipt.deltas.size() &&
        receipt.deltas[i] > 0) {
      beneficiary = true;
      break;
    }
  }
  if (!beneficiary) return UnlockStatus::RefusedNotBeneficiary;

  auto sub = accounts_.find(receipt.submitter);
  if (sub == accounts_.end()) return UnlockStatus::RefusedUnknownAccount;
  if (!verify_countersignature(sub->second.public_key, receipt, receipt_sig)) {
    return UnlockStatus::RefusedBadSignature;
  }

  a.balance += a.genesis_locked;
  injected_unlocked_ += a.genesis_locked;
  a.genesis_locked = 0;
  a.genesis_unlocked = true;
  return UnlockStatus::Unlocked;
}

ApplyReport Ledger::apply_attribution(const AttributionRecord& record,
                                      const Bytes64& submitter_sig,
                                      std::int64_t now_ms, bool grant_funded,
                                      bool reserved) {
  ApplyReport report;
  const std::size_t k = record.members.size();
  if (k == 0 || record.deltas.size() != k || record.trust_after.size() != k ||
      record.pool <= 0) {
    report.status = ApplyStatus::RefusedMalformed;
    return report;
  }

  auto sub_it = accounts_.find(record.submitter);
  if (sub_it == accounts_.end()) {
    report.status = ApplyStatus::RefusedUnknownAccount;
    return report;
  }
  for (const auto& m : record.members) {
    if (!accounts_.count(m)) {
      report.status = ApplyStatus::RefusedUnknownAccount;
      return report;
    }
  }

  LedgerAccount& submitter = sub_it->second;
  if (!verify_countersignature(submitter.public_key, record, submitter_sig)) {
    // no routing priority for submitters that do not countersign
    double tau = trust_of(record.submitter, now_ms);
    write_trust(record.submitter, tau - alpha_ * tau, now_ms);
    report.status = ApplyStatus::QuarantinedBadSignature;
    report.submitter_trust_after = submitter.trust;
    ++quarantined_;
    return report;
  }

  if (grant_funded) {
    // mint the grant pool through the submitter account: net zero for the
    // submitter, tracked as an injection
    report.injected = record.pool;
  } else if (reserved) {
    if (submitter.reserved < record.pool) {
      report.status = ApplyStatus::RefusedInsufficientBalance;
      return report;
    }
  } else if (submitter.balance - submitter.reserved < record.pool) {
    report.status = ApplyStatus::RefusedInsufficientBalance;
    return report;
  }

  // all checks passed; mutate atomically
  if (grant_funded) {
    submitter.balance += record.pool;
    injected_grants_ += record.pool;
  } else if (reserved) {
    submitter.reserved -= record.pool;
  }
  submitter.balance -= record.pool;

  for (std::size_t i = 0; i < k; ++i) {
    LedgerAccount& m = acc(record.members[i]);
    m.balance += record.deltas[i];
    m.trust = std::clamp(record.trust_after[i], 0.0, 1.0);
    m.trust_anchor_ms = now_ms;
    if (record.deltas[i] > 0) {
      m.last_task_at = now_ms;
      if (m.genesis_endowed && !m.genesis_unlocked &&
          record.members[i] != record.submitter) {
        m.balance += m.genesis_locked;
        injected_unlocked_ += m.genesis_locked;
        m.genesis_locked = 0;
        m.genesis_unlocked = true;
        report.unlocked.push_back(m.node_id);
      }
    }
  }
  report.status = ApplyStatus::Applied;
  report.submitter_trust_after = submitter.trust;
  return report;
}

Credit Ledger::total_balance() const {
  Credit sum = 0;
  for (const auto& [id, a] : accounts_) sum += a.balance;
  return sum;
}

Credit Ledger::total_locked() const {
  Credit sum = 0;
  for (const auto& [id, a] : accounts_) sum += a.genesis_locked;
  return sum;
}

}  // namespace swarm
