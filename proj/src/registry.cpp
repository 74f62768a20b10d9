#include "swarm/registry.hpp"

#include <algorithm>

#include "swarm/errors.hpp"

namespace swarm {

SkillKey skill_key(const std::string& skill_name) {
  if (skill_name.empty()) throw ValidationError("skill name must be non-empty");
  return SkillKey{sha256(skill_name)};
}

Bytes32 xor_distance(const Bytes32& a, const Bytes32& b) {
  Bytes32 out;
  for (std::size_t i = 0; i < 32; ++i) out[i] = a[i] ^ b[i];
  return out;
}

void ResourceVector::validate() const {
  if (cpu_fraction < 0.0 || cpu_fraction > 1.0) {
    throw ValidationError("cpu_fraction must be in [0,1]");
  }
  if (bandwidth_mbps < 0.0) throw ValidationError("bandwidth_mbps must be >= 0");
}

void RegistryConfig::validate() const {
  if (t_refresh_ms <= 0) throw ValidationError("t_refresh_ms must be positive");
  if (k_bucket_size <= 0) throw ValidationError("k_bucket_size must be positive");
  if (gossip_fanout <= 0) throw ValidationError("gossip_fanout must be positive");
  if (gossip_period_ms <= 0) throw ValidationError("gossip_period_ms must be positive");
  if (gossip_repeat <= 0) throw ValidationError("gossip_repeat must be positive");
}

std::vector<std::uint8_t> Advertisement::signing_payload() const {
  Writer w;
  w.str("swarm.advertisement.v1");
  w.raw(node_id);
  w.u32(static_cast<std::uint32_t>(skills.size()));
  for (const auto& s : skills) w.str(s);
  w.u64(resources.vram_mb);
  w.f64(resources.cpu_fraction);
  w.f64(resources.bandwidth_mbps);
  w.f64(trust);
  w.i64(published_at);
  return w.take();
}

Advertisement make_advertisement(const NodeIdentity& identity,
                                 std::vector<std::string> skills,
                                 const ResourceVector& resources, double trust,
                                 std::int64_t published_at) {
  resources.validate();
  if (trust < 0.0 || trust > 1.0) throw ValidationError("trust must be in [0,1]");
  Advertisement ad;
  ad.node_id = identity.node_id;
  std::sort(skills.begin(), skills.end());
  skills.erase(std::unique(skills.begin(), skills.end()), skills.end());
  for (const auto& s : skills) {
    if (s.empty()) throw ValidationError("skill name must be non-empty");
  }
  ad.skills = std::move(skills);
  ad.resources = resources;
  ad.trust = trust;
  ad.published_at = published_at;
  ad.signature = sign(identity, ad.signing_payload());
  return ad;
}

bool verify_advertisement(const Advertisement& ad, const Bytes32& public_key) {
  return verify(public_key, ad.signing_payload(), ad.signature);
}

bool RegistrationRecord::valid(std::uint32_t required_difficulty) const {
  if (node_id != sha256(public_key)) return false;
  if (puzzle.difficulty < required_difficulty) return false;
  return verify_puzzle(node_id, puzzle);
}

RegistrationRecord make_registration(const NodeIdentity& identity,
                                     std::uint32_t difficulty) {
  RegistrationRecord reg;
  reg.node_id = identity.node_id;
  reg.public_key = identity.public_key;
  reg.puzzle = solve_puzzle(identity.node_id, difficulty);
  return reg;
}

// ---------------------------------------------------------------------------
// RoutingTable

RoutingTable::RoutingTable(const Bytes32& self, int bucket_size)
    : self_(self), bucket_size_(bucket_size) {}

namespace {
int bucket_index(const Bytes32& self, const Bytes32& peer) {
  Bytes32 d = xor_distance(self, peer);
  int lz = leading_zero_bits(d);
  if (lz >= 256) return -1;  // self
  return 255 - lz;
}
}  // namespace

void RoutingTable::observe(const Bytes32& peer) {
  int idx = bucket_index(self_, peer);
  if (idx < 0) return;
  auto& bucket = buckets_[static_cast<std::size_t>(idx)];
  auto it = std::find(bucket.begin(), bucket.end(), peer);
  if (it != bucket.end()) {
    bucket.erase(it);
    bucket.push_back(peer);  // most recently seen at the back
    return;
  }
  if (static_cast<int>(bucket.size()) < bucket_size_) {
    bucket.push_back(peer);
  }
  // full bucket: drop the newcomer; dead contacts are pruned via remove()
}

void RoutingTable::remove(const Bytes32& peer) {
  int idx = bucket_index(self_, peer);
  if (idx < 0) return;
  auto& bucket = buckets_[static_cast<std::size_t>(idx)];
  auto it = std::find(bucket.begin(), bucket.end(), peer);
  if (it != bucket.end()) bucket.erase(it);
}

bool RoutingTable::contains(const Bytes32& peer) const {
  int idx = bucket_index(self_, peer);
  if (idx < 0) return false;
  const auto& bucket = buckets_[static_cast<std::size_t>(idx)];
  return std::find(bucket.begin(), bucket.end(), peer) != bucket.end();
}

std::vector<Bytes32> RoutingTable::closest(const Bytes32& target,
                                           std::size_t count) const {
  std::vector<Bytes32> all = contacts();
  std::sort(all.begin(), all.end(), [&](const Bytes32& a, const Bytes32& b) {
    return compare_u256(xor_distance(a, target), xor_distance(b, target)) < 0;
  });
  if (all.size() > count) all.resize(count);
  return all;
}

std::vector<Bytes32> RoutingTable::contacts() const {
  std::vector<Bytes32> all;
  for (const auto& bucket : buckets_) {
    all.insert(all.end(), bucket.begin(), bucket.end());
  }
  return all;
}

std::size_t RoutingTable::size() const {
  std::size_t n = 0;
  for (const auto& bucket : buckets_) n += bucket.size();
  return n;
}

bool ResourcePredicate::matches(const ResourceVector& r) const {
  if (min_vram_mb && r.vram_mb < *min_vram_mb) return false;
  if (max_vram_mb && r.vram_mb > *max_vram_mb) return false;
  if (min_cpu_fraction && r.cpu_fraction < *min_cpu_fraction) return false;
  if (max_cpu_fraction && r.cpu_fraction > *max_cpu_fraction) return false;
  if (min_bandwidth_mbps && r.bandwidth_mbps < *min_bandwidth_mbps) return false;
  if (max_bandwidth_mbps && r.bandwidth_mbps > *max_bandwidth_mbps) return false;
  return true;
}

// ---------------------------------------------------------------------------
// RegistryNode

RegistryNode::RegistryNode(const RegistrationRecord& reg, const RegistryConfig& cfg,
                           std::uint32_t required_difficulty)
    : reg_(reg),
      cfg_(cfg),
      required_difficulty_(required_difficulty),
      table_(reg.node_id, cfg.k_bucket_size) {}

std::vector<Bytes32> RegistryNode::on_find_node(const Bytes32& from,
                                                const Bytes32& target) {
  table_.observe(from);
  return table_.closest(target, static_cast<std::size_t>(cfg_.k_bucket_size));
}

namespace {
std::string verify_cache_key(const Advertisement& ad) {
  return to_hex(ad.node_id) + ":" + std::to_string(ad.published_at);
}
}  // namespace

StoreStatus RegistryNode::on_store(const Bytes32& from, const StoredAd& record,
                                   std::int64_t now_ms,
                                   std::set<std::string>* verified_cache) {
  table_.observe(from);
  const Advertisement& ad = record.ad;
  const RegistrationRecord& reg = record.registration;

  if (ad.node_id != reg.node_id || !reg.valid(required_difficulty_)) {
    peer_scores_[from] -= 1;
    return StoreStatus::RejectedPuzzle;
  }
  std::string cache_key = verify_cache_key(ad);
  bool verified = verified_cache && verified_cache->count(cache_key) != 0;
  if (!verified) {
    if (!verify_advertisement(ad, reg.public_key)) {
      peer_scores_[from] -= 1;
      return StoreStatus::RejectedSignature;
    }
    if (verified_cache) verified_cache->insert(cache_key);
  }
  if (!ad.live(now_ms, cfg_.ttl_ms())) return StoreStatus::RejectedStale;

  peer_scores_[from] += 1;
  bool stored_any = false;
  for (const auto& skill : ad.skills) {
    Bytes32 key = skill_key(skill).digest;
    auto& by_node = store_[key];
    auto it = by_node.find(ad.node_id);
    if (it != by_node.end() && it->second.ad.published_at >= ad.published_at) {
      continue;  // keep the newer version
    }
    by_node[ad.node_id] = record;
    stored_any = true;
  }

  // a verified advertisement also feeds the local resource index
  ResourceEntry entry{ad.node_id, ad.resources, ad.trust, ad.published_at};
  seed_resource_entry(entry);
  return stored_any ? StoreStatus::Stored : StoreStatus::Superseded;
}

std::vector<StoredAd> RegistryNode::on_find_value(const Bytes32& from,
                                                  const Bytes32& key,
                                                  std::int64_t now_ms) {
  table_.observe(from);
  std::vector<StoredAd> out;
  auto it = store_.find(key);
  if (it == store_.end()) return out;
  for (const auto& [node_id, record] : it->second) {
    if (record.ad.live(now_ms, cfg_.ttl_ms())) out.push_back(record);
  }
  return out;
}

void RegistryNode::on_gossip(const Bytes32& from,
                             const std::vector<ResourceEntry>& entries) {
  table_.observe(from);
  for (const auto& entry : entries) seed_resource_entry(entry);
}

void RegistryNode::seed_resource_entry(const ResourceEntry& entry) {
  auto it = resource_index_.find(entry.node_id);
  if (it != resource_index_.end() && it->second.published_at >= entry.published_at) {
    return;  // last-writer-wins on (node_id, published_at)
  }
  resource_index_[entry.node_id] = entry;
  gossip_budget_[entry.node_id] = cfg_.gossip_repeat;
}

std::vector<ResourceEntry> RegistryNode::active_gossip_payload() {
  std::vector<ResourceEntry> payload;
  for (auto it = gossip_budget_.begin(); it != gossip_budget_.end();) {
    if (it->second > 0) {
      payload.push_back(resource_index_.at(it->first));
      it->second -= 1;
      ++it;
    } else {
      it = gossip_budget_.erase(it);
    }
  }
  return payload;
}

std::size_t RegistryNode::evict_stale(std::int64_t now_ms) {
  std::size_t evicted = 0;
  for (auto& [key, by_node] : store_) {
    for (auto it = by_node.begin(); it != by_node.end();) {
      if (!it->second.ad.live(now_ms, cfg_.ttl_ms())) {
        it = by_node.erase(it);
        ++evicted;
      } else {
        ++it;
      }
    }
  }
  for (auto it = resource_index_.begin(); it != resource_index_.end();) {
    if (now_ms - it->second.published_at >= cfg_.ttl_ms()) {
      gossip_budget_.erase(it->first);
      it = resource_index_.erase(it);
    } else {
      ++it;
    }
  }
  return evicted;
}

std::vector<Bytes32> RegistryNode::query_resources(const ResourcePredicate& predicate,
                                                   std::int64_t now_ms) const {
  std::vector<Bytes32> out;
  for (const auto& [node_id, entry] : resource_index_) {
    if (now_ms - entry.published_at >= cfg_.ttl_ms()) continue;
    if (predicate.matches(entry.resources)) out.push_back(node_id);
  }
  return out;
}

int RegistryNode::peer_score(const Bytes32& peer) const {
  auto it = peer_scores_.find(peer);
  return it == peer_scores_.end() ? 0 : it->second;
}

std::size_t RegistryNode::stored_ad_count() const {
  std::size_t n = 0;
  for (const auto& [key, by_node] : store_) n += by_node.size();
  return n;
}

// ---------------------------------------------------------------------------
// Overlay

Overlay::Overlay(RegistryConfig cfg, std::uint32_t puzzle_difficulty)
    : cfg_(cfg), puzzle_difficulty_(puzzle_difficulty) {
  cfg_.validate();
}

RegistryNode* Overlay::alive_node(const Bytes32& id) {
  auto it = slots_.find(id);
  if (it == slots_.end() || !it->second.alive) return nullptr;
  return it->second.node.get();
}

bool Overlay::alive(const Bytes32& node_id) const {
  auto it = slots_.find(node_id);
  return it != slots_.end() && it->second.alive;
}

std::vector<Bytes32> Overlay::alive_nodes() const {
  std::vector<Bytes32> out;
  for (const auto& [id, slot] : slots_) {
    if (slot.alive) out.push_back(id);
  }
  return out;
}

RegistryNode* Overlay::node(const Bytes32& node_id) {
  auto it = slots_.find(node_id);
  return it == slots_.end() ? nullptr : it->second.node.get();
}

JoinResult Overlay::join(const RegistrationRecord& reg,
                         const BootstrapProvider& provider) {
  if (!reg.valid(puzzle_difficulty_)) return {};
  auto& slot = slots_[reg.node_id];
  slot.node = std::make_unique<RegistryNode>(reg, cfg_, puzzle_difficulty_);
  slot.alive = true;

  bool seeded = false;
  for (const Bytes32& peer : provider.peers()) {
    if (peer != reg.node_id && alive(peer)) {
      slot.node->table().observe(peer);
      seeded = true;
    }
  }
  if (!seeded && slots_.size() > 1) {
    // provider gave no live entry point into an existing overlay
    slot.alive = true;  // the node runs, but it is isolated
    return JoinResult{false, 0, 0};
  }

  // iterative self-lookup populates the routing table; queried peers learn
  // about the joiner from the inbound RPC
  FindResult found = iterative_find(reg.node_id, reg.node_id);
  return JoinResult{true, slot.node->table().size(), found.rounds};
}

void Overlay::leave(const Bytes32& node_id) {
  auto it = slots_.find(node_id);
  if (it != slots_.end()) it->second.alive = false;
}

FindResult Overlay::iterative_find(const Bytes32& from, const Bytes32& target) {
  constexpr int kAlpha = 3;
  FindResult result;
  RegistryNode* origin = alive_node(from);
  if (!origin) {
    result.no_route = true;
    return result;
  }

  const std::size_t k = static_cast<std::size_t>(cfg_.k_bucket_size);
  auto dist_less = [&](const Bytes32& a, const Bytes32& b) {
    return compare_u256(xor_distance(a, target), xor_distance(b, target)) < 0;
  };

  std::vector<Bytes32> shortlist = origin->table().closest(target, k);
  if (shortlist.empty()) {
    result.no_route = true;
    return result;
  }
  std::set<Bytes32> known(shortlist.begin(), shortlist.end());
  std::set<Bytes32> queried;

  for (;;) {
    // up to kAlpha closest candidates not yet queried
    std::sort(shortlist.begin(), shortlist.end(), dist_less);
    std::vector<Bytes32> batch;
    for (const Bytes32& c : shortlist) {
      if (queried.count(c)) continue;
      batch.push_back(c);
      if (batch.size() == kAlpha) break;
    }
    if (batch.empty()) break;

    LookupRound round;
    bool learned = false;
    for (const Bytes32& peer : batch) {
      queried.insert(peer);
      round.queried.emplace_back(peer, xor_distance(peer, target));
      RegistryNode* remote = alive_node(peer);
      if (!remote) {
        origin->table().remove(peer);
        std::erase(shortlist, peer);
        known.erase(peer);
        continue;
      }
      std::vector<Bytes32> closer = remote->on_find_node(from, target);
      origin->table().observe(peer);
      for (const Bytes32& c : closer) {
        if (c == from) continue;
        if (known.insert(c).second) {
          shortlist.push_back(c);
          learned = true;
        }
      }
    }
    result.rounds += 1;
    result.trace.push_back(std::move(round));

    if (!learned) {
      // converged when the k closest known nodes have all been queried
      std::sort(shortlist.begin(), shortlist.end(), dist_less);
      bool all_queried = true;
      for (std::size_t i = 0; i < shortlist.size() && i < k; ++i) {
        if (!queried.count(shortlist[i])) {
          all_queried = false;
          break;
        }
      }
      if (all_queried) break;
    }
  }

  std::sort(shortlist.begin(), shortlist.end(), dist_less);
  std::vector<Bytes32> closest;
  for (const Bytes32& c : shortlist) {
    if (alive(c)) closest.push_back(c);
    if (closest.size() == k) break;
  }
  result.closest = std::move(closest);
  return result;
}

PublishResult Overlay::publish(const Bytes32& from, const Advertisement& ad) {
  PublishResult result;
  RegistryNode* origin = alive_node(from);
  if (!origin) {
    result.no_route = true;
    return result;
  }
  StoredAd record{ad, origin->registration()};
  const std::size_t k = static_cast<std::size_t>(cfg_.k_bucket_size);

  for (const auto& skill : ad.skills) {
    Bytes32 key = skill_key(skill).digest;
    FindResult found = iterative_find(from, key);

    // the publisher itself is a storage candidate
    std::vector<Bytes32> targets = found.closest;
    targets.push_back(from);
    std::sort(targets.begin(), targets.end(), [&](const Bytes32& a, const Bytes32& b) {
      return compare_u256(xor_distance(a, key), xor_distance(b, key)) < 0;
    });
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    if (targets.size() > k) targets.resize(k);

    for (const Bytes32& t : targets) {
      RegistryNode* storer = alive_node(t);
      if (!storer) continue;
      StoreStatus status = storer->on_store(from, record, ad.published_at,
                                            &verified_ads_);
      if (status == StoreStatus::Stored || status == StoreStatus::Superseded) {
        result.stored_on += 1;
      } else {
        result.rejected += 1;
      }
    }
  }
  return result;
}

LookupResult Overlay::lookup(const Bytes32& from, const std::string& skill,
                             std::int64_t now_ms) {
  LookupResult result;
  Bytes32 key = skill_key(skill).digest;
  RegistryNode* origin = alive_node(from);
  if (!origin) {
    result.status = LookupStatus::NoRoute;
    return result;
  }

  FindResult found = iterative_find(from, key);
  result.rounds = found.rounds;
  result.trace = std::move(found.trace);

  // merge live records from the k closest holders plus the local store,
  // newest version per advertiser
  std::map<Bytes32, StoredAd> merged;
  auto absorb = [&](std::vector<StoredAd>&& records) {
    for (auto& r : records) {
      auto it = merged.find(r.ad.node_id);
      if (it == merged.end() || it->second.ad.published_at < r.ad.published_at) {
        merged[r.ad.node_id] = std::move(r);
      }
    }
  };
  absorb(origin->on_find_value(from, key, now_ms));
  bool reached_any = false;
  for (const Bytes32& holder : found.closest) {
    if (holder == from) {
      reached_any = true;
      continue;
    }
    RegistryNode* remote = alive_node(holder);
    if (!remote) continue;
    reached_any = true;
    absorb(remote->on_find_value(from, key, now_ms));
  }

  if (!reached_any && merged.empty() && origin->table().size() == 0) {
    result.status = LookupStatus::NoRoute;
    return result;
  }
  for (auto& [node_id, record] : merged) {
    result.ads.push_back(std::move(record.ad));
  }
  return result;
}

std::size_t Overlay::evict_stale(const Bytes32& node_id, std::int64_t now_ms) {
  RegistryNode* n = alive_node(node_id);
  return n ? n->evict_stale(now_ms) : 0;
}

std::size_t Overlay::gossip_round(const Bytes32& node_id, Rng& rng) {
  RegistryNode* n = alive_node(node_id);
  if (!n) return 0;
  std::vector<ResourceEntry> payload = n->active_gossip_payload();
  if (payload.empty()) return 0;

  std::vector<Bytes32> contacts = n->table().contacts();
  std::vector<Bytes32> live;
  for (const Bytes32& c : contacts) {
    if (alive(c)) live.push_back(c);
  }
  if (live.empty()) return 0;
  rng.shuffle(live);
  std::size_t fanout = std::min<std::size_t>(live.size(),
                                             static_cast<std::size_t>(cfg_.gossip_fanout));
  for (std::size_t i = 0; i < fanout; ++i) {
    alive_node(live[i])->on_gossip(node_id, payload);
  }
  return fanout;
}

std::vector<Bytes32> Overlay::query_resources(const Bytes32& node_id,
                                              const ResourcePredicate& predicate,
                                              std::int64_t now_ms) {
  RegistryNode* n = alive_node(node_id);
  if (!n) return {};
  return n->query_resources(predicate, now_ms);
}

}  // namespace swarm
