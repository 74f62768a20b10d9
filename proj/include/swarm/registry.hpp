#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "swarm/bytes.hpp"
#include "swarm/identity.hpp"
#include "swarm/rng.hpp"

namespace swarm {

struct SkillKey {
  Bytes32 digest{};
  auto operator<=>(const SkillKey&) const = default;
};

/// SHA-256 over the UTF-8 bytes of the skill name. Empty names are invalid.
SkillKey skill_key(const std::string& skill_name);

/// Bitwise XOR of two 256-bit identifiers, compared big-endian.
Bytes32 xor_distance(const Bytes32& a, const Bytes32& b);

struct ResourceVector {
  std::uint64_t vram_mb = 0;
  double cpu_fraction = 0.0;     // in [0,1]
  double bandwidth_mbps = 0.0;   // >= 0
  void validate() const;
};

struct RegistryConfig {
  std::int64_t t_refresh_ms = 10'000;
  int k_bucket_size = 20;
  int gossip_fanout = 3;
  std::int64_t gossip_period_ms = 1'000;
  // rounds a freshly learned index delta keeps being pushed; push-once
  // rumors die out below full coverage
  int gossip_repeat = 3;

  std::int64_t ttl_ms() const { return 3 * t_refresh_ms; }
  void validate() const;
};

/// Signed, TTL-bounded DHT record: skills a node serves, its resources and
/// self-reported trust. Skills are kept sorted so the signed encoding is
/// canonical.
struct Advertisement {
  Bytes32 node_id{};
  std::vector<std::string> skills;
  ResourceVector resources{};
  double trust = 0.0;
  std::int64_t published_at = 0;
  Bytes64 signature{};

  std::vector<std::uint8_t> signing_payload() const;
  bool live(std::int64_t now_ms, std::int64_t ttl_ms) const {
    return now_ms - published_at < ttl_ms;
  }
};

Advertisement make_advertisement(const NodeIdentity& identity,
                                 std::vector<std::string> skills,
                                 const ResourceVector& resources, double trust,
                                 std::int64_t published_at);
bool verify_advertisement(const Advertisement& ad, const Bytes32& public_key);

/// Join credential: identity binding plus the anti-Sybil puzzle. Carried on
/// every STORE so any storer can gate publishers without extra round trips.
struct RegistrationRecord {
  Bytes32 node_id{};
  Bytes32 public_key{};
  PuzzleSolution puzzle{};

  bool valid(std::uint32_t required_difficulty) const;
};

RegistrationRecord make_registration(const NodeIdentity& identity,
                                     std::uint32_t difficulty);

/// Kademlia-style routing table: one bucket per distance prefix, LRU within
/// a bucket, capacity k_bucket_size.
class RoutingTable {
 public:
  RoutingTable(const Bytes32& self, int bucket_size);

  void observe(const Bytes32& peer);
  void remove(const Bytes32& peer);
  bool contains(const Bytes32& peer) const;
  std::vector<Bytes32> closest(const Bytes32& target, std::size_t count) const;
  std::vector<Bytes32> contacts() const;
  std::size_t size() const;

 private:
  Bytes32 self_;
  int bucket_size_;
  std::array<std::vector<Bytes32>, 256> buckets_;
};

/// Secondary (gossip-propagated) resource index entry.
struct ResourceEntry {
  Bytes32 node_id{};
  ResourceVector resources{};
  double trust = 0.0;
  std::int64_t published_at = 0;
};

/// Conjunction of bounds over ResourceVector fields.
struct ResourcePredicate {
  std::optional<std::uint64_t> min_vram_mb, max_vram_mb;
  std::optional<double> min_cpu_fraction, max_cpu_fraction;
  std::optional<double> min_bandwidth_mbps, max_bandwidth_mbps;

  bool matches(const ResourceVector& r) const;
};

struct StoredAd {
  Advertisement ad;
  RegistrationRecord registration;
};

enum class StoreStatus { Stored, Superseded, RejectedSignature, RejectedPuzzle, RejectedStale };

/// One overlay participant: routing table, advertisement store, and the
/// eventually consistent resource index. Driven single-threaded by the
/// owning Overlay.
class RegistryNode {
 public:
  RegistryNode(const RegistrationRecord& reg, const RegistryConfig& cfg,
               std::uint32_t required_difficulty);

  const Bytes32& id() const { return reg_.node_id; }
  const RegistrationRecord& registration() const { return reg_; }
  RoutingTable& table() { return table_; }
  const RoutingTable& table() const { return table_; }

  // RPC handlers; `from` is observed into the routing table
  std::vector<Bytes32> on_find_node(const Bytes32& from, const Bytes32& target);
  StoreStatus on_store(const Bytes32& from, const StoredAd& record,
                       std::int64_t now_ms, std::set<std::string>* verified_cache);
  std::vector<StoredAd> on_find_value(const Bytes32& from, const Bytes32& key,
                                      std::int64_t now_ms);
  void on_gossip(const Bytes32& from, const std::vector<ResourceEntry>& entries);

  // local operations
  std::size_t evict_stale(std::int64_t now_ms);
  void seed_resource_entry(const ResourceEntry& entry);
  std::vector<ResourceEntry> active_gossip_payload();  // decrements repeat budget
  std::vector<Bytes32> query_resources(const ResourcePredicate& predicate,
                                       std::int64_t now_ms) const;
  int peer_score(const Bytes32& peer) const;
  std::size_t stored_ad_count() const;

 private:
  RegistrationRecord reg_;
  RegistryConfig cfg_;
  std::uint32_t required_difficulty_;
  RoutingTable table_;
  // skill key -> advertiser -> latest stored record
  std::map<Bytes32, std::map<Bytes32, StoredAd>> store_;
  std::map<Bytes32, ResourceEntry> resource_index_;
  std::map<Bytes32, int> gossip_budget_;  // node_id -> rounds left to push
  std::map<Bytes32, int> peer_scores_;
};

class BootstrapProvider {
 public:
  virtual ~BootstrapProvider() = default;
  virtual std::vector<Bytes32> peers() const = 0;
};

/// The only shipped provider: explicit (or simulator-chosen) peer list.
/// mDNS and DNS seeding differ only in where the list comes from.
class ExplicitPeerList : public BootstrapProvider {
 public:
  explicit ExplicitPeerList(std::vector<Bytes32> peers) : peers_(std::move(peers)) {}
  std::vector<Bytes32> peers() const override { return peers_; }

 private:
  std::vector<Bytes32> peers_;
};

struct LookupRound {
  std::vector<std::pair<Bytes32, Bytes32>> queried;  // (node, xor distance)
};

struct FindResult {
  std::vector<Bytes32> closest;
  int rounds = 0;
  std::vector<LookupRound> trace;
  bool no_route = false;
};

enum class LookupStatus { Ok, NoRoute };

struct LookupResult {
  LookupStatus status = LookupStatus::Ok;
  std::vector<Advertisement> ads;  // live, one (newest) version per node
  int rounds = 0;
  std::vector<LookupRound> trace;
};

struct PublishResult {
  int stored_on = 0;
  int rejected = 0;
  bool no_route = false;
};

struct JoinResult {
  bool joined = false;
  std::size_t contacts = 0;
  int rounds = 0;
};

/// Simulated overlay: owns every RegistryNode, delivers RPCs as direct
/// calls, and fails calls to departed nodes the way a timeout would.
class Overlay {
 public:
  Overlay(RegistryConfig cfg, std::uint32_t puzzle_difficulty);

  const RegistryConfig& config() const { return cfg_; }

  JoinResult join(const RegistrationRecord& reg, const BootstrapProvider& provider);
  void leave(const Bytes32& node_id);
  bool alive(const Bytes32& node_id) const;
  std::vector<Bytes32> alive_nodes() const;
  RegistryNode* node(const Bytes32& node_id);

  PublishResult publish(const Bytes32& from, const Advertisement& ad);
  LookupResult lookup(const Bytes32& from, const std::string& skill,
                      std::int64_t now_ms);
  FindResult iterative_find(const Bytes32& from, const Bytes32& target);
  std::size_t evict_stale(const Bytes32& node_id, std::int64_t now_ms);
  std::size_t gossip_round(const Bytes32& node_id, Rng& rng);
  std::vector<Bytes32> query_resources(const Bytes32& node_id,
                                       const ResourcePredicate& predicate,
                                       std::int64_t now_ms);

 private:
  struct Slot {
    std::unique_ptr<RegistryNode> node;
    bool alive = true;
  };

  RegistryNode* alive_node(const Bytes32& id);

  RegistryConfig cfg_;
  std::uint32_t puzzle_difficulty_;
  std::map<Bytes32, Slot> slots_;
  std::set<std::string> verified_ads_;  // (node_id, published_at) cache
};

}  // namespace swarm
