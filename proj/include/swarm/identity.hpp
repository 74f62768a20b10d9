#pragma once

#include <cstdint>
#include <span>

#include "swarm/bytes.hpp"

namespace swarm {

/// Ed25519 node identity. node_id is SHA-256 of the public key, so node
/// identifiers and DHT keys share one 32-byte keyspace and any peer can
/// recompute the id from the advertised key.
struct NodeIdentity {
  Bytes32 public_key{};
  Bytes32 secret_seed{};  // never serialized into protocol records
  Bytes64 secret_key{};   // expanded form, derived from the seed
  Bytes32 node_id{};
};

/// Deterministic: one seed, one identity.
NodeIdentity generate_identity(const Bytes32& seed);

Bytes64 sign(const NodeIdentity& identity, std::span<const std::uint8_t> message);
bool verify(const Bytes32& public_key, std::span<const std::uint8_t> message,
            const Bytes64& signature);

/// Anti-Sybil registration puzzle: SHA-256(node_id || nonce_be8) must have
/// at least `difficulty` leading zero bits.
struct PuzzleSolution {
  std::uint64_t nonce = 0;
  std::uint32_t difficulty = 0;
};

inline constexpr std::uint32_t kMaxPuzzleDifficulty = 24;

/// Scans nonces from zero and returns the first solution, so independent
/// solvers agree on the minimal nonce. Throws ConfigError above the cap.
PuzzleSolution solve_puzzle(const Bytes32& node_id, std::uint32_t difficulty);

bool verify_puzzle(const Bytes32& node_id, const PuzzleSolution& solution);

/// The digest the puzzle is defined over, exposed for independent checks.
Bytes32 puzzle_digest(const Bytes32& node_id, std::uint64_t nonce);

}  // namespace swarm
