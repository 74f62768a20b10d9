#include "swarm/identity.hpp"

#include <sodium.h>

#include <stdexcept>

#include "swarm/errors.hpp"

namespace swarm {

namespace {
void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}
}  // namespace

NodeIdentity generate_identity(const Bytes32& seed) {
  ensure_sodium();
  static_assert(crypto_sign_PUBLICKEYBYTES == 32);
  static_assert(crypto_sign_SECRETKEYBYTES == 64);
  NodeIdentity id;
  id.secret_seed = seed;
  crypto_sign_seed_keypair(id.public_key.data(), id.secret_key.data(), seed.data());
  id.node_id = sha256(id.public_key);
  return id;
}

Bytes64 sign(const NodeIdentity& identity, std::span<const std::uint8_t> message) {
  ensure_sodium();
  Bytes64 sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       identity.secret_key.data());
  return sig;
}

bool verify(const Bytes32& public_key, std::span<const std::uint8_t> message,
            const Bytes64& signature) {
  ensure_sodium();
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

Bytes32 puzzle_digest(const Bytes32& node_id, std::uint64_t nonce) {
  std::array<std::uint8_t, 40> buf;
  std::memcpy(buf.data(), node_id.data(), 32);
  for (int i = 0; i < 8; ++i) {
    buf[32 + i] = static_cast<std::uint8_t>(nonce >> (8 * (7 - i)));
  }
  return sha256(std::span<const std::uint8_t>(buf));
}

PuzzleSolution solve_puzzle(const Bytes32& node_id, std::uint32_t difficulty) {
  if (difficulty > kMaxPuzzleDifficulty) {
    throw ConfigError("puzzle difficulty " + std::to_string(difficulty) +
                      " exceeds cap " + std::to_string(kMaxPuzzleDifficulty));
  }
  for (std::uint64_t nonce = 0;; ++nonce) {
    if (leading_zero_bits(puzzle_digest(node_id, nonce)) >=
        static_cast<int>(difficulty)) {
      return PuzzleSolution{nonce, difficulty};
    }
  }
}

bool verify_puzzle(const Bytes32& node_id, const PuzzleSolution& solution) {
  return leading_zero_bits(puzzle_digest(node_id, solution.nonce)) >=
         static_cast<int>(solution.difficulty);
}

}  // namespace swarm
