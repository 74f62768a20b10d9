#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "swarm/errors.hpp"
#include "swarm/identity.hpp"
#include "swarm/rng.hpp"

using namespace swarm;

namespace {
Bytes32 seed_bytes(std::uint8_t fill) {
  Bytes32 s{};
  s.fill(fill);
  return s;
}

std::vector<std::uint8_t> msg(const char* s) {
  return std::vector<std::uint8_t>(s, s + std::strlen(s));
}
}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(to_hex(sha256("a")) ==
        "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb");
  CHECK(to_hex(sha256("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("hex round trip") {
  Bytes32 d = sha256("round-trip");
  auto parsed = bytes32_from_hex(to_hex(d));
  REQUIRE(parsed.has_value());
  CHECK(*parsed == d);
  CHECK_FALSE(from_hex("abz").has_value());
  CHECK_FALSE(bytes32_from_hex("abcd").has_value());
}

TEST_CASE("identity generation is deterministic and binds node_id") {
  NodeIdentity a = generate_identity(seed_bytes(0));
  NodeIdentity b = generate_identity(seed_bytes(0));
  CHECK(a.public_key == b.public_key);
  CHECK(a.node_id == b.node_id);
  CHECK(a.node_id == sha256(a.public_key));

  NodeIdentity c = generate_identity(seed_bytes(1));
  CHECK(c.node_id != a.node_id);
}

TEST_CASE("sign/verify round trip and bit sensitivity") {
  NodeIdentity id = generate_identity(seed_bytes(42));
  auto m = msg("the quick brown fox");
  Bytes64 sig = sign(id, m);
  CHECK(verify(id.public_key, m, sig));

  auto flipped = m;
  flipped[3] ^= 0x01;
  CHECK_FALSE(verify(id.public_key, flipped, sig));

  Bytes64 bad_sig = sig;
  bad_sig[10] ^= 0x80;
  CHECK_FALSE(verify(id.public_key, m, bad_sig));

  NodeIdentity other = generate_identity(seed_bytes(43));
  CHECK_FALSE(verify(other.public_key, m, sig));
}

TEST_CASE("signature round trip over random messages and bit positions") {
  Rng rng(99);
  NodeIdentity id = generate_identity(seed_bytes(9));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> m(1 + rng.uniform_u64(64));
    for (auto& b : m) b = static_cast<std::uint8_t>(rng.uniform_u64(256));
    Bytes64 sig = sign(id, m);
    REQUIRE(verify(id.public_key, m, sig));
    std::size_t bit = rng.uniform_u64(m.size() * 8);
    m[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CHECK_FALSE(verify(id.public_key, m, sig));
  }
}

TEST_CASE("puzzle difficulty 0 accepts nonce 0") {
  Bytes32 node_id = sha256("node");
  PuzzleSolution s = solve_puzzle(node_id, 0);
  CHECK(s.nonce == 0);
  CHECK(verify_puzzle(node_id, s));
}

TEST_CASE("puzzle solution has the required leading zero bits") {
  Bytes32 node_id = generate_identity(seed_bytes(5)).node_id;
  PuzzleSolution s = solve_puzzle(node_id, 8);
  // independent recomputation of SHA-256(node_id || nonce_be8)
  std::vector<std::uint8_t> buf(node_id.begin(), node_id.end());
  for (int i = 7; i >= 0; --i) {
    buf.push_back(static_cast<std::uint8_t>(s.nonce >> (8 * i)));
  }
  Bytes32 digest = sha256(buf);
  CHECK(leading_zero_bits(digest) >= 8);
  CHECK(verify_puzzle(node_id, s));
}

TEST_CASE("solver returns the minimal nonce (exhaustive scan oracle)") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Bytes32 node_id{};
    for (auto& b : node_id) b = static_cast<std::uint8_t>(rng.uniform_u64(256));
    const std::uint32_t difficulty = 10;
    PuzzleSolution s = solve_puzzle(node_id, difficulty);
    for (std::uint64_t nonce = 0; nonce < s.nonce; ++nonce) {
      CHECK(leading_zero_bits(puzzle_digest(node_id, nonce)) <
            static_cast<int>(difficulty));
    }
    CHECK(leading_zero_bits(puzzle_digest(node_id, s.nonce)) >=
          static_cast<int>(difficulty));
  }
}

TEST_CASE("verify_puzzle is exactly the leading-zero-bit predicate") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Bytes32 node_id{};
    for (auto& b : node_id) b = static_cast<std::uint8_t>(rng.uniform_u64(256));
    std::uint64_t nonce = rng.uniform_u64(1 << 12);
    std::uint32_t difficulty = static_cast<std::uint32_t>(rng.uniform_u64(13));
    PuzzleSolution s{nonce, difficulty};
    bool expected = leading_zero_bits(puzzle_digest(node_id, nonce)) >=
                    static_cast<int>(difficulty);
    CHECK(verify_puzzle(node_id, s) == expected);
  }
}

TEST_CASE("expected solve cost doubles per difficulty step") {
  Rng rng(1234);
  std::vector<std::uint64_t> cost_d, cost_d1;
  const std::uint32_t d = 7;
  for (int trial = 0; trial < 50; ++trial) {
    Bytes32 node_id{};
    for (auto& b : node_id) b = static_cast<std::uint8_t>(rng.uniform_u64(256));
    cost_d.push_back(solve_puzzle(node_id, d).nonce + 1);
    cost_d1.push_back(solve_puzzle(node_id, d + 1).nonce + 1);
  }
  auto median = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return static_cast<double>(v[v.size() / 2]);
  };
  double ratio = median(cost_d1) / median(cost_d);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 3.0);
}

TEST_CASE("difficulty above the cap is a configuration error") {
  Bytes32 node_id = sha256("capped");
  CHECK_THROWS_AS(solve_puzzle(node_id, 25), ConfigError);
  CHECK_NOTHROW(verify_puzzle(node_id, PuzzleSolution{0, 0}));
}
