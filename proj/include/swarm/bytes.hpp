#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swarm {

using Bytes32 = std::array<std::uint8_t, 32>;
using Bytes64 = std::array<std::uint8_t, 64>;

/// SHA-256 of an arbitrary byte span.
Bytes32 sha256(std::span<const std::uint8_t> data);
Bytes32 sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex);
std::optional<Bytes32> bytes32_from_hex(std::string_view hex);

/// Number of leading zero bits in a 256-bit digest (big-endian bit order).
int leading_zero_bits(const Bytes32& digest);

/// Big-endian numeric comparison of two 256-bit values: -1, 0, +1.
int compare_u256(const Bytes32& a, const Bytes32& b);

/// 256-bit addition; returns true if the sum overflowed (carry out).
bool add_u256(const Bytes32& a, const Bytes32& b, Bytes32& out);

// Canonical length-prefixed encoder. All integers big-endian, doubles as
// raw IEEE-754 bit patterns. Used for every signed payload so signatures
// are reproducible across peers.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void raw(std::span<const std::uint8_t> data);
  void bytes(std::span<const std::uint8_t> data);  // u32 length prefix + raw
  void str(std::string_view s);

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

inline std::span<const std::uint8_t> as_span(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace swarm
