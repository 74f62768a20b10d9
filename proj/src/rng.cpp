#include "swarm/rng.hpp"

#include <cstring>

namespace swarm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t load_u64_be(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

Rng Rng::derive(std::uint64_t seed, std::string_view label) {
  Writer w;
  w.u64(seed);
  w.str(label);
  Bytes32 digest = sha256(w.data());
  Rng r(0);
  for (int i = 0; i < 4; ++i) r.s_[i] = load_u64_be(digest.data() + 8 * i);
  // astronomically unlikely, but the all-zero state is a fixed point
  if ((r.s_[0] | r.s_[1] | r.s_[2] | r.s_[3]) == 0) r.s_[0] = 1;
  return r;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::uniform_u64(std::uint64_t bound) {
  // rejection sampling on the top of the range keeps the draw unbiased
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::exponential(double rate) {
  double u = uniform();
  return -std::log1p(-u) / rate;
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  // avoid log(0)
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

double Rng::lognormal_median(double median, double sigma) {
  return median * std::exp(sigma * normal());
}

std::vector<std::uint32_t> Rng::permutation(std::uint32_t n) {
  std::vector<std::uint32_t> p(n);
  for (std::uint32_t i = 0; i < n; ++i) p[i] = i;
  shuffle(p);
  return p;
}

double hash_uniform(std::uint64_t seed, std::string_view label, const Bytes32& a,
                    const Bytes32& b) {
  Writer w;
  w.u64(seed);
  w.str(label);
  // order-independent: hash the sorted pair
  if (compare_u256(a, b) <= 0) {
    w.raw(a);
    w.raw(b);
  } else {
    w.raw(b);
    w.raw(a);
  }
  Bytes32 digest = sha256(w.data());
  std::uint64_t v = load_u64_be(digest.data());
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

}  // namespace swarm
