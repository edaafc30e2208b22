#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "qkd/bits.hpp"

namespace qkd {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Deterministic 64-bit generator (splitmix64). Sequences are identical
/// across platforms for a given seed, which the reproducibility contract
/// of the simulator relies on.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform in [0, bound) via multiply-shift; bias is O(bound / 2^64).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bool() { return next_u64() >> 63; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next_double() < p;
  }

  BitVector bits(std::size_t n) {
    BitVector v;
    v.reserve(n);
    while (n >= 64) {
      v.append_bits(next_u64(), 64);
      n -= 64;
    }
    if (n) v.append_bits(next_u64(), static_cast<unsigned>(n));
    return v;
  }

  /// Independent child stream; distinct ids give decorrelated sequences.
  Rng derive(std::uint64_t stream_id) const {
    std::uint64_t s = state_;
    std::uint64_t a = splitmix64_next(s);
    s = a ^ (0x9e3779b97f4a7c15ull * (stream_id + 1));
    return Rng(splitmix64_next(s));
  }

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Source of key/seed randomness. Simulations use the deterministic
/// implementation so runs are reproducible; live use takes the system one.
class RandomSource {
public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;
  virtual std::string id() const = 0;

  BitVector bits(std::size_t n) {
    BitVector v;
    v.reserve(n);
    while (n >= 64) {
      v.append_bits(next_u64(), 64);
      n -= 64;
    }
    if (n) v.append_bits(next_u64(), static_cast<unsigned>(n));
    return v;
  }
};

class DeterministicSource final : public RandomSource {
public:
  explicit DeterministicSource(std::uint64_t seed) : rng_(seed), seed_(seed) {}
  std::uint64_t next_u64() override { return rng_.next_u64(); }
  std::string id() const override { return "splitmix64:" + std::to_string(seed_); }

private:
  Rng rng_;
  std::uint64_t seed_;
};

class SystemSource final : public RandomSource {
public:
  std::uint64_t next_u64() override {
    return (static_cast<std::uint64_t>(dev_()) << 32) | dev_();
  }
  std::string id() const override { return "system"; }

private:
  std::random_device dev_;
};

}  // namespace qkd
