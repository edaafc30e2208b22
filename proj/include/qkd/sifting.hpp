#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "qkd/bits.hpp"
#include "qkd/channel_sim.hpp"
#include "qkd/errors.hpp"
#include "qkd/linkmodel.hpp"
#include "qkd/rng.hpp"

namespace qkd {

struct QberSample {
  double estimate = 0.0;
  std::uint64_t sample_size = 0;
};

/// Basis-matched key material for one pulse class. Both parties' bits are
/// kept side by side; only the simulator harness may compare them.
struct SiftedKey {
  std::uint32_t link_id = 0;
  PulseClass pulse_class = PulseClass::signal;
  BitVector bits_alice;
  BitVector bits_bob;
  std::uint64_t source_block = 0;  // rng seed of the originating block
  QberSample sample_qber;          // filled by estimate_qber

  std::size_t size() const { return bits_alice.size(); }
};

using PerClassSifted = std::array<SiftedKey, 3>;

/// Keeps detections where the bases agree, split by pulse class, order
/// preserved. Bit values are never altered, only selected.
inline PerClassSifted sift(const RawBlock& blk, std::uint32_t link_id = 0) {
  PerClassSifted out;
  for (unsigned c = 0; c < 3; ++c) {
    out[c].link_id = link_id;
    out[c].pulse_class = static_cast<PulseClass>(c);
    out[c].source_block = blk.rng_seed;
  }
  for (auto d : blk.detections) {
    std::uint64_t i = detection_index(d);
    if (i >= blk.pulse_count) throw Error("sift: detection index out of range");
    if (blk.alice_bases[i] != blk.bob_bases[i]) continue;
    auto& k = out[static_cast<unsigned>(blk.alice_classes.get(i))];
    k.bits_alice.push_back(blk.alice_bits[i]);
    k.bits_bob.push_back(detection_bit(d));
  }
  return out;
}

/// Discloses a random sample of the key, removes it, and returns the
/// disagreement fraction. The sample is sacrificed: those positions are
/// public and must never reach the key pool.
inline std::pair<QberSample, SiftedKey> estimate_qber(const SiftedKey& key,
                                                      double sample_fraction,
                                                      std::uint64_t seed) {
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0))
    throw std::invalid_argument("estimate_qber: sample_fraction outside (0,1)");
  const std::size_t n = key.size();
  if (n < 100 || key.bits_bob.size() != n)
    throw InsufficientDataError("estimate_qber: key shorter than 100 bits");
  const std::size_t k = static_cast<std::size_t>(n * sample_fraction);
  if (k == 0) throw InsufficientDataError("estimate_qber: empty sample");

  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  // Partial Fisher-Yates: the first k entries become the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<bool> sampled(n, false);
  std::uint64_t disagree = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sampled[idx[i]] = true;
    if (key.bits_alice[idx[i]] != key.bits_bob[idx[i]]) ++disagree;
  }

  SiftedKey rest;
  rest.link_id = key.link_id;
  rest.pulse_class = key.pulse_class;
  rest.source_block = key.source_block;
  rest.bits_alice.reserve(n - k);
  rest.bits_bob.reserve(n - k);
  for (std::size_t i = 0; i < n; ++i) {
    if (sampled[i]) continue;
    rest.bits_alice.push_back(key.bits_alice[i]);
    rest.bits_bob.push_back(key.bits_bob[i]);
  }
  QberSample est{static_cast<double>(disagree) / k, k};
  rest.sample_qber = est;
  return {est, std::move(rest)};
}

/// Sifted-key throughput: clock * signal gain * signal fraction * 1/2
/// (the BB84 basis agreement factor).
inline double sifted_rate(const PulseClassStats& signal_stats, const LinkParams& p) {
  return p.clock_hz * signal_stats.gain() * p.class_fraction(PulseClass::signal) * 0.5;
}

}  // namespace qkd
