#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "qkd/bits.hpp"
#include "qkd/errors.hpp"
#include "qkd/linkmodel.hpp"
#include "qkd/rng.hpp"
#include "qkd/serial.hpp"

namespace qkd {

/// Pulse classes packed two bits per pulse, 32 per word.
class ClassSeq {
public:
  void reserve(std::size_t n) { words_.reserve((n + 31) / 32); }

  void push_back(PulseClass c) {
    if ((n_ & 31) == 0) words_.push_back(0);
    words_.back() |= static_cast<std::uint64_t>(c) << (2 * (n_ & 31));
    ++n_;
  }

  PulseClass get(std::size_t i) const {
    return static_cast<PulseClass>((words_[i >> 5] >> (2 * (i & 31))) & 3u);
  }

  std::size_t size() const { return n_; }
  const std::vector<std::uint64_t>& words() const { return words_; }

  /// Per-class totals via 2-bit lane counting.
  std::array<std::uint64_t, 3> counts() const {
    constexpr std::uint64_t kLow = 0x5555555555555555ull;
    std::uint64_t decoy = 0, vacuum = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      std::uint64_t lanes = kLow;
      if (k + 1 == words_.size() && (n_ & 31))
        lanes &= (std::uint64_t{1} << (2 * (n_ & 31))) - 1;
      std::uint64_t lo = w & kLow, hi = (w >> 1) & kLow;
      decoy += std::popcount(lo & ~hi & lanes);
      vacuum += std::popcount(hi & ~lo & lanes);
    }
    std::uint64_t total = n_;
    return {total - decoy - vacuum, decoy, vacuum};
  }

  static ClassSeq from_words(std::vector<std::uint64_t> words, std::size_t n) {
    ClassSeq s;
    s.words_ = std::move(words);
    s.n_ = n;
    return s;
  }

private:
  std::vector<std::uint64_t> words_;
  std::size_t n_ = 0;
};

/// Detection event packed as (pulse index << 1) | measured bit.
inline std::uint64_t make_detection(std::uint64_t index, bool bit) {
  return (index << 1) | static_cast<std::uint64_t>(bit);
}
inline std::uint64_t detection_index(std::uint64_t d) { return d >> 1; }
inline bool detection_bit(std::uint64_t d) { return d & 1u; }

/// Simulator-privileged counters: what actually happened photon-by-photon.
/// Real hardware cannot observe these; tests use them as ground truth for
/// the decoy bounds.
struct ClassTruth {
  std::uint64_t sent_n1 = 0;         // pulses that carried exactly one photon
  std::uint64_t det_n1 = 0;          // clicks coincident with such a pulse
  std::uint64_t det_n1_matched = 0;  // ... with matching bases
  std::uint64_t err_n1_matched = 0;  // ... and a flipped bit

  double gain(std::uint64_t sent) const {
    return sent ? static_cast<double>(det_n1) / sent : 0.0;
  }
  double qber() const {
    return det_n1_matched ? static_cast<double>(err_n1_matched) / det_n1_matched : 0.0;
  }
};

/// One simulated block of pulses plus everything Bob's detectors produced.
struct RawBlock {
  std::uint64_t pulse_count = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t param_hash = 0;
  BitVector alice_bits;
  BitVector alice_bases;
  ClassSeq alice_classes;
  BitVector bob_bases;
  std::vector<std::uint64_t> detections;  // strictly increasing indices
  std::array<ClassTruth, 3> truth{};
  std::uint64_t afterpulse_clicks = 0;
};

namespace detail {

/// Cumulative 64-bit thresholds for one pulse class: photon number is
/// sampled jointly with the click kind in a single uniform draw.
struct OutcomeTable {
  // Outcomes, cumulative: [none, none_n1, signal_click, signal_click_n1,
  // background_click, background_click_n1]
  std::array<std::uint64_t, 6> cum{};

  static OutcomeTable build(double m, double eta, double y0) {
    // Poisson pmf up to where the tail is below 2^-70.
    std::array<double, 6> p{};
    double pn = std::exp(-m);  // P(n = 0)
    for (int n = 0; n < 64; ++n) {
      double s_n = 1.0 - std::pow(1.0 - eta, n);  // any photon survives
      double sig = pn * s_n;
      double bg = pn * (1.0 - s_n) * y0;
      double none = pn * (1.0 - s_n) * (1.0 - y0);
      int n1 = n == 1 ? 1 : 0;
      p[0 + n1] += none;
      p[2 + n1] += sig;
      p[4 + n1] += bg;
      if (pn < 1e-22 && n > m) break;
      pn *= m / (n + 1);
    }
    OutcomeTable t;
    double acc = 0.0;
    for (int k = 0; k < 6; ++k) {
      acc += p[k];
      double scaled = acc * 18446744073709551616.0;  // 2^64
      t.cum[k] = scaled >= 18446744073709551615.0
                     ? ~std::uint64_t{0}
                     : static_cast<std::uint64_t>(scaled);
    }
    t.cum[5] = ~std::uint64_t{0};
    return t;
  }

  unsigned sample(std::uint64_t u) const {
    unsigned k = 0;
    while (u >= cum[k]) ++k;
    return k;
  }
};

inline BitVector random_bits(Rng rng, std::uint64_t n) {
  BitVector v;
  v.reserve(n);
  while (n >= 64) {
    v.append_bits(rng.next_u64(), 64);
    n -= 64;
  }
  if (n) v.append_bits(rng.next_u64(), static_cast<unsigned>(n));
  return v;
}

}  // namespace detail

/// Monte Carlo simulation of one block. Photon numbers are sampled per
/// pulse (Poissonian source), so the block records true single-photon
/// statistics alongside what the detector sees. The aggregate per-class
/// gain is 1 - (1-y0) e^(-eta m); it differs from the closed-form
/// prediction y0 + 1 - e^(-eta m) by O(y0 eta m), far below the binomial
/// noise floor at any block size used here.
///
/// Dead time: a click at pulse i blocks genuine clicks on pulses
/// i+1 .. i+D-1 where D = floor(dead_time_s * clock_hz); the gate reopens
/// at i+D, so D is the minimum spacing between genuine clicks. On reopen
/// an afterpulse fires with probability afterpulse_prob, carrying a
/// uniformly random bit; afterpulse clicks restart the dead window.
inline RawBlock simulate_block(const LinkParams& p, std::uint64_t pulse_count,
                               std::uint64_t seed) {
  if (pulse_count == 0) throw std::invalid_argument("simulate_block: pulse_count = 0");
  p.validate();

  const double eta = total_transmittance(p);
  const std::uint64_t dead = p.dead_pulses();

  Rng root(seed);
  Rng class_rng = root.derive(1);
  Rng pulse_rng = root.derive(2);

  RawBlock blk;
  blk.pulse_count = pulse_count;
  blk.rng_seed = seed;
  blk.param_hash = p.param_hash();
  blk.alice_bits = detail::random_bits(root.derive(3), pulse_count);
  blk.alice_bases = detail::random_bits(root.derive(4), pulse_count);
  blk.bob_bases = detail::random_bits(root.derive(5), pulse_count);

  // Class thresholds from the configured mix.
  const unsigned total_mix = p.mix_total();
  const std::uint64_t unit = ~std::uint64_t{0} / total_mix;
  const std::uint64_t t_signal = unit * p.state_mix[0];
  const std::uint64_t t_decoy = t_signal + unit * p.state_mix[1];

  blk.alice_classes.reserve(pulse_count);
  std::array<detail::OutcomeTable, 3> tables = {
      detail::OutcomeTable::build(p.mu, eta, p.y0),
      detail::OutcomeTable::build(p.nu, eta, p.y0),
      detail::OutcomeTable::build(0.0, eta, p.y0),
  };

  constexpr std::uint64_t kNever = ~std::uint64_t{0};
  std::uint64_t dead_until = 0;    // genuine clicks blocked below this index
  std::uint64_t afterpulse_at = kNever;

  blk.detections.reserve(static_cast<std::size_t>(
      pulse_count * (predicted_gain(eta, p.y0, p.mu) * 1.2) + 64));

  for (std::uint64_t i = 0; i < pulse_count; ++i) {
    std::uint64_t cu = class_rng.next_u64();
    PulseClass cls = cu < t_signal   ? PulseClass::signal
                     : cu < t_decoy ? PulseClass::decoy
                                    : PulseClass::vacuum;
    blk.alice_classes.push_back(cls);
    auto& truth = blk.truth[static_cast<unsigned>(cls)];

    unsigned outcome = tables[static_cast<unsigned>(cls)].sample(pulse_rng.next_u64());
    bool n1 = outcome & 1u;
    if (n1) ++truth.sent_n1;

    bool clicked = false;
    bool bit = false;
    if (i == afterpulse_at) {
      afterpulse_at = kNever;
      if (pulse_rng.bernoulli(p.afterpulse_prob)) {
        clicked = true;
        bit = pulse_rng.next_bool();
        ++blk.afterpulse_clicks;
      }
    }
    if (!clicked && i >= dead_until && outcome >= 2) {
      clicked = true;
      double err_p = outcome >= 4 ? p.e0 : p.e_det;  // background vs photon click
      bool err = pulse_rng.bernoulli(err_p);
      bit = blk.alice_bits[i] ^ err;
    }
    if (clicked) {
      blk.detections.push_back(make_detection(i, bit));
      dead_until = i + dead;
      afterpulse_at = i + std::max<std::uint64_t>(dead, 1);
      if (n1) {
        ++truth.det_n1;
        if (blk.alice_bases[i] == blk.bob_bases[i]) {
          ++truth.det_n1_matched;
          if (bit != blk.alice_bits[i]) ++truth.err_n1_matched;
        }
      }
    }
  }
  return blk;
}

inline constexpr std::uint64_t kNoPrev = ~std::uint64_t{0};

/// Per-class counts from a block: sent per class, plus detections split
/// into all / basis-matched / basis-matched-and-errored.
inline PerClassStats tally(const RawBlock& blk) {
  if (blk.alice_classes.size() != blk.pulse_count ||
      blk.alice_bits.size() != blk.pulse_count ||
      blk.alice_bases.size() != blk.pulse_count ||
      blk.bob_bases.size() != blk.pulse_count)
    throw Error("tally: malformed block (sequence lengths)");

  PerClassStats stats;
  auto sent = blk.alice_classes.counts();
  for (unsigned c = 0; c < 3; ++c) {
    stats[c].pulse_class = static_cast<PulseClass>(c);
    stats[c].sent = sent[c];
  }

  std::uint64_t prev = kNoPrev;
  for (auto d : blk.detections) {
    std::uint64_t i = detection_index(d);
    if (i >= blk.pulse_count || (prev != kNoPrev && i <= prev))
      throw Error("tally: detection indices not strictly increasing");
    prev = i;
    auto& s = stats[static_cast<unsigned>(blk.alice_classes.get(i))];
    ++s.detected;
    if (blk.alice_bases[i] == blk.bob_bases[i]) {
      ++s.matched;
      if (detection_bit(d) != blk.alice_bits[i]) ++s.errored;
    }
  }
  return stats;
}

// --- versioned binary block records -------------------------------------

inline void write_block(std::ostream& out, const RawBlock& blk) {
  serial::put_magic(out, "QKDRAWB1");
  serial::put_u64(out, blk.param_hash);
  serial::put_u64(out, blk.pulse_count);
  serial::put_u64(out, blk.rng_seed);
  serial::put_u64_vec(out, blk.alice_bits.words());
  serial::put_u64_vec(out, blk.alice_bases.words());
  serial::put_u64_vec(out, blk.bob_bases.words());
  serial::put_u64_vec(out, blk.alice_classes.words());
  serial::put_u64_vec(out, blk.detections);
  for (const auto& t : blk.truth) {
    serial::put_u64(out, t.sent_n1);
    serial::put_u64(out, t.det_n1);
    serial::put_u64(out, t.det_n1_matched);
    serial::put_u64(out, t.err_n1_matched);
  }
  serial::put_u64(out, blk.afterpulse_clicks);
  if (!out) throw IoError("write_block: stream failure");
}

inline RawBlock read_block(std::istream& in) {
  serial::expect_magic(in, "QKDRAWB1");
  RawBlock blk;
  blk.param_hash = serial::get_u64(in);
  blk.pulse_count = serial::get_u64(in);
  blk.rng_seed = serial::get_u64(in);
  const std::uint64_t max_words = blk.pulse_count / 16 + 4;
  auto bits = [&](std::uint64_t words_needed) {
    auto w = serial::get_u64_vec(in, max_words);
    if (w.size() != words_needed) throw IoError("read_block: bit array length mismatch");
    BitVector v;
    v.resize(blk.pulse_count);
    v.words() = std::move(w);
    return v;
  };
  const std::uint64_t nw = (blk.pulse_count + 63) / 64;
  blk.alice_bits = bits(nw);
  blk.alice_bases = bits(nw);
  blk.bob_bases = bits(nw);
  auto cw = serial::get_u64_vec(in, max_words);
  if (cw.size() != (blk.pulse_count + 31) / 32)
    throw IoError("read_block: class array length mismatch");
  blk.alice_classes = ClassSeq::from_words(std::move(cw), blk.pulse_count);
  blk.detections = serial::get_u64_vec(in, blk.pulse_count);
  for (auto& t : blk.truth) {
    t.sent_n1 = serial::get_u64(in);
    t.det_n1 = serial::get_u64(in);
    t.det_n1_matched = serial::get_u64(in);
    t.err_n1_matched = serial::get_u64(in);
  }
  blk.afterpulse_clicks = serial::get_u64(in);
  return blk;
}

}  // namespace qkd
