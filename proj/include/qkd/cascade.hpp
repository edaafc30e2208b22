#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <set>
#include <vector>

#include "qkd/bits.hpp"
#include "qkd/errors.hpp"
#include "qkd/rng.hpp"
#include "qkd/toeplitz.hpp"

namespace qkd {

namespace detail {

/// GF(2^64) multiply, reduction mod x^64 + x^4 + x^3 + x + 1.
inline std::uint64_t gf64_mul(std::uint64_t a, std::uint64_t b) {
  auto [lo, hi] = clmul64(a, b);
  auto [l2, h2] = clmul64(hi, 0x1b);
  auto [l3, h3] = clmul64(h2, 0x1b);
  (void)h3;  // h2 has at most 4 bits, so the second fold is exact
  return lo ^ l2 ^ l3;
}

}  // namespace detail

struct CascadeParams {
  unsigned passes = 4;
  double k1_factor = 0.73;  // pass-1 block size = ceil(k1_factor / qber)
};

/// Session geometry both parties must agree on before parities flow.
struct CascadeSetup {
  std::uint64_t n = 0;
  std::uint64_t k1 = 0;
  unsigned passes = 4;
  std::uint64_t perm_seed = 0;

  std::uint64_t block_size(unsigned pass) const {
    std::uint64_t k = k1 << pass;
    return std::min(k, n);
  }
};

namespace detail {

/// Shared view machinery: pass 0 is the identity order, later passes are
/// seeded shuffles that both sides derive from the setup.
struct PassViews {
  std::vector<std::vector<std::uint32_t>> perm;  // position -> original index
  std::vector<std::vector<std::uint32_t>> inv;   // original index -> position

  PassViews(const CascadeSetup& s) {
    perm.resize(s.passes);
    inv.resize(s.passes);
    for (unsigned p = 0; p < s.passes; ++p) {
      auto& fwd = perm[p];
      fwd.resize(s.n);
      for (std::uint64_t i = 0; i < s.n; ++i) fwd[i] = static_cast<std::uint32_t>(i);
      if (p > 0) {
        Rng rng(Rng(s.perm_seed).derive(p).next_u64());
        shuffle_indices(fwd, rng);
      }
      auto& rev = inv[p];
      rev.resize(s.n);
      for (std::uint64_t i = 0; i < s.n; ++i) rev[fwd[i]] = static_cast<std::uint32_t>(i);
    }
  }
};

}  // namespace detail

/// Alice's responder: answers parity queries against her (never modified)
/// key. Every bit of every answer is a disclosed parity and is counted.
class CascadeAlice {
public:
  explicit CascadeAlice(const BitVector& alice_bits) : key_(alice_bits) {
    bits_.resize(alice_bits.size());
    for (std::size_t i = 0; i < alice_bits.size(); ++i) bits_[i] = alice_bits[i];
  }

  void begin(const CascadeSetup& setup) {
    if (setup.n != bits_.size()) throw Error("cascade: setup length mismatch");
    if (setup.k1 == 0 || setup.passes == 0) throw Error("cascade: bad setup");
    setup_ = setup;
    views_ = std::make_unique<detail::PassViews>(setup);
  }

  /// All top-level block parities of one pass, packed.
  BitVector pass_parities(unsigned pass) {
    require_session(pass);
    std::uint64_t k = setup_.block_size(pass);
    BitVector out;
    for (std::uint64_t lo = 0; lo < setup_.n; lo += k)
      out.push_back(range_parity_raw(pass, lo, std::min(lo + k, setup_.n)));
    disclosed_ += out.size();
    return out;
  }

  bool range_parity(unsigned pass, std::uint64_t lo, std::uint64_t hi) {
    require_session(pass);
    if (lo >= hi || hi > setup_.n) throw Error("cascade: bad parity range");
    ++disclosed_;
    return range_parity_raw(pass, lo, hi);
  }

  /// 64-bit verification tag over the raw key. Not counted as cascade
  /// leakage; the pipeline charges it to the privacy-amplification safety
  /// margin instead.
  std::uint64_t verify_tag(std::uint64_t tag_seed) const {
    return key_tag(key_, tag_seed);
  }

  std::uint64_t disclosed_bits() const { return disclosed_; }

  /// Polynomial evaluation hash over GF(2^64) at a seeded random point;
  /// two keys differing anywhere collide with probability <= words/2^64.
  static std::uint64_t key_tag(const BitVector& key, std::uint64_t tag_seed) {
    std::uint64_t x = Rng(tag_seed).next_u64();
    std::uint64_t h = 1;
    for (auto w : key.words()) h = detail::gf64_mul(h, x) ^ w;
    return detail::gf64_mul(h, x) ^ key.size();
  }

private:
  void require_session(unsigned pass) const {
    if (!views_) throw Error("cascade: no session");
    if (pass >= setup_.passes) throw Error("cascade: pass out of range");
  }

  bool range_parity_raw(unsigned pass, std::uint64_t lo, std::uint64_t hi) const {
    const auto& fwd = views_->perm[pass];
    unsigned acc = 0;
    for (std::uint64_t i = lo; i < hi; ++i) acc ^= bits_[fwd[i]];
    return acc & 1u;
  }

  std::vector<std::uint8_t> bits_;
  CascadeSetup setup_{};
  std::unique_ptr<detail::PassViews> views_;
  std::uint64_t disclosed_ = 0;
};

/// Bob's transport-independent view of Alice. Implementations either call
/// a CascadeAlice directly (same process) or speak EC frames over a link.
class ParityLink {
public:
  virtual ~ParityLink() = default;
  virtual void begin(const CascadeSetup& setup) = 0;
  virtual BitVector pass_parities(unsigned pass) = 0;
  virtual bool range_parity(unsigned pass, std::uint64_t lo, std::uint64_t hi) = 0;
  virtual std::uint64_t verify_tag(std::uint64_t tag_seed) = 0;
};

class DirectParityLink final : public ParityLink {
public:
  explicit DirectParityLink(CascadeAlice& alice) : alice_(alice) {}
  void begin(const CascadeSetup& setup) override { alice_.begin(setup); }
  BitVector pass_parities(unsigned pass) override { return alice_.pass_parities(pass); }
  bool range_parity(unsigned pass, std::uint64_t lo, std::uint64_t hi) override {
    return alice_.range_parity(pass, lo, hi);
  }
  std::uint64_t verify_tag(std::uint64_t tag_seed) override {
    return alice_.verify_tag(tag_seed);
  }

private:
  CascadeAlice& alice_;
};

struct CascadeResult {
  BitVector corrected;
  std::uint64_t leaked_bits = 0;
  std::uint64_t corrections = 0;
  bool verified = false;  // set by cascade_correct when a tag was exchanged
};

/// Bidirectional error correction, Bob's side. Four doubling passes of
/// block parity comparison with binary search on mismatches; a bit fixed
/// in a later pass re-opens the earlier-pass blocks containing it until
/// every known block parity agrees.
inline CascadeResult cascade_correct_over(const BitVector& bob_bits, double qber_est,
                                          ParityLink& link, std::uint64_t session_seed,
                                          const CascadeParams& cp = {}) {
  const std::uint64_t n = bob_bits.size();
  if (n < 1000) throw BlockAbortError("cascade: key shorter than 1000 bits");
  if (!(qber_est > 0.0 && qber_est < 0.11))
    throw BlockAbortError("cascade: QBER estimate outside (0, 0.11)");

  CascadeSetup setup;
  setup.n = n;
  setup.k1 = std::min<std::uint64_t>(
      n, static_cast<std::uint64_t>(std::ceil(cp.k1_factor / qber_est)));
  setup.passes = cp.passes;
  setup.perm_seed = session_seed;
  link.begin(setup);

  detail::PassViews views(setup);
  std::vector<std::uint8_t> bits(n);
  for (std::uint64_t i = 0; i < n; ++i) bits[i] = bob_bits[i];

  CascadeResult res;

  // diff[p][b] = 1 when Alice's and Bob's parities of that block disagree.
  // Only passes already announced participate in back-tracking.
  std::vector<std::vector<std::uint8_t>> diff(setup.passes);
  std::set<std::pair<unsigned, std::uint64_t>> odd;

  auto bob_range_parity = [&](unsigned pass, std::uint64_t lo, std::uint64_t hi) {
    const auto& fwd = views.perm[pass];
    unsigned acc = 0;
    for (std::uint64_t i = lo; i < hi; ++i) acc ^= bits[fwd[i]];
    return static_cast<bool>(acc & 1u);
  };

  auto flip_bit = [&](unsigned upto_pass, std::uint64_t orig) {
    bits[orig] ^= 1u;
    ++res.corrections;
    for (unsigned p = 0; p <= upto_pass; ++p) {
      std::uint64_t b = views.inv[p][orig] / setup.block_size(p);
      diff[p][b] ^= 1u;
      if (diff[p][b]) odd.insert({p, b});
      else odd.erase({p, b});
    }
  };

  auto binary_search_block = [&](unsigned pass, std::uint64_t block, unsigned upto_pass) {
    std::uint64_t k = setup.block_size(pass);
    std::uint64_t lo = block * k, hi = std::min(lo + k, n);
    while (hi - lo > 1) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      bool alice = link.range_parity(pass, lo, mid);
      ++res.leaked_bits;
      if (alice != bob_range_parity(pass, lo, mid)) hi = mid;
      else lo = mid;
    }
    flip_bit(upto_pass, views.perm[pass][lo]);
  };

  for (unsigned pass = 0; pass < setup.passes; ++pass) {
    std::uint64_t k = setup.block_size(pass);
    std::uint64_t nblocks = (n + k - 1) / k;
    BitVector alice_par = link.pass_parities(pass);
    if (alice_par.size() != nblocks) throw Error("cascade: parity count mismatch");
    res.leaked_bits += nblocks;
    diff[pass].assign(nblocks, 0);
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      bool mine = bob_range_parity(pass, b * k, std::min((b + 1) * k, n));
      if (mine != alice_par[b]) {
        diff[pass][b] = 1;
        odd.insert({pass, b});
      }
    }
    // Drain every odd block across all announced passes.
    while (!odd.empty()) {
      auto [p, b] = *odd.begin();
      binary_search_block(p, b, pass);
    }
  }

  res.corrected.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) res.corrected.push_back(bits[i]);
  return res;
}

/// Exchanges a seeded 64-bit tag to detect residual errors after error
/// correction. Returns true when both keys hash identically.
inline bool verify_corrected(const BitVector& bob_bits, ParityLink& link,
                             std::uint64_t tag_seed) {
  std::vector<std::uint8_t> bits(bob_bits.size());
  for (std::size_t i = 0; i < bob_bits.size(); ++i) bits[i] = bob_bits[i];
  return link.verify_tag(tag_seed) == CascadeAlice::key_tag(bits, tag_seed);
}

/// Convenience one-process form: runs the interactive protocol between the
/// two keys over a direct in-process link and verifies the result.
inline CascadeResult cascade_correct(const BitVector& alice_bits,
                                     const BitVector& bob_bits, double qber_est,
                                     std::uint64_t session_seed = 0x9d2c5680,
                                     const CascadeParams& cp = {}) {
  if (alice_bits.size() != bob_bits.size())
    throw BlockAbortError("cascade: length mismatch");
  CascadeAlice alice(alice_bits);
  DirectParityLink link(alice);
  CascadeResult res = cascade_correct_over(bob_bits, qber_est, link, session_seed, cp);
  res.verified = verify_corrected(res.corrected, link, Rng(session_seed).next_u64());
  return res;
}

}  // namespace qkd
