#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qkd/bits.hpp"
#include "qkd/errors.hpp"
#include "qkd/rng.hpp"

#if defined(QKDNET_HAVE_PCLMUL)
#include <wmmintrin.h>
#endif

namespace qkd {

/// Seed defining one Toeplitz matrix: bit (i, j) of the m x n matrix reads
/// seed bit i - j + n - 1. Seeds come from the configured randomness
/// source and are never reused across blocks.
struct ToeplitzSeed {
  BitVector bits;      // length n + m - 1
  std::string source;  // randomness source identifier

  static ToeplitzSeed draw(RandomSource& src, std::size_t input_len,
                           std::size_t output_len) {
    return {src.bits(input_len + output_len - 1), src.id()};
  }
};

namespace detail {

/// Portable carryless 64x64 -> 128 multiply, 4-bit windowed shift-and-xor.
/// The high halves of the window table fit in 3 bits, so thi << shift never
/// overflows for shift <= 60.
inline std::pair<std::uint64_t, std::uint64_t> clmul64_generic(std::uint64_t a,
                                                               std::uint64_t b) {
  std::uint64_t tlo[16], thi[16];
  tlo[0] = thi[0] = 0;
  tlo[1] = a;
  thi[1] = 0;
  for (unsigned k = 2; k < 16; ++k) {
    if (k & 1) {
      tlo[k] = tlo[k - 1] ^ a;
      thi[k] = thi[k - 1];
    } else {
      unsigned h = k >> 1;
      tlo[k] = tlo[h] << 1;
      thi[k] = (thi[h] << 1) | (tlo[h] >> 63);
    }
  }
  std::uint64_t lo = 0, hi = 0;
  for (unsigned shift = 0; shift < 64; shift += 4) {
    unsigned nib = static_cast<unsigned>((b >> shift) & 0xf);
    if (!nib) continue;
    lo ^= tlo[nib] << shift;
    hi ^= thi[nib] << shift;
    if (shift) hi ^= tlo[nib] >> (64 - shift);
  }
  return {lo, hi};
}

inline std::pair<std::uint64_t, std::uint64_t> clmul64(std::uint64_t a, std::uint64_t b) {
#if defined(QKDNET_HAVE_PCLMUL)
  __m128i r = _mm_clmulepi64_si128(_mm_set_epi64x(0, static_cast<long long>(a)),
                                   _mm_set_epi64x(0, static_cast<long long>(b)), 0);
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(r)),
          static_cast<std::uint64_t>(_mm_extract_epi64(r, 1))};
#else
  return clmul64_generic(a, b);
#endif
}

}  // namespace detail

/// GF(2) Toeplitz matrix-vector product: output bit i is the parity of the
/// AND of the input with matrix row i. Computed as the middle window of
/// the carryless polynomial product input(t) * seed(t), which gives
/// out[i] = XOR_j input[j] * seed[i - j + n - 1] without materializing the
/// matrix.
inline BitVector toeplitz_hash(const BitVector& input, const ToeplitzSeed& seed,
                               std::size_t out_len) {
  const std::size_t n = input.size();
  if (out_len == 0) return BitVector{};
  if (out_len > n)
    throw std::invalid_argument("toeplitz_hash: out_len exceeds input length");
  if (seed.bits.size() != n + out_len - 1)
    throw std::invalid_argument("toeplitz_hash: seed length must be n + m - 1");

  const auto& a = input.words();
  const auto& s = seed.bits.words();
  const std::size_t na = a.size(), ns = s.size();

  // Only product coefficients [n-1, n-1+out_len) are needed.
  const std::size_t win_lo = n - 1;
  const std::size_t win_hi = n - 1 + out_len;  // exclusive
  const std::size_t lo_word = win_lo / 64;
  const std::size_t hi_word = (win_hi + 63) / 64;
  std::vector<std::uint64_t> acc(hi_word - lo_word + 2, 0);

  for (std::size_t ia = 0; ia < na; ++ia) {
    if (!a[ia]) continue;
    // s-word range whose product with a[ia] can land in the window
    std::size_t jb_lo = lo_word > ia + 1 ? lo_word - ia - 1 : 0;
    std::size_t jb_hi = std::min(ns, hi_word - ia + 1);
    for (std::size_t jb = jb_lo; jb < jb_hi; ++jb) {
      if (!s[jb]) continue;
      auto [lo, hi] = detail::clmul64(a[ia], s[jb]);
      std::size_t w = ia + jb;
      if (w >= lo_word && w < lo_word + acc.size()) acc[w - lo_word] ^= lo;
      if (w + 1 >= lo_word && w + 1 < lo_word + acc.size()) acc[w + 1 - lo_word] ^= hi;
    }
  }

  BitVector out;
  out.reserve(out_len);
  std::size_t bit = win_lo;
  while (bit < win_hi) {
    std::size_t k = bit / 64 - lo_word;
    unsigned off = bit % 64;
    std::uint64_t w = acc[k] >> off;
    if (off && k + 1 < acc.size()) w |= acc[k + 1] << (64 - off);
    unsigned take = static_cast<unsigned>(std::min<std::size_t>(64, win_hi - bit));
    out.append_bits(w, take);
    bit += take;
  }
  return out;
}

}  // namespace qkd
