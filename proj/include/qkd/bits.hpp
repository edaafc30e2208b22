#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkd {

/// Packed bit sequence. Bit i lives in word i/64 at position i%64; when
/// converted to bytes, bit 8k+j is bit j of byte k.
class BitVector {
public:
  BitVector() = default;
  explicit BitVector(std::size_t n, bool fill = false) { resize(n, fill); }

  static BitVector from_string(std::string_view s) {
    BitVector v;
    v.reserve(s.size());
    for (char c : s) {
      if (c == '0' || c == '1') v.push_back(c == '1');
      else if (c != ' ' && c != '_')
        throw std::invalid_argument("BitVector::from_string: bad character");
    }
    return v;
  }

  static BitVector from_bytes(const std::vector<std::uint8_t>& bytes) {
    BitVector v;
    v.n_ = bytes.size() * 8;
    v.words_.assign((v.n_ + 63) / 64, 0);
    std::memcpy(v.words_.data(), bytes.data(), bytes.size());
    return v;
  }

  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool operator[](std::size_t i) const { return get(i); }

  void set(std::size_t i, bool v) {
    std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v) words_[i >> 6] |= m;
    else words_[i >> 6] &= ~m;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  void push_back(bool v) {
    if ((n_ & 63) == 0) words_.push_back(0);
    if (v) words_.back() |= std::uint64_t{1} << (n_ & 63);
    ++n_;
  }

  /// Appends the low `count` bits of `w` (count <= 64).
  void append_bits(std::uint64_t w, unsigned count) {
    if (count == 0) return;
    if (count < 64) w &= (std::uint64_t{1} << count) - 1;
    unsigned off = n_ & 63;
    if (off == 0) {
      words_.push_back(w);
    } else {
      words_.back() |= w << off;
      if (count > 64 - off) words_.push_back(w >> (64 - off));
    }
    n_ += count;
  }

  void resize(std::size_t n, bool fill = false) {
    words_.assign((n + 63) / 64, fill ? ~std::uint64_t{0} : 0);
    n_ = n;
    trim();
  }

  void clear() {
    words_.clear();
    n_ = 0;
  }

  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  BitVector slice(std::size_t begin, std::size_t len) const {
    if (begin + len > n_) throw std::out_of_range("BitVector::slice");
    BitVector out;
    out.reserve(len);
    std::size_t i = begin;
    while (len >= 64) {
      out.append_bits(read_word(i), 64);
      i += 64;
      len -= 64;
    }
    if (len) out.append_bits(read_word(i), static_cast<unsigned>(len));
    return out;
  }

  void append(const BitVector& other) {
    std::size_t i = 0, len = other.n_;
    while (len >= 64) {
      append_bits(other.read_word(i), 64);
      i += 64;
      len -= 64;
    }
    if (len) append_bits(other.read_word(i), static_cast<unsigned>(len));
  }

  BitVector& operator^=(const BitVector& other) {
    if (other.n_ != n_) throw std::invalid_argument("BitVector ^=: length mismatch");
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

  bool operator==(const BitVector& other) const {
    return n_ == other.n_ && words_ == other.words_;
  }

  std::size_t hamming_distance(const BitVector& other) const {
    if (other.n_ != n_) throw std::invalid_argument("hamming_distance: length mismatch");
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      c += static_cast<std::size_t>(std::popcount(words_[k] ^ other.words_[k]));
    return c;
  }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((n_ + 7) / 8, 0);
    std::memcpy(out.data(), words_.data(), out.size());
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  /// 64 bits starting at bit i (zero padded past the end).
  std::uint64_t read_word(std::size_t i) const {
    std::size_t k = i >> 6;
    unsigned off = i & 63;
    if (k >= words_.size()) return 0;
    std::uint64_t w = words_[k] >> off;
    if (off && k + 1 < words_.size()) w |= words_[k + 1] << (64 - off);
    return w;
  }

  void reserve(std::size_t n) { words_.reserve((n + 63) / 64); }

  /// FNV-1a over the packed words; used for seed-freshness ledgers and
  /// store integrity checks, not for security.
  std::uint64_t content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    mix(n_);
    for (auto w : words_) mix(w);
    return h;
  }

private:
  void trim() {
    if (n_ & 63) words_.back() &= (std::uint64_t{1} << (n_ & 63)) - 1;
    if (words_.size() > (n_ + 63) / 64) words_.resize((n_ + 63) / 64);
  }

  std::vector<std::uint64_t> words_;
  std::size_t n_ = 0;
};

inline std::string to_string(const BitVector& v) {
  std::string s;
  s.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s.push_back(v[i] ? '1' : '0');
  return s;
}

}  // namespace qkd
