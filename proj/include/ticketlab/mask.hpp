#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ticketlab {

// Per-layer binary keep/prune indicator over the flat weight vector.
// Bit i lives in words[i/64], bit position i%64.
struct MaskLayer {
  std::size_t bits = 0;
  std::vector<std::uint64_t> words;

  MaskLayer() = default;
  explicit MaskLayer(std::size_t n, bool ones = false)
      : bits(n), words((n + 63) / 64, ones ? ~0ULL : 0ULL) {
    if (ones) trim();
  }

  bool get(std::size_t i) const { return (words[i >> 6] >> (i & 63)) & 1ULL; }
  void set(std::size_t i, bool v) {
    if (v)
      words[i >> 6] |= (1ULL << (i & 63));
    else
      words[i >> 6] &= ~(1ULL << (i & 63));
  }

  std::size_t popcount() const {
    std::size_t c = 0;
    for (std::uint64_t w : words) c += std::popcount(w);
    return c;
  }

  // Clears padding bits above `bits` in the last word.
  void trim() {
    if (bits % 64 != 0 && !words.empty())
      words.back() &= (1ULL << (bits % 64)) - 1ULL;
  }

  bool operator==(const MaskLayer& o) const = default;
};

inline MaskLayer mask_and(const MaskLayer& a, const MaskLayer& b) {
  if (a.bits != b.bits) throw std::invalid_argument("mask_and: size mismatch");
  MaskLayer r(a.bits);
  for (std::size_t i = 0; i < r.words.size(); ++i) r.words[i] = a.words[i] & b.words[i];
  return r;
}

inline MaskLayer mask_or(const MaskLayer& a, const MaskLayer& b) {
  if (a.bits != b.bits) throw std::invalid_argument("mask_or: size mismatch");
  MaskLayer r(a.bits);
  for (std::size_t i = 0; i < r.words.size(); ++i) r.words[i] = a.words[i] | b.words[i];
  return r;
}

inline std::size_t intersection_count(const MaskLayer& a, const MaskLayer& b) {
  if (a.bits != b.bits) throw std::invalid_argument("intersection_count: size mismatch");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i)
    c += std::popcount(a.words[i] & b.words[i]);
  return c;
}

// One ticket: a MaskLayer per parameterized network layer.
struct Mask {
  std::vector<MaskLayer> layers;

  std::size_t tau(std::size_t layer) const { return layers.at(layer).popcount(); }
  bool operator==(const Mask& o) const = default;
};

}  // namespace ticketlab
