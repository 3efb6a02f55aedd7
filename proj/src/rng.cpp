#include "ticketlab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ticketlab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RandomStream RandomStream::from_seed(std::uint64_t seed, std::string_view label) {
  return RandomStream(mix64(mix64(seed + kGolden) ^ fnv1a(label)));
}

RandomStream RandomStream::fork(std::uint64_t index) const {
  // Distinct salt keeps fork keys off the output sequence of u64_at.
  return RandomStream(mix64(key_ ^ 0xA0761D6478BD642FULL ^ mix64(index + kGolden)));
}

RandomStream RandomStream::fork(std::string_view label) const {
  return RandomStream(mix64(key_ ^ 0xE7037ED1A0B428DBULL ^ fnv1a(label)));
}

std::uint64_t RandomStream::u64_at(std::uint64_t counter) const {
  return mix64(key_ + (counter + 1) * kGolden);
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::gauss_at(std::uint64_t index) const {
  // Box-Muller on the (2i, 2i+1) counter pair.
  double u1 = static_cast<double>(u64_at(2 * index) >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(u64_at(2 * index + 1) >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 in [0,1) so 1-u1 in (0,1]
  return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

double RandomStream::next_gauss() { return gauss_at(counter_++); }

std::uint64_t RandomStream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Lemire multiply-shift; bias is O(n / 2^64), irrelevant here.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

SeedPolicy regime_free() {
  SeedPolicy p;
  p.shuffle = {false, 0};
  p.noise = {false, 0};
  return p;
}

SeedPolicy regime_partial() {
  SeedPolicy p;
  p.shuffle = {true, 0};
  p.noise = {false, 0};
  return p;
}

SeedPolicy regime_full() {
  SeedPolicy p;
  p.shuffle = {true, 0};
  p.noise = {true, 0};
  return p;
}

RandomStream derive_stream(const SeedPolicy& policy, std::uint64_t run_id,
                           std::string_view label) {
  if (label.empty()) throw std::invalid_argument("derive_stream: empty label");
  const StreamRegime* regime = nullptr;
  if (label == "shuffle")
    regime = &policy.shuffle;
  else if (label == "noise")
    regime = &policy.noise;

  RandomStream base = RandomStream::from_seed(policy.init_seed, label);
  if (regime == nullptr) return base;  // init and ad-hoc labels never vary by run
  if (regime->fixed) return base.fork(regime->seed);
  return base.fork(0xF5EEULL).fork(run_id);
}

const char* regime_name(const SeedPolicy& policy) {
  if (!policy.shuffle.fixed && !policy.noise.fixed) return "free";
  if (policy.shuffle.fixed && !policy.noise.fixed) return "partial";
  if (policy.shuffle.fixed && policy.noise.fixed) return "full";
  return "custom";
}

SeedPolicy regime_by_name(std::string_view name) {
  if (name == "free") return regime_free();
  if (name == "partial") return regime_partial();
  if (name == "full") return regime_full();
  throw std::invalid_argument("unknown regime: " + std::string(name));
}

}  // namespace ticketlab
