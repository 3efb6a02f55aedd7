#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ticketlab {

// Counter-based splittable random stream. The i-th output is a pure function
// of (key, i), so streams can be replayed, forked, and consumed in any order
// without shared state. Not cryptographic.
class RandomStream {
 public:
  RandomStream() : key_(0) {}
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static RandomStream from_seed(std::uint64_t seed, std::string_view label);

  // Children derived with distinct indices/labels are independent streams.
  RandomStream fork(std::uint64_t index) const;
  RandomStream fork(std::string_view label) const;

  std::uint64_t key() const { return key_; }

  // Value at an explicit counter position; does not advance the stream.
  std::uint64_t u64_at(std::uint64_t counter) const;
  double gauss_at(std::uint64_t index) const;  // standard normal, Box-Muller

  std::uint64_t next_u64() { return u64_at(counter_++); }
  double next_double();                      // uniform [0,1)
  double next_gauss();                       // standard normal
  std::uint64_t next_below(std::uint64_t n); // uniform in [0,n)

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Which randomness sources are pinned across runs of one experiment arm.
// init_seed is always fixed per arm; shuffle and gradient-noise streams are
// either fixed (same sequence for every run) or free (keyed by run id).
struct StreamRegime {
  bool fixed = false;
  std::uint64_t seed = 0;  // extra key material for fixed streams
};

struct SeedPolicy {
  std::uint64_t init_seed = 0;
  StreamRegime shuffle;
  StreamRegime noise;
};

// Fixed init + free shuffle + free noise: the paper's default setting.
SeedPolicy regime_free();
// Fixed init + fixed shuffle + free noise: partially fixed randomness.
SeedPolicy regime_partial();
// Everything fixed: repeated pipelines are bit-identical.
SeedPolicy regime_full();

enum class StreamLabel { Init, Shuffle, Noise };

RandomStream derive_stream(const SeedPolicy& policy, std::uint64_t run_id,
                           std::string_view label);

const char* regime_name(const SeedPolicy& policy);
SeedPolicy regime_by_name(std::string_view name);  // "free" | "partial" | "full"

}  // namespace ticketlab
