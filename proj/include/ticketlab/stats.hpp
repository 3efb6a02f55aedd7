#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/mask.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab::stats {

// --- Hypergeometric overlap model -----------------------------------------
// Overlap of two uniformly random tau-subsets of N weights: draws = tau,
// successes = tau, p(x) = C(tau,x) C(N-tau, tau-x) / C(N,tau).

double hypergeom_pmf(std::size_t N, std::size_t tau, std::size_t x);
double hypergeom_cdf(std::size_t N, std::size_t tau, std::size_t x);

enum class BaselineModel { Hypergeometric, RecursiveShared, RecursiveNever, NormalApprox };

struct BaselineEstimate {
  double mean = 0.0;
  double sigma = 0.0;
  BaselineModel model = BaselineModel::Hypergeometric;
};

// mean = tau^2/N, sigma = sqrt of the hypergeometric variance.
BaselineEstimate hypergeom_moments(std::size_t N, std::size_t tau);

// Central interval with the least CDF mass still >= level. An observed
// overlap outside [lo, hi] counts as significant.
struct Interval {
  std::size_t lo = 0;
  std::size_t hi = 0;
};
Interval significance_interval(std::size_t N, std::size_t tau, double level);

// --- Observed overlaps ------------------------------------------------------

struct PairId {
  std::uint64_t seed_a = 0, run_a = 0;
  std::uint64_t seed_b = 0, run_b = 0;
  std::string task_a, task_b;
};

struct OverlapStat {
  std::size_t layer = 0;
  std::size_t x = 0;        // intersection count
  std::size_t tau = 0;      // ticket size (equal on both sides)
  std::size_t N = 0;        // layer weight count
  double pct_of_mask = 0.0; // 100 * x / tau
  PairId pair;
};

// Per-layer overlap of two tickets with identical layer shapes and tau.
std::vector<OverlapStat> overlap(const Mask& a, const Mask& b);

// Fraction of observations outside the significance interval at `level`.
double significance_fraction(const std::vector<OverlapStat>& stats, std::size_t N,
                             std::size_t tau, double level);

// --- Recursive baselines for k repeated tickets (normal-approximated) ------

// Expected count of weights present in every one of k random n-subsets.
// K_1 = n^2/N, K_i = n K_{i-1}/N; the max-variant inflates each step by 3x
// the hypergeometric dispersion term and sigma = 0.5 (K^max - K). For the
// plotted normal approximation this sigma is the 2-sigma radius.
BaselineEstimate shared_all_baseline(std::size_t N, std::size_t n, std::size_t k);

// Expected count of weights contained in none of the k masks. The default
// recursion tracks cumulative coverage C_i (C_0 = n, K_i = n (1 - C_{i-1}/N),
// C_i = C_{i-1} + K_i, answer N - C_{k-1}); `literal` reproduces the
// single-increment recursion verbatim for audits.
BaselineEstimate never_covered_baseline(std::size_t N, std::size_t n, std::size_t k,
                                        bool literal = false);

// 2-sigma radius of the plotted normal approximation for a recursive baseline.
inline double normal_band_radius(const BaselineEstimate& b) { return b.sigma; }

// --- Rank correlation -------------------------------------------------------

// Spearman rank correlation with average-rank tie handling.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Correlation of |initial| vs |final| over the surviving positions of `mask`.
double spearman_masked(const std::vector<double>& initial, const std::vector<double>& final_w,
                       const MaskLayer& mask);

// --- Monte Carlo oracle -----------------------------------------------------

struct McStatistic {
  double mean = 0.0;
  double stddev = 0.0;     // across observations
  double stderr_mean = 0.0;  // of the per-trial means
  std::size_t observations = 0;
};

struct McEstimate {
  McStatistic pairwise;      // per unordered pair within each trial
  McStatistic shared_all;    // intersection of all k masks
  McStatistic never_covered; // weights in no mask
};

// Samples k uniform n-subsets of N per trial; seeded and reproducible for
// any thread count.
McEstimate monte_carlo_oracle(std::size_t N, std::size_t n, std::size_t k,
                              std::size_t trials, std::uint64_t seed = 1234);

// Uniform n-subset of {0..N-1} as a mask layer.
MaskLayer random_subset_mask(std::size_t N, std::size_t n, RandomStream& stream);

const char* baseline_model_name(BaselineModel m);

}  // namespace ticketlab::stats
