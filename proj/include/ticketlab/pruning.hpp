#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/dataset.hpp"
#include "ticketlab/mask.hpp"
#include "ticketlab/network.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab {

// Cumulative pruning percentages, strictly increasing, each in (0,100).
struct PruneSchedule {
  std::vector<double> pruned_pct;

  static PruneSchedule parse(const std::string& csv);  // "50,60,80,90,95,98"
  std::size_t steps() const { return pruned_pct.size(); }
  // Ticket size for a layer of `count` weights at schedule entry `step`.
  std::size_t target_tau(std::size_t step, std::size_t count) const;
};

void validate_schedule(const PruneSchedule& s);

// Keeps the ceil(keep_fraction * m*n) weights of largest absolute value per
// layer; ties broken toward the lower flat index.
Mask large_final_mask(const Weights& final_weights, double keep_fraction);

// One schedule step: selects among the survivors of prev_mask only, so masks
// nest across steps.
Mask prune_step(const Mask& prev_mask, const Weights& final_weights,
                const PruneSchedule& schedule, std::size_t step);

struct StepResult {
  Mask mask;
  double accuracy = 0.0;  // after retraining under this mask
};

// Everything one training-pruning run produces.
struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;
  std::string regime;
  std::string task;
  std::vector<double> schedule_pct;
  Weights init;
  double dense_accuracy = 0.0;  // unpruned network, post-training
  std::vector<StepResult> steps;
  Tensor probe_outputs;  // final ticket's class probabilities on the probe set
  // Spearman |w_init| vs |w_final| per step and layer; NaN when undefined.
  std::vector<std::vector<double>> rank_correlations;
};

inline constexpr std::size_t kProbeSetSize = 512;

// The iterative train -> prune -> reset loop of the lottery protocol.
RunRecord iterative_lottery(const NetworkConfig& cfg, const Weights& init_weights,
                            const TaskData& task, const PruneSchedule& schedule,
                            const SeedPolicy& policy, std::uint64_t run_id);

}  // namespace ticketlab
