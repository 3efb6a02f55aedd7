#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/dataset.hpp"
#include "ticketlab/network.hpp"
#include "ticketlab/pruning.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/stats.hpp"

namespace ticketlab {

// Full protocol description: seeds x runs, one lottery pipeline per run.
struct ExperimentPlan {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t runs_per_seed = 5;
  NetworkConfig network;
  bool network_from_data = true;  // derive an MLP from the dataset when unset
  std::string net_preset = "mlp"; // "mlp" | "mlp-equal" | "lenet"
  std::size_t hidden_units = 50;
  PruneSchedule schedule{{50, 60, 80, 90, 95, 98}};
  SeedPolicy policy = regime_free();
  std::vector<std::string> dataset_specs = {"blobs"};
};

ExperimentPlan plan_from_json_file(const std::string& path);
void plan_to_json_file(const ExperimentPlan& plan, const std::string& path);

// Resolves the network preset against a concrete dataset.
NetworkConfig resolve_network(const ExperimentPlan& plan, const TaskData& task);

// Runs seeds x runs lottery pipelines for one task. Records within a seed
// share bit-identical initial weights. Run pipelines execute in parallel.
std::vector<RunRecord> run_plan(const ExperimentPlan& plan, const TaskData& task);

// --- comparisons ------------------------------------------------------------

// All C(runs,2) same-seed pairs, per layer, at one schedule step.
std::vector<stats::OverlapStat> compare_within_seed(const std::vector<RunRecord>& records,
                                                    std::size_t step);

// All pairs whose seeds differ.
std::vector<stats::OverlapStat> compare_across_seeds(const std::vector<RunRecord>& records,
                                                     std::size_t step);

struct CrossTaskResult {
  std::vector<stats::OverlapStat> stats;
  std::size_t skipped_layers = 0;  // shape-incompatible layers per pair
};

// Same-seed pairs across two tasks; layers with unequal shapes are skipped
// and counted.
CrossTaskResult compare_across_tasks(const std::vector<RunRecord>& records_a,
                                     const std::vector<RunRecord>& records_b,
                                     std::size_t step);

// --- shared-by-all / never-covered report -----------------------------------

struct SharedNeverRow {
  std::uint64_t seed = 0;
  std::size_t layer = 0;
  std::size_t N = 0;
  std::size_t tau = 0;
  std::size_t k = 0;                  // masks aggregated
  std::size_t shared_count = 0;       // weights in every mask
  std::size_t never_count = 0;        // weights in no mask
  double shared_pct = 0.0;            // of tau, the maximal shareable count
  double never_pct = 0.0;             // coverage shortfall, in % of min(N, k*tau)
  stats::BaselineEstimate shared_baseline;      // count scale
  stats::BaselineEstimate never_baseline;       // count scale
  double shared_baseline_pct = 0.0;
  double never_baseline_pct = 0.0;
};

std::vector<SharedNeverRow> shared_and_never_report(const std::vector<RunRecord>& records,
                                                    std::size_t step);

}  // namespace ticketlab
