#include "ticketlab/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ticketlab/stats.hpp"

namespace ticketlab {

PruneSchedule PruneSchedule::parse(const std::string& csv) {
  PruneSchedule s;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = std::stod(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad schedule entry: " + item);
    s.pruned_pct.push_back(v);
  }
  validate_schedule(s);
  return s;
}

void validate_schedule(const PruneSchedule& s) {
  if (s.pruned_pct.empty()) throw std::invalid_argument("empty pruning schedule");
  double prev = 0.0;
  for (double p : s.pruned_pct) {
    if (p <= 0.0 || p >= 100.0)
      throw std::invalid_argument("schedule percentages must lie in (0,100)");
    if (p <= prev) throw std::invalid_argument("schedule must be strictly increasing");
    prev = p;
  }
}

std::size_t PruneSchedule::target_tau(std::size_t step, std::size_t count) const {
  if (step >= pruned_pct.size()) throw std::out_of_range("schedule exhausted");
  double keep = 1.0 - pruned_pct[step] / 100.0;
  // the 1e-9 slack keeps exact targets like 0.02 * 1000 from ceiling to 21
  return static_cast<std::size_t>(std::ceil(keep * static_cast<double>(count) - 1e-9));
}

namespace {

// Top-k selection by |weight|, ties toward the lower flat index. The survivor
// list arrives in ascending index order, so a stable ordering falls out of
// the (magnitude desc, index asc) sort.
MaskLayer select_top(const Tensor& w, const std::vector<std::size_t>& candidates,
                     std::size_t keep) {
  std::vector<std::size_t> idx = candidates;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  MaskLayer ml(w.numel());
  for (std::size_t k = 0; k < keep && k < idx.size(); ++k) ml.set(idx[k], true);
  return ml;
}

}  // namespace

Mask large_final_mask(const Weights& final_weights, double keep_fraction) {
  if (keep_fraction <= 0.0 || keep_fraction > 1.0)
    throw std::invalid_argument("keep_fraction must be in (0,1]");
  Mask m;
  for (const Tensor& w : final_weights.w) {
    if (w.numel() == 0) throw std::invalid_argument("empty layer");
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(w.numel()) - 1e-9));
    if (keep == 0) keep = 1;  // keep_fraction > 0 keeps at least one weight
    std::vector<std::size_t> all(w.numel());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    m.layers.push_back(select_top(w, all, keep));
  }
  return m;
}

Mask prune_step(const Mask& prev_mask, const Weights& final_weights,
                const PruneSchedule& schedule, std::size_t step) {
  if (step >= schedule.steps()) throw std::out_of_range("schedule exhausted");
  if (prev_mask.layers.size() != final_weights.w.size())
    throw std::invalid_argument("mask/weights layer count mismatch");
  Mask m;
  for (std::size_t k = 0; k < final_weights.w.size(); ++k) {
    const Tensor& w = final_weights.w[k];
    const MaskLayer& prev = prev_mask.layers[k];
    if (prev.bits != w.numel())
      throw std::invalid_argument("mask size mismatch at layer " + std::to_string(k));
    std::size_t target = schedule.target_tau(step, w.numel());
    std::vector<std::size_t> survivors;
    survivors.reserve(prev.popcount());
    for (std::size_t i = 0; i < prev.bits; ++i)
      if (prev.get(i)) survivors.push_back(i);
    if (target > survivors.size()) target = survivors.size();  // no-op step
    m.layers.push_back(select_top(w, survivors, target));
  }
  return m;
}

RunRecord iterative_lottery(const NetworkConfig& cfg, const Weights& init_weights,
                            const TaskData& task, const PruneSchedule& schedule,
                            const SeedPolicy& policy, std::uint64_t run_id) {
  validate_schedule(schedule);
  RunRecord rec;
  rec.seed = policy.init_seed;
  rec.run_id = run_id;
  rec.regime = regime_name(policy);
  rec.task = task.name;
  rec.schedule_pct = schedule.pruned_pct;
  rec.init = init_weights;

  RandomStream shuffle_root = derive_stream(policy, run_id, "shuffle");
  RandomStream noise_root = derive_stream(policy, run_id, "noise");

  Mask mask = full_mask(cfg);
  TrainResult tr = train(cfg, init_weights, mask, task.train, task.test,
                         shuffle_root.fork(0), noise_root.fork(0));
  rec.dense_accuracy = tr.accuracy;

  for (std::size_t step = 0; step < schedule.steps(); ++step) {
    mask = prune_step(mask, tr.weights, schedule, step);
    tr = train(cfg, init_weights, mask, task.train, task.test,
               shuffle_root.fork(step + 1), noise_root.fork(step + 1));
    rec.steps.push_back(StepResult{mask, tr.accuracy});
    std::vector<double> rho;
    for (std::size_t l = 0; l < mask.layers.size(); ++l) {
      if (mask.layers[l].popcount() < 2) {
        rho.push_back(std::nan(""));
        continue;
      }
      try {
        rho.push_back(stats::spearman_masked(init_weights.w[l].data, tr.weights.w[l].data,
                                             mask.layers[l]));
      } catch (const std::invalid_argument&) {
        rho.push_back(std::nan(""));  // constant magnitudes
      }
    }
    rec.rank_correlations.push_back(std::move(rho));
  }

  // probe outputs of the final ticket network
  std::size_t probe = std::min<std::size_t>(kProbeSetSize, task.test.size());
  std::vector<std::size_t> shape{probe};
  auto ex = task.test.example_shape();
  shape.insert(shape.end(), ex.begin(), ex.end());
  Tensor batch(shape);
  std::copy_n(task.test.images.data.data(), probe * task.test.example_stride(),
              batch.data.data());
  rec.probe_outputs = forward(cfg, tr.weights, mask, batch);
  return rec;
}

}  // namespace ticketlab
