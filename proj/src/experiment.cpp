#include "ticketlab/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::ordered_json;

namespace ticketlab {

namespace {

std::vector<LayerSpec> preset_arch(const std::string& preset, std::size_t hidden,
                                   std::size_t classes, const std::vector<std::size_t>& in) {
  if (preset == "mlp") {
    return {{LayerKind::Dense, hidden},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, classes},
            {LayerKind::Softmax, 0}};
  }
  if (preset == "mlp-equal") {
    // inner layers with approximately equal weight counts
    return {{LayerKind::Dense, hidden},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, hidden},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, hidden},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, classes},
            {LayerKind::Softmax, 0}};
  }
  if (preset == "lenet") {
    if (in.size() != 3)
      throw std::invalid_argument("lenet preset needs image input (channels,h,w)");
    return {{LayerKind::Conv5x5, 6},
            {LayerKind::Relu, 0},
            {LayerKind::MaxPool2x2, 0},
            {LayerKind::Conv5x5, 16},
            {LayerKind::Relu, 0},
            {LayerKind::MaxPool2x2, 0},
            {LayerKind::Dense, 120},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, 84},
            {LayerKind::Relu, 0},
            {LayerKind::Dense, classes},
            {LayerKind::Softmax, 0}};
  }
  throw std::invalid_argument("unknown network preset: " + preset);
}

}  // namespace

NetworkConfig resolve_network(const ExperimentPlan& plan, const TaskData& task) {
  if (!plan.network_from_data) {
    validate_config(plan.network);
    return plan.network;
  }
  std::vector<std::size_t> in = task.train.example_shape();
  // flat feature data collapses to a single dimension
  if (in.size() == 3 && in[1] == 1 && in[2] == 1) in = {in[0]};
  NetworkConfig cfg = make_network(preset_arch(plan.net_preset, plan.hidden_units,
                                               task.train.classes, in),
                                   in, task.train.classes);
  cfg.epochs = plan.network.epochs;
  cfg.learning_rate = plan.network.learning_rate;
  cfg.batch_size = plan.network.batch_size;
  cfg.grad_noise = plan.network.grad_noise;
  return cfg;
}

std::vector<RunRecord> run_plan(const ExperimentPlan& plan, const TaskData& task) {
  if (plan.seeds.empty() || plan.runs_per_seed == 0)
    throw std::invalid_argument("plan needs at least one seed and one run");
  NetworkConfig cfg = resolve_network(plan, task);
  validate_schedule(plan.schedule);

  struct Job {
    std::uint64_t seed;
    std::uint64_t run;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : plan.seeds)
    for (std::size_t r = 0; r < plan.runs_per_seed; ++r) jobs.push_back({seed, r});

  std::vector<RunRecord> records(jobs.size());
  std::exception_ptr first_error;
  const long J = static_cast<long>(jobs.size());
  // one lottery pipeline per job; pipelines are independent
#ifdef TICKETLAB_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long j = 0; j < J; ++j) {
    try {
      SeedPolicy policy = plan.policy;
      policy.init_seed = jobs[j].seed;
      Weights init = init_weights(cfg, jobs[j].seed);
      records[j] = iterative_lottery(cfg, init, task, plan.schedule, policy, jobs[j].run);
    } catch (...) {
#ifdef TICKETLAB_OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

namespace {

const Mask& mask_at(const RunRecord& rec, std::size_t step) {
  if (step >= rec.steps.size())
    throw std::out_of_range("record has " + std::to_string(rec.steps.size()) +
                            " steps, requested step " + std::to_string(step));
  return rec.steps[step].mask;
}

std::vector<stats::OverlapStat> pair_overlap(const RunRecord& a, const RunRecord& b,
                                             std::size_t step) {
  std::vector<stats::OverlapStat> out =
      stats::overlap(mask_at(a, step), mask_at(b, step));
  for (auto& s : out) {
    s.pair.seed_a = a.seed;
    s.pair.run_a = a.run_id;
    s.pair.task_a = a.task;
    s.pair.seed_b = b.seed;
    s.pair.run_b = b.run_id;
    s.pair.task_b = b.task;
  }
  return out;
}

}  // namespace

std::vector<stats::OverlapStat> compare_within_seed(const std::vector<RunRecord>& records,
                                                    std::size_t step) {
  std::vector<stats::OverlapStat> out;
  bool any_pair = false;
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (records[i].seed != records[j].seed) continue;
      any_pair = true;
      auto stats_ij = pair_overlap(records[i], records[j], step);
      out.insert(out.end(), stats_ij.begin(), stats_ij.end());
    }
  if (!any_pair)
    throw std::invalid_argument("compare_within_seed: no seed has two or more runs");
  return out;
}

std::vector<stats::OverlapStat> compare_across_seeds(const std::vector<RunRecord>& records,
                                                     std::size_t step) {
  std::vector<stats::OverlapStat> out;
  bool any_pair = false;
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (records[i].seed == records[j].seed) continue;
      any_pair = true;
      auto stats_ij = pair_overlap(records[i], records[j], step);
      out.insert(out.end(), stats_ij.begin(), stats_ij.end());
    }
  if (!any_pair) throw std::invalid_argument("compare_across_seeds: needs >= 2 seeds");
  return out;
}

CrossTaskResult compare_across_tasks(const std::vector<RunRecord>& records_a,
                                     const std::vector<RunRecord>& records_b,
                                     std::size_t step) {
  CrossTaskResult res;
  bool any_layer = false;
  for (const RunRecord& a : records_a)
    for (const RunRecord& b : records_b) {
      if (a.seed != b.seed) continue;  // tickets share an initialization
      // self-comparison degenerates to within-seed pairs, each counted once
      if (a.task == b.task && a.run_id >= b.run_id) continue;
      const Mask& ma = mask_at(a, step);
      const Mask& mb = mask_at(b, step);
      std::size_t layers = std::min(ma.layers.size(), mb.layers.size());
      for (std::size_t l = 0; l < layers; ++l) {
        if (ma.layers[l].bits != mb.layers[l].bits) {
          ++res.skipped_layers;
          continue;
        }
        any_layer = true;
        Mask one_a, one_b;
        one_a.layers.push_back(ma.layers[l]);
        one_b.layers.push_back(mb.layers[l]);
        auto s1 = stats::overlap(one_a, one_b);
        s1[0].layer = l;
        s1[0].pair = {a.seed, a.run_id, b.seed, b.run_id, a.task, b.task};
        res.stats.push_back(s1[0]);
      }
      res.skipped_layers +=
          std::max(ma.layers.size(), mb.layers.size()) - layers;
    }
  if (!any_layer)
    throw std::invalid_argument("compare_across_tasks: no comparable layers");
  return res;
}

std::vector<SharedNeverRow> shared_and_never_report(const std::vector<RunRecord>& records,
                                                    std::size_t step) {
  // group record indices by seed, keeping first-seen seed order
  std::vector<std::uint64_t> seeds;
  for (const RunRecord& r : records)
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end())
      seeds.push_back(r.seed);

  std::vector<SharedNeverRow> rows;
  for (std::uint64_t seed : seeds) {
    std::vector<const RunRecord*> group;
    for (const RunRecord& r : records)
      if (r.seed == seed) group.push_back(&r);
    if (group.size() < 2) continue;
    const Mask& first = mask_at(*group[0], step);
    for (std::size_t l = 0; l < first.layers.size(); ++l) {
      MaskLayer all = first.layers[l];
      MaskLayer any = first.layers[l];
      for (std::size_t g = 1; g < group.size(); ++g) {
        const MaskLayer& ml = mask_at(*group[g], step).layers[l];
        all = mask_and(all, ml);
        any = mask_or(any, ml);
      }
      SharedNeverRow row;
      row.seed = seed;
      row.layer = l;
      row.N = first.layers[l].bits;
      row.tau = first.layers[l].popcount();
      row.k = group.size();
      row.shared_count = all.popcount();
      row.never_count = row.N - any.popcount();
      double bound = static_cast<double>(std::min(row.N, row.k * row.tau));
      row.shared_pct =
          row.tau == 0 ? 0.0
                       : 100.0 * static_cast<double>(row.shared_count) /
                             static_cast<double>(row.tau);
      // shortfall of achieved coverage from the best possible min(N, k*tau)
      double coverage = static_cast<double>(row.N - row.never_count);
      row.never_pct = bound == 0.0 ? 0.0 : 100.0 * (bound - coverage) / bound;
      row.shared_baseline = stats::shared_all_baseline(row.N, row.tau, row.k);
      row.never_baseline = stats::never_covered_baseline(row.N, row.tau, row.k);
      row.shared_baseline_pct = row.tau == 0 ? 0.0
                                             : 100.0 * row.shared_baseline.mean /
                                                   static_cast<double>(row.tau);
      double baseline_cover = static_cast<double>(row.N) - row.never_baseline.mean;
      row.never_baseline_pct =
          bound == 0.0 ? 0.0 : 100.0 * (bound - baseline_cover) / bound;
      rows.push_back(row);
    }
  }
  if (rows.empty())
    throw std::invalid_argument("shared_and_never_report: no seed has >= 2 runs");
  return rows;
}

ExperimentPlan plan_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open plan file " + path);
  ordered_json j = ordered_json::parse(f);
  ExperimentPlan plan;
  if (j.contains("seeds")) plan.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("runs_per_seed")) plan.runs_per_seed = j.at("runs_per_seed").get<std::size_t>();
  if (j.contains("schedule"))
    plan.schedule.pruned_pct = j.at("schedule").get<std::vector<double>>();
  if (j.contains("regime")) plan.policy = regime_by_name(j.at("regime").get<std::string>());
  if (j.contains("datasets"))
    plan.dataset_specs = j.at("datasets").get<std::vector<std::string>>();
  if (j.contains("net_preset")) plan.net_preset = j.at("net_preset").get<std::string>();
  if (j.contains("hidden_units")) plan.hidden_units = j.at("hidden_units").get<std::size_t>();
  if (j.contains("epochs")) plan.network.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("learning_rate"))
    plan.network.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) plan.network.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("grad_noise")) plan.network.grad_noise = j.at("grad_noise").get<double>();
  validate_schedule(plan.schedule);
  return plan;
}

void plan_to_json_file(const ExperimentPlan& plan, const std::string& path) {
  ordered_json j;
  j["seeds"] = plan.seeds;
  j["runs_per_seed"] = plan.runs_per_seed;
  j["schedule"] = plan.schedule.pruned_pct;
  j["regime"] = regime_name(plan.policy);
  j["datasets"] = plan.dataset_specs;
  j["net_preset"] = plan.net_preset;
  j["hidden_units"] = plan.hidden_units;
  j["epochs"] = plan.network.epochs;
  j["learning_rate"] = plan.network.learning_rate;
  j["batch_size"] = plan.network.batch_size;
  j["grad_noise"] = plan.network.grad_noise;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write plan file " + path);
  f << j.dump(2) << "\n";
}

}  // namespace ticketlab
