#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ticketlab/experiment.hpp"
#include "ticketlab/record_io.hpp"
#include "ticketlab/report.hpp"
#include "ticketlab/stats.hpp"

namespace fs = std::filesystem;
using namespace ticketlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct RunArgs {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t runs = 5;
  std::string schedule = "50,60,80,90,95,98";
  std::string regime = "free";
  std::vector<std::string> datasets;
  std::string config;
  std::string out = "runs";
  std::string net = "mlp";
  std::size_t hidden = 50;
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t batch = 0;
  double noise = -1.0;
};

int cmd_run(const RunArgs& a) {
  ExperimentPlan plan;
  if (!a.config.empty()) plan = plan_from_json_file(a.config);
  plan.seeds = a.seeds;
  plan.runs_per_seed = a.runs;
  plan.schedule = PruneSchedule::parse(a.schedule);
  plan.policy = regime_by_name(a.regime);
  if (!a.datasets.empty()) plan.dataset_specs = a.datasets;
  plan.net_preset = a.net;
  plan.hidden_units = a.hidden;
  if (a.epochs) plan.network.epochs = a.epochs;
  if (a.lr > 0) plan.network.learning_rate = a.lr;
  if (a.batch) plan.network.batch_size = a.batch;
  if (a.noise >= 0) plan.network.grad_noise = a.noise;

  fs::create_directories(a.out);
  plan_to_json_file(plan, (fs::path(a.out) / "plan.json").string());
  for (const std::string& spec : plan.dataset_specs) {
    TaskData task = load_task(spec);
    std::printf("running %zu seeds x %zu runs on %s (regime %s)\n", plan.seeds.size(),
                plan.runs_per_seed, task.name.c_str(), regime_name(plan.policy));
    std::vector<RunRecord> records = run_plan(plan, task);
    std::string task_root = a.out;
    if (plan.dataset_specs.size() > 1) {
      static int task_no = 0;
      task_root = (fs::path(a.out) / ("task" + std::to_string(task_no++))).string();
      fs::create_directories(task_root);
    }
    io::write_records(task_root, records);
    for (const RunRecord& r : records)
      std::printf("  seed %llu run %llu: dense acc %.3f, final acc %.3f\n",
                  static_cast<unsigned long long>(r.seed),
                  static_cast<unsigned long long>(r.run_id), r.dense_accuracy,
                  r.steps.back().accuracy);
  }
  std::printf("records written to %s\n", a.out.c_str());
  return kExitOk;
}

struct CompareArgs {
  std::string in = "runs";
  std::string in_b;
  std::string mode = "within";
  std::size_t step = 0;
  double level = 0.95;
  std::string out;
};

int cmd_compare(const CompareArgs& a) {
  std::vector<RunRecord> records = io::read_records(a.in);
  if (records.empty()) throw std::runtime_error("no run records under " + a.in);
  std::vector<stats::OverlapStat> stats;
  if (a.mode == "within") {
    stats = compare_within_seed(records, a.step);
  } else if (a.mode == "across") {
    stats = compare_across_seeds(records, a.step);
  } else if (a.mode == "cross-task") {
    if (a.in_b.empty())
      throw std::runtime_error("cross-task mode needs --in-b with the second task's records");
    std::vector<RunRecord> records_b = io::read_records(a.in_b);
    CrossTaskResult res = compare_across_tasks(records, records_b, a.step);
    std::printf("skipped %zu shape-incompatible layer comparisons\n", res.skipped_layers);
    stats = std::move(res.stats);
  } else {
    std::fprintf(stderr, "unknown mode %s\n", a.mode.c_str());
    return kExitUsage;
  }

  std::string csv = report::overlap_csv(stats);
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    fs::create_directories(a.out);
    report::write_text((fs::path(a.out) / ("overlap_" + a.mode + ".csv")).string(), csv);
    report::write_overlap_svg(
        (fs::path(a.out) / ("overlap_" + a.mode + ".svg")).string(), stats,
        "ticket overlap (" + a.mode + "), step " + std::to_string(a.step));
  }
  // one significance summary per layer at the requested level
  std::map<std::size_t, std::vector<stats::OverlapStat>> by_layer;
  for (const auto& s : stats) by_layer[s.layer].push_back(s);
  for (const auto& [layer, group] : by_layer) {
    double frac = stats::significance_fraction(group, group[0].N, group[0].tau, a.level);
    std::printf("layer %zu: %zu pairs, significant at %.0f%%: %.1f%%\n", layer, group.size(),
                a.level * 100.0, frac * 100.0);
  }
  return kExitOk;
}

struct BaselineArgs {
  std::string model = "hypergeom";
  std::size_t N = 100;
  std::size_t tau = 50;
  std::size_t k = 5;
  std::size_t trials = 10000;
  std::uint64_t seed = 1234;
  bool literal = false;
};

int cmd_baseline(const BaselineArgs& a) {
  if (a.model == "hypergeom") {
    auto m = stats::hypergeom_moments(a.N, a.tau);
    auto iv95 = stats::significance_interval(a.N, a.tau, 0.95);
    auto iv99 = stats::significance_interval(a.N, a.tau, 0.99);
    std::printf("model,N,tau,mean,sigma,interval95_lo,interval95_hi,interval99_lo,interval99_hi\n");
    std::printf("hypergeometric,%zu,%zu,%.10g,%.10g,%zu,%zu,%zu,%zu\n", a.N, a.tau, m.mean,
                m.sigma, iv95.lo, iv95.hi, iv99.lo, iv99.hi);
    return kExitOk;
  }
  if (a.model == "shared") {
    auto b = stats::shared_all_baseline(a.N, a.tau, a.k);
    std::printf("model,N,n,k,mean,sigma\n");
    std::printf("recursive-shared,%zu,%zu,%zu,%.10g,%.10g\n", a.N, a.tau, a.k, b.mean, b.sigma);
    return kExitOk;
  }
  if (a.model == "never") {
    auto b = stats::never_covered_baseline(a.N, a.tau, a.k, a.literal);
    std::printf("model,N,n,k,mean,sigma\n");
    std::printf("recursive-never%s,%zu,%zu,%zu,%.10g,%.10g\n", a.literal ? "-literal" : "",
                a.N, a.tau, a.k, b.mean, b.sigma);
    return kExitOk;
  }
  if (a.model == "mc") {
    auto mc = stats::monte_carlo_oracle(a.N, a.tau, a.k, a.trials, a.seed);
    std::printf("statistic,mean,stddev,stderr,observations\n");
    std::printf("pairwise,%.10g,%.10g,%.10g,%zu\n", mc.pairwise.mean, mc.pairwise.stddev,
                mc.pairwise.stderr_mean, mc.pairwise.observations);
    std::printf("shared_all,%.10g,%.10g,%.10g,%zu\n", mc.shared_all.mean, mc.shared_all.stddev,
                mc.shared_all.stderr_mean, mc.shared_all.observations);
    std::printf("never_covered,%.10g,%.10g,%.10g,%zu\n", mc.never_covered.mean,
                mc.never_covered.stddev, mc.never_covered.stderr_mean,
                mc.never_covered.observations);
    return kExitOk;
  }
  std::fprintf(stderr, "unknown baseline model %s\n", a.model.c_str());
  return kExitUsage;
}

struct ReportArgs {
  std::string in = "runs";
  std::string out = "report";
  std::size_t step = 0;
};

int cmd_report(const ReportArgs& a) {
  std::vector<RunRecord> records = io::read_records(a.in);
  if (records.empty()) throw std::runtime_error("no run records under " + a.in);
  fs::create_directories(a.out);
  fs::path out(a.out);

  auto within = compare_within_seed(records, a.step);
  report::write_overlap_csv((out / "overlap_within.csv").string(), within);
  report::write_overlap_svg((out / "overlap_within.svg").string(), within,
                            "within-seed overlap, step " + std::to_string(a.step));
  bool multi_seed = false;
  for (const auto& r : records)
    if (r.seed != records[0].seed) multi_seed = true;
  if (multi_seed) {
    auto across = compare_across_seeds(records, a.step);
    report::write_overlap_csv((out / "overlap_across.csv").string(), across);
    report::write_overlap_svg((out / "overlap_across.svg").string(), across,
                              "across-seed overlap, step " + std::to_string(a.step));
  }
  auto rows = shared_and_never_report(records, a.step);
  report::write_shared_never_csv((out / "shared_never.csv").string(), rows);
  report::write_text((out / "shared_never.svg").string(),
                     report::shared_never_svg(rows, "shared-by-all / never-covered, step " +
                                                        std::to_string(a.step)));
  report::write_text((out / "accuracy.csv").string(), report::accuracy_csv(records));
  report::write_text((out / "accuracy.svg").string(),
                     report::accuracy_svg(records, "accuracy per pruning step"));
  report::write_text((out / "rank_correlation.csv").string(),
                     report::rank_correlation_csv(records));
  report::write_text((out / "similarity.csv").string(), report::similarity_csv(records));
  report::write_text((out / "similarity.json").string(), report::similarity_json(records));
  std::printf("report written to %s\n", a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lottery-ticket laboratory: train, prune, and compare tickets"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run the iterative lottery protocol");
  run->add_option("--seeds", run_args.seeds, "init seeds, one arm per seed");
  run->add_option("--runs", run_args.runs, "runs per seed");
  run->add_option("--schedule", run_args.schedule, "cumulative pruning percentages");
  run->add_option("--regime", run_args.regime, "free | partial | full");
  run->add_option("--dataset", run_args.datasets, "dataset spec(s), repeatable");
  run->add_option("--config", run_args.config, "plan JSON (flags override)");
  run->add_option("--out", run_args.out, "output directory");
  run->add_option("--net", run_args.net, "network preset: mlp | mlp-equal | lenet");
  run->add_option("--hidden", run_args.hidden, "hidden units for MLP presets");
  run->add_option("--epochs", run_args.epochs, "training epochs");
  run->add_option("--lr", run_args.lr, "learning rate");
  run->add_option("--batch", run_args.batch, "batch size");
  run->add_option("--noise", run_args.noise, "gradient noise scale");

  CompareArgs cmp_args;
  auto* cmp = app.add_subcommand("compare", "overlap statistics between stored tickets");
  cmp->add_option("--in", cmp_args.in, "records directory");
  cmp->add_option("--in-b", cmp_args.in_b, "second records directory (cross-task)");
  cmp->add_option("--mode", cmp_args.mode, "within | across | cross-task");
  cmp->add_option("--step", cmp_args.step, "schedule step index");
  cmp->add_option("--level", cmp_args.level, "significance level");
  cmp->add_option("--out", cmp_args.out, "write CSV/SVG here instead of stdout");

  BaselineArgs base_args;
  auto* base = app.add_subcommand("baseline", "print analytic or Monte Carlo baselines");
  base->add_option("--model", base_args.model, "hypergeom | shared | never | mc");
  base->add_option("--N", base_args.N, "layer weight count");
  base->add_option("--tau", base_args.tau, "ticket size (a.k.a. n)");
  base->add_option("--k", base_args.k, "number of masks");
  base->add_option("--trials", base_args.trials, "Monte Carlo trials");
  base->add_option("--seed", base_args.seed, "Monte Carlo seed");
  base->add_flag("--literal", base_args.literal, "verbatim never-covered recursion");

  ReportArgs rep_args;
  auto* rep = app.add_subcommand("report", "full report bundle from stored records");
  rep->add_option("--in", rep_args.in, "records directory");
  rep->add_option("--out", rep_args.out, "report directory");
  rep->add_option("--step", rep_args.step, "schedule step index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (cmp->parsed()) return cmd_compare(cmp_args);
    if (base->parsed()) return cmd_baseline(base_args);
    if (rep->parsed()) return cmd_report(rep_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
