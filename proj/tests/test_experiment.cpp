#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "ticketlab/experiment.hpp"
#include "ticketlab/record_io.hpp"
#include "ticketlab/report.hpp"

using namespace ticketlab;
namespace fs = std::filesystem;

namespace {

RunRecord fake_record(std::uint64_t seed, std::uint64_t run,
                      const std::vector<std::size_t>& layer_sizes,
                      const std::vector<std::size_t>& taus, std::uint64_t salt,
                      const std::string& task = "taskA") {
  RunRecord rec;
  rec.seed = seed;
  rec.run_id = run;
  rec.task = task;
  rec.schedule_pct = {50};
  RandomStream s = RandomStream::from_seed(salt, "fake").fork(seed).fork(run);
  StepResult sr;
  for (std::size_t l = 0; l < layer_sizes.size(); ++l) {
    RandomStream ls = s.fork(l);
    sr.mask.layers.push_back(stats::random_subset_mask(layer_sizes[l], taus[l], ls));
  }
  sr.accuracy = 0.5;
  rec.steps.push_back(sr);
  rec.probe_outputs = Tensor({4, 2}, {0.1, 0.9, 0.7, 0.3, 0.2, 0.8, 0.6, 0.4});
  return rec;
}

std::vector<RunRecord> fixture_records(std::size_t seeds, std::size_t runs,
                                       const std::vector<std::size_t>& layer_sizes,
                                       const std::vector<std::size_t>& taus,
                                       std::uint64_t salt = 1,
                                       const std::string& task = "taskA") {
  std::vector<RunRecord> recs;
  for (std::uint64_t s = 1; s <= seeds; ++s)
    for (std::uint64_t r = 0; r < runs; ++r)
      recs.push_back(fake_record(s, r, layer_sizes, taus, salt, task));
  return recs;
}

}  // namespace

TEST_CASE("5 seeds x 5 runs: 10 within-seed pairs per seed, 50 per layer in total") {
  auto recs = fixture_records(5, 5, {40, 30}, {10, 6});
  auto stats = compare_within_seed(recs, 0);
  CHECK(stats.size() == 50 * 2);
  // per seed and layer: C(5,2) = 10
  std::map<std::pair<std::uint64_t, std::size_t>, int> counts;
  for (const auto& s : stats) {
    CHECK(s.pair.seed_a == s.pair.seed_b);
    ++counts[{s.pair.seed_a, s.layer}];
  }
  CHECK(counts.size() == 10);
  for (const auto& [key, n] : counts) CHECK(n == 10);
}

TEST_CASE("2 runs make exactly 1 within-seed pair") {
  auto recs = fixture_records(1, 2, {20}, {5});
  CHECK(compare_within_seed(recs, 0).size() == 1);
  auto single = fixture_records(1, 1, {20}, {5});
  CHECK_THROWS_AS(compare_within_seed(single, 0), std::invalid_argument);
}

TEST_CASE("cross-seed pair count is C(25,2) - 5 C(5,2) = 250 per layer") {
  auto recs = fixture_records(5, 5, {40}, {10});
  auto stats = compare_across_seeds(recs, 0);
  CHECK(stats.size() == 250);
  for (const auto& s : stats) CHECK(s.pair.seed_a != s.pair.seed_b);
  auto one_seed = fixture_records(1, 5, {40}, {10});
  CHECK_THROWS_AS(compare_across_seeds(one_seed, 0), std::invalid_argument);
}

TEST_CASE("cross-seed overlaps center on 100 tau/N percent") {
  // tau/N = 0.25, so the expected overlap percentage is 25% of mask size
  auto recs = fixture_records(6, 4, {400}, {100}, 7);
  auto stats = compare_across_seeds(recs, 0);
  double mean = 0.0;
  for (const auto& s : stats) mean += s.pct_of_mask;
  mean /= double(stats.size());
  CHECK(std::fabs(mean - 25.0) < 1.5);
}

TEST_CASE("cross-task comparison pairs same-seed runs and skips unequal layers") {
  auto task_a = fixture_records(3, 2, {40, 30, 20}, {10, 6, 5}, 1, "taskA");
  auto task_b = fixture_records(3, 2, {40, 99, 20}, {10, 20, 5}, 2, "taskB");
  CrossTaskResult res = compare_across_tasks(task_a, task_b, 0);
  // 3 seeds x (2x2 run pairs) x 2 comparable layers
  CHECK(res.stats.size() == 3 * 4 * 2);
  // the middle layer is skipped once per record pair
  CHECK(res.skipped_layers == 3 * 4);
  for (const auto& s : res.stats) {
    CHECK(s.pair.seed_a == s.pair.seed_b);
    CHECK(s.layer != 1);
  }
}

TEST_CASE("cross-task self-comparison reduces to the within-seed pair set") {
  auto recs = fixture_records(3, 3, {50}, {12});
  CrossTaskResult self = compare_across_tasks(recs, recs, 0);
  auto within = compare_within_seed(recs, 0);
  REQUIRE(self.stats.size() == within.size());
  auto key = [](const stats::OverlapStat& s) {
    return std::tuple(s.layer, s.pair.seed_a, std::min(s.pair.run_a, s.pair.run_b),
                      std::max(s.pair.run_a, s.pair.run_b), s.x);
  };
  std::multiset<std::tuple<std::size_t, std::uint64_t, std::uint64_t, std::uint64_t, std::size_t>>
      a, b;
  for (const auto& s : self.stats) a.insert(key(s));
  for (const auto& s : within) b.insert(key(s));
  CHECK(a == b);
}

TEST_CASE("compare_across_tasks with no comparable layers throws") {
  auto task_a = fixture_records(2, 2, {40}, {10}, 1, "taskA");
  auto task_b = fixture_records(2, 2, {41}, {10}, 2, "taskB");
  CHECK_THROWS_AS(compare_across_tasks(task_a, task_b, 0), std::invalid_argument);
}

TEST_CASE("shared/never report: identical masks") {
  auto recs = fixture_records(1, 5, {60}, {20}, 3);
  for (auto& r : recs) r.steps[0].mask = recs[0].steps[0].mask;  // force identical
  auto rows = shared_and_never_report(recs, 0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].shared_pct == doctest::Approx(100.0));
  CHECK(rows[0].shared_count == 20);
  CHECK(rows[0].never_count == 60 - 20);
  CHECK(rows[0].k == 5);
}

TEST_CASE("shared/never report: disjoint masks with k tau <= N") {
  std::vector<RunRecord> recs;
  for (std::uint64_t r = 0; r < 4; ++r) {
    RunRecord rec = fake_record(1, r, {40}, {10}, 4);
    MaskLayer ml(40);
    for (std::size_t i = 0; i < 10; ++i) ml.set(r * 10 + i, true);
    rec.steps[0].mask.layers[0] = ml;
    recs.push_back(rec);
  }
  auto rows = shared_and_never_report(recs, 0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].shared_pct == doctest::Approx(0.0));
  CHECK(rows[0].never_count == 0);
  CHECK(rows[0].never_pct == doctest::Approx(0.0));  // coverage meets the bound
}

TEST_CASE("shared/never report: random masks track the recursive baselines") {
  auto recs = fixture_records(40, 5, {100}, {50}, 8);
  auto rows = shared_and_never_report(recs, 0);
  REQUIRE(rows.size() == 40);
  double mean_shared = 0.0, mean_never_count = 0.0;
  for (const auto& r : rows) {
    mean_shared += r.shared_pct;
    mean_never_count += double(r.never_count);
  }
  mean_shared /= 40.0;
  mean_never_count /= 40.0;
  CHECK(std::fabs(mean_shared - 6.25) < 1.5);         // 3.125 of tau=50
  CHECK(std::fabs(mean_never_count - 3.125) < 1.0);   // N (1-n/N)^k
  CHECK(rows[0].shared_baseline.mean == doctest::Approx(3.125));
  CHECK(rows[0].never_baseline.mean == doctest::Approx(3.125));
}

TEST_CASE("run_plan: record count, shared init hash per seed, full-regime determinism") {
  ExperimentPlan plan;
  plan.seeds = {11, 22};
  plan.runs_per_seed = 2;
  plan.schedule = PruneSchedule{{50, 80}};
  plan.policy = regime_full();
  plan.hidden_units = 8;
  plan.network.epochs = 2;
  plan.dataset_specs = {"blobs:classes=3,per_class=15,test_per_class=6,dims=5,spread=0.4,seed=13"};
  TaskData task = load_task(plan.dataset_specs[0]);
  auto records = run_plan(plan, task);
  REQUIRE(records.size() == 4);

  std::map<std::uint64_t, std::set<std::string>> hashes;
  for (const auto& r : records)
    hashes[r.seed].insert(io::fingerprint_hex(io::encode_weights(r.init)));
  CHECK(hashes.size() == 2);
  for (const auto& [seed, hs] : hashes) CHECK(hs.size() == 1);  // identical within seed
  CHECK(*hashes[11].begin() != *hashes[22].begin());

  // regime_full: both runs of a seed give identical tickets
  for (std::uint64_t seed : plan.seeds) {
    std::vector<const RunRecord*> group;
    for (const auto& r : records)
      if (r.seed == seed) group.push_back(&r);
    REQUIRE(group.size() == 2);
    for (std::size_t s = 0; s < 2; ++s)
      CHECK(group[0]->steps[s].mask == group[1]->steps[s].mask);
  }
}

TEST_CASE("report emission is deterministic and row counts match") {
  auto recs = fixture_records(3, 3, {50, 40}, {12, 10}, 5);
  auto stats = compare_within_seed(recs, 0);
  std::string csv1 = report::overlap_csv(stats);
  std::string csv2 = report::overlap_csv(stats);
  CHECK(csv1 == csv2);
  std::size_t rows = std::count(csv1.begin(), csv1.end(), '\n');
  CHECK(rows == stats.size() + 1);  // header + one row per stat

  std::string svg1 = report::overlap_svg(stats, "t");
  std::string svg2 = report::overlap_svg(stats, "t");
  CHECK(svg1 == svg2);
  CHECK(svg1.find("<svg") != std::string::npos);
  CHECK(svg1.rfind("</svg>\n") != std::string::npos);
}

TEST_CASE("empty stats produce a valid empty-plot SVG") {
  std::string svg = report::overlap_svg({}, "empty");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("experiment plans survive a JSON round trip") {
  ExperimentPlan plan;
  plan.seeds = {3, 9, 27};
  plan.runs_per_seed = 4;
  plan.schedule = PruneSchedule{{50, 90}};
  plan.policy = regime_partial();
  plan.dataset_specs = {"blobs:classes=4"};
  plan.net_preset = "mlp-equal";
  plan.hidden_units = 12;
  plan.network.epochs = 7;
  plan.network.learning_rate = 0.125;
  plan.network.batch_size = 16;
  plan.network.grad_noise = 0.5;

  fs::path p = fs::temp_directory_path() / "ticketlab_plan.json";
  plan_to_json_file(plan, p.string());
  ExperimentPlan back = plan_from_json_file(p.string());
  CHECK(back.seeds == plan.seeds);
  CHECK(back.runs_per_seed == plan.runs_per_seed);
  CHECK(back.schedule.pruned_pct == plan.schedule.pruned_pct);
  CHECK(std::string(regime_name(back.policy)) == "partial");
  CHECK(back.dataset_specs == plan.dataset_specs);
  CHECK(back.net_preset == plan.net_preset);
  CHECK(back.hidden_units == plan.hidden_units);
  CHECK(back.network.epochs == plan.network.epochs);
  CHECK(back.network.learning_rate == plan.network.learning_rate);
  CHECK(back.network.batch_size == plan.network.batch_size);
  CHECK(back.network.grad_noise == plan.network.grad_noise);
  fs::remove(p);
}

TEST_CASE("partial-regime cross-task overlaps exceed the baseline on most layers") {
  // two tasks: same geometry class, different data; shared initializations
  ExperimentPlan plan;
  plan.seeds = {5, 6};
  plan.runs_per_seed = 2;
  plan.schedule = PruneSchedule{{50, 80}};
  plan.policy = regime_partial();
  plan.hidden_units = 16;
  plan.network.epochs = 6;
  plan.network.learning_rate = 0.1;
  plan.network.grad_noise = 0.1;
  TaskData task_a = load_task("blobs:classes=5,per_class=30,test_per_class=10,dims=12,spread=0.8,seed=21");
  TaskData task_b = load_task("blobs:classes=5,per_class=30,test_per_class=10,dims=12,spread=0.8,seed=22");
  task_b.name = "taskB";
  auto recs_a = run_plan(plan, task_a);
  auto recs_b = run_plan(plan, task_b);
  CrossTaskResult res = compare_across_tasks(recs_a, recs_b, 1);
  REQUIRE(!res.stats.empty());
  std::map<std::size_t, std::pair<double, int>> by_layer;  // sum pct, count
  std::map<std::size_t, double> baseline_pct;
  for (const auto& s : res.stats) {
    by_layer[s.layer].first += s.pct_of_mask;
    by_layer[s.layer].second += 1;
    baseline_pct[s.layer] =
        100.0 * stats::hypergeom_moments(s.N, s.tau).mean / double(s.tau);
  }
  std::size_t above = 0;
  for (const auto& [layer, acc] : by_layer)
    if (acc.first / acc.second > baseline_pct[layer]) ++above;
  CHECK(above * 2 >= by_layer.size());  // exceeds baseline on at least half
}

TEST_CASE("significance_fraction on random mask pairs calibrates near 5%") {
  RandomStream root = RandomStream::from_seed(606, "calib");
  std::vector<stats::OverlapStat> obs;
  const std::size_t N = 1000, tau = 100;
  for (int t = 0; t < 10000; ++t) {
    RandomStream sa = root.fork(2 * t), sb = root.fork(2 * t + 1);
    MaskLayer a = stats::random_subset_mask(N, tau, sa);
    MaskLayer b = stats::random_subset_mask(N, tau, sb);
    stats::OverlapStat s;
    s.N = N;
    s.tau = tau;
    s.x = intersection_count(a, b);
    obs.push_back(s);
  }
  double frac = stats::significance_fraction(obs, N, tau, 0.95);
  CHECK(frac >= 0.04);
  CHECK(frac <= 0.06);
}

TEST_CASE("records written by a plan can be read back and compared") {
  auto recs = fixture_records(2, 2, {30}, {8}, 6);
  fs::path dir = fs::temp_directory_path() / "ticketlab_records_rt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (auto& r : recs) {
    r.init.w.push_back(Tensor({2, 2}, {1, 2, 3, 4}));
    r.init.b.emplace_back(2, 0.0);
  }
  io::write_records(dir.string(), recs);
  auto back = io::read_records(dir.string());
  REQUIRE(back.size() == 4);
  auto stats = compare_within_seed(back, 0);
  CHECK(stats.size() == 2);  // 1 pair per seed, 1 layer
  fs::remove_all(dir);
}
