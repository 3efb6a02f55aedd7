// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy experiment arms are shared between criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "ticketlab/dataset.hpp"
#include "ticketlab/experiment.hpp"
#include "ticketlab/record_io.hpp"
#include "ticketlab/similarity.hpp"
#include "ticketlab/stats.hpp"

using namespace ticketlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::vector<bool> g_checks;

void expect(bool ok, const char* what) {
  g_checks.push_back(ok);
  if (!ok) {
    ++g_failures;
    std::printf("    FAILED check: %s\n", what);
  }
}

struct Criterion {
  const char* name;
  Clock::time_point start;
  std::size_t first_check;

  explicit Criterion(const char* n) : name(n), start(Clock::now()), first_check(g_checks.size()) {
    std::printf("criterion %s ...\n", name);
    std::fflush(stdout);
  }
  void finish() {
    bool ok = true;
    for (std::size_t i = first_check; i < g_checks.size(); ++i) ok = ok && g_checks[i];
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] criterion %s (%.1fs)\n", ok ? "PASS" : "FAIL", name, secs);
    std::fflush(stdout);
  }
};

// ---------------------------------------------------------------------------
// 1. Hypergeometric correctness
// ---------------------------------------------------------------------------
void criterion_1() {
  Criterion c("1: hypergeometric pmf and moments");
  RandomStream s = RandomStream::from_seed(2024, "acc1");
  bool sums_ok = true, moments_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t N = 2 + s.next_below(4999);  // N <= 5000
    std::size_t tau = 1 + s.next_below(N);
    std::size_t lo = 2 * tau > N ? 2 * tau - N : 0;
    double sum = 0.0, mean = 0.0;
    for (std::size_t x = lo; x <= tau; ++x) {
      double p = stats::hypergeom_pmf(N, tau, x);
      sum += p;
      mean += p * double(x);
    }
    // two-pass variance; the E[x^2] - mean^2 form cancels catastrophically
    // for large means
    double var = 0.0;
    for (std::size_t x = lo; x <= tau; ++x) {
      double d = double(x) - mean;
      var += stats::hypergeom_pmf(N, tau, x) * d * d;
    }
    if (std::fabs(sum - 1.0) >= 1e-12) sums_ok = false;
    auto m = stats::hypergeom_moments(N, tau);
    if (std::fabs(m.mean - mean) > 1e-9 * std::max(1.0, std::fabs(mean))) moments_ok = false;
    if (std::fabs(m.sigma * m.sigma - var) > 1e-9 * std::max(1.0, std::fabs(var)))
      moments_ok = false;
  }
  expect(sums_ok, "sum_x pmf = 1 +- 1e-12 over 200 random (N,tau)");
  expect(moments_ok, "closed-form moments match pmf moments within 1e-9");
  expect(std::fabs(stats::hypergeom_pmf(4, 2, 0) - 1.0 / 6.0) < 1e-15 &&
             std::fabs(stats::hypergeom_pmf(4, 2, 1) - 2.0 / 3.0) < 1e-15 &&
             std::fabs(stats::hypergeom_pmf(4, 2, 2) - 1.0 / 6.0) < 1e-15,
         "N=4 tau=2 pmf equals {1/6, 2/3, 1/6}");
  c.finish();
}

// ---------------------------------------------------------------------------
// 2. Appendix-B baselines vs the Monte Carlo oracle
// ---------------------------------------------------------------------------
void criterion_2() {
  Criterion c("2: recursive baselines vs Monte Carlo oracle");
  const std::tuple<std::size_t, std::size_t, std::size_t> cases[] = {
      {100, 50, 5}, {400, 80, 5}, {2400, 240, 5}};
  for (auto [N, n, k] : cases) {
    auto mc = stats::monte_carlo_oracle(N, n, k, 10000, 20242);
    auto shared = stats::shared_all_baseline(N, n, k);
    auto never = stats::never_covered_baseline(N, n, k);
    expect(std::fabs(shared.mean - mc.shared_all.mean) <= 3.0 * mc.shared_all.stderr_mean,
           "shared-by-all mean within 3 SE of Monte Carlo");
    expect(std::fabs(never.mean - mc.never_covered.mean) <= 3.0 * mc.never_covered.stderr_mean,
           "never-covered mean within 3 SE of Monte Carlo");
    double closed = double(N) * std::pow(double(n) / double(N), double(k));
    expect(std::fabs(shared.mean - closed) <= 1e-12 * std::max(1.0, closed),
           "shared mean equals N (n/N)^k within 1e-12");
  }
  c.finish();
}

// ---------------------------------------------------------------------------
// 3. Significance calibration
// ---------------------------------------------------------------------------
void criterion_3() {
  Criterion c("3: 95% interval flags random pairs at rate 0.05 +- 0.01");
  const std::size_t N = 1000, tau = 100, pairs = 10000;
  auto iv = stats::significance_interval(N, tau, 0.95);
  RandomStream root = RandomStream::from_seed(31337, "acc3");
  std::size_t flagged = 0;
  for (std::size_t t = 0; t < pairs; ++t) {
    RandomStream sa = root.fork(2 * t), sb = root.fork(2 * t + 1);
    MaskLayer a = stats::random_subset_mask(N, tau, sa);
    MaskLayer b = stats::random_subset_mask(N, tau, sb);
    std::size_t x = intersection_count(a, b);
    if (x < iv.lo || x > iv.hi) ++flagged;
  }
  double rate = double(flagged) / double(pairs);
  std::printf("    observed rate: %.4f (interval [%zu,%zu])\n", rate, iv.lo, iv.hi);
  expect(rate >= 0.04 && rate <= 0.06, "flag rate within 0.05 +- 0.01");
  c.finish();
}

// ---------------------------------------------------------------------------
// Shared desk-scale plan for criteria 4-6
// ---------------------------------------------------------------------------
ExperimentPlan null_plan(const char* regime) {
  ExperimentPlan plan;
  plan.seeds = {1, 2, 3};
  plan.runs_per_seed = 3;
  plan.schedule = PruneSchedule{{50, 80, 90}};
  plan.policy = regime_by_name(regime);
  plan.net_preset = "mlp";
  plan.hidden_units = 40;  // 20x40 and 40x10 layers: 800 and 400 weights
  plan.network.epochs = 80;
  plan.network.learning_rate = 0.4;
  plan.network.batch_size = 8;
  plan.network.grad_noise = 0.1;
  plan.dataset_specs = {"blobs:classes=10,per_class=60,test_per_class=50,dims=20,spread=1.2,seed=4242"};
  return plan;
}

double mean_within_overlap(const std::vector<RunRecord>& records, std::size_t step) {
  auto stats_v = compare_within_seed(records, step);
  double m = 0.0;
  for (const auto& s : stats_v) m += s.pct_of_mask;
  return m / double(stats_v.size());
}

void criterion_4_5_6() {
  TaskData task = load_task(null_plan("free").dataset_specs[0]);

  std::vector<RunRecord> free_records, partial_records, full_records;
  {
    Criterion c("4: free-randomness overlaps match the hypergeometric at 90%");
    free_records = run_plan(null_plan("free"), task);
    auto stats_v = compare_within_seed(free_records, 2);  // the 90% step
    std::size_t outside = 0;
    for (const auto& s : stats_v) {
      auto iv = stats::significance_interval(s.N, s.tau, 0.95);
      if (s.x < iv.lo || s.x > iv.hi) ++outside;
    }
    double frac = double(outside) / double(stats_v.size());
    std::printf("    %zu within-seed values, %.1f%% outside the 95%% interval\n",
                stats_v.size(), 100.0 * frac);
    expect(frac <= 0.20, "at most 20% of within-seed overlaps flagged at 95%");
    c.finish();
  }
  {
    Criterion c("5: regime ordering full > partial > free");
    full_records = run_plan(null_plan("full"), task);
    auto full_stats = compare_within_seed(full_records, 2);
    bool all_full = true;
    for (const auto& s : full_stats) all_full = all_full && s.x == s.tau;
    expect(all_full, "full regime: every within-seed overlap is exactly 100%");

    partial_records = run_plan(null_plan("partial"), task);
    double mean_free = mean_within_overlap(free_records, 2);
    double mean_partial = mean_within_overlap(partial_records, 2);
    std::printf("    mean within-seed overlap: free %.2f%%, partial %.2f%%\n", mean_free,
                mean_partial);
    expect(mean_partial > mean_free, "partial strictly above free");
    expect(mean_partial < 100.0, "partial strictly below 100%");

    auto mean_step1_acc = [](const std::vector<RunRecord>& rs) {
      double m = 0.0;
      for (const auto& r : rs) m += r.steps[0].accuracy;
      return m / double(rs.size());
    };
    double acc_partial = mean_step1_acc(partial_records);
    double acc_free = mean_step1_acc(free_records);
    std::printf("    mean step-1 accuracy: free %.3f, partial %.3f\n", acc_free, acc_partial);
    expect(acc_partial >= acc_free - 0.02, "partial accuracy >= free accuracy - 0.02");
    c.finish();
  }
  {
    Criterion c("6: no two free-randomness tickets share their outputs");
    bool l2_ok = true, cka_ok = true;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < free_records.size(); ++i)
      for (std::size_t j = i + 1; j < free_records.size(); ++j) {
        if (free_records[i].seed != free_records[j].seed) continue;
        ++pairs;
        double l2 = similarity::l2_distance(free_records[i].probe_outputs,
                                            free_records[j].probe_outputs);
        double cka = similarity::linear_cka(free_records[i].probe_outputs,
                                            free_records[j].probe_outputs);
        if (!(l2 > 1e-8)) l2_ok = false;
        if (!(cka < 1.0 - 1e-9)) cka_ok = false;
      }
    expect(pairs == 9, "9 within-seed pairs");
    expect(l2_ok, "every pair has l2_distance > 1e-8");
    expect(cka_ok, "every pair has linear_cka < 1 - 1e-9");

    // invariance at tolerance 1e-9
    const Tensor& x = free_records[0].probe_outputs;
    Tensor x2 = x;
    for (auto& v : x2.data) v *= 2.0;
    expect(std::fabs(similarity::linear_cka(x, x2) - 1.0) < 1e-9, "CKA scale invariance");
    const std::size_t k = x.dim(1);
    RandomStream qs = RandomStream::from_seed(5150, "rot");
    std::vector<double> q(k * k, 0.0);
    for (std::size_t col = 0; col < k; ++col) {
      std::vector<double> v(k);
      for (auto& e : v) e = qs.next_gauss();
      for (std::size_t prev = 0; prev < col; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < k; ++r) dot += v[r] * q[r * k + prev];
        for (std::size_t r = 0; r < k; ++r) v[r] -= dot * q[r * k + prev];
      }
      double norm = 0.0;
      for (double e : v) norm += e * e;
      norm = std::sqrt(norm);
      for (std::size_t r = 0; r < k; ++r) q[r * k + col] = v[r] / norm;
    }
    Tensor xq({x.dim(0), k});
    for (std::size_t r = 0; r < x.dim(0); ++r)
      for (std::size_t ccol = 0; ccol < k; ++ccol) {
        double acc = 0.0;
        for (std::size_t t = 0; t < k; ++t) acc += x[r * k + t] * q[t * k + ccol];
        xq[r * k + ccol] = acc;
      }
    expect(std::fabs(similarity::linear_cka(x, xq) - 1.0) < 1e-9, "CKA rotation invariance");
    c.finish();
  }
}

// ---------------------------------------------------------------------------
// 7. Pruning mechanics
// ---------------------------------------------------------------------------
void criterion_7() {
  Criterion c("7: pruning mechanics and gradient check");
  RandomStream s = RandomStream::from_seed(777, "acc7");
  std::vector<double> vals(1000);
  for (auto& v : vals) v = 2.0 * s.next_double() - 1.0;
  Weights w;
  w.w.push_back(Tensor({1, vals.size()}, vals));
  w.b.emplace_back(1, 0.0);
  PruneSchedule sched{{50, 60, 80, 90, 95, 98}};
  const double pct_kept[] = {50, 40, 20, 10, 5, 2};
  Mask prev;
  prev.layers.emplace_back(1000, true);
  bool nesting = true, tau_ok = true;
  for (std::size_t step = 0; step < sched.steps(); ++step) {
    Mask next = prune_step(prev, w, sched, step);
    nesting = nesting && mask_and(next.layers[0], prev.layers[0]) == next.layers[0];
    double tau_pct = 100.0 * double(next.tau(0)) / 1000.0;
    tau_ok = tau_ok && std::fabs(tau_pct - pct_kept[step]) <= 0.1;  // one weight of 1000
    prev = next;
  }
  expect(nesting, "masks nest monotonically across the 6-step schedule");
  expect(tau_ok, "tau matches 50/40/20/10/5/2% within one weight");

  // reset bit-exactness: weights masked out at the start of training are
  // bit-identical afterwards, and a lottery iteration retrains from init
  TaskData task = load_task("blobs:classes=3,per_class=20,test_per_class=9,dims=5,spread=0.4,seed=70");
  NetworkConfig cfg = make_network({{LayerKind::Dense, 10},
                                    {LayerKind::Relu, 0},
                                    {LayerKind::Dense, 3},
                                    {LayerKind::Softmax, 0}},
                                   {5}, 3);
  cfg.epochs = 3;
  Weights init = init_weights(cfg, 7);
  Mask m = full_mask(cfg);
  for (std::size_t i = 0; i < 25; ++i) m.layers[0].set(2 * i, false);
  TrainResult tr = train(cfg, init, m, task.train, task.test,
                         RandomStream::from_seed(1, "s"), RandomStream::from_seed(2, "n"));
  bool frozen = true;
  for (std::size_t i = 0; i < 25; ++i)
    frozen = frozen && tr.weights.w[0][2 * i] == init.w[0][2 * i];
  expect(frozen, "masked positions bit-identical to init after training");

  // finite differences on surviving coordinates
  Tensor batch({4, 5});
  RandomStream bs = RandomStream::from_seed(3, "b");
  for (auto& v : batch.data) v = bs.next_double();
  std::vector<std::uint8_t> labels{0, 1, 2, 1};
  BackwardResult bw = backward(cfg, init, m, batch, labels);
  bool grads_ok = true;
  RandomStream pick = RandomStream::from_seed(4, "p");
  for (std::size_t l = 0; l < init.w.size(); ++l)
    for (int probe = 0; probe < 20; ++probe) {
      std::size_t i = pick.next_below(init.w[l].numel());
      if (!m.layers[l].get(i)) {
        grads_ok = grads_ok && bw.grads.w[l][i] == 0.0;
        continue;
      }
      Weights wp = init;
      const double eps = 1e-4;
      wp.w[l][i] = init.w[l][i] + eps;
      double up = backward(cfg, wp, m, batch, labels).loss;
      wp.w[l][i] = init.w[l][i] - eps;
      double down = backward(cfg, wp, m, batch, labels).loss;
      double fd = (up - down) / (2.0 * eps);
      double an = bw.grads.w[l][i];
      double denom = std::max({std::fabs(fd), std::fabs(an), 1e-7});
      grads_ok = grads_ok && std::fabs(fd - an) / denom < 1e-3;
    }
  expect(grads_ok, "analytic gradients match central differences < 1e-3 relative");
  c.finish();
}

// ---------------------------------------------------------------------------
// 8. Bookkeeping combinatorics on stored fixtures
// ---------------------------------------------------------------------------
void criterion_8() {
  Criterion c("8: 5 seeds x 5 runs yields 10 pairs per seed, 50 per layer");
  fs::path dir = fs::temp_directory_path() / "ticketlab_acc8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RandomStream root = RandomStream::from_seed(88, "acc8");
  std::vector<RunRecord> recs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (std::uint64_t run = 0; run < 5; ++run) {
      RunRecord r;
      r.seed = seed;
      r.run_id = run;
      r.task = "fixture";
      r.schedule_pct = {50};
      r.init.w.push_back(Tensor({1, 4}, {1, 2, 3, 4}));
      r.init.b.emplace_back(1, 0.0);
      StepResult sr;
      RandomStream ms = root.fork(seed * 10 + run);
      sr.mask.layers.push_back(stats::random_subset_mask(60, 20, ms));
      sr.accuracy = 0.5;
      r.steps.push_back(sr);
      r.probe_outputs = Tensor({4, 2}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
      recs.push_back(r);
    }
  io::write_records(dir.string(), recs);
  auto back = io::read_records(dir.string());
  expect(back.size() == 25, "25 stored records");

  auto within = compare_within_seed(back, 0);
  expect(within.size() == 50, "50 within-seed similarities per layer");
  std::map<std::uint64_t, int> per_seed;
  for (const auto& s : within) ++per_seed[s.pair.seed_a];
  bool ten_each = per_seed.size() == 5;
  for (const auto& [seed, n] : per_seed) ten_each = ten_each && n == 10;
  expect(ten_each, "10 pairs per seed");
  auto across = compare_across_seeds(back, 0);
  expect(across.size() == 250, "250 cross-seed pairs");
  fs::remove_all(dir);
  c.finish();
}

// ---------------------------------------------------------------------------
// 9. Format round-trips and positioned errors
// ---------------------------------------------------------------------------
void criterion_9() {
  Criterion c("9: formats round-trip bit-exactly, malformed input is positioned");
  // TCKT
  RandomStream s = RandomStream::from_seed(9, "acc9");
  Mask m;
  MaskLayer l1 = stats::random_subset_mask(100, 37, s);
  MaskLayer l2 = stats::random_subset_mask(64, 10, s);
  m.layers = {l1, l2};
  auto bytes = io::encode_mask(m, {"a", "b"});
  expect(io::decode_mask(bytes) == m, "TCKT round-trip is bit-exact");
  expect(io::encode_mask(io::decode_mask(bytes), {"a", "b"}) == bytes,
         "TCKT re-encode is byte-identical");

  bool positioned = false;
  auto bad = bytes;
  bad[1] = 'X';
  try {
    io::decode_mask(bad);
  } catch (const ParseError& e) {
    positioned = e.offset() == 0;
  }
  expect(positioned, "bad TCKT magic reported at offset 0");

  // IDX golden fixture
  std::vector<std::uint8_t> idx;
  auto be32 = [&](std::uint32_t v) {
    idx.push_back(std::uint8_t(v >> 24));
    idx.push_back(std::uint8_t(v >> 16));
    idx.push_back(std::uint8_t(v >> 8));
    idx.push_back(std::uint8_t(v));
  };
  be32(0x00000803);
  be32(4);
  be32(2);
  be32(2);
  for (int i = 0; i < 16; ++i) idx.push_back(std::uint8_t(i * 3));
  Tensor imgs = parse_idx_images(idx);
  expect(imgs.shape == std::vector<std::size_t>{4, 1, 2, 2}, "IDX fixture shape (4,1,2,2)");
  expect(imgs[7] == 21.0 / 255.0, "IDX pixel scaling");
  bool idx_positioned = false;
  auto trunc = idx;
  trunc.resize(19);
  try {
    parse_idx_images(trunc);
  } catch (const ParseError& e) {
    idx_positioned = e.offset() == 19;
  }
  expect(idx_positioned, "truncated IDX reported at the exact offset");

  // CIFAR fixture
  std::vector<std::uint8_t> cif;
  cif.push_back(3);
  for (int i = 0; i < 3072; ++i) cif.push_back(std::uint8_t(i % 256));
  Dataset ds = parse_cifar_bin(cif);
  expect(ds.size() == 1 && ds.labels[0] == 3, "CIFAR fixture decodes");
  bool cifar_err = false;
  try {
    parse_cifar_bin(std::vector<std::uint8_t>(3072, 0));
  } catch (const ParseError&) {
    cifar_err = true;
  }
  expect(cifar_err, "3072-byte CIFAR payload is a length error");

  // run-record manifest round-trip
  fs::path dir = fs::temp_directory_path() / "ticketlab_acc9";
  fs::remove_all(dir);
  RunRecord rec;
  rec.seed = 5;
  rec.run_id = 1;
  rec.task = "fixture";
  rec.schedule_pct = {50, 60, 80, 90, 95, 98};
  rec.init.w.push_back(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  rec.init.b.emplace_back(2, 0.0);
  for (int i = 0; i < 6; ++i) {
    StepResult sr;
    RandomStream ms = s.fork(40 + i);
    sr.mask.layers.push_back(stats::random_subset_mask(30, 15 - 2 * i, ms));
    sr.accuracy = 0.9 - 0.1 * i;
    rec.steps.push_back(sr);
  }
  rec.probe_outputs = Tensor({2, 2}, {0.6, 0.4, 0.3, 0.7});
  io::write_run_record(dir.string(), rec);
  RunRecord back = io::read_run_record(dir.string());
  bool rt = back.seed == rec.seed && back.init == rec.init && back.steps.size() == 6;
  for (int i = 0; i < 6; ++i)
    rt = rt && back.steps[i].mask == rec.steps[i].mask &&
         back.steps[i].accuracy == rec.steps[i].accuracy;
  rt = rt && back.probe_outputs.data == rec.probe_outputs.data;
  expect(rt, "manifest with 6 masks round-trips bit-exactly");
  fs::remove_all(dir);
  c.finish();
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4_5_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d failed check(s)\n", g_failures);
  return 1;
}
