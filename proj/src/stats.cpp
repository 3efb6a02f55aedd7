#include "ticketlab/stats.hpp"

#include "ticketlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#ifdef TICKETLAB_OPENMP
#include <omp.h>
#endif

namespace ticketlab::stats {

namespace {

void check_domain(std::size_t N, std::size_t tau) {
  if (N == 0) throw std::invalid_argument("population N must be positive");
  if (tau > N) throw std::invalid_argument("tau must not exceed N");
}

// Whole pmf row over the support [max(0, 2*tau-N), tau]. Built once from the
// mode with the ratio recurrence
//   p(x+1)/p(x) = (tau-x)^2 / ((x+1)(N-2tau+x+1))
// and normalized by its own sum, which keeps sum(pmf) at 1 to ~1e-13 even
// for N in the thousands (a direct log-gamma evaluation drifts past 1e-11).
struct PmfRow {
  std::size_t support_lo = 0;
  std::vector<double> pmf;  // pmf[i] = p(support_lo + i)
  std::vector<double> cdf;  // running sum, same indexing

  double at(std::size_t x) const {
    if (x < support_lo || x - support_lo >= pmf.size()) return 0.0;
    return pmf[x - support_lo];
  }
  double cdf_at(std::size_t x) const {  // P(X <= x)
    if (x < support_lo) return 0.0;
    std::size_t i = x - support_lo;
    if (i >= cdf.size()) return 1.0;
    return cdf[i];
  }
};

PmfRow build_row(std::size_t N, std::size_t tau) {
  PmfRow row;
  row.support_lo = 2 * tau > N ? 2 * tau - N : 0;
  const std::size_t count = tau - row.support_lo + 1;
  std::vector<double> w(count, 0.0);

  auto ratio = [&](std::size_t x) {  // p(x+1)/p(x)
    double a = static_cast<double>(tau - x);
    double b = static_cast<double>(x + 1);
    double c = static_cast<double>(N - 2 * tau + x + 1);
    return (a * a) / (b * c);
  };

  // mode of the hypergeometric with draws = successes = tau
  std::size_t mode = static_cast<std::size_t>(
      (static_cast<double>(tau + 1) * static_cast<double>(tau + 1)) /
      static_cast<double>(N + 2));
  mode = std::clamp(mode, row.support_lo, tau);

  w[mode - row.support_lo] = 1.0;
  for (std::size_t x = mode; x < tau; ++x)
    w[x + 1 - row.support_lo] = w[x - row.support_lo] * ratio(x);
  for (std::size_t x = mode; x > row.support_lo; --x)
    w[x - 1 - row.support_lo] = w[x - row.support_lo] / ratio(x - 1);

  // Kahan sum for the normalizer
  double sum = 0.0, comp = 0.0;
  for (double v : w) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  row.pmf.resize(count);
  row.cdf.resize(count);
  double acc = 0.0, acc_c = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    row.pmf[i] = w[i] / sum;
    double y = row.pmf[i] - acc_c;
    double t = acc + y;
    acc_c = (t - acc) - y;
    acc = t;
    row.cdf[i] = acc;
  }
  return row;
}

// Rows are cached per (N, tau); interval search and repeated pmf lookups hit
// the same row constantly during reporting.
const PmfRow& cached_row(std::size_t N, std::size_t tau) {
  static std::mutex mu;
  static std::unordered_map<std::uint64_t, std::unique_ptr<PmfRow>> cache;
  std::uint64_t key = (static_cast<std::uint64_t>(N) << 32) | tau;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto row = std::make_unique<PmfRow>(build_row(N, tau));
    it = cache.emplace(key, std::move(row)).first;
  }
  return *it->second;
}

}  // namespace

double hypergeom_pmf(std::size_t N, std::size_t tau, std::size_t x) {
  check_domain(N, tau);
  if (x > tau) throw std::invalid_argument("x must not exceed tau");
  if (tau == 0) return x == 0 ? 1.0 : 0.0;
  return cached_row(N, tau).at(x);
}

double hypergeom_cdf(std::size_t N, std::size_t tau, std::size_t x) {
  check_domain(N, tau);
  if (tau == 0) return 1.0;
  return cached_row(N, tau).cdf_at(std::min(x, tau));
}

BaselineEstimate hypergeom_moments(std::size_t N, std::size_t tau) {
  check_domain(N, tau);
  if (tau == 0) throw std::invalid_argument("tau must be positive");
  BaselineEstimate e;
  e.model = BaselineModel::Hypergeometric;
  double dn = static_cast<double>(N), dt = static_cast<double>(tau);
  e.mean = dt * (dt / dn);
  if (tau == N) {
    e.sigma = 0.0;  // degenerate: full mask always overlaps fully
    return e;
  }
  if (N < 2) throw std::invalid_argument("sigma undefined for N < 2");
  double var = dt * (dt / dn) * ((dn - dt) / dn) * ((dn - dt) / (dn - 1.0));
  e.sigma = std::sqrt(var);
  return e;
}

Interval significance_interval(std::size_t N, std::size_t tau, double level) {
  check_domain(N, tau);
  if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("level must be in (0,1)");
  if (tau == N) return {N, N};
  if (tau == 0) return {0, 0};
  const PmfRow& row = cached_row(N, tau);
  const std::size_t count = row.pmf.size();

  // Least-mass central window with mass >= level. Ties (within 1e-9, wide
  // enough to absorb the exact symmetry of tau = N/2 rows) prefer the
  // narrower window, then more balanced tails, then the lower lo.
  double best_mass = 2.0;
  std::size_t best_w = count + 1, best_lo = 0, best_hi = count - 1;
  double best_imb = 2.0;
  bool have = false;
  for (std::size_t lo = 0; lo < count; ++lo) {
    double below = lo == 0 ? 0.0 : row.cdf[lo - 1];
    if (1.0 - below < level - 1e-12) break;
    // smallest hi with mass >= level
    double target = below + level - 1e-12;
    auto it = std::lower_bound(row.cdf.begin() + lo, row.cdf.end(), target);
    if (it == row.cdf.end()) continue;
    std::size_t hi = static_cast<std::size_t>(it - row.cdf.begin());
    double mass = row.cdf[hi] - below;
    if (mass < level - 1e-12) continue;
    double imb = std::fabs(below - (1.0 - row.cdf[hi]));
    std::size_t width = hi - lo;
    bool better = false;
    if (!have || mass < best_mass - 1e-9) {
      better = true;
    } else if (std::fabs(mass - best_mass) <= 1e-9) {
      if (width < best_w)
        better = true;
      else if (width == best_w && imb < best_imb - 1e-9)
        better = true;
    }
    if (better) {
      have = true;
      best_mass = mass;
      best_w = width;
      best_lo = lo;
      best_hi = hi;
      best_imb = imb;
    }
  }
  return {row.support_lo + best_lo, row.support_lo + best_hi};
}

std::vector<OverlapStat> overlap(const Mask& a, const Mask& b) {
  if (a.layers.size() != b.layers.size())
    throw std::invalid_argument("overlap: layer count mismatch");
  std::vector<OverlapStat> out;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const MaskLayer& la = a.layers[l];
    const MaskLayer& lb = b.layers[l];
    if (la.bits != lb.bits)
      throw std::invalid_argument("overlap: layer " + std::to_string(l) + " size mismatch");
    std::size_t ta = la.popcount(), tb = lb.popcount();
    if (ta != tb)
      throw std::invalid_argument("overlap: layer " + std::to_string(l) +
                                  " ticket sizes differ (" + std::to_string(ta) + " vs " +
                                  std::to_string(tb) + ")");
    OverlapStat s;
    s.layer = l;
    s.N = la.bits;
    s.tau = ta;
    s.x = intersection_count(la, lb);
    s.pct_of_mask = ta == 0 ? 0.0 : 100.0 * static_cast<double>(s.x) / static_cast<double>(ta);
    out.push_back(s);
  }
  return out;
}

double significance_fraction(const std::vector<OverlapStat>& stats, std::size_t N,
                             std::size_t tau, double level) {
  if (stats.empty()) throw std::invalid_argument("significance_fraction: empty input");
  Interval iv = significance_interval(N, tau, level);
  std::size_t outside = 0;
  for (const OverlapStat& s : stats)
    if (s.x < iv.lo || s.x > iv.hi) ++outside;
  return static_cast<double>(outside) / static_cast<double>(stats.size());
}

namespace {

void check_baseline_domain(std::size_t N, std::size_t n, std::size_t k) {
  if (N == 0 || n == 0 || n > N) throw std::invalid_argument("need 0 < n <= N");
  if (k < 1) throw std::invalid_argument("need k >= 1");
}

// Dispersion increment the paper adds per recursion step: the hypergeometric
// "variance" term with the running overlap in place of the success count.
double dispersion_term(double N, double n, double prev) {
  if (N < 2.0) return 0.0;
  return n * ((N - prev) / N) * ((N - n) / (N - 1.0));
}

}  // namespace

BaselineEstimate shared_all_baseline(std::size_t N, std::size_t n, std::size_t k) {
  check_baseline_domain(N, n, k);
  if (k < 2) throw std::invalid_argument("shared_all_baseline: need k >= 2");
  const double dN = static_cast<double>(N), dn = static_cast<double>(n);
  double mean = dn * dn / dN;                           // K_1
  double mx = mean + 3.0 * dispersion_term(dN, dn, dn); // K_1^max
  for (std::size_t i = 2; i < k; ++i) {
    mx = dn * mx / dN + 3.0 * dispersion_term(dN, dn, mx);
    mean = dn * mean / dN;
  }
  BaselineEstimate e;
  e.model = BaselineModel::RecursiveShared;
  e.mean = mean;
  e.sigma = 0.5 * (mx - mean);
  return e;
}

BaselineEstimate never_covered_baseline(std::size_t N, std::size_t n, std::size_t k,
                                        bool literal) {
  check_baseline_domain(N, n, k);
  const double dN = static_cast<double>(N), dn = static_cast<double>(n);
  BaselineEstimate e;
  e.model = BaselineModel::RecursiveNever;
  if (literal) {
    // Verbatim Appendix-B.2 recursion; its coverage sum can exceed N, which
    // is why the cumulative variant below is the default.
    double prev = dn, cover = dn;
    double prev_mx = dn, cover_mx = dn;
    for (std::size_t i = 1; i < k; ++i) {
      double ki = dn - dn * prev / dN;
      double ki_mx = dn - dn * prev_mx / dN + 3.0 * dispersion_term(dN, dn, prev_mx);
      cover += ki;
      cover_mx += ki_mx;
      prev = ki;
      prev_mx = ki_mx;
    }
    e.mean = dN - cover;
    e.sigma = 0.5 * std::fabs(cover_mx - cover);
    return e;
  }
  double cover = dn;     // C_0
  double cover_mx = dn;
  for (std::size_t i = 1; i < k; ++i) {
    cover += dn * (1.0 - cover / dN);
    cover_mx += dn * (1.0 - cover_mx / dN) + 3.0 * dispersion_term(dN, dn, cover_mx);
  }
  e.mean = dN - cover;
  e.sigma = 0.5 * (cover_mx - cover);
  return e;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("spearman: need at least 2 observations");

  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };

  std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::invalid_argument("spearman: constant ranks have no correlation");
  return sab / std::sqrt(saa * sbb);
}

double spearman_masked(const std::vector<double>& initial, const std::vector<double>& final_w,
                       const MaskLayer& mask) {
  if (initial.size() != mask.bits || final_w.size() != mask.bits)
    throw std::invalid_argument("spearman_masked: size mismatch");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < mask.bits; ++i)
    if (mask.get(i)) {
      a.push_back(std::fabs(initial[i]));
      b.push_back(std::fabs(final_w[i]));
    }
  if (a.size() < 2) throw std::invalid_argument("spearman_masked: fewer than 2 survivors");
  return spearman(a, b);
}

MaskLayer random_subset_mask(std::size_t N, std::size_t n, RandomStream& stream) {
  if (n > N) throw std::invalid_argument("subset larger than population");
  MaskLayer ml(N);
  // Floyd's sampling: uniform n-subset with n set inserts.
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(n * 2);
  for (std::size_t j = N - n; j < N; ++j) {
    std::size_t t = stream.next_below(j + 1);
    if (chosen.count(t))
      chosen.insert(j);
    else
      chosen.insert(t);
  }
  for (std::size_t i : chosen) ml.set(i, true);
  return ml;
}

namespace {

struct TrialOut {
  double pair_sum = 0.0, pair_sq = 0.0;  // over pairs in this trial
  std::size_t pairs = 0;
  double shared = 0.0;
  double never = 0.0;
};

McStatistic finalize_stat(const std::vector<double>& per_trial_means,
                          double obs_sum, double obs_sq, std::size_t obs) {
  McStatistic s;
  s.observations = obs;
  s.mean = obs_sum / static_cast<double>(obs);
  double var = obs_sq / static_cast<double>(obs) - s.mean * s.mean;
  s.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
  double tm = 0.0;
  for (double v : per_trial_means) tm += v;
  tm /= static_cast<double>(per_trial_means.size());
  double tv = 0.0;
  for (double v : per_trial_means) tv += (v - tm) * (v - tm);
  tv /= static_cast<double>(per_trial_means.size());
  s.stderr_mean = std::sqrt(tv / static_cast<double>(per_trial_means.size()));
  return s;
}

}  // namespace

McEstimate monte_carlo_oracle(std::size_t N, std::size_t n, std::size_t k,
                              std::size_t trials, std::uint64_t seed) {
  check_baseline_domain(N, n, k);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  RandomStream root = RandomStream::from_seed(seed, "mc-oracle");

  std::vector<TrialOut> out(trials);
  const long T = static_cast<long>(trials);
  auto run_trial = [&](long t) {
    RandomStream s = root.fork(static_cast<std::uint64_t>(t));
    std::vector<MaskLayer> masks;
    masks.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      RandomStream ms = s.fork(i);
      masks.push_back(random_subset_mask(N, n, ms));
    }
    TrialOut& o = out[t];
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        double x = static_cast<double>(intersection_count(masks[i], masks[j]));
        o.pair_sum += x;
        o.pair_sq += x * x;
        ++o.pairs;
      }
    MaskLayer all = masks[0], any = masks[0];
    for (std::size_t i = 1; i < k; ++i) {
      all = mask_and(all, masks[i]);
      any = mask_or(any, masks[i]);
    }
    o.shared = static_cast<double>(all.popcount());
    o.never = static_cast<double>(N - any.popcount());
  };
  // per-trial streams are keyed by trial index, so the result does not
  // depend on the thread count
#ifdef TICKETLAB_OPENMP
  if (kernels::active_backend() == kernels::Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (long t = 0; t < T; ++t) run_trial(t);
  } else {
    for (long t = 0; t < T; ++t) run_trial(t);
  }
#else
  for (long t = 0; t < T; ++t) run_trial(t);
#endif

  // sequential reduction keeps the result bit-stable
  double psum = 0.0, psq = 0.0, ssum = 0.0, ssq = 0.0, nsum = 0.0, nsq = 0.0;
  std::size_t pairs = 0;
  std::vector<double> pair_trial(trials), shared_trial(trials), never_trial(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const TrialOut& o = out[t];
    psum += o.pair_sum;
    psq += o.pair_sq;
    pairs += o.pairs;
    pair_trial[t] = o.pairs == 0 ? 0.0 : o.pair_sum / static_cast<double>(o.pairs);
    ssum += o.shared;
    ssq += o.shared * o.shared;
    shared_trial[t] = o.shared;
    nsum += o.never;
    nsq += o.never * o.never;
    never_trial[t] = o.never;
  }

  McEstimate e;
  if (pairs > 0) e.pairwise = finalize_stat(pair_trial, psum, psq, pairs);
  e.shared_all = finalize_stat(shared_trial, ssum, ssq, trials);
  e.never_covered = finalize_stat(never_trial, nsum, nsq, trials);
  return e;
}

const char* baseline_model_name(BaselineModel m) {
  switch (m) {
    case BaselineModel::Hypergeometric: return "hypergeometric";
    case BaselineModel::RecursiveShared: return "recursive-shared";
    case BaselineModel::RecursiveNever: return "recursive-never";
    case BaselineModel::NormalApprox: return "normal-approx";
  }
  return "?";
}

}  // namespace ticketlab::stats
