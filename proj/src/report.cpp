#include "ticketlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ticketlab/similarity.hpp"

using nlohmann::ordered_json;

namespace ticketlab::report {

namespace {

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string pair_label(const stats::PairId& p) {
  std::string s = "s" + std::to_string(p.seed_a) + "r" + std::to_string(p.run_a) + "~s" +
                  std::to_string(p.seed_b) + "r" + std::to_string(p.run_b);
  if (!p.task_a.empty() && p.task_a != p.task_b) s += "~xtask";
  return s;
}

bool stat_order(const stats::OverlapStat& a, const stats::OverlapStat& b) {
  auto key = [](const stats::OverlapStat& s) {
    return std::tuple(s.layer, s.pair.seed_a, s.pair.run_a, s.pair.seed_b, s.pair.run_b,
                      s.pair.task_a, s.pair.task_b);
  };
  return key(a) < key(b);
}

// palette of seed shades (blue family, matching the per-seed shading idea)
const char* seed_color(std::size_t i) {
  static const char* colors[] = {"#08306b", "#2171b5", "#4292c6", "#6baed6",
                                 "#9ecae1", "#c6dbef"};
  return colors[i % 6];
}

struct Canvas {
  std::ostringstream out;
  double width, height;

  Canvas(double w, double h) : width(w), height(h) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 12,
            const char* anchor = "start") {
    out << "<text x=\"" << fmt(x, 1) << "\" y=\"" << fmt(y, 1) << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
        << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* color, double w = 1.0) {
    out << "<line x1=\"" << fmt(x1, 1) << "\" y1=\"" << fmt(y1, 1) << "\" x2=\"" << fmt(x2, 1)
        << "\" y2=\"" << fmt(y2, 1) << "\" stroke=\"" << color << "\" stroke-width=\""
        << fmt(w, 1) << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* color) {
    out << "<circle cx=\"" << fmt(x, 1) << "\" cy=\"" << fmt(y, 1) << "\" r=\"" << fmt(r, 1)
        << "\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* color, double opacity) {
    out << "<rect x=\"" << fmt(x, 1) << "\" y=\"" << fmt(y, 1) << "\" width=\"" << fmt(w, 1)
        << "\" height=\"" << fmt(h, 1) << "\" fill=\"" << color << "\" fill-opacity=\""
        << fmt(opacity, 2) << "\"/>\n";
  }
  std::string finish() {
    out << "</svg>\n";
    return out.str();
  }
};

struct Axes {
  double x0 = 60, y0 = 30, x1, y1;  // plot box, y grows downward
  double ymin, ymax;

  Axes(double w, double h, double lo, double hi) : x1(w - 20), y1(h - 40), ymin(lo), ymax(hi) {}
  double ty(double v) const { return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0); }
};

void draw_frame(Canvas& c, const Axes& a, const std::string& title,
                const std::string& ylabel) {
  c.line(a.x0, a.y0, a.x0, a.y1, "#333333");
  c.line(a.x0, a.y1, a.x1, a.y1, "#333333");
  c.text((a.x0 + a.x1) / 2, 18, title, 13, "middle");
  for (int t = 0; t <= 4; ++t) {
    double v = a.ymin + (a.ymax - a.ymin) * t / 4.0;
    double y = a.ty(v);
    c.line(a.x0 - 4, y, a.x0, y, "#333333");
    c.text(a.x0 - 8, y + 4, fmt(v, 1), 10, "end");
  }
  c.text(12, (a.y0 + a.y1) / 2, ylabel, 11, "middle");
}

}  // namespace

std::string overlap_csv(std::vector<stats::OverlapStat> stats) {
  std::sort(stats.begin(), stats.end(), stat_order);
  std::ostringstream out;
  out << "layer,pair,x,pct,baseline_mean,baseline_sigma,significant_95,significant_99\n";
  std::map<std::pair<std::size_t, std::size_t>, stats::Interval> iv95, iv99;
  for (const auto& s : stats) {
    auto key = std::make_pair(s.N, s.tau);
    if (!iv95.count(key)) {
      iv95[key] = stats::significance_interval(s.N, s.tau, 0.95);
      iv99[key] = stats::significance_interval(s.N, s.tau, 0.99);
    }
    auto base = stats::hypergeom_moments(s.N, s.tau);
    const auto& i95 = iv95[key];
    const auto& i99 = iv99[key];
    out << s.layer << "," << pair_label(s.pair) << "," << s.x << "," << fmt(s.pct_of_mask)
        << "," << fmt(base.mean) << "," << fmt(base.sigma) << ","
        << ((s.x < i95.lo || s.x > i95.hi) ? 1 : 0) << ","
        << ((s.x < i99.lo || s.x > i99.hi) ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string overlap_svg(std::vector<stats::OverlapStat> stats, const std::string& title) {
  std::sort(stats.begin(), stats.end(), stat_order);
  Canvas c(640, 420);
  Axes a(640, 420, 0.0, 100.0);
  draw_frame(c, a, title, "overlap %");

  std::set<std::size_t> layer_set;
  std::set<std::uint64_t> seed_set;
  for (const auto& s : stats) {
    layer_set.insert(s.layer);
    seed_set.insert(s.pair.seed_a);
  }
  std::vector<std::size_t> layers(layer_set.begin(), layer_set.end());
  std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
  auto lx = [&](std::size_t layer) {
    auto it = std::find(layers.begin(), layers.end(), layer);
    double i = static_cast<double>(it - layers.begin());
    double n = static_cast<double>(std::max<std::size_t>(layers.size(), 1));
    return a.x0 + (i + 0.5) / n * (a.x1 - a.x0);
  };

  // gray hypergeometric baseline band (mean +- 2 sigma) per layer
  for (std::size_t layer : layers) {
    for (const auto& s : stats) {
      if (s.layer != layer) continue;
      auto base = stats::hypergeom_moments(s.N, s.tau);
      double mean_pct = 100.0 * base.mean / static_cast<double>(s.tau);
      double band_pct = 100.0 * 2.0 * base.sigma / static_cast<double>(s.tau);
      double x = lx(layer);
      c.rect(x - 16, a.ty(std::min(100.0, mean_pct + band_pct)), 32,
             std::max(1.0, a.ty(std::max(0.0, mean_pct - band_pct)) -
                               a.ty(std::min(100.0, mean_pct + band_pct))),
             "#bbbbbb", 0.4);
      c.line(x - 16, a.ty(mean_pct), x + 16, a.ty(mean_pct), "#777777", 1.5);
      break;  // all pairs share (N, tau) within a layer
    }
  }

  for (const auto& s : stats) {
    auto seed_it = std::find(seeds.begin(), seeds.end(), s.pair.seed_a);
    std::size_t si = static_cast<std::size_t>(seed_it - seeds.begin());
    // deterministic per-pair horizontal jitter
    double spreadpos =
        static_cast<double>((s.pair.run_a * 7 + s.pair.run_b * 13 + si * 3) % 21) - 10.0;
    c.circle(lx(s.layer) + spreadpos, a.ty(std::clamp(s.pct_of_mask, 0.0, 100.0)), 2.5,
             seed_color(si));
  }
  for (std::size_t i = 0; i < layers.size(); ++i)
    c.text(lx(layers[i]), a.y1 + 16, "layer " + std::to_string(layers[i]), 10, "middle");
  return c.finish();
}

void write_overlap_csv(const std::string& path, const std::vector<stats::OverlapStat>& stats) {
  write_text(path, overlap_csv(stats));
}

void write_overlap_svg(const std::string& path, const std::vector<stats::OverlapStat>& stats,
                       const std::string& title) {
  write_text(path, overlap_svg(stats, title));
}

std::string shared_never_csv(const std::vector<SharedNeverRow>& rows) {
  std::ostringstream out;
  out << "seed,layer,N,tau,k,shared_count,shared_pct,shared_baseline_mean,"
         "shared_baseline_sigma,shared_baseline_pct,never_count,never_pct,"
         "never_baseline_mean,never_baseline_sigma,never_baseline_pct\n";
  for (const auto& r : rows) {
    out << r.seed << "," << r.layer << "," << r.N << "," << r.tau << "," << r.k << ","
        << r.shared_count << "," << fmt(r.shared_pct) << "," << fmt(r.shared_baseline.mean)
        << "," << fmt(r.shared_baseline.sigma) << "," << fmt(r.shared_baseline_pct) << ","
        << r.never_count << "," << fmt(r.never_pct) << "," << fmt(r.never_baseline.mean)
        << "," << fmt(r.never_baseline.sigma) << "," << fmt(r.never_baseline_pct) << "\n";
  }
  return out.str();
}

void write_shared_never_csv(const std::string& path, const std::vector<SharedNeverRow>& rows) {
  write_text(path, shared_never_csv(rows));
}

std::string shared_never_svg(const std::vector<SharedNeverRow>& rows,
                             const std::string& title) {
  Canvas c(640, 420);
  Axes a(640, 420, 0.0, 100.0);
  draw_frame(c, a, title, "% of bound");
  std::set<std::size_t> layer_set;
  std::set<std::uint64_t> seed_set;
  for (const auto& r : rows) {
    layer_set.insert(r.layer);
    seed_set.insert(r.seed);
  }
  std::vector<std::size_t> layers(layer_set.begin(), layer_set.end());
  std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
  auto lx = [&](std::size_t layer) {
    auto it = std::find(layers.begin(), layers.end(), layer);
    double i = static_cast<double>(it - layers.begin());
    double n = static_cast<double>(std::max<std::size_t>(layers.size(), 1));
    return a.x0 + (i + 0.5) / n * (a.x1 - a.x0);
  };
  for (const auto& r : rows) {
    double x = lx(r.layer);
    c.line(x - 14, a.ty(std::clamp(r.shared_baseline_pct, 0.0, 100.0)), x + 2,
           a.ty(std::clamp(r.shared_baseline_pct, 0.0, 100.0)), "#999999", 1.0);
    c.line(x - 2, a.ty(std::clamp(r.never_baseline_pct, 0.0, 100.0)), x + 14,
           a.ty(std::clamp(r.never_baseline_pct, 0.0, 100.0)), "#999999", 1.0);
  }
  for (const auto& r : rows) {
    auto it = std::find(seeds.begin(), seeds.end(), r.seed);
    std::size_t si = static_cast<std::size_t>(it - seeds.begin());
    double x = lx(r.layer);
    c.circle(x - 8, a.ty(std::clamp(r.shared_pct, 0.0, 100.0)), 2.5, seed_color(si));
    c.circle(x + 8, a.ty(std::clamp(r.never_pct, 0.0, 100.0)), 2.5, "#b2182b");
  }
  for (std::size_t i = 0; i < layers.size(); ++i)
    c.text(lx(layers[i]), a.y1 + 16, "layer " + std::to_string(layers[i]), 10, "middle");
  return c.finish();
}

namespace {

std::vector<const RunRecord*> sorted_records(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> out;
  for (const auto& r : records) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const RunRecord* a, const RunRecord* b) {
    return std::tuple(a->task, a->seed, a->run_id) < std::tuple(b->task, b->seed, b->run_id);
  });
  return out;
}

}  // namespace

std::string accuracy_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "task,seed,run,step,pruned_pct,accuracy\n";
  for (const RunRecord* r : sorted_records(records)) {
    out << r->task << "," << r->seed << "," << r->run_id << ",dense,0," << fmt(r->dense_accuracy)
        << "\n";
    for (std::size_t s = 0; s < r->steps.size(); ++s)
      out << r->task << "," << r->seed << "," << r->run_id << "," << s << ","
          << fmt(r->schedule_pct[s], 1) << "," << fmt(r->steps[s].accuracy) << "\n";
  }
  return out.str();
}

std::string accuracy_svg(const std::vector<RunRecord>& records, const std::string& title) {
  Canvas c(640, 420);
  Axes a(640, 420, 0.0, 1.0);
  draw_frame(c, a, title, "accuracy");
  auto recs = sorted_records(records);
  std::set<std::uint64_t> seed_set;
  std::size_t max_steps = 0;
  for (const RunRecord* r : recs) {
    seed_set.insert(r->seed);
    max_steps = std::max(max_steps, r->steps.size());
  }
  std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
  auto sx = [&](std::size_t step) {  // step 0 = dense
    double n = static_cast<double>(max_steps + 1);
    return a.x0 + (static_cast<double>(step) + 0.5) / n * (a.x1 - a.x0);
  };
  for (const RunRecord* r : recs) {
    auto it = std::find(seeds.begin(), seeds.end(), r->seed);
    const char* color = seed_color(static_cast<std::size_t>(it - seeds.begin()));
    double px = sx(0), py = a.ty(r->dense_accuracy);
    for (std::size_t s = 0; s < r->steps.size(); ++s) {
      double x = sx(s + 1), y = a.ty(r->steps[s].accuracy);
      c.line(px, py, x, y, color, 1.0);
      px = x;
      py = y;
    }
  }
  c.text(sx(0), a.y1 + 16, "dense", 10, "middle");
  for (std::size_t s = 0; s < max_steps; ++s)
    c.text(sx(s + 1), a.y1 + 16, "step " + std::to_string(s), 10, "middle");
  return c.finish();
}

std::string rank_correlation_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "task,seed,run,step,layer,spearman\n";
  for (const RunRecord* r : sorted_records(records))
    for (std::size_t s = 0; s < r->rank_correlations.size(); ++s)
      for (std::size_t l = 0; l < r->rank_correlations[s].size(); ++l) {
        double v = r->rank_correlations[s][l];
        out << r->task << "," << r->seed << "," << r->run_id << "," << s << "," << l << ","
            << (std::isnan(v) ? "nan" : fmt(v)) << "\n";
      }
  return out.str();
}

std::string similarity_csv(const std::vector<RunRecord>& records) {
  auto recs = sorted_records(records);
  std::ostringstream out;
  out << "seed_a,run_a,seed_b,run_b,scope,l2_distance,linear_cka\n";
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t j = i + 1; j < recs.size(); ++j) {
      const RunRecord* a = recs[i];
      const RunRecord* b = recs[j];
      if (!a->probe_outputs.same_shape(b->probe_outputs)) continue;
      double l2 = similarity::l2_distance(a->probe_outputs, b->probe_outputs);
      double cka = similarity::linear_cka(a->probe_outputs, b->probe_outputs);
      out << a->seed << "," << a->run_id << "," << b->seed << "," << b->run_id << ","
          << (a->seed == b->seed ? "within" : "across") << "," << fmt(l2, 9) << ","
          << fmt(cka, 9) << "\n";
    }
  return out.str();
}

std::string similarity_json(const std::vector<RunRecord>& records) {
  auto recs = sorted_records(records);
  std::vector<double> l2_within, l2_across, cka_within, cka_across;
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t j = i + 1; j < recs.size(); ++j) {
      const RunRecord* a = recs[i];
      const RunRecord* b = recs[j];
      if (!a->probe_outputs.same_shape(b->probe_outputs)) continue;
      double l2 = similarity::l2_distance(a->probe_outputs, b->probe_outputs);
      double cka = similarity::linear_cka(a->probe_outputs, b->probe_outputs);
      if (a->seed == b->seed) {
        l2_within.push_back(l2);
        cka_within.push_back(cka);
      } else {
        l2_across.push_back(l2);
        cka_across.push_back(cka);
      }
    }
  ordered_json j;
  j["l2"]["within_seed"] = l2_within;
  j["l2"]["across_seeds"] = l2_across;
  j["cka"]["within_seed"] = cka_within;
  j["cka"]["across_seeds"] = cka_across;
  return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
  if (!f) throw std::runtime_error("short write on " + path);
}

}  // namespace ticketlab::report
