// Times the serial reference against the OpenMP kernels and checks that both
// produce identical bytes on the benchmark inputs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "ticketlab/kernels.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/stats.hpp"

using namespace ticketlab;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(std::size_t n, RandomStream& s) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * s.next_double() - 1.0;
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void row(const char* name, double serial_ms, double par_ms, bool identical) {
  std::printf("%-20s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_ms, par_ms,
              serial_ms / par_ms, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  RandomStream s = RandomStream::from_seed(7, "bench");
  std::printf("%-20s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  {
    kernels::DenseDims d{64, 512, 256};
    auto x = random_vec(d.batch * d.in, s);
    auto w = random_vec(d.out * d.in, s);
    auto b = random_vec(d.out, s);
    std::vector<double> y1(d.batch * d.out), y2(y1.size());
    double ts = time_ms([&] { kernels::serial::dense_fwd(x.data(), w.data(), b.data(), y1.data(), d); }, 20);
    double tp = time_ms([&] { kernels::par::dense_fwd(x.data(), w.data(), b.data(), y2.data(), d); }, 20);
    row("dense_fwd", ts, tp, same_bits(y1, y2));

    std::vector<double> dy = random_vec(d.batch * d.out, s);
    std::vector<double> dw1(d.out * d.in), dw2(dw1.size()), db1(d.out), db2(d.out);
    ts = time_ms([&] { kernels::serial::dense_grad_w(x.data(), dy.data(), dw1.data(), db1.data(), d); }, 20);
    tp = time_ms([&] { kernels::par::dense_grad_w(x.data(), dy.data(), dw2.data(), db2.data(), d); }, 20);
    row("dense_grad_w", ts, tp, same_bits(dw1, dw2) && same_bits(db1, db2));

    std::vector<double> dx1(d.batch * d.in), dx2(dx1.size());
    ts = time_ms([&] { kernels::serial::dense_grad_x(dy.data(), w.data(), dx1.data(), d); }, 20);
    tp = time_ms([&] { kernels::par::dense_grad_x(dy.data(), w.data(), dx2.data(), d); }, 20);
    row("dense_grad_x", ts, tp, same_bits(dx1, dx2));
  }

  {
    kernels::ConvDims d{16, 6, 24, 24, 16};
    auto x = random_vec(d.batch * d.in_ch * d.h * d.w, s);
    auto w = random_vec(d.out_ch * d.in_ch * 25, s);
    auto b = random_vec(d.out_ch, s);
    std::size_t on = d.batch * d.out_ch * d.oh() * d.ow();
    std::vector<double> y1(on), y2(on);
    double ts = time_ms([&] { kernels::serial::conv5x5_fwd(x.data(), w.data(), b.data(), y1.data(), d); }, 10);
    double tp = time_ms([&] { kernels::par::conv5x5_fwd(x.data(), w.data(), b.data(), y2.data(), d); }, 10);
    row("conv5x5_fwd", ts, tp, same_bits(y1, y2));

    auto dy = random_vec(on, s);
    std::vector<double> dw1(w.size()), dw2(w.size()), db1(d.out_ch), db2(d.out_ch);
    ts = time_ms([&] { kernels::serial::conv5x5_grad_w(x.data(), dy.data(), dw1.data(), db1.data(), d); }, 10);
    tp = time_ms([&] { kernels::par::conv5x5_grad_w(x.data(), dy.data(), dw2.data(), db2.data(), d); }, 10);
    row("conv5x5_grad_w", ts, tp, same_bits(dw1, dw2) && same_bits(db1, db2));

    std::vector<double> dx1(x.size()), dx2(x.size());
    ts = time_ms([&] { kernels::serial::conv5x5_grad_x(dy.data(), w.data(), dx1.data(), d); }, 10);
    tp = time_ms([&] { kernels::par::conv5x5_grad_x(dy.data(), w.data(), dx2.data(), d); }, 10);
    row("conv5x5_grad_x", ts, tp, same_bits(dx1, dx2));
  }

  {
    // Monte Carlo oracle: trial loop is the parallel axis
    auto run_mc = [](std::size_t trials) {
      return stats::monte_carlo_oracle(1000, 100, 5, trials, 42);
    };
    kernels::set_backend(kernels::Backend::Serial);
    auto t0 = Clock::now();
    auto a = run_mc(2000);
    auto t1 = Clock::now();
    kernels::set_backend(kernels::Backend::Parallel);
    auto b = run_mc(2000);
    auto t2 = Clock::now();
    double ts = std::chrono::duration<double, std::milli>(t1 - t0).count();
    double tp = std::chrono::duration<double, std::milli>(t2 - t1).count();
    bool same = a.pairwise.mean == b.pairwise.mean &&
                a.shared_all.mean == b.shared_all.mean &&
                a.never_covered.mean == b.never_covered.mean;
    row("monte_carlo(2000)", ts, tp, same);
  }

  return 0;
}
