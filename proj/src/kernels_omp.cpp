#include "ticketlab/kernels.hpp"

#ifdef TICKETLAB_OPENMP
#include <omp.h>
#endif

// OpenMP variants. Each output element is computed by exactly one thread and
// the per-element reduction order matches kernels_serial.cpp, so results are
// bit-identical to the reference for any thread count.

namespace ticketlab::kernels::par {

#ifndef TICKETLAB_OPENMP

// Without OpenMP the parallel backend degenerates to the reference.
void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d) {
  serial::dense_fwd(x, w, b, y, d);
}
void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d) {
  serial::dense_grad_w(x, dy, dw, db, d);
}
void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d) {
  serial::dense_grad_x(dy, w, dx, d);
}
void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d) {
  serial::conv5x5_fwd(x, w, b, y, d);
}
void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d) {
  serial::conv5x5_grad_w(x, dy, dw, db, d);
}
void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d) {
  serial::conv5x5_grad_x(dy, w, dx, d);
}
void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w) {
  serial::maxpool2x2_fwd(x, y, argmax, channels, h, w);
}
void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w) {
  serial::maxpool2x2_bwd(dy, argmax, dx, channels, h, w);
}

#else

void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d) {
  const long B = static_cast<long>(d.batch), O = static_cast<long>(d.out);
#pragma omp parallel for collapse(2) schedule(static)
  for (long bi = 0; bi < B; ++bi) {
    for (long o = 0; o < O; ++o) {
      const double* xr = x + bi * d.in;
      const double* wr = w + o * d.in;
      double acc = b ? b[o] : 0.0;
      for (std::size_t i = 0; i < d.in; ++i) acc += xr[i] * wr[i];
      y[bi * O + o] = acc;
    }
  }
}

void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d) {
  const long O = static_cast<long>(d.out), I = static_cast<long>(d.in);
#pragma omp parallel for collapse(2) schedule(static)
  for (long o = 0; o < O; ++o) {
    for (long i = 0; i < I; ++i) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < d.batch; ++bi)
        acc += dy[bi * d.out + o] * x[bi * d.in + i];
      dw[o * I + i] = acc;
    }
  }
  if (db) {
#pragma omp parallel for schedule(static)
    for (long o = 0; o < O; ++o) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < d.batch; ++bi) acc += dy[bi * d.out + o];
      db[o] = acc;
    }
  }
}

void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d) {
  const long B = static_cast<long>(d.batch), I = static_cast<long>(d.in);
#pragma omp parallel for collapse(2) schedule(static)
  for (long bi = 0; bi < B; ++bi) {
    for (long i = 0; i < I; ++i) {
      const double* dyr = dy + bi * d.out;
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += dyr[o] * w[o * d.in + i];
      dx[bi * I + i] = acc;
    }
  }
}

void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d) {
  const std::size_t oh = d.oh(), ow = d.ow();
  const long B = static_cast<long>(d.batch), OC = static_cast<long>(d.out_ch);
#pragma omp parallel for collapse(2) schedule(static)
  for (long bi = 0; bi < B; ++bi) {
    for (long oc = 0; oc < OC; ++oc) {
      const double* wk = w + oc * d.in_ch * 25;
      double* yp = y + ((bi * d.out_ch + oc) * oh) * ow;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b ? b[oc] : 0.0;
          for (std::size_t c = 0; c < d.in_ch; ++c) {
            const double* xp = x + ((bi * d.in_ch + c) * d.h + i) * d.w + j;
            const double* wc = wk + c * 25;
            for (std::size_t u = 0; u < 5; ++u)
              for (std::size_t v = 0; v < 5; ++v) acc += xp[u * d.w + v] * wc[u * 5 + v];
          }
          yp[i * ow + j] = acc;
        }
      }
    }
  }
}

void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d) {
  const std::size_t oh = d.oh(), ow = d.ow();
  const long OC = static_cast<long>(d.out_ch), C = static_cast<long>(d.in_ch);
#pragma omp parallel for collapse(2) schedule(static)
  for (long oc = 0; oc < OC; ++oc) {
    for (long c = 0; c < C; ++c) {
      for (std::size_t u = 0; u < 5; ++u) {
        for (std::size_t v = 0; v < 5; ++v) {
          double acc = 0.0;
          for (std::size_t bi = 0; bi < d.batch; ++bi) {
            const double* dyp = dy + ((bi * d.out_ch + oc) * oh) * ow;
            const double* xp = x + ((bi * d.in_ch + c) * d.h + u) * d.w + v;
            for (std::size_t i = 0; i < oh; ++i)
              for (std::size_t j = 0; j < ow; ++j) acc += dyp[i * ow + j] * xp[i * d.w + j];
          }
          dw[((oc * d.in_ch + c) * 5 + u) * 5 + v] = acc;
        }
      }
    }
  }
  if (db) {
#pragma omp parallel for schedule(static)
    for (long oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < d.batch; ++bi) {
        const double* dyp = dy + ((bi * d.out_ch + oc) * oh) * ow;
        for (std::size_t k = 0; k < oh * ow; ++k) acc += dyp[k];
      }
      db[oc] = acc;
    }
  }
}

void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d) {
  const std::size_t oh = d.oh(), ow = d.ow();
  const long B = static_cast<long>(d.batch), C = static_cast<long>(d.in_ch);
  // each (sample, channel) input plane is owned by one iteration
#pragma omp parallel for collapse(2) schedule(static)
  for (long bi = 0; bi < B; ++bi) {
    for (long c = 0; c < C; ++c) {
      double* dxp = dx + ((bi * d.in_ch + c) * d.h) * d.w;
      for (std::size_t k = 0; k < d.h * d.w; ++k) dxp[k] = 0.0;
      for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
        const double* dyp = dy + ((bi * d.out_ch + oc) * oh) * ow;
        const double* wc = w + (oc * d.in_ch + c) * 25;
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j) {
            const double g = dyp[i * ow + j];
            for (std::size_t u = 0; u < 5; ++u)
              for (std::size_t v = 0; v < 5; ++v)
                dxp[(i + u) * d.w + (j + v)] += g * wc[u * 5 + v];
          }
      }
    }
  }
}

void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w) {
  const std::size_t oh = h / 2, ow = w / 2;
  const long NC = static_cast<long>(channels);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < NC; ++c) {
    const double* xp = x + c * h * w;
    double* yp = y + c * oh * ow;
    std::uint32_t* ap = argmax + c * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t base = (2 * i) * w + 2 * j;
        std::size_t best = base;
        double bv = xp[base];
        const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
        for (std::size_t t = 0; t < 3; ++t)
          if (xp[cand[t]] > bv) {
            bv = xp[cand[t]];
            best = cand[t];
          }
        yp[i * ow + j] = bv;
        ap[i * ow + j] = static_cast<std::uint32_t>(c * h * w + best);
      }
    }
  }
}

void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w) {
  const std::size_t oh = h / 2, ow = w / 2;
  const long total_in = static_cast<long>(channels * h * w);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < total_in; ++k) dx[k] = 0.0;
  const long total_out = static_cast<long>(channels * oh * ow);
  // pooling windows are disjoint, so argmax targets are unique
#pragma omp parallel for schedule(static)
  for (long o = 0; o < total_out; ++o) dx[argmax[o]] = dy[o];
}

#endif  // TICKETLAB_OPENMP

}  // namespace ticketlab::kernels::par
