#include "ticketlab/kernels.hpp"

// Reference implementations. The OpenMP variants in kernels_omp.cpp must stay
// bit-identical to these: same per-element inner reduction order.

namespace ticketlab::kernels::serial {

void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d) {
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    const double* xr = x + bi * d.in;
    double* yr = y + bi * d.out;
    for (std::size_t o = 0; o < d.out; ++o) {
      const double* wr = w + o * d.in;
      double acc = b ? b[o] : 0.0;
      for (std::size_t i = 0; i < d.in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }
}

void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d) {
  for (std::size_t o = 0; o < d.out; ++o) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < d.batch; ++bi)
        acc += dy[bi * d.out + o] * x[bi * d.in + i];
      dw[o * d.in + i] = acc;
    }
    if (db) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < d.batch; ++bi) acc += dy[bi * d.out + o];
      db[o] = acc;
    }
  }
}

void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d) {
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    const double* dyr = dy + bi * d.out;
    double* dxr = dx + bi * d.in;
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += dyr[o] * w[o * d.in + i];
      dxr[i] = acc;
    }
  }
}

void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d) {
  const std::size_t oh = d.oh(), ow = d.ow();
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
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
  for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
    for (std::size_t c = 0; c < d.in_ch; ++c) {
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
    if (db) {
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
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    for (std::size_t c = 0; c < d.in_ch; ++c) {
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
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xp = x + c * h * w;
    double* yp = y + c * oh * ow;
    std::uint32_t* ap = argmax + c * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t base = (2 * i) * w + 2 * j;
        // scan order breaks ties toward the first (top-left) element
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
  for (std::size_t k = 0; k < channels * h * w; ++k) dx[k] = 0.0;
  for (std::size_t o = 0; o < channels * oh * ow; ++o) dx[argmax[o]] = dy[o];
}

}  // namespace ticketlab::kernels::serial
