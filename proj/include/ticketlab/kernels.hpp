#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Hot inner loops of the network engine. Every kernel exists twice: a serial
// reference in kernels::serial and an OpenMP version in kernels::par that
// assigns each output element to exactly one thread with the same inner
// reduction order, so both produce bit-identical results for any thread
// count. The free functions at namespace scope dispatch on the active
// backend. tools/bench_kernels compares the two.

namespace ticketlab::kernels {

enum class Backend { Serial, Parallel };

Backend active_backend();
void set_backend(Backend b);

struct DenseDims {
  std::size_t batch;  // rows of x
  std::size_t in;     // columns of x, columns of w
  std::size_t out;    // rows of w
};

struct ConvDims {
  std::size_t batch;
  std::size_t in_ch;
  std::size_t h, w;        // input spatial size
  std::size_t out_ch;
  std::size_t oh() const { return h - 4; }  // 5x5 valid
  std::size_t ow() const { return w - 4; }
};

namespace serial {
void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d);
void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d);
void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d);
void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d);
void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d);
void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d);
void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w);
void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w);
}  // namespace serial

namespace par {
void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d);
void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d);
void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d);
void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d);
void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d);
void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d);
void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w);
void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w);
}  // namespace par

// Dispatching entry points used by the network engine.
void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d);
void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d);
void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d);
void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d);
void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d);
void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d);
void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w);
void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w);

}  // namespace ticketlab::kernels
