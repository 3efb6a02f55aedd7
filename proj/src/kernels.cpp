#include "ticketlab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace ticketlab::kernels {

namespace {

Backend initial_backend() {
  if (const char* env = std::getenv("TICKETLAB_BACKEND"))
    if (std::strcmp(env, "serial") == 0) return Backend::Serial;
  return Backend::Parallel;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }
void set_backend(Backend b) { backend_slot().store(b, std::memory_order_relaxed); }

#define TICKETLAB_DISPATCH(fn, ...)                  \
  do {                                               \
    if (active_backend() == Backend::Serial)         \
      serial::fn(__VA_ARGS__);                       \
    else                                             \
      par::fn(__VA_ARGS__);                          \
  } while (0)

void dense_fwd(const double* x, const double* w, const double* b, double* y, DenseDims d) {
  TICKETLAB_DISPATCH(dense_fwd, x, w, b, y, d);
}
void dense_grad_w(const double* x, const double* dy, double* dw, double* db, DenseDims d) {
  TICKETLAB_DISPATCH(dense_grad_w, x, dy, dw, db, d);
}
void dense_grad_x(const double* dy, const double* w, double* dx, DenseDims d) {
  TICKETLAB_DISPATCH(dense_grad_x, dy, w, dx, d);
}
void conv5x5_fwd(const double* x, const double* w, const double* b, double* y, ConvDims d) {
  TICKETLAB_DISPATCH(conv5x5_fwd, x, w, b, y, d);
}
void conv5x5_grad_w(const double* x, const double* dy, double* dw, double* db, ConvDims d) {
  TICKETLAB_DISPATCH(conv5x5_grad_w, x, dy, dw, db, d);
}
void conv5x5_grad_x(const double* dy, const double* w, double* dx, ConvDims d) {
  TICKETLAB_DISPATCH(conv5x5_grad_x, dy, w, dx, d);
}
void maxpool2x2_fwd(const double* x, double* y, std::uint32_t* argmax,
                    std::size_t channels, std::size_t h, std::size_t w) {
  TICKETLAB_DISPATCH(maxpool2x2_fwd, x, y, argmax, channels, h, w);
}
void maxpool2x2_bwd(const double* dy, const std::uint32_t* argmax, double* dx,
                    std::size_t channels, std::size_t h, std::size_t w) {
  TICKETLAB_DISPATCH(maxpool2x2_bwd, dy, argmax, dx, channels, h, w);
}

#undef TICKETLAB_DISPATCH

}  // namespace ticketlab::kernels
