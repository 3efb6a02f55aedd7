#include "ticketlab/similarity.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ticketlab::similarity {

namespace {

void check_matrix(const ProbeOutputs& m, const char* name) {
  if (m.shape.size() != 2)
    throw std::invalid_argument(std::string(name) + " must be a 2-d matrix");
  if (m.dim(0) < 2) throw std::invalid_argument(std::string(name) + " needs >= 2 rows");
}

// column-mean-centered copy
std::vector<double> centered(const ProbeOutputs& m) {
  const std::size_t r = m.dim(0), c = m.dim(1);
  std::vector<double> out(m.data);
  for (std::size_t j = 0; j < c; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < r; ++i) mean += m[i * c + j];
    mean /= static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i) out[i * c + j] -= mean;
  }
  return out;
}

// |A' B|_F^2 for r x ca and r x cb column-centered matrices
double cross_frob_sq(const std::vector<double>& a, const std::vector<double>& b,
                     std::size_t r, std::size_t ca, std::size_t cb) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ca; ++i)
    for (std::size_t j = 0; j < cb; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < r; ++k) dot += a[k * ca + i] * b[k * cb + j];
      sum += dot * dot;
    }
  return sum;
}

}  // namespace

double l2_distance(const ProbeOutputs& a, const ProbeOutputs& b) {
  check_matrix(a, "a");
  check_matrix(b, "b");
  if (!a.same_shape(b)) throw std::invalid_argument("l2_distance: shape mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq) / std::sqrt(static_cast<double>(a.dim(0)));
}

double linear_cka(const ProbeOutputs& a, const ProbeOutputs& b) {
  check_matrix(a, "a");
  check_matrix(b, "b");
  if (a.dim(0) != b.dim(0)) throw std::invalid_argument("linear_cka: row count mismatch");
  const std::size_t r = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<double> xc = centered(a), yc = centered(b);
  double xx = cross_frob_sq(xc, xc, r, ca, ca);
  double yy = cross_frob_sq(yc, yc, r, cb, cb);
  if (xx == 0.0 || yy == 0.0)
    throw std::invalid_argument("linear_cka: degenerate (all-constant) input");
  double xy = cross_frob_sq(xc, yc, r, ca, cb);
  return xy / std::sqrt(xx * yy);
}

}  // namespace ticketlab::similarity
