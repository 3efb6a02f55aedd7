#include <doctest.h>

#include <cmath>
#include <vector>

#include "ticketlab/rng.hpp"
#include "ticketlab/similarity.hpp"

using namespace ticketlab;
using namespace ticketlab::similarity;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Tensor t({r, c});
  RandomStream s = RandomStream::from_seed(seed, "sim");
  for (auto& v : t.data) v = s.next_gauss();
  return t;
}

// random orthogonal matrix via Gram-Schmidt on a Gaussian square matrix
std::vector<double> random_orthogonal(std::size_t n, std::uint64_t seed) {
  RandomStream s = RandomStream::from_seed(seed, "orth");
  std::vector<double> q(n * n);
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<double> v(n);
    for (auto& x : v) x = s.next_gauss();
    for (std::size_t prev = 0; prev < col; ++prev) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * q[i * n + prev];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q[i * n + prev];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q[i * n + col] = v[i] / norm;
  }
  return q;
}

Tensor matmul(const Tensor& a, const std::vector<double>& q, std::size_t n) {
  Tensor out({a.dim(0), n});
  for (std::size_t r = 0; r < a.dim(0); ++r)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a[r * n + k] * q[k * n + j];
      out[r * n + j] = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("l2 distance of a matrix to itself is zero, and it is symmetric") {
  Tensor a = random_matrix(16, 5, 1);
  Tensor b = random_matrix(16, 5, 2);
  CHECK(l2_distance(a, a) == 0.0);
  CHECK(l2_distance(a, b) == doctest::Approx(l2_distance(b, a)).epsilon(1e-15));
  CHECK(l2_distance(a, b) > 0.0);
}

TEST_CASE("constant offset yields c * sqrt(cols) after row normalization") {
  const std::size_t r = 13, k = 4;
  const double c = 0.37;
  Tensor a = random_matrix(r, k, 3);
  Tensor b = a;
  for (auto& v : b.data) v += c;
  CHECK(l2_distance(a, b) == doctest::Approx(c * std::sqrt(double(k))).epsilon(1e-12));
}

TEST_CASE("l2 distance rejects shape mismatches") {
  CHECK_THROWS_AS(l2_distance(random_matrix(4, 3, 1), random_matrix(4, 2, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(l2_distance(random_matrix(4, 3, 1), random_matrix(5, 3, 1)),
                  std::invalid_argument);
}

TEST_CASE("CKA of a matrix with itself is one") {
  Tensor a = random_matrix(20, 6, 4);
  CHECK(linear_cka(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CKA is invariant to isotropic scaling") {
  Tensor a = random_matrix(20, 6, 5);
  Tensor b = a;
  for (auto& v : b.data) v *= 2.0;
  CHECK(std::fabs(linear_cka(a, b) - 1.0) < 1e-9);
  Tensor c = a;
  for (auto& v : c.data) v *= -0.125;
  CHECK(std::fabs(linear_cka(a, c) - 1.0) < 1e-9);
}

TEST_CASE("CKA is invariant to orthogonal transforms of either side") {
  const std::size_t n = 6;
  Tensor a = random_matrix(24, n, 6);
  Tensor b = random_matrix(24, n, 7);
  auto q = random_orthogonal(n, 8);
  Tensor aq = matmul(a, q, n);
  CHECK(std::fabs(linear_cka(a, aq) - 1.0) < 1e-9);
  CHECK(std::fabs(linear_cka(a, b) - linear_cka(aq, b)) < 1e-9);
  // l2 distance, by contrast, is not rotation-invariant
  CHECK(l2_distance(a, aq) > 1e-3);
}

TEST_CASE("CKA range and asymmetric-shape support") {
  Tensor a = random_matrix(30, 4, 9);
  Tensor b = random_matrix(30, 7, 10);
  double v = linear_cka(a, b);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("CKA rejects degenerate all-constant inputs") {
  Tensor a = random_matrix(8, 3, 11);
  Tensor flat({8, 3});
  for (auto& v : flat.data) v = 0.25;
  CHECK_THROWS_AS(linear_cka(a, flat), std::invalid_argument);
}

TEST_CASE("CKA requires matching row counts") {
  CHECK_THROWS_AS(linear_cka(random_matrix(8, 3, 1), random_matrix(9, 3, 1)),
                  std::invalid_argument);
}
