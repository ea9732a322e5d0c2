#include <cmath>
#include <vector>

#include "doctest.h"
#include "probation/kernels.hpp"
#include "probation/random.hpp"

using namespace probation;
namespace k = probation::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// Plain loops, independent of both kernel tables.
double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(b[i])));
}

const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 16, 17, 63, 64, 65, 130};

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto& s = k::scalar_table();
  Rng rng(11);
  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - naive_dot(a, b)) < 1e-12);
    auto y = b;
    s.axpy(0.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.5 * a[i]));
  }
  const std::size_t rows = 5, cols = 7;
  auto A = random_vec(rng, rows * cols), x = random_vec(rng, cols), xr = random_vec(rng, rows);
  std::vector<double> y(rows, 1.0), yt(cols, -1.0);
  s.gemv(A.data(), x.data(), y.data(), rows, cols);
  s.gemv_t(A.data(), xr.data(), yt.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double e = 1.0;
    for (std::size_t c = 0; c < cols; ++c) e += A[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(e).epsilon(1e-12));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    double e = -1.0;
    for (std::size_t r = 0; r < rows; ++r) e += A[r * cols + c] * xr[r];
    CHECK(yt[c] == doctest::Approx(e).epsilon(1e-12));
  }
  auto G = A;
  s.ger(2.0, xr.data(), x.data(), G.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      CHECK(G[r * cols + c] == doctest::Approx(A[r * cols + c] + 2.0 * xr[r] * x[c]));
    }
  }
}

TEST_CASE("adam kernel first step") {
  // Zero moments, gradient g: m = 0.1 g, v = 0.001 g^2, bias corrected step is lr * sign(g).
  double p = 1.0, g = 0.5, m = 0.0, v = 0.0;
  k::scalar_table().adam(&p, &g, &m, &v, 1, 1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999);
  CHECK(p == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("avx2 kernels agree with scalar reference") {
  const k::KernelTable* v = k::avx2_table();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  const auto& s = k::scalar_table();
  Rng rng(29);
  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= 1e-12 * (1.0 + n));
    auto y1 = b, y2 = b;
    s.axpy(-1.25, a.data(), y1.data(), n);
    v->axpy(-1.25, a.data(), y2.data(), n);
    close(y2, y1, 1e-14);
  }
  for (std::size_t rows : {1, 3, 8, 13}) {
    for (std::size_t cols : {1, 4, 9, 64, 67}) {
      auto A = random_vec(rng, rows * cols), x = random_vec(rng, cols), xr = random_vec(rng, rows);
      std::vector<double> y1(rows, 0.5), y2 = y1, t1(cols, 0.25), t2 = t1;
      s.gemv(A.data(), x.data(), y1.data(), rows, cols);
      v->gemv(A.data(), x.data(), y2.data(), rows, cols);
      close(y2, y1, 1e-12);
      s.gemv_t(A.data(), xr.data(), t1.data(), rows, cols);
      v->gemv_t(A.data(), xr.data(), t2.data(), rows, cols);
      close(t2, t1, 1e-12);
      auto G1 = A, G2 = A;
      s.ger(0.75, xr.data(), x.data(), G1.data(), rows, cols);
      v->ger(0.75, xr.data(), x.data(), G2.data(), rows, cols);
      close(G2, G1, 1e-14);
    }
  }
}

TEST_CASE("adam kernel is bit-identical across variants") {
  const k::KernelTable* v = k::avx2_table();
  if (v == nullptr) return;
  Rng rng(5);
  for (std::size_t n : kSizes) {
    auto p1 = random_vec(rng, n), g = random_vec(rng, n);
    auto m1 = random_vec(rng, n), w1 = random_vec(rng, n);
    for (double& x : w1) x = std::abs(x);
    auto p2 = p1, m2 = m1, w2 = w1;
    for (int step = 1; step <= 3; ++step) {
      const double bc1 = 1.0 - std::pow(0.9, step), bc2 = 1.0 - std::pow(0.999, step);
      k::scalar_table().adam(p1.data(), g.data(), m1.data(), w1.data(), n, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
      v->adam(p2.data(), g.data(), m2.data(), w2.data(), n, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
    }
    CHECK(p1 == p2);
    CHECK(m1 == m2);
    CHECK(w1 == w2);
  }
}

TEST_CASE("isa selection") {
  const k::Isa before = k::active().isa;
  k::set_active_isa(k::Isa::Scalar);
  CHECK(k::active().isa == k::Isa::Scalar);
  CHECK(k::parse_isa("scalar") == k::Isa::Scalar);
  CHECK(k::parse_isa("avx2") == k::Isa::Avx2);
  CHECK_THROWS(k::parse_isa("neon"));
  if (k::cpu_has_avx2()) {
    k::set_active_isa(k::Isa::Avx2);
    CHECK(k::active().isa == k::Isa::Avx2);
  } else {
    CHECK_THROWS(k::set_active_isa(k::Isa::Avx2));
  }
  k::set_active_isa(before);
}
