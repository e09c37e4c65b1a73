#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "realid/numerics.hpp"

using namespace realid;

TEST_CASE("matrix storage is row-major with working accessors") {
  Matrix m(2, 3, 1.5);
  CHECK(m.rows == 2);
  CHECK(m.cols == 3);
  CHECK(m(1, 2) == 1.5);
  m(0, 1) = 4.25;
  CHECK(m.data[1] == 4.25);
  Vector r = m.row(0);
  CHECK(r.size() == 3);
  CHECK(r[1] == 4.25);
}

TEST_CASE("softmax of a constant vector is uniform") {
  Vector out = softmax({0.0, 0.0, 0.0, 0.0});
  for (double p : out) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax of [ln 2, 0] gives the 2:1 split") {
  Vector out = softmax({std::log(2.0), 0.0});
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax stays finite and ordered under huge inputs") {
  Vector out = softmax({1000.0, 0.0});
  CHECK(all_finite(out));
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-12));

  SeededRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Vector v(5);
    for (double& x : v) x = (rng.uniform() - 0.5) * 2e6;
    Vector p = softmax(v);
    REQUIRE(all_finite(p));
    double sum = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // order preservation
    std::size_t arg_in = static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
    std::size_t arg_out = static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin());
    CHECK(v[arg_out] == v[arg_in]);
  }
}

TEST_CASE("softmax rejects empty input") {
  CHECK_THROWS_AS(softmax({}), std::invalid_argument);
}

TEST_CASE("l2_normalize handles the 3-4-5 triangle, units, and zeros") {
  Vector n = l2_normalize({3.0, 4.0});
  CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-15));

  Vector unit = {0.0, 1.0};
  Vector same = l2_normalize(unit);
  CHECK(same[0] == 0.0);
  CHECK(same[1] == 1.0);

  bool degenerate = false;
  Vector zero = l2_normalize({0.0, 0.0, 0.0}, &degenerate);
  CHECK(degenerate);
  CHECK(zero == Vector{0.0, 0.0, 0.0});

  degenerate = true;
  l2_normalize({1.0, 2.0}, &degenerate);
  CHECK_FALSE(degenerate);
}

TEST_CASE("l2_normalize is idempotent") {
  SeededRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v = rng_gaussian(rng, 6);
    for (double& x : v) x *= 37.0;
    Vector once = l2_normalize(v);
    Vector twice = l2_normalize(once);
    CHECK(norm2(once) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(relative_error(once, twice) < 1e-12);
  }
}

TEST_CASE("central_diff recovers the derivative of x squared") {
  auto f = [](const Vector& x) { return x[0] * x[0]; };
  Vector g = central_diff(f, {1.0}, 1e-5);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("central_diff of a constant is zero") {
  auto f = [](const Vector&) { return 42.0; };
  Vector g = central_diff(f, {1.0, -2.0, 3.0}, 1e-5);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("central_diff rejects bad steps and non-finite evaluations") {
  auto f = [](const Vector& x) { return x[0]; };
  CHECK_THROWS_AS(central_diff(f, {1.0}, 0.0), std::invalid_argument);
  auto bad = [](const Vector&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(central_diff(bad, {1.0}, 1e-5), std::runtime_error);
}

TEST_CASE("identical seeds reproduce the full generator stream") {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  SeededRng c = SeededRng::derive(7, 3);
  SeededRng d = SeededRng::derive(7, 3);
  for (int i = 0; i < 16; ++i) CHECK(c.gaussian() == d.gaussian());
}

TEST_CASE("derived streams with different ids diverge") {
  SeededRng a = SeededRng::derive(7, 0);
  SeededRng b = SeededRng::derive(7, 1);
  bool differs = false;
  for (int i = 0; i < 4; ++i) differs |= a.next_u64() != b.next_u64();
  CHECK(differs);
}

TEST_CASE("uniform draws live in the half-open unit interval") {
  SeededRng rng(5);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng_gaussian rejects zero count and matches normal moments") {
  SeededRng rng(123);
  CHECK_THROWS_AS(rng_gaussian(rng, 0), std::invalid_argument);

  const std::size_t n = 100000;
  Vector draws = rng_gaussian(rng, n);
  double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double x : draws) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("uniform_index stays in bounds and covers the range") {
  SeededRng rng(9);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::size_t v = rng.uniform_index(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  SeededRng a(17);
  SeededRng b(17);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::sort(w.begin(), w.end());
  std::vector<int> sorted(20);
  std::iota(sorted.begin(), sorted.end(), 0);
  CHECK(w == sorted);
}

TEST_CASE("dot, norm2 and axpy do the expected algebra") {
  CHECK(dot({1.0, 2.0, 3.0}, {4.0, -5.0, 6.0}) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(norm2({3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));
  Vector y = {1.0, 1.0};
  axpy(2.0, {3.0, -1.0}, y);
  CHECK(y[0] == 7.0);
  CHECK(y[1] == -1.0);
  CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(axpy(1.0, {1.0}, y), std::invalid_argument);
}

TEST_CASE("matvec and its transpose agree with hand products") {
  Matrix m(2, 3);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(0, 2) = 3.0;
  m(1, 0) = 4.0;
  m(1, 1) = 5.0;
  m(1, 2) = 6.0;
  Vector mx = matvec(m, {1.0, 0.0, -1.0});
  CHECK(mx[0] == -2.0);
  CHECK(mx[1] == -2.0);
  Vector mtx = matvec_transposed(m, {1.0, 1.0});
  CHECK(mtx[0] == 5.0);
  CHECK(mtx[1] == 7.0);
  CHECK(mtx[2] == 9.0);
  CHECK_THROWS_AS(matvec(m, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(matvec_transposed(m, {1.0}), std::invalid_argument);
}

TEST_CASE("relative_error is zero on equality and scales by the larger norm") {
  CHECK(relative_error({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(relative_error({1.0, 0.0}, {0.0, 1.0}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(relative_error({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("all_finite flags NaN and infinity") {
  CHECK(all_finite({1.0, -2.0, 0.0}));
  CHECK_FALSE(all_finite({1.0, std::nan("")}));
  CHECK_FALSE(all_finite({std::numeric_limits<double>::infinity()}));
}
