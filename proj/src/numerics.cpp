#include "realid/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace realid {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

SeededRng SeededRng::derive(std::uint64_t seed, std::uint64_t stream) {
  return SeededRng(splitmix64(splitmix64(seed) + stream));
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = kTwoPi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::size_t SeededRng::uniform_index(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
  std::uint64_t b = bound;
  std::uint64_t x = 0;
  std::uint64_t r = 0;
  do {
    x = next_u64();
    r = x % b;
  } while (x - r > std::numeric_limits<std::uint64_t>::max() - (b - 1));
  return static_cast<std::size_t>(r);
}

Vector rng_gaussian(SeededRng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rng_gaussian: n must be positive");
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.gaussian();
  return out;
}

Vector softmax(const Vector& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  double m = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= sum;
  return out;
}

Vector l2_normalize(const Vector& v, bool* degenerate) {
  double n = norm2(v);
  if (n < kNormEpsilon) {
    if (degenerate) *degenerate = true;
    return v;
  }
  if (degenerate) *degenerate = false;
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vector matvec(const Matrix& m, const Vector& x) {
  if (m.cols != x.size()) throw std::invalid_argument("matvec: size mismatch");
  Vector out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& x) {
  if (m.rows != x.size()) throw std::invalid_argument("matvec_transposed: size mismatch");
  Vector out(m.cols, 0.0);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m(i, j) * x[i];
    out[j] = s;
  }
  return out;
}

void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector central_diff(const std::function<double(const Vector&)>& f,
                    const Vector& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("central_diff: step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    double fp = f(probe);
    probe[i] = x[i] - h;
    double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("central_diff: non-finite evaluation");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double relative_error(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    diff += d * d;
  }
  if (diff == 0.0) return 0.0;
  double denom = std::max({norm2(a), norm2(b), kNormEpsilon});
  return std::sqrt(diff) / denom;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace realid
