#ifndef REALID_NUMERICS_HPP_
#define REALID_NUMERICS_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace realid {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Vector row(std::size_t i) const {
    return Vector(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                  data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }
};

/// Deterministic generator: std::mt19937_64 drawing explicit 53-bit uniforms,
/// gaussians via Box-Muller. The full output stream is a function of the seed
/// alone, so runs are reproducible bit for bit (see README for the scheme).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  /// Independent child stream; insulates consumers from each other so that
  /// e.g. toggling bank initialization cannot shift the parameter draws.
  static SeededRng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return gen_(); }
  double uniform();   // [0, 1)
  double gaussian();  // standard normal

  /// Unbiased draw from [0, bound) by rejection.
  std::size_t uniform_index(std::size_t bound);

  /// Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// n standard-normal draws; n must be positive.
Vector rng_gaussian(SeededRng& rng, std::size_t n);

/// Vectors with L2 norm below this are treated as degenerate by
/// l2_normalize and passed through unchanged.
constexpr double kNormEpsilon = 1e-12;

/// Stable softmax (max subtraction). Throws on empty input.
Vector softmax(const Vector& v);

/// Scales v to unit L2 norm. Inputs with norm < kNormEpsilon are returned
/// unchanged and flagged via *degenerate when provided.
Vector l2_normalize(const Vector& v, bool* degenerate = nullptr);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector matvec(const Matrix& m, const Vector& x);             // m * x
Vector matvec_transposed(const Matrix& m, const Vector& x);  // m^T * x
void axpy(double a, const Vector& x, Vector& y);             // y += a * x

/// Central finite differences: component i is (f(x+h e_i) - f(x-h e_i)) / 2h.
/// Throws if f evaluates to a non-finite value.
Vector central_diff(const std::function<double(const Vector&)>& f,
                    const Vector& x, double h);

/// ||a-b|| / max(||a||, ||b||, kNormEpsilon); exactly 0 when a == b.
double relative_error(const Vector& a, const Vector& b);

bool all_finite(const Vector& v);

}  // namespace realid

#endif  // REALID_NUMERICS_HPP_
