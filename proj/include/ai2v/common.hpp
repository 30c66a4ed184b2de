#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ai2v {

/// Dense item index in [0, J).
using ItemId = std::uint32_t;

/// Bad invocation or configuration. The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data. Exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix. Vectors are stored as n x 1 or 1 x n.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.flat()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Small dense kernels over spans or vectors of float/double; accumulation is
// always double.

template <typename A, typename B>
double dot(const A& a, const B& b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename A>
double norm2(const A& a) {
  double acc = 0.0;
  for (auto x : a) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

/// Added to each norm in cosine(); a zero vector has cosine 0 with anything.
inline constexpr double kNormEpsilon = 1e-8;

template <typename A, typename B>
double cosine(const A& a, const B& b) {
  return dot(a, b) / ((norm2(a) + kNormEpsilon) * (norm2(b) + kNormEpsilon));
}

/// y = M x
template <typename T, typename X>
void matvec(const Matrix<T>& m, std::span<const X> x, std::span<double> y) {
  assert(m.cols() == x.size() && m.rows() == y.size());
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
}

/// y += M^T x
template <typename T>
void matvec_transpose_add(const Matrix<T>& m, std::span<const double> x, std::span<double> y) {
  assert(m.rows() == x.size() && m.cols() == y.size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) y[c] += static_cast<double>(row[c]) * xr;
  }
}

/// g += a b^T
template <typename B>
void outer_add(Matrix<double>& g, std::span<const double> a, std::span<const B> b) {
  assert(g.rows() == a.size() && g.cols() == b.size());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    auto row = g.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += ar * static_cast<double>(b[c]);
  }
}

/// Deterministic random stream. Bit-identical across platforms: mt19937_64 is
/// fully specified and the floating/integer conversions below avoid the
/// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a named purpose ("init", "shuffle", ...).
  static Rng stream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; callers write results to per-index slots.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace ai2v
