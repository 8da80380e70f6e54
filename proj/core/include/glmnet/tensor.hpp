#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <random>
#include <vector>

namespace glmnet {

using Index = std::int64_t;

class Tape;
struct Param;

/// Dense row-major 2-D array of doubles.
///
/// A Tensor is either *detached* (a plain immutable-by-default value, freely
/// shared across threads) or *recorded* (the output of an op on a Tape, in
/// which case it also carries the node handle the backward pass uses).
/// Recorded tensors are immutable; detached tensors may be edited through
/// at() / mutable_values(), which copy-on-write so recorded aliases of the
/// same buffer stay intact.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Index rows, Index cols);
  Tensor(Index rows, Index cols, std::vector<double> values);
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor zeros(Index rows, Index cols) { return Tensor(rows, cols); }
  static Tensor full(Index rows, Index cols, double value);
  static Tensor identity(Index n);
  static Tensor scalar(double value) { return full(1, 1, value); }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }

  double operator()(Index i, Index j) const { return (*data_)[i * cols_ + j]; }
  double& at(Index i, Index j);

  const std::vector<double>& values() const { return *data_; }
  std::vector<double>& mutable_values();

  bool recorded() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::int32_t node() const { return node_; }

  /// Value copy with no record attached.
  Tensor detached() const;

  bool all_finite() const;

 private:
  friend class Tape;

  Index rows_ = 0;
  Index cols_ = 0;
  std::shared_ptr<std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::int32_t node_ = -1;
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

std::string shape_string(const Tensor& t);

/// Largest elementwise |a - b|; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Uniform double in [0, 1) built from the raw generator output, so results
/// do not depend on the standard library's distribution internals.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

/// Standard normal via Box-Muller on two raw uniforms (deterministic).
double gaussian(std::mt19937_64& rng);

Tensor random_uniform(Index rows, Index cols, double lo, double hi,
                      std::mt19937_64& rng);

}  // namespace glmnet
