#include "glmnet/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "glmnet/errors.hpp"

namespace glmnet {

Tensor::Tensor(Index rows, Index cols)
    : rows_(rows),
      cols_(cols),
      data_(std::make_shared<std::vector<double>>(
          static_cast<std::size_t>(rows * cols), 0.0)) {
  if (rows < 0 || cols < 0) {
    throw DimensionError("tensor dimensions must be nonnegative, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Tensor::Tensor(Index rows, Index cols, std::vector<double> values)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0 ||
      values.size() != static_cast<std::size_t>(rows * cols)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not fill a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " tensor");
  }
  data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<Index>(rows.size());
  cols_ = rows_ > 0 ? static_cast<Index>(rows.begin()->size()) : 0;
  auto data = std::make_shared<std::vector<double>>();
  data->reserve(static_cast<std::size_t>(rows_ * cols_));
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != cols_) {
      throw DimensionError("ragged initializer: row of width " +
                           std::to_string(row.size()) + " in a " +
                           std::to_string(cols_) + "-wide tensor");
    }
    data->insert(data->end(), row.begin(), row.end());
  }
  data_ = std::move(data);
}

Tensor Tensor::full(Index rows, Index cols, double value) {
  Tensor t(rows, cols);
  for (double& x : *t.data_) x = value;
  return t;
}

Tensor Tensor::identity(Index n) {
  Tensor t(n, n);
  for (Index i = 0; i < n; ++i) (*t.data_)[i * n + i] = 1.0;
  return t;
}

double& Tensor::at(Index i, Index j) {
  if (recorded()) {
    throw ContractError("recorded tensors are immutable; use detached()");
  }
  if (data_.use_count() > 1) {
    data_ = std::make_shared<std::vector<double>>(*data_);
  }
  return (*data_)[i * cols_ + j];
}

std::vector<double>& Tensor::mutable_values() {
  if (recorded()) {
    throw ContractError("recorded tensors are immutable; use detached()");
  }
  if (data_.use_count() > 1) {
    data_ = std::make_shared<std::vector<double>>(*data_);
  }
  return *data_;
}

Tensor Tensor::detached() const {
  Tensor t;
  t.rows_ = rows_;
  t.cols_ = cols_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : *data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string shape_string(const Tensor& t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) {
    throw DimensionError("max_abs_diff shapes differ: " + shape_string(a) +
                         " vs " + shape_string(b));
  }
  double worst = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
  }
  return worst;
}

double gaussian(std::mt19937_64& rng) {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - unit_uniform(rng);
  double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Tensor random_uniform(Index rows, Index cols, double lo, double hi,
                      std::mt19937_64& rng) {
  Tensor t(rows, cols);
  for (double& x : t.mutable_values()) x = uniform_in(rng, lo, hi);
  return t;
}

}  // namespace glmnet
