#pragma once

#include <map>
#include <string>
#include <vector>

#include "glmnet/tensor.hpp"

namespace glmnet {

/// One trainable matrix: its value, the gradient accumulator backward()
/// writes into, and the optimizer's moment estimates. All four share a shape.
struct Param {
  Tensor value;
  Tensor grad;
  Tensor moment1;
  Tensor moment2;
};

/// Named, shaped collection of trainable parameters. Names are unique and the
/// set is fixed once the model is built; iteration order is the sorted name
/// order, so walks over the store are deterministic.
class ParamStore {
 public:
  Param& create(const std::string& name, Tensor init);

  bool contains(const std::string& name) const;
  Param& entry(const std::string& name);
  const Param& entry(const std::string& name) const;

  std::map<std::string, Param>& entries() { return params_; }
  const std::map<std::string, Param>& entries() const { return params_; }

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }

  /// Explicit reset between optimizer steps; backward() only accumulates.
  void zero_grads();

  /// Total number of scalar entries across all parameters.
  Index scalar_count() const;

 private:
  std::map<std::string, Param> params_;
};

}  // namespace glmnet
