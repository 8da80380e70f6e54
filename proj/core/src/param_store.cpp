#include "glmnet/param_store.hpp"

#include "glmnet/errors.hpp"

namespace glmnet {

Param& ParamStore::create(const std::string& name, Tensor init) {
  if (contains(name)) {
    throw ContractError("parameter '" + name + "' already exists");
  }
  Param p;
  p.grad = Tensor::zeros(init.rows(), init.cols());
  p.moment1 = Tensor::zeros(init.rows(), init.cols());
  p.moment2 = Tensor::zeros(init.rows(), init.cols());
  p.value = std::move(init);
  auto [it, inserted] = params_.emplace(name, std::move(p));
  return it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return params_.count(name) > 0;
}

Param& ParamStore::entry(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ContractError("unknown parameter '" + name + "'");
  }
  return it->second;
}

const Param& ParamStore::entry(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ContractError("unknown parameter '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) {
    auto& g = p.grad.mutable_values();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

Index ParamStore::scalar_count() const {
  Index n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

}  // namespace glmnet
