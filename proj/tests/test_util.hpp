#pragma once

#include <random>

#include "glmnet/tensor.hpp"

namespace glmtest {

inline glmnet::Tensor random_tensor(glmnet::Index rows, glmnet::Index cols,
                                    std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  return glmnet::random_uniform(rows, cols, lo, hi, rng);
}

}  // namespace glmtest
