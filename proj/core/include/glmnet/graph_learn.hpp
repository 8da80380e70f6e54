#pragma once

#include <optional>

#include "glmnet/autodiff.hpp"
#include "glmnet/tensor.hpp"

namespace glmnet {

/// Weights of the single-layer pairwise scoring network. The vector has
/// twice the per-node feature width: the top half scores the source node,
/// the bottom half the target node.
struct GraphLearnParams {
  Tensor score_weights;  // (2*p) x 1
};

/// Learned adjacency plus the optional fixed support it was restricted to.
struct LearnedGraph {
  Tensor adjacency;                // n x n, rows sum to 1
  std::optional<Tensor> support;   // n x n nonnegative weights
};

/// Pairwise scores relu(w^T [x_i || x_j]) for all (i, j).
///
/// Splitting w = [w1; w2] turns the n^2 concatenations into two matrix-vector
/// products: relu(X*w1 * 1^T + 1 * (X*w2)^T), which is algebraically the
/// per-pair form at O(n*p) cost.
Tensor pairwise_logits(const Tensor& features, const Tensor& score_weights);

/// Row-softmax of the pairwise scores, optionally weighted by a fixed
/// support graph (entries outside the support stay exactly zero).
LearnedGraph learned_adjacency(const Tensor& features,
                               const Tensor& score_weights,
                               const std::optional<Tensor>& support = {});

/// D^-1 * A with D the diagonal of row sums; rows of the result sum to 1.
Tensor row_normalized_laplacian(const Tensor& adjacency);

}  // namespace glmnet
