#include "glmnet/graph_learn.hpp"

#include <string>

#include "glmnet/errors.hpp"

namespace glmnet {

Tensor pairwise_logits(const Tensor& features, const Tensor& score_weights) {
  const Index n = features.rows();
  const Index p = features.cols();
  if (score_weights.rows() != 2 * p || score_weights.cols() != 1) {
    throw DimensionError("pairwise score weights must be " +
                         std::to_string(2 * p) + "x1 for " +
                         shape_string(features) + " features, got " +
                         shape_string(score_weights));
  }
  Tensor w_src = slice_rows(score_weights, 0, p);
  Tensor w_dst = slice_rows(score_weights, p, 2 * p);
  Tensor src = matmul(features, w_src);  // n x 1
  Tensor dst = matmul(features, w_dst);  // n x 1
  Tensor ones_row = Tensor::full(1, n, 1.0);
  Tensor ones_col = Tensor::full(n, 1, 1.0);
  Tensor grid = scalar_mix(1.0, matmul(src, ones_row), 1.0,
                           matmul(ones_col, transpose(dst)));
  return relu(grid);
}

LearnedGraph learned_adjacency(const Tensor& features,
                               const Tensor& score_weights,
                               const std::optional<Tensor>& support) {
  const Index n = features.rows();
  if (support) {
    if (support->rows() != n || support->cols() != n) {
      throw DimensionError("support must be " + std::to_string(n) + "x" +
                           std::to_string(n) + ", got " +
                           shape_string(*support));
    }
  }
  Tensor logits = pairwise_logits(features, score_weights);
  LearnedGraph graph;
  graph.adjacency = row_softmax(logits, support);
  graph.support = support;
  return graph;
}

Tensor row_normalized_laplacian(const Tensor& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DimensionError("adjacency must be square, got " +
                         shape_string(adjacency));
  }
  for (Index k = 0; k < adjacency.size(); ++k) {
    if (adjacency.values()[k] < 0.0) {
      throw ContractError("adjacency must be nonnegative");
    }
  }
  return div_rowwise(adjacency, row_sums(adjacency));
}

}  // namespace glmnet
