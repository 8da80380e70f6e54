#pragma once

#include <vector>

#include "glmnet/autodiff.hpp"
#include "glmnet/layers.hpp"
#include "glmnet/tensor.hpp"

namespace glmnet {

/// Full or partial permutation matrix with {0,1} entries; at most one 1 per
/// row and per column. Rows/columns of unmatched (outlier) nodes are zero.
struct GroundTruth {
  Tensor perm;  // m x n

  /// Validates the {0,1} entries and the one-to-one constraint.
  static GroundTruth from_matrix(Tensor perm);

  Index match_count() const;
  Index rows() const { return perm.rows(); }
  Index cols() const { return perm.cols(); }
};

/// Soft assignment (Sinkhorn output) and its hard discretization; hard[i] is
/// the column matched to row i, or -1 for unmatched rows.
struct MatchPrediction {
  Tensor soft;
  std::vector<Index> hard;
};

/// exp((X * M * Y^T) / temperature) with a global max subtracted inside the
/// exponent. The subtraction rescales all entries by one positive constant,
/// which the first Sinkhorn normalization removes, so downstream gradients
/// are unaffected; it only keeps the exponential in range.
Tensor affinity_matrix(const EmbeddingPair& emb, const Tensor& metric,
                       double temperature);

/// Alternating row then column normalization, `iterations` times, with
/// `epsilon` added to each divisor. Rectangular inputs get one extra closing
/// pass (row pass for m < n, column pass for m > n) so the smaller side is
/// exactly stochastic. Input entries must be strictly positive.
Tensor sinkhorn(const Tensor& scores, int iterations = 20,
                double epsilon = 1e-12);

/// Sum over conflicting assignment pairs (same row or same column), in the
/// O(mn) closed form sum_ij C_ij * (R_i + S_j - 2*C_ij). Zero exactly on
/// partial permutation matrices.
Tensor constraint_loss(const Tensor& assignment);

/// Literal quadratic form over the materialized conflict indicator; the
/// O(m^2 n^2) reference the closed form is tested against. Guarded to
/// m*n <= 10^4.
double constraint_loss_bruteforce(const Tensor& assignment);

/// -sum_ij [P_ij log C_ij + (1-P_ij) log(1-C_ij)], entries clamped to
/// [clamp_eps, 1-clamp_eps] before the logs, summed (not averaged).
Tensor cross_entropy_loss(const Tensor& assignment, const GroundTruth& truth,
                          double clamp_eps = 1e-7);

/// cross_entropy_loss + constraint_weight * constraint_loss.
Tensor total_loss(const Tensor& assignment, const GroundTruth& truth,
                  double constraint_weight, double clamp_eps = 1e-7);

/// Maximum-total-score one-to-one assignment of min(m,n) pairs
/// (Kuhn-Munkres). Evaluation-time only; not differentiable.
std::vector<Index> hungarian_discretize(const Tensor& scores);

/// Row-argmax discretization; may assign one column to several rows.
std::vector<Index> argmax_discretize(const Tensor& scores);

/// Fraction of ground-truth pairs recovered by the hard assignment.
double matching_accuracy(const MatchPrediction& pred, const GroundTruth& truth);

}  // namespace glmnet
