#include "glmnet/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "glmnet/errors.hpp"

namespace glmnet {

GroundTruth GroundTruth::from_matrix(Tensor perm) {
  const Index m = perm.rows(), n = perm.cols();
  std::vector<int> row_count(static_cast<std::size_t>(m), 0);
  std::vector<int> col_count(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double v = perm(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ContractError("ground-truth entries must be 0 or 1, got " +
                            std::to_string(v) + " at (" + std::to_string(i) +
                            "," + std::to_string(j) + ")");
      }
      if (v == 1.0) {
        if (++row_count[i] > 1) {
          throw ContractError("ground-truth row " + std::to_string(i) +
                              " has more than one match");
        }
        if (++col_count[j] > 1) {
          throw ContractError("ground-truth column " + std::to_string(j) +
                              " has more than one match");
        }
      }
    }
  }
  return GroundTruth{std::move(perm)};
}

Index GroundTruth::match_count() const {
  Index count = 0;
  for (double v : perm.values()) count += v == 1.0 ? 1 : 0;
  return count;
}

Tensor affinity_matrix(const EmbeddingPair& emb, const Tensor& metric,
                       double temperature) {
  if (!(temperature > 0.0)) {
    throw ContractError("affinity temperature must be positive");
  }
  Tensor scores = matmul(matmul(emb.x, metric), transpose(emb.y));
  double top = -std::numeric_limits<double>::infinity();
  for (double v : scores.values()) top = std::max(top, v);
  // Shifted exponents are <= 0; the floor stops exp from underflowing to an
  // exact zero when the score range is extreme, which would break the
  // strict-positivity guarantee Sinkhorn relies on.
  constexpr double kMinExponent = -80.0;
  Tensor shifted = affine(scores, 1.0 / temperature, -top / temperature);
  return exp(clamp(shifted, kMinExponent, 1.0));
}

Tensor sinkhorn(const Tensor& scores, int iterations, double epsilon) {
  if (iterations < 1) {
    throw ContractError("sinkhorn needs at least one iteration");
  }
  for (double v : scores.values()) {
    if (!(v > 0.0)) {
      throw ContractError("sinkhorn input must be strictly positive");
    }
  }
  Tensor c = scores;
  for (int it = 0; it < iterations; ++it) {
    c = div_rowwise(c, affine(row_sums(c), 1.0, epsilon));
    c = div_colwise(c, affine(col_sums(c), 1.0, epsilon));
  }
  // A closing pass makes the smaller side exactly stochastic on rectangular
  // problems; square problems are already balanced to tolerance.
  if (c.rows() < c.cols()) {
    c = div_rowwise(c, affine(row_sums(c), 1.0, epsilon));
  } else if (c.rows() > c.cols()) {
    c = div_colwise(c, affine(col_sums(c), 1.0, epsilon));
  }
  return c;
}

Tensor constraint_loss(const Tensor& assignment) {
  for (double v : assignment.values()) {
    if (v < 0.0) {
      throw ContractError("constraint loss expects a nonnegative assignment");
    }
  }
  const Index m = assignment.rows(), n = assignment.cols();
  Tensor row_grid = matmul(row_sums(assignment), Tensor::full(1, n, 1.0));
  Tensor col_grid = matmul(Tensor::full(m, 1, 1.0), col_sums(assignment));
  Tensor conflict = scalar_mix(1.0, scalar_mix(1.0, row_grid, 1.0, col_grid),
                               -2.0, assignment);
  return sum_all(hadamard(assignment, conflict));
}

double constraint_loss_bruteforce(const Tensor& assignment) {
  const Index m = assignment.rows(), n = assignment.cols();
  const Index total = m * n;
  if (total > 10000) {
    throw ContractError("brute-force conflict oracle limited to m*n <= 10^4");
  }
  // Materialize the conflict indicator: pairs sharing a row xor a column.
  std::vector<std::uint8_t> conflict(
      static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0);
  for (Index a = 0; a < total; ++a) {
    const Index i = a / n, j = a % n;
    for (Index b = 0; b < total; ++b) {
      const Index k = b / n, l = b % n;
      conflict[static_cast<std::size_t>(a) * total + b] =
          ((i == k) != (j == l)) ? 1 : 0;
    }
  }
  const auto& c = assignment.values();
  double loss = 0.0;
  for (Index a = 0; a < total; ++a) {
    for (Index b = 0; b < total; ++b) {
      if (conflict[static_cast<std::size_t>(a) * total + b]) {
        loss += c[a] * c[b];
      }
    }
  }
  return loss;
}

Tensor cross_entropy_loss(const Tensor& assignment, const GroundTruth& truth,
                          double clamp_eps) {
  if (!same_shape(assignment, truth.perm)) {
    throw DimensionError("assignment " + shape_string(assignment) +
                         " does not match ground truth " +
                         shape_string(truth.perm));
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ContractError("cross-entropy clamp must lie in (0, 0.5)");
  }
  // The clamp only keeps the logs finite; its gradient acts as the identity
  // so entries saturated at the boundary still feel corrective pressure.
  Tensor clamped = clamp_passthrough(assignment, clamp_eps, 1.0 - clamp_eps);
  Tensor hit = hadamard(truth.perm, log(clamped));
  Tensor miss = hadamard(affine(truth.perm, -1.0, 1.0),
                         log(affine(clamped, -1.0, 1.0)));
  return affine(sum_all(scalar_mix(1.0, hit, 1.0, miss)), -1.0, 0.0);
}

Tensor total_loss(const Tensor& assignment, const GroundTruth& truth,
                  double constraint_weight, double clamp_eps) {
  if (constraint_weight < 0.0) {
    throw ContractError("constraint weight must be nonnegative");
  }
  return scalar_mix(1.0, cross_entropy_loss(assignment, truth, clamp_eps),
                    constraint_weight, constraint_loss(assignment));
}

namespace {

/// Potential-based Kuhn-Munkres on a cost matrix with rows <= cols;
/// returns the cost-minimizing column for every row.
std::vector<Index> assign_min_cost(const std::vector<double>& cost, Index rows,
                                   Index cols) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<Index> match(cols + 1, 0), way(cols + 1, 0);
  for (Index i = 1; i <= rows; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> min_slack(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      Index j1 = 0;
      double delta = inf;
      for (Index j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(rows), -1);
  for (Index j = 1; j <= cols; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<Index> hungarian_discretize(const Tensor& scores) {
  if (!scores.all_finite()) {
    throw NumericError("hungarian_discretize needs finite scores");
  }
  const Index m = scores.rows(), n = scores.cols();
  if (m <= n) {
    std::vector<double> cost(static_cast<std::size_t>(m * n));
    for (Index k = 0; k < m * n; ++k) cost[k] = -scores.values()[k];
    return assign_min_cost(cost, m, n);
  }
  // More rows than columns: assign on the transpose, then invert.
  std::vector<double> cost(static_cast<std::size_t>(m * n));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) cost[j * m + i] = -scores(i, j);
  std::vector<Index> col_to_row = assign_min_cost(cost, n, m);
  std::vector<Index> row_to_col(static_cast<std::size_t>(m), -1);
  for (Index j = 0; j < n; ++j) {
    if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
  }
  return row_to_col;
}

std::vector<Index> argmax_discretize(const Tensor& scores) {
  std::vector<Index> out(static_cast<std::size_t>(scores.rows()), -1);
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

double matching_accuracy(const MatchPrediction& pred,
                         const GroundTruth& truth) {
  const Index total = truth.match_count();
  if (total == 0) {
    throw ContractError("matching accuracy undefined for empty ground truth");
  }
  if (static_cast<Index>(pred.hard.size()) != truth.rows()) {
    throw DimensionError("prediction covers " +
                         std::to_string(pred.hard.size()) + " rows, truth has " +
                         std::to_string(truth.rows()));
  }
  Index hits = 0;
  for (Index i = 0; i < truth.rows(); ++i) {
    const Index j = pred.hard[i];
    if (j >= 0 && j < truth.cols() && truth.perm(i, j) == 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace glmnet
