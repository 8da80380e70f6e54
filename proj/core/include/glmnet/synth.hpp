#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "glmnet/match.hpp"
#include "glmnet/tensor.hpp"

namespace glmnet {

/// Ranges of the random 2-D deformation applied to the second point set.
/// identity() disables all of it, which makes the two sides exact copies.
struct DeformRange {
  double rotation = 0.15;     // radians, drawn uniformly in +-rotation
  double scale_low = 0.95;
  double scale_high = 1.05;
  double translation = 0.05;  // per axis, uniform in +-translation
  double jitter = 0.003;      // gaussian noise on deformed positions

  static DeformRange identity() { return {0.0, 1.0, 1.0, 0.0, 0.0}; }
};

struct SynthConfig {
  int n_inliers = 10;
  int n_outliers = 0;         // per side
  double noise_sigma = 0.0;   // feature-space gaussian std, side two only
  DeformRange deform;
  int knn_k = 5;              // neighbors of the initial support graphs
  Index feat_dim = 16;        // descriptor projection width p
  std::uint64_t seed = 0;

  void validate() const;
};

/// One matching problem: two feature matrices, optional initial graphs, and
/// the ground-truth correspondence.
struct GraphPair {
  Tensor x_feats;  // m x p
  Tensor y_feats;  // n x p
  std::optional<Tensor> support_x;  // m x m, positive diagonal
  std::optional<Tensor> support_y;  // n x n, positive diagonal
  GroundTruth truth;
  std::uint64_t sample_id = 0;
  std::uint64_t seed = 0;
};

/// Samples inlier keypoints in the unit square, deforms a copy for the
/// second side, appends independent outliers per side, lifts (position,
/// local geometry) descriptors through a fixed random projection, perturbs
/// side two by noise_sigma, scrambles side two by a random permutation and
/// records it as the ground truth. Supports are feature-space k-NN graphs
/// with forced self-loops. Deterministic given the seed.
GraphPair generate_pair(const SynthConfig& config);

/// Seed for sample `index` of a batch rooted at `base`; generation is
/// independent per sample so batches can be produced in parallel.
std::uint64_t derive_sample_seed(std::uint64_t base, std::uint64_t index);

/// Seeded shuffle followed by a split at floor(fraction * size); the two
/// halves are disjoint and exhaustive.
std::pair<std::vector<GraphPair>, std::vector<GraphPair>> batch_split(
    std::vector<GraphPair> data, double train_fraction, std::uint64_t seed);

/// Accuracy of matching each left node to its nearest right node in raw
/// feature space; the baseline trained models are compared against.
double nearest_neighbor_accuracy(const GraphPair& pair);

}  // namespace glmnet
