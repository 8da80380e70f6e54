#include "glmnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "glmnet/errors.hpp"

namespace glmnet {

namespace {

constexpr int kDescriptorDims = 6;
constexpr int kGeometryNeighbors = 3;
// Fixed seed of the descriptor-lifting projection: the same lift for every
// sample and dataset, so features are comparable across files.
constexpr std::uint64_t kProjectionSeed = 0x67D5A1E7C3B2F981ull;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// (position, offset from centroid, centroid distance, mean distance to the
/// nearest neighbors): raw position plus a few relation-bearing channels.
std::vector<double> descriptors(const std::vector<Point>& pts) {
  const std::size_t n = pts.size();
  double cx = 0.0, cy = 0.0;
  for (const Point& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);

  std::vector<double> out(n * kDescriptorDims, 0.0);
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; ++i) {
    dists.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dists.push_back(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    }
    std::sort(dists.begin(), dists.end());
    const std::size_t take =
        std::min<std::size_t>(kGeometryNeighbors, dists.size());
    double near = 0.0;
    for (std::size_t k = 0; k < take; ++k) near += dists[k];
    if (take > 0) near /= static_cast<double>(take);

    double* d = &out[i * kDescriptorDims];
    d[0] = pts[i].x;
    d[1] = pts[i].y;
    d[2] = pts[i].x - cx;
    d[3] = pts[i].y - cy;
    d[4] = std::hypot(d[2], d[3]);
    d[5] = near;
  }
  return out;
}

Tensor project_descriptors(const std::vector<double>& desc, Index count,
                           Index feat_dim) {
  std::mt19937_64 proj_rng(kProjectionSeed);
  std::vector<double> projection(
      static_cast<std::size_t>(feat_dim * kDescriptorDims));
  // Scaled so feature entries land near unit magnitude; the configured
  // noise_sigma then acts as a roughly relative perturbation.
  const double scale = 2.0 / std::sqrt(static_cast<double>(kDescriptorDims));
  for (double& w : projection) w = gaussian(proj_rng) * scale;

  Tensor feats(count, feat_dim);
  auto& f = feats.mutable_values();
  for (Index i = 0; i < count; ++i) {
    for (Index k = 0; k < feat_dim; ++k) {
      double acc = 0.0;
      for (int d = 0; d < kDescriptorDims; ++d) {
        acc += projection[k * kDescriptorDims + d] *
               desc[i * kDescriptorDims + d];
      }
      f[i * feat_dim + k] = acc;
    }
  }
  return feats;
}

Tensor knn_support(const Tensor& feats, int k) {
  const Index n = feats.rows();
  Tensor support(n, n);
  auto& s = support.mutable_values();
  std::vector<std::pair<double, Index>> order;
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double dist = 0.0;
      for (Index d = 0; d < feats.cols(); ++d) {
        const double diff = feats(i, d) - feats(j, d);
        dist += diff * diff;
      }
      order.emplace_back(dist, j);
    }
    std::sort(order.begin(), order.end());
    s[i * n + i] = 1.0;  // forced self-loop keeps every row valid
    for (int t = 0; t < k; ++t) s[i * n + order[t].second] = 1.0;
  }
  return support;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_inliers < 1) throw ContractError("need at least one inlier");
  if (n_outliers < 0) throw ContractError("outlier count must be nonnegative");
  if (noise_sigma < 0.0) throw ContractError("noise sigma must be nonnegative");
  if (feat_dim < 1) throw ContractError("feature dimension must be positive");
  const int nodes = n_inliers + n_outliers;
  if (knn_k < 0 || knn_k >= nodes) {
    throw ContractError("knn_k must lie in [0, node count); got " +
                        std::to_string(knn_k) + " for " +
                        std::to_string(nodes) + " nodes");
  }
  if (!(deform.scale_low > 0.0) || deform.scale_low > deform.scale_high) {
    throw ContractError("deform scale range must satisfy 0 < low <= high");
  }
  if (deform.rotation < 0.0 || deform.translation < 0.0 ||
      deform.jitter < 0.0) {
    throw ContractError("deform ranges must be nonnegative");
  }
}

GraphPair generate_pair(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int n_in = config.n_inliers;
  const int nodes = n_in + config.n_outliers;

  std::vector<Point> left;
  left.reserve(nodes);
  for (int i = 0; i < n_in; ++i) {
    left.push_back({unit_uniform(rng), unit_uniform(rng)});
  }

  const double angle =
      uniform_in(rng, -config.deform.rotation, config.deform.rotation);
  const double scale =
      uniform_in(rng, config.deform.scale_low, config.deform.scale_high);
  const double tx =
      uniform_in(rng, -config.deform.translation, config.deform.translation);
  const double ty =
      uniform_in(rng, -config.deform.translation, config.deform.translation);
  const double ca = std::cos(angle) * scale;
  const double sa = std::sin(angle) * scale;

  // Right side starts as the deformed inliers, in the same (canonical)
  // order; the scramble is applied to feature rows at the end.
  std::vector<Point> right;
  right.reserve(nodes);
  for (int i = 0; i < n_in; ++i) {
    Point q{ca * left[i].x - sa * left[i].y + tx,
            sa * left[i].x + ca * left[i].y + ty};
    if (config.deform.jitter > 0.0) {
      q.x += config.deform.jitter * gaussian(rng);
      q.y += config.deform.jitter * gaussian(rng);
    }
    right.push_back(q);
  }
  for (int i = 0; i < config.n_outliers; ++i) {
    left.push_back({unit_uniform(rng), unit_uniform(rng)});
  }
  for (int i = 0; i < config.n_outliers; ++i) {
    right.push_back({unit_uniform(rng), unit_uniform(rng)});
  }

  Tensor x_feats =
      project_descriptors(descriptors(left), nodes, config.feat_dim);
  Tensor y_canonical =
      project_descriptors(descriptors(right), nodes, config.feat_dim);
  if (config.noise_sigma > 0.0) {
    auto& v = y_canonical.mutable_values();
    for (double& e : v) e += config.noise_sigma * gaussian(rng);
  }

  // Scramble the right side; truth sends inlier i to its new position.
  std::vector<Index> position(static_cast<std::size_t>(nodes));
  std::iota(position.begin(), position.end(), Index{0});
  for (int i = nodes - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(position[i], position[j]);
  }
  Tensor y_feats(nodes, config.feat_dim);
  {
    auto& dst = y_feats.mutable_values();
    const auto& src = y_canonical.values();
    for (int i = 0; i < nodes; ++i) {
      std::copy_n(&src[i * config.feat_dim], config.feat_dim,
                  &dst[position[i] * config.feat_dim]);
    }
  }

  Tensor perm(nodes, nodes);
  for (int i = 0; i < n_in; ++i) perm.at(i, position[i]) = 1.0;

  GraphPair pair;
  pair.x_feats = std::move(x_feats);
  pair.y_feats = std::move(y_feats);
  if (config.knn_k > 0) {
    pair.support_x = knn_support(pair.x_feats, config.knn_k);
    pair.support_y = knn_support(pair.y_feats, config.knn_k);
  }
  pair.truth = GroundTruth::from_matrix(std::move(perm));
  pair.seed = config.seed;
  return pair;
}

std::uint64_t derive_sample_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base ^ (0x9E3779B97F4A7C15ull * (index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::pair<std::vector<GraphPair>, std::vector<GraphPair>> batch_split(
    std::vector<GraphPair> data, double train_fraction, std::uint64_t seed) {
  if (data.empty()) throw ContractError("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("train fraction must lie in (0,1)");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = data.size() - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(data[i], data[j]);
  }
  const auto cut = static_cast<std::size_t>(
      train_fraction * static_cast<double>(data.size()));
  std::vector<GraphPair> train(data.begin(), data.begin() + cut);
  std::vector<GraphPair> test(data.begin() + cut, data.end());
  return {std::move(train), std::move(test)};
}

double nearest_neighbor_accuracy(const GraphPair& pair) {
  const Index m = pair.x_feats.rows(), n = pair.y_feats.rows();
  const Index p = pair.x_feats.cols();
  MatchPrediction pred;
  pred.hard.assign(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      double dist = 0.0;
      for (Index d = 0; d < p; ++d) {
        const double diff = pair.x_feats(i, d) - pair.y_feats(j, d);
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        pred.hard[i] = j;
      }
    }
  }
  return matching_accuracy(pred, pair.truth);
}

}  // namespace glmnet
