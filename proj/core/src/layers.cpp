#include "glmnet/layers.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "glmnet/errors.hpp"

namespace glmnet {

namespace {

Tensor glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return random_uniform(fan_in, fan_out, -bound, bound, rng);
}

/// Row-stochastic propagation operator for one graph: the row-normalized
/// Laplacian of the learned adjacency, or of the fixed support when graph
/// learning is ablated (a missing support degrades to the complete graph).
Tensor propagation_operator(const Tensor& emb, const GraphLearnParams& scorer,
                            const std::optional<Tensor>& support,
                            bool learn_graphs) {
  if (learn_graphs) {
    LearnedGraph graph = learned_adjacency(emb, scorer.score_weights, support);
    return row_normalized_laplacian(graph.adjacency);
  }
  const Tensor fixed =
      support ? *support : Tensor::full(emb.rows(), emb.rows(), 1.0);
  return row_normalized_laplacian(fixed);
}

Tensor intra_graph(const Tensor& emb, const Tensor& node_weight,
                   const Tensor& prop_weight, const GraphLearnParams& scorer,
                   double self_coeff, double prop_coeff,
                   const std::optional<Tensor>& support, bool learn_graphs) {
  Tensor op = propagation_operator(emb, scorer, support, learn_graphs);
  Tensor self_term = matmul(emb, node_weight);
  Tensor prop_term = matmul(op, matmul(emb, prop_weight));
  return relu(scalar_mix(self_coeff, self_term, prop_coeff, prop_term));
}

}  // namespace

double ModelConfig::resolved_cross_temperature() const {
  return cross_temperature > 0.0 ? cross_temperature
                                 : std::sqrt(static_cast<double>(widths[0]));
}

void init_model_params(ParamStore& store, const ModelConfig& config,
                       std::uint64_t seed) {
  const Index p = config.input_dim;
  const Index d1 = config.widths[0];
  const Index d2 = config.widths[1];
  const Index d3 = config.widths[2];
  if (p < 1 || d1 < 1 || d2 < 1 || d3 < 1) {
    throw ContractError("model widths must be positive");
  }

  std::mt19937_64 rng(seed);
  auto scorer_names = [&](const char* layer) {
    std::vector<std::string> names;
    if (config.share_edge_score) {
      names.push_back(std::string(layer) + ".edge_score");
    } else {
      names.push_back(std::string(layer) + ".edge_score_x");
      names.push_back(std::string(layer) + ".edge_score_y");
    }
    return names;
  };
  // Scorers start small but nonzero: at exactly zero every pairwise score
  // sits on the relu kink, whose subgradient is zero, and the scorer could
  // never move. Small weights still give a near-uniform initial adjacency.
  constexpr double kScorerInit = 0.05;

  store.create("smooth.node_weight", glorot_uniform(p, d1, rng));
  store.create("smooth.prop_weight", glorot_uniform(p, d1, rng));
  for (const auto& name : scorer_names("smooth")) {
    store.create(name,
                 random_uniform(2 * p, 1, -kScorerInit, kScorerInit, rng));
  }
  store.create("cross.bilinear", glorot_uniform(d1, d1, rng));
  store.create("cross.out_x", glorot_uniform(2 * d1, d2, rng));
  store.create("cross.out_y", glorot_uniform(2 * d1, d2, rng));
  store.create("second.node_weight", glorot_uniform(d2, d3, rng));
  store.create("second.prop_weight", glorot_uniform(d2, d3, rng));
  for (const auto& name : scorer_names("second")) {
    store.create(name,
                 random_uniform(2 * d2, 1, -kScorerInit, kScorerInit, rng));
  }
  store.create("head.metric", glorot_uniform(d3, d3, rng));
}

namespace {

Model assemble_model(const ModelConfig& config,
                     const std::function<Tensor(const std::string&)>& get) {
  Model model;
  model.config = config;
  model.smooth.node_weight = get("smooth.node_weight");
  model.smooth.prop_weight = get("smooth.prop_weight");
  if (config.share_edge_score) {
    Tensor shared = get("smooth.edge_score");
    model.smooth.score_x = {shared};
    model.smooth.score_y = {shared};
  } else {
    model.smooth.score_x = {get("smooth.edge_score_x")};
    model.smooth.score_y = {get("smooth.edge_score_y")};
  }
  model.cross.bilinear = get("cross.bilinear");
  model.cross.out_x = get("cross.out_x");
  model.cross.out_y = get("cross.out_y");
  model.second.node_weight = get("second.node_weight");
  model.second.prop_weight = get("second.prop_weight");
  if (config.share_edge_score) {
    Tensor shared = get("second.edge_score");
    model.second.score_x = {shared};
    model.second.score_y = {shared};
  } else {
    model.second.score_x = {get("second.edge_score_x")};
    model.second.score_y = {get("second.edge_score_y")};
  }
  model.metric = get("head.metric");
  return model;
}

}  // namespace

Model bind_model(Tape& tape, ParamStore& store, const ModelConfig& config) {
  return assemble_model(
      config, [&](const std::string& name) { return tape.param(store, name); });
}

Model model_view(const ParamStore& store, const ModelConfig& config) {
  return assemble_model(config, [&](const std::string& name) {
    return store.entry(name).value;
  });
}

EmbeddingPair smoothing_layer(const EmbeddingPair& emb,
                              const IntraLayerParams& params, double mix,
                              const SupportPair& supports, bool learn_graphs) {
  if (!(mix > 0.0 && mix < 1.0)) {
    throw ContractError("smoothing mix must lie in (0,1)");
  }
  return {intra_graph(emb.x, params.node_weight, params.prop_weight,
                      params.score_x, 1.0 - mix, mix, supports.x,
                      learn_graphs),
          intra_graph(emb.y, params.node_weight, params.prop_weight,
                      params.score_y, 1.0 - mix, mix, supports.y,
                      learn_graphs)};
}

EmbeddingPair sharpening_layer(const EmbeddingPair& emb,
                               const IntraLayerParams& params, double mix,
                               const SupportPair& supports, bool learn_graphs) {
  if (!(mix > 0.0)) {
    throw ContractError("sharpening mix must be positive");
  }
  return {intra_graph(emb.x, params.node_weight, params.prop_weight,
                      params.score_x, 1.0 + mix, -mix, supports.x,
                      learn_graphs),
          intra_graph(emb.y, params.node_weight, params.prop_weight,
                      params.score_y, 1.0 + mix, -mix, supports.y,
                      learn_graphs)};
}

std::pair<Tensor, Tensor> coaffinity(const EmbeddingPair& emb,
                                     const Tensor& bilinear,
                                     double temperature) {
  if (!(temperature > 0.0)) {
    throw ContractError("co-affinity temperature must be positive");
  }
  if (emb.x.cols() != emb.y.cols()) {
    throw DimensionError("embedding widths differ: " + shape_string(emb.x) +
                         " vs " + shape_string(emb.y));
  }
  const double inv = 1.0 / temperature;
  Tensor xy = row_softmax(
      affine(matmul(matmul(emb.x, bilinear), transpose(emb.y)), inv, 0.0));
  Tensor yx = row_softmax(
      affine(matmul(matmul(emb.y, bilinear), transpose(emb.x)), inv, 0.0));
  return {xy, yx};
}

EmbeddingPair cross_graph_layer(const EmbeddingPair& emb,
                                const CrossLayerParams& params,
                                double temperature) {
  auto [xy, yx] = coaffinity(emb, params.bilinear, temperature);
  Tensor x_out = matmul(concat_cols(matmul(xy, emb.y), emb.x), params.out_x);
  Tensor y_out = matmul(concat_cols(matmul(yx, emb.x), emb.y), params.out_y);
  return {x_out, y_out};
}

EmbeddingPair forward_pipeline(const EmbeddingPair& inputs, const Model& model,
                               const SupportPair& supports) {
  const ModelConfig& cfg = model.config;
  if (inputs.x.cols() != cfg.input_dim || inputs.y.cols() != cfg.input_dim) {
    throw DimensionError(
        "pipeline inputs must have width " + std::to_string(cfg.input_dim) +
        ", got " + shape_string(inputs.x) + " and " + shape_string(inputs.y));
  }
  EmbeddingPair h = smoothing_layer(inputs, model.smooth, cfg.smooth_mix,
                                    supports, cfg.learn_graphs);
  h = cross_graph_layer(h, model.cross, cfg.resolved_cross_temperature());
  if (cfg.sharpen_last) {
    h = sharpening_layer(h, model.second, cfg.sharpen_mix, supports,
                         cfg.learn_graphs);
  } else {
    h = smoothing_layer(h, model.second, cfg.smooth_mix, supports,
                        cfg.learn_graphs);
  }
  return h;
}

}  // namespace glmnet
