#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "glmnet/autodiff.hpp"
#include "glmnet/graph_learn.hpp"
#include "glmnet/param_store.hpp"
#include "glmnet/tensor.hpp"

namespace glmnet {

/// Node embeddings of the two graphs; widths agree at every layer.
struct EmbeddingPair {
  Tensor x;  // m x d
  Tensor y;  // n x d
};

/// Fixed initial graphs, forwarded unchanged across layers.
struct SupportPair {
  std::optional<Tensor> x;
  std::optional<Tensor> y;
};

/// Parameters of one intra-graph (smoothing or sharpening) layer. The weight
/// matrices are shared across the two graphs; the pairwise scorers are shared
/// as well unless the model was built with separate ones.
struct IntraLayerParams {
  Tensor node_weight;       // d_in x d_out, acts on each node's own embedding
  Tensor prop_weight;       // d_in x d_out, acts on the propagated embedding
  GraphLearnParams score_x;
  GraphLearnParams score_y;
};

/// Parameters of the cross-graph layer.
struct CrossLayerParams {
  Tensor bilinear;  // d x d co-affinity metric, shared by both directions
  Tensor out_x;     // 2d x d_out
  Tensor out_y;     // 2d x d_out
};

struct ModelConfig {
  Index input_dim = 0;
  std::array<Index, 3> widths{64, 64, 64};
  double smooth_mix = 0.5;    // weight of the propagated term, in (0,1)
  double sharpen_mix = 0.75;  // strength of the push away from neighbors, > 0
  // Temperature of the cross-graph co-affinity; 0 resolves to sqrt(d1).
  double cross_temperature = 0.0;
  bool share_edge_score = true;  // one scorer for both graphs per layer
  bool learn_graphs = true;      // off: row-normalized support instead
  bool sharpen_last = true;      // off: second smoothing layer instead

  double resolved_cross_temperature() const;
};

/// All trainable pieces of the three-layer stack plus the final affinity
/// metric, as tensors bound either to a tape (training) or to plain values
/// (evaluation).
struct Model {
  ModelConfig config;
  IntraLayerParams smooth;   // input_dim -> widths[0]
  CrossLayerParams cross;    // widths[0] -> widths[1]
  IntraLayerParams second;   // widths[1] -> widths[2], sharpening by default
  Tensor metric;             // widths[2] x widths[2]
};

/// Creates every parameter of the model in the store. Weight matrices are
/// Glorot-uniform; pairwise scorers start at zero so training begins from
/// uniform adjacencies.
void init_model_params(ParamStore& store, const ModelConfig& config,
                       std::uint64_t seed);

/// Parameter tensors as recorded leaves (gradients flow into the store).
Model bind_model(Tape& tape, ParamStore& store, const ModelConfig& config);

/// Parameter tensors as detached values (evaluation; nothing recorded).
Model model_view(const ParamStore& store, const ModelConfig& config);

/// relu[(1-mix) * E * node_weight + mix * L * E * prop_weight] per graph,
/// where L is the row-normalized Laplacian of that graph's learned adjacency.
EmbeddingPair smoothing_layer(const EmbeddingPair& emb,
                              const IntraLayerParams& params, double mix,
                              const SupportPair& supports = {},
                              bool learn_graphs = true);

/// relu[(1+mix) * E * node_weight - mix * L * E * prop_weight] per graph:
/// the counterpart layer that pushes each node away from its neighbors.
EmbeddingPair sharpening_layer(const EmbeddingPair& emb,
                               const IntraLayerParams& params, double mix,
                               const SupportPair& supports = {},
                               bool learn_graphs = true);

/// Row-stochastic cross-graph attention in both directions. Scores are the
/// bilinear form X*W*Y^T scaled by 1/temperature; each direction applies the
/// shared W to its own row side, so relabeling the two graphs swaps the
/// outputs exactly.
std::pair<Tensor, Tensor> coaffinity(const EmbeddingPair& emb,
                                     const Tensor& bilinear,
                                     double temperature);

/// X' = [C_xy * Y || X] * out_x and symmetrically for Y'; no activation.
EmbeddingPair cross_graph_layer(const EmbeddingPair& emb,
                                const CrossLayerParams& params,
                                double temperature);

/// Smoothing -> cross-graph -> sharpening, with the ablation switches from
/// the model config applied.
EmbeddingPair forward_pipeline(const EmbeddingPair& inputs, const Model& model,
                               const SupportPair& supports = {});

}  // namespace glmnet
