#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "glmnet/layers.hpp"
#include "glmnet/param_store.hpp"
#include "glmnet/synth.hpp"

namespace glmnet {

struct TrainConfig {
  double gamma = 0.5;         // smoothing mix
  double gamma_sharp = 0.75;  // sharpening strength
  double lambda = 0.1;        // constraint-loss weight
  double delta = 0.0;         // cross-graph temperature; 0 -> sqrt(d1)
  double delta_p = 0.0;       // affinity temperature; 0 -> sqrt(d3)
  std::array<Index, 3> widths{64, 64, 64};
  int sinkhorn_iters = 20;
  double learn_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 200;
  int batch_size = 1;
  std::uint64_t seed = 0;
  bool use_graph_learning = true;  // off: adjacency = row-normalized support
  bool use_sharpening = true;      // off: second smoothing layer instead
  bool use_constraint_loss = true; // off: lambda treated as 0
  bool share_edge_score = true;
  double grad_clip_norm = 10.0;
  double clamp_eps = 1e-7;
  double adam_eps = 1e-8;

  void validate() const;
  ModelConfig model_config(Index input_dim) const;
  double affinity_temperature() const;
  double effective_lambda() const {
    return use_constraint_loss ? lambda : 0.0;
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based, continues across resumed runs
  double mean_loss_sol = 0.0;
  double mean_loss_con = 0.0;
  double mean_loss_total = 0.0;
  double train_accuracy = 0.0;
};

/// Everything a run carries between epochs; what checkpoints persist.
struct TrainState {
  TrainConfig config;
  Index input_dim = 0;
  ParamStore params;
  std::int64_t adam_step = 0;
  int epochs_completed = 0;
  std::vector<EpochStats> history;
};

/// Fresh parameters for the configured model at the given feature width.
TrainState init_training(const TrainConfig& config, Index input_dim);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Runs `epochs` epochs of per-sample (or small-batch) updates:
/// forward -> Sinkhorn -> loss -> backward -> clipped adaptive-moment step.
/// Samples are visited in a seeded shuffle of their id order, so the result
/// does not depend on how the list happens to be stored. Deterministic given
/// the config seed. `on_epoch`, when set, observes each epoch's stats.
void train_epochs(TrainState& state, const std::vector<GraphPair>& data,
                  int epochs, const EpochCallback& on_epoch = {});

/// init_training + train_epochs(config.epochs).
TrainState train(const std::vector<GraphPair>& data, const TrainConfig& config);

struct EvalMetrics {
  double accuracy_hungarian = 0.0;
  double accuracy_argmax = 0.0;
  double mean_loss_con = 0.0;
  double mean_loss_sol = 0.0;
  Index sample_count = 0;
};

/// Read-only pass over the data with both discretizations; parameters are
/// not touched.
EvalMetrics evaluate(const std::vector<GraphPair>& data,
                     const ParamStore& params, const TrainConfig& config);

/// Bias-corrected adaptive-moment update of one parameter from its gradient
/// accumulator; `step` is the 1-based update count.
void adam_update(Param& param, double learn_rate, double beta1, double beta2,
                 double eps, std::int64_t step);

}  // namespace glmnet
