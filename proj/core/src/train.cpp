#include "glmnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "glmnet/errors.hpp"
#include "glmnet/match.hpp"

namespace glmnet {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ContractError("gamma must lie in (0,1)");
  }
  if (!(gamma_sharp > 0.0)) throw ContractError("gamma_sharp must be positive");
  if (lambda < 0.0) throw ContractError("lambda must be nonnegative");
  if (delta < 0.0 || delta_p < 0.0) {
    throw ContractError("temperatures must be nonnegative (0 = default)");
  }
  for (Index w : widths) {
    if (w < 1) throw ContractError("layer widths must be positive");
  }
  if (sinkhorn_iters < 1) throw ContractError("need at least 1 Sinkhorn pass");
  if (!(learn_rate > 0.0)) throw ContractError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("moment decays must lie in [0,1)");
  }
  if (epochs < 0) throw ContractError("epochs must be nonnegative");
  if (batch_size < 1) throw ContractError("batch size must be positive");
  if (grad_clip_norm < 0.0) {
    throw ContractError("gradient clip must be nonnegative (0 = off)");
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ContractError("clamp_eps must lie in (0, 0.5)");
  }
}

ModelConfig TrainConfig::model_config(Index input_dim) const {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.widths = widths;
  mc.smooth_mix = gamma;
  mc.sharpen_mix = gamma_sharp;
  mc.cross_temperature = delta;
  mc.share_edge_score = share_edge_score;
  mc.learn_graphs = use_graph_learning;
  mc.sharpen_last = use_sharpening;
  return mc;
}

double TrainConfig::affinity_temperature() const {
  return delta_p > 0.0 ? delta_p : std::sqrt(static_cast<double>(widths[2]));
}

namespace {

struct SampleOutputs {
  Tensor soft;
  Tensor loss_sol;
  Tensor loss_con;
  Tensor loss_total;
};

SampleOutputs run_sample(const Model& model, const GraphPair& sample,
                         const TrainConfig& cfg) {
  EmbeddingPair emb =
      forward_pipeline({sample.x_feats, sample.y_feats}, model,
                       {sample.support_x, sample.support_y});
  Tensor scores =
      affinity_matrix(emb, model.metric, cfg.affinity_temperature());
  SampleOutputs out;
  out.soft = sinkhorn(scores, cfg.sinkhorn_iters);
  out.loss_sol = cross_entropy_loss(out.soft, sample.truth, cfg.clamp_eps);
  out.loss_con = constraint_loss(out.soft);
  out.loss_total =
      scalar_mix(1.0, out.loss_sol, cfg.effective_lambda(), out.loss_con);
  return out;
}

void clip_gradients(ParamStore& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& [name, p] : params.entries()) {
    for (double g : p.grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto& [name, p] : params.entries()) {
    for (double& g : p.grad.mutable_values()) g *= scale;
  }
}

void scale_gradients(ParamStore& params, double scale) {
  if (scale == 1.0) return;
  for (auto& [name, p] : params.entries()) {
    for (double& g : p.grad.mutable_values()) g *= scale;
  }
}

std::string sample_context(int epoch, const GraphPair& sample) {
  return "epoch " + std::to_string(epoch) + ", sample " +
         std::to_string(sample.sample_id) + ": ";
}

void check_input_width(Index input_dim, const std::vector<GraphPair>& data) {
  for (const GraphPair& pair : data) {
    if (pair.x_feats.cols() != input_dim || pair.y_feats.cols() != input_dim) {
      throw DimensionError("sample " + std::to_string(pair.sample_id) +
                           " has feature width " +
                           std::to_string(pair.x_feats.cols()) +
                           ", model expects " + std::to_string(input_dim));
    }
  }
}

/// Visit order for one epoch: canonical id order, then a seeded shuffle, so
/// the storage order of the list cannot influence the updates.
std::vector<std::size_t> epoch_order(const std::vector<GraphPair>& data,
                                     std::uint64_t seed, int epoch_index) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].sample_id < data[b].sample_id;
  });
  std::mt19937_64 rng(
      derive_sample_seed(seed, static_cast<std::uint64_t>(epoch_index)));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace

TrainState init_training(const TrainConfig& config, Index input_dim) {
  config.validate();
  TrainState state;
  state.config = config;
  state.input_dim = input_dim;
  init_model_params(state.params, config.model_config(input_dim), config.seed);
  return state;
}

void train_epochs(TrainState& state, const std::vector<GraphPair>& data,
                  int epochs, const EpochCallback& on_epoch) {
  if (data.empty()) throw ContractError("training data is empty");
  const TrainConfig& cfg = state.config;
  check_input_width(state.input_dim, data);
  const ModelConfig mcfg = cfg.model_config(state.input_dim);

  for (int e = 0; e < epochs; ++e) {
    const int epoch = state.epochs_completed + 1;
    const auto order = epoch_order(data, cfg.seed, epoch);

    EpochStats stats;
    stats.epoch = epoch;
    int pending = 0;

    auto flush_updates = [&]() {
      if (pending == 0) return;
      scale_gradients(state.params, 1.0 / static_cast<double>(pending));
      clip_gradients(state.params, cfg.grad_clip_norm);
      ++state.adam_step;
      for (auto& [name, p] : state.params.entries()) {
        adam_update(p, cfg.learn_rate, cfg.beta1, cfg.beta2, cfg.adam_eps,
                    state.adam_step);
      }
      state.params.zero_grads();
      pending = 0;
    };

    for (std::size_t pos : order) {
      const GraphPair& sample = data[pos];
      try {
        Tape tape;
        Model model = bind_model(tape, state.params, mcfg);
        SampleOutputs out = run_sample(model, sample, cfg);
        tape.backward(out.loss_total);
        ++pending;
        if (pending >= cfg.batch_size) flush_updates();

        stats.mean_loss_sol += out.loss_sol(0, 0);
        stats.mean_loss_con += out.loss_con(0, 0);
        stats.mean_loss_total += out.loss_total(0, 0);
        stats.train_accuracy += matching_accuracy(
            {out.soft, hungarian_discretize(out.soft)}, sample.truth);
      } catch (const DegenerateRowError& err) {
        throw DegenerateRowError(sample_context(epoch, sample) + err.what());
      } catch (const NumericError& err) {
        throw NumericError(sample_context(epoch, sample) + err.what());
      }
    }
    flush_updates();

    const double count = static_cast<double>(data.size());
    stats.mean_loss_sol /= count;
    stats.mean_loss_con /= count;
    stats.mean_loss_total /= count;
    stats.train_accuracy /= count;
    state.history.push_back(stats);
    ++state.epochs_completed;
    if (on_epoch) on_epoch(stats);

    for (const auto& [name, p] : state.params.entries()) {
      if (!p.value.all_finite()) {
        throw NumericError("parameter '" + name +
                           "' is non-finite after epoch " +
                           std::to_string(epoch));
      }
    }
  }
}

TrainState train(const std::vector<GraphPair>& data,
                 const TrainConfig& config) {
  if (data.empty()) throw ContractError("training data is empty");
  TrainState state = init_training(config, data.front().x_feats.cols());
  train_epochs(state, data, config.epochs);
  return state;
}

EvalMetrics evaluate(const std::vector<GraphPair>& data,
                     const ParamStore& params, const TrainConfig& config) {
  if (data.empty()) throw ContractError("evaluation data is empty");
  const Index input_dim = params.entry("smooth.node_weight").value.rows();
  check_input_width(input_dim, data);
  const Model model = model_view(params, config.model_config(input_dim));

  EvalMetrics metrics;
  for (const GraphPair& sample : data) {
    SampleOutputs out = run_sample(model, sample, config);
    metrics.accuracy_hungarian += matching_accuracy(
        {out.soft, hungarian_discretize(out.soft)}, sample.truth);
    metrics.accuracy_argmax += matching_accuracy(
        {out.soft, argmax_discretize(out.soft)}, sample.truth);
    metrics.mean_loss_con += out.loss_con(0, 0);
    metrics.mean_loss_sol += out.loss_sol(0, 0);
  }
  const double count = static_cast<double>(data.size());
  metrics.accuracy_hungarian /= count;
  metrics.accuracy_argmax /= count;
  metrics.mean_loss_con /= count;
  metrics.mean_loss_sol /= count;
  metrics.sample_count = static_cast<Index>(data.size());
  return metrics;
}

void adam_update(Param& param, double learn_rate, double beta1, double beta2,
                 double eps, std::int64_t step) {
  if (!(learn_rate > 0.0)) {
    throw ContractError("learning rate must be positive");
  }
  auto& value = param.value.mutable_values();
  auto& m = param.moment1.mutable_values();
  auto& v = param.moment2.mutable_values();
  const auto& g = param.grad.values();
  const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t k = 0; k < g.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
    const double m_hat = m[k] / corr1;
    const double v_hat = v[k] / corr2;
    value[k] -= learn_rate * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace glmnet
