// Command-line front end: dataset generation, training, evaluation,
// gradient checking and the ablation harness.

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "glmnet/checkpoint.hpp"
#include "glmnet/dataset_io.hpp"
#include "glmnet/errors.hpp"
#include "glmnet/grad_check.hpp"
#include "glmnet/synth.hpp"
#include "glmnet/train.hpp"

namespace fs = std::filesystem;
using namespace glmnet;

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("GLM_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string value(env);
  if (value == "quiet") return LogLevel::kQuiet;
  if (value == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log_line(LogLevel at_least, const std::string& message) {
  if (log_level() >= at_least) std::cerr << message << "\n";
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Every command emits one of these; re-running with the recorded config and
// seed reproduces the metrics exactly.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {
    started_ = timestamp_utc();
  }

  void set(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, fmt_double(value)); }
  void set(const std::string& key, std::int64_t value) {
    set(key, std::to_string(value));
  }
  void add_output(const fs::path& path) { outputs_.push_back(path.string()); }
  void add_metric_line(const std::string& line) { metrics_.push_back(line); }

  std::string render() const {
    std::ostringstream os;
    os << "command = " << command_ << "\n";
    os << "started = " << started_ << "\n";
    os << "finished = " << timestamp_utc() << "\n";
    for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
    for (const auto& out : outputs_) os << "output = " << out << "\n";
    if (!metrics_.empty()) {
      os << "[metrics]\n";
      for (const auto& line : metrics_) os << line << "\n";
    }
    return os.str();
  }

  // Writes next to the main output, or prints when there is none.
  void emit(const fs::path& out_base) const {
    if (out_base.empty()) {
      std::cout << "--- manifest ---\n" << render();
      return;
    }
    fs::path path = out_base;
    path += ".manifest";
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write manifest '" + path.string() + "'");
    file << render();
    log_line(LogLevel::kInfo, "manifest: " + path.string());
  }

 private:
  std::string command_;
  std::string started_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> outputs_;
  std::vector<std::string> metrics_;
};

void describe_config(Manifest& manifest, const TrainConfig& c) {
  manifest.set("gamma", c.gamma);
  manifest.set("gamma-sharp", c.gamma_sharp);
  manifest.set("lambda", c.lambda);
  manifest.set("delta", c.delta);
  manifest.set("delta-p", c.delta_p);
  manifest.set("widths", std::to_string(c.widths[0]) + "," +
                             std::to_string(c.widths[1]) + "," +
                             std::to_string(c.widths[2]));
  manifest.set("sinkhorn-iters", static_cast<std::int64_t>(c.sinkhorn_iters));
  manifest.set("lr", c.learn_rate);
  manifest.set("beta1", c.beta1);
  manifest.set("beta2", c.beta2);
  manifest.set("epochs", static_cast<std::int64_t>(c.epochs));
  manifest.set("batch-size", static_cast<std::int64_t>(c.batch_size));
  manifest.set("seed", static_cast<std::int64_t>(c.seed));
  manifest.set("graph-learning", c.use_graph_learning ? "on" : "off");
  manifest.set("sharpening", c.use_sharpening ? "on" : "off");
  manifest.set("constraint-loss", c.use_constraint_loss ? "on" : "off");
  manifest.set("shared-scorer", c.share_edge_score ? "on" : "off");
  manifest.set("grad-clip", c.grad_clip_norm);
}

// Options shared by train / ablate / gradcheck, bound onto a TrainConfig.
struct TrainFlagState {
  std::vector<std::int64_t> widths{64, 64, 64};
  bool no_graph_learning = false;
  bool no_sharpening = false;
  bool no_constraint_loss = false;
  bool no_shared_scorer = false;
};

void add_train_flags(CLI::App* cmd, TrainConfig& config,
                     TrainFlagState& state) {
  cmd->add_option("--epochs", config.epochs, "training epochs");
  cmd->add_option("--lr", config.learn_rate, "learning rate");
  cmd->add_option("--lambda", config.lambda, "constraint-loss weight");
  cmd->add_option("--gamma", config.gamma, "smoothing mix in (0,1)");
  cmd->add_option("--gamma-sharp", config.gamma_sharp, "sharpening strength");
  cmd->add_option("--delta", config.delta,
                  "cross-graph temperature (0 = sqrt of width)");
  cmd->add_option("--delta-p", config.delta_p,
                  "affinity temperature (0 = sqrt of width)");
  cmd->add_option("--widths", state.widths, "layer widths d1,d2,d3")
      ->delimiter(',');
  cmd->add_option("--sinkhorn-iters", config.sinkhorn_iters,
                  "Sinkhorn iterations");
  cmd->add_option("--seed", config.seed, "run seed");
  cmd->add_option("--batch-size", config.batch_size, "samples per update");
  cmd->add_flag("--no-graph-learning", state.no_graph_learning,
                "use row-normalized supports instead of learned graphs");
  cmd->add_flag("--no-sharpening", state.no_sharpening,
                "replace the sharpening layer with a second smoothing layer");
  cmd->add_flag("--no-constraint-loss", state.no_constraint_loss,
                "drop the constraint term (lambda = 0)");
  cmd->add_flag("--no-shared-scorer", state.no_shared_scorer,
                "learn separate pairwise scorers for the two graphs");
  cmd->set_config("--config", "",
                  "flat key=value file using the long option names");
}

void apply_train_flags(TrainConfig& config, const TrainFlagState& state) {
  if (state.widths.size() != 3) {
    throw ContractError("--widths needs exactly three values d1,d2,d3");
  }
  config.widths = {state.widths[0], state.widths[1], state.widths[2]};
  config.use_graph_learning = !state.no_graph_learning;
  config.use_sharpening = !state.no_sharpening;
  config.use_constraint_loss = !state.no_constraint_loss;
  config.share_edge_score = !state.no_shared_scorer;
  config.validate();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  file << content;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string csv = "epoch,loss_sol,loss_con,loss_total,train_accuracy\n";
  for (const EpochStats& s : history) {
    csv += std::to_string(s.epoch) + "," + fmt_double(s.mean_loss_sol) + "," +
           fmt_double(s.mean_loss_con) + "," + fmt_double(s.mean_loss_total) +
           "," + fmt_double(s.train_accuracy) + "\n";
  }
  return csv;
}

std::string history_table(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << "epoch    loss_sol      loss_con      loss_total    train_acc\n";
  for (const EpochStats& s : history) {
    os << std::setw(5) << s.epoch << "  " << std::setw(12)
       << s.mean_loss_sol << "  " << std::setw(12) << s.mean_loss_con << "  "
       << std::setw(12) << s.mean_loss_total << "  " << std::setw(9)
       << s.train_accuracy << "\n";
  }
  return os.str();
}

std::string eval_csv(const EvalMetrics& m) {
  return "samples,accuracy_hungarian,accuracy_argmax,mean_loss_sol,"
         "mean_loss_con\n" +
         std::to_string(m.sample_count) + "," +
         fmt_double(m.accuracy_hungarian) + "," +
         fmt_double(m.accuracy_argmax) + "," + fmt_double(m.mean_loss_sol) +
         "," + fmt_double(m.mean_loss_con) + "\n";
}

// ---- gen --------------------------------------------------------------------

struct GenFlags {
  int count = 10;
  int inliers = 10;
  int outliers = 0;
  double noise = 0.0;
  std::int64_t dim = 16;
  int knn = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenFlags& flags) {
  if (flags.count < 1) throw ContractError("--count must be at least 1");
  Manifest manifest("gen");
  manifest.set("count", static_cast<std::int64_t>(flags.count));
  manifest.set("inliers", static_cast<std::int64_t>(flags.inliers));
  manifest.set("outliers", static_cast<std::int64_t>(flags.outliers));
  manifest.set("noise", flags.noise);
  manifest.set("dim", flags.dim);
  manifest.set("knn", static_cast<std::int64_t>(flags.knn));
  manifest.set("seed", static_cast<std::int64_t>(flags.seed));

  std::vector<GraphPair> pairs;
  pairs.reserve(static_cast<std::size_t>(flags.count));
  for (int i = 0; i < flags.count; ++i) {
    SynthConfig config;
    config.n_inliers = flags.inliers;
    config.n_outliers = flags.outliers;
    config.noise_sigma = flags.noise;
    config.knn_k = flags.knn;
    config.feat_dim = flags.dim;
    config.seed =
        derive_sample_seed(flags.seed, static_cast<std::uint64_t>(i));
    GraphPair pair = generate_pair(config);
    pair.sample_id = static_cast<std::uint64_t>(i);
    pairs.push_back(std::move(pair));
  }
  save_features(pairs, flags.out);
  manifest.add_output(flags.out);
  manifest.add_metric_line("samples," + std::to_string(pairs.size()));
  manifest.emit(flags.out);
  log_line(LogLevel::kInfo, "wrote " + std::to_string(pairs.size()) +
                                " samples to " + flags.out);
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainCmdFlags {
  std::string data;
  std::string out;
  std::string resume;
};

int cmd_train(const TrainCmdFlags& flags, TrainConfig config,
              const TrainFlagState& flag_state) {
  apply_train_flags(config, flag_state);
  std::vector<GraphPair> data = load_features(flags.data);
  if (data.empty()) throw ContractError("dataset '" + flags.data + "' is empty");

  TrainState state;
  int epochs_to_run = config.epochs;
  if (!flags.resume.empty()) {
    state = load_checkpoint(flags.resume);
    // The checkpoint's config governs a resumed run; --epochs adds epochs.
    log_line(LogLevel::kInfo,
             "resuming from " + flags.resume + " at epoch " +
                 std::to_string(state.epochs_completed));
  } else {
    state = init_training(config, data.front().x_feats.cols());
  }

  const auto log_epoch = [&](const EpochStats& s) {
    const bool verbose = log_level() >= LogLevel::kDebug;
    if (verbose || s.epoch % 25 == 0 || s.epoch == 1) {
      log_line(LogLevel::kInfo,
               "epoch " + std::to_string(s.epoch) + "  loss " +
                   fmt_double(s.mean_loss_total) + "  acc " +
                   fmt_double(s.train_accuracy));
    }
  };
  train_epochs(state, data, epochs_to_run, log_epoch);

  save_checkpoint(state, flags.out);
  const fs::path csv_path = flags.out + ".metrics.csv";
  const fs::path txt_path = flags.out + ".metrics.txt";
  write_text_file(csv_path, history_csv(state.history));
  write_text_file(txt_path, history_table(state.history));

  Manifest manifest("train");
  describe_config(manifest, state.config);
  manifest.set("data", flags.data);
  manifest.set("epochs-run", static_cast<std::int64_t>(epochs_to_run));
  if (!flags.resume.empty()) manifest.set("resumed-from", flags.resume);
  manifest.add_output(flags.out);
  manifest.add_output(csv_path);
  manifest.add_output(txt_path);
  if (!state.history.empty()) {
    const EpochStats& last = state.history.back();
    manifest.add_metric_line("final_epoch," + std::to_string(last.epoch));
    manifest.add_metric_line("final_loss_total," +
                             fmt_double(last.mean_loss_total));
    manifest.add_metric_line("final_train_accuracy," +
                             fmt_double(last.train_accuracy));
  }
  manifest.emit(flags.out);
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalFlags {
  std::string data;
  std::string checkpoint;
  std::string out;
};

int cmd_eval(const EvalFlags& flags) {
  std::vector<GraphPair> data = load_features(flags.data);
  TrainState state = load_checkpoint(flags.checkpoint);
  EvalMetrics metrics = evaluate(data, state.params, state.config);

  std::cout << "samples:             " << metrics.sample_count << "\n"
            << "accuracy (hungarian) " << metrics.accuracy_hungarian << "\n"
            << "accuracy (argmax)    " << metrics.accuracy_argmax << "\n"
            << "mean loss_sol        " << metrics.mean_loss_sol << "\n"
            << "mean loss_con        " << metrics.mean_loss_con << "\n";
  std::cout << eval_csv(metrics);

  Manifest manifest("eval");
  describe_config(manifest, state.config);
  manifest.set("data", flags.data);
  manifest.set("checkpoint", flags.checkpoint);
  manifest.add_metric_line("accuracy_hungarian," +
                           fmt_double(metrics.accuracy_hungarian));
  manifest.add_metric_line("accuracy_argmax," +
                           fmt_double(metrics.accuracy_argmax));
  manifest.add_metric_line("mean_loss_sol," + fmt_double(metrics.mean_loss_sol));
  manifest.add_metric_line("mean_loss_con," + fmt_double(metrics.mean_loss_con));
  if (!flags.out.empty()) {
    const fs::path csv_path = flags.out + ".metrics.csv";
    write_text_file(csv_path, eval_csv(metrics));
    manifest.add_output(csv_path);
  }
  manifest.emit(flags.out);
  return 0;
}

// ---- gradcheck --------------------------------------------------------------

struct GradCheckFlags {
  int nodes = 5;
  std::int64_t dim = 8;
  double tol = 1e-4;
  double step = 1e-5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gradcheck(const GradCheckFlags& flags, TrainConfig config,
                  const TrainFlagState& flag_state) {
  apply_train_flags(config, flag_state);

  SynthConfig sc;
  sc.n_inliers = flags.nodes;
  sc.n_outliers = 0;
  sc.noise_sigma = 0.05;
  sc.knn_k = std::min(3, flags.nodes - 1);
  sc.feat_dim = flags.dim;
  sc.seed = flags.seed;
  GraphPair sample = generate_pair(sc);

  TrainState state = init_training(config, flags.dim);
  // The zero-started scorers sit exactly on the relu kink where central
  // differences are undefined; check at a generic nearby point instead.
  std::mt19937_64 rng(derive_sample_seed(flags.seed, 1));
  for (auto& [name, p] : state.params.entries()) {
    for (double& v : p.value.mutable_values()) {
      v += uniform_in(rng, 0.01, 0.12);
    }
  }

  const ModelConfig mcfg = config.model_config(flags.dim);
  auto forward = [&](Tape& tape) {
    Model model = bind_model(tape, state.params, mcfg);
    EmbeddingPair emb =
        forward_pipeline({sample.x_feats, sample.y_feats}, model,
                         {sample.support_x, sample.support_y});
    Tensor scores =
        affinity_matrix(emb, model.metric, config.affinity_temperature());
    Tensor soft = sinkhorn(scores, config.sinkhorn_iters);
    return total_loss(soft, sample.truth, config.effective_lambda(),
                      config.clamp_eps);
  };

  GradCheckOptions opts;
  opts.step = flags.step;
  opts.tolerance = flags.tol;
  opts.seed = flags.seed;
  GradCheckReport report = grad_check(forward, state.params, opts);
  std::cout << report.to_string();

  Manifest manifest("gradcheck");
  describe_config(manifest, config);
  manifest.set("nodes", static_cast<std::int64_t>(flags.nodes));
  manifest.set("dim", flags.dim);
  manifest.set("tol", flags.tol);
  manifest.set("step", flags.step);
  manifest.set("check-seed", static_cast<std::int64_t>(flags.seed));
  manifest.add_metric_line(std::string("passed,") +
                           (report.passed ? "1" : "0"));
  manifest.add_metric_line("max_rel_error," + fmt_double(report.max_rel_error));
  if (!flags.out.empty()) {
    write_text_file(flags.out, report.to_string());
    manifest.add_output(flags.out);
  }
  manifest.emit(flags.out);
  return report.passed ? 0 : 1;
}

// ---- ablate -----------------------------------------------------------------

struct AblateFlags {
  std::string data;
  std::string test;
  std::string out;
  int seeds = 5;
  int jobs = 1;
  double split = 0.8;
};

struct AblationVariant {
  const char* name;
  double reference;  // the paper's accuracy column for this row
  bool graph_learning;
  bool constraint;
  bool sharpening;
};

constexpr AblationVariant kVariants[] = {
    {"full", 67.5, true, true, true},
    {"no-sharpening", 66.9, true, true, false},
    {"no-sharpening,no-constraint", 66.6, true, false, false},
    {"baseline (all off)", 63.8, false, false, false},
};

int cmd_ablate(const AblateFlags& flags, TrainConfig base,
               const TrainFlagState& flag_state) {
  apply_train_flags(base, flag_state);
  if (flags.seeds < 1) throw ContractError("--seeds must be at least 1");
  if (flags.jobs < 1) throw ContractError("--jobs must be at least 1");

  std::vector<GraphPair> train_data = load_features(flags.data);
  std::vector<GraphPair> test_data;
  if (!flags.test.empty()) {
    test_data = load_features(flags.test);
  } else {
    auto [tr, te] = batch_split(std::move(train_data), flags.split, base.seed);
    train_data = std::move(tr);
    test_data = std::move(te);
  }
  if (train_data.empty() || test_data.empty()) {
    throw ContractError("ablation needs nonempty train and test sets");
  }

  struct Task {
    int variant;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (int v = 0; v < 4; ++v) {
    for (int s = 0; s < flags.seeds; ++s) tasks.push_back({v, s});
  }
  std::vector<double> accuracy(tasks.size(), 0.0);

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task task = tasks[t];
      const AblationVariant& variant = kVariants[task.variant];

      TrainConfig config = base;
      config.seed = base.seed + static_cast<std::uint64_t>(task.seed_index);
      config.use_graph_learning = variant.graph_learning;
      config.use_constraint_loss = variant.constraint;
      config.use_sharpening = variant.sharpening;

      TrainState state = train(train_data, config);
      EvalMetrics metrics = evaluate(test_data, state.params, config);
      accuracy[t] = metrics.accuracy_hungarian;
      {
        std::lock_guard<std::mutex> lock(log_mutex);
        log_line(LogLevel::kInfo,
                 std::string(variant.name) + " seed " +
                     std::to_string(config.seed) + ": accuracy " +
                     fmt_double(metrics.accuracy_hungarian));
      }
    }
  };
  if (flags.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < flags.jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Manifest manifest("ablate");
  describe_config(manifest, base);
  manifest.set("data", flags.data);
  manifest.set("ablate-seeds", static_cast<std::int64_t>(flags.seeds));

  std::string csv = "variant,reference,seed,accuracy\n";
  std::ostringstream table;
  table << "variant                        reference   mean      std\n";
  for (int v = 0; v < 4; ++v) {
    double mean = 0.0;
    for (int s = 0; s < flags.seeds; ++s) {
      mean += accuracy[v * flags.seeds + s];
    }
    mean /= flags.seeds;
    double var = 0.0;
    for (int s = 0; s < flags.seeds; ++s) {
      const double d = accuracy[v * flags.seeds + s] - mean;
      var += d * d;
    }
    const double stddev =
        flags.seeds > 1 ? std::sqrt(var / (flags.seeds - 1)) : 0.0;

    for (int s = 0; s < flags.seeds; ++s) {
      csv += std::string(kVariants[v].name) + "," +
             fmt_double(kVariants[v].reference) + "," + std::to_string(s) +
             "," + fmt_double(accuracy[v * flags.seeds + s]) + "\n";
    }
    table << std::left << std::setw(31) << kVariants[v].name << std::right
          << std::setw(8) << kVariants[v].reference << "   " << std::setw(7)
          << std::setprecision(4) << std::fixed << mean << "   " << std::setw(6)
          << stddev << "\n";
    table.unsetf(std::ios::fixed);
    table << std::setprecision(6);
    manifest.add_metric_line(std::string(kVariants[v].name) + "," +
                             fmt_double(mean) + "," + fmt_double(stddev));
  }
  std::cout << table.str();
  if (!flags.out.empty()) {
    const fs::path csv_path = flags.out + ".ablation.csv";
    write_text_file(csv_path, csv);
    manifest.add_output(csv_path);
  }
  manifest.emit(flags.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glm: learned graph matching at desk scale"};
  app.require_subcommand(1);
  app.footer("Environment: GLM_LOG=quiet|info|debug controls stderr logging.\n"
             "Config files are flat key=value lines named after the long "
             "options, e.g. 'lambda=0.05'.");

  GenFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--count", gen_flags.count, "number of samples");
  gen->add_option("--inliers", gen_flags.inliers, "inlier keypoints per side");
  gen->add_option("--outliers", gen_flags.outliers, "outliers per side");
  gen->add_option("--noise", gen_flags.noise, "feature noise std");
  gen->add_option("--dim", gen_flags.dim, "feature dimension p");
  gen->add_option("--knn", gen_flags.knn, "k of the initial k-NN supports");
  gen->add_option("--seed", gen_flags.seed, "base seed");
  gen->add_option("-o,--out", gen_flags.out, "output dataset path")
      ->required();

  TrainCmdFlags train_flags;
  TrainConfig train_config;
  TrainFlagState train_state;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", train_flags.data, "training dataset")
      ->required();
  train_cmd->add_option("-o,--out", train_flags.out, "checkpoint output path")
      ->required();
  train_cmd->add_option("--resume", train_flags.resume,
                        "checkpoint to continue from");
  add_train_flags(train_cmd, train_config, train_state);

  EvalFlags eval_flags;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--data", eval_flags.data, "dataset")->required();
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "checkpoint")
      ->required();
  eval_cmd->add_option("-o,--out", eval_flags.out, "metrics output base");

  GradCheckFlags gc_flags;
  TrainConfig gc_config;
  gc_config.widths = {16, 16, 16};
  TrainFlagState gc_state;
  gc_state.widths = {16, 16, 16};
  CLI::App* gc_cmd = app.add_subcommand(
      "gradcheck", "compare tape gradients against finite differences");
  gc_cmd->add_option("--nodes", gc_flags.nodes, "keypoints per side");
  gc_cmd->add_option("--dim", gc_flags.dim, "feature dimension");
  gc_cmd->add_option("--tol", gc_flags.tol, "max relative error");
  gc_cmd->add_option("--step", gc_flags.step, "finite-difference step");
  gc_cmd->add_option("--check-seed", gc_flags.seed, "problem seed");
  gc_cmd->add_option("-o,--out", gc_flags.out, "report output path");
  add_train_flags(gc_cmd, gc_config, gc_state);

  AblateFlags ab_flags;
  TrainConfig ab_config;
  TrainFlagState ab_state;
  CLI::App* ab_cmd =
      app.add_subcommand("ablate", "train and score the ablation grid");
  ab_cmd->add_option("--data", ab_flags.data, "training dataset")->required();
  ab_cmd->add_option("--test", ab_flags.test,
                     "held-out dataset (default: split --data)");
  ab_cmd->add_option("--split", ab_flags.split,
                     "train fraction when splitting --data");
  ab_cmd->add_option("--seeds", ab_flags.seeds, "seeds per variant");
  ab_cmd->add_option("--jobs", ab_flags.jobs, "parallel worker threads");
  ab_cmd->add_option("-o,--out", ab_flags.out, "output base path");
  add_train_flags(ab_cmd, ab_config, ab_state);

  int rc = 0;
  gen->callback([&]() { rc = cmd_gen(gen_flags); });
  train_cmd->callback(
      [&]() { rc = cmd_train(train_flags, train_config, train_state); });
  eval_cmd->callback([&]() { rc = cmd_eval(eval_flags); });
  gc_cmd->callback(
      [&]() { rc = cmd_gradcheck(gc_flags, gc_config, gc_state); });
  ab_cmd->callback(
      [&]() { rc = cmd_ablate(ab_flags, ab_config, ab_state); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return 4;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
