#include "glmnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "glmnet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace glmnet {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'M', 'C'};
constexpr std::uint16_t kVersion = 1;

std::uint64_t fnv1a(const char* data, std::size_t size) {
  std::uint64_t hash = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= static_cast<unsigned char>(data[i]);
    hash *= 1099511628211ull;
  }
  return hash;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buffer_.append(bytes, sizeof(T));
  }

  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s);
  }

  void put_values(const Tensor& t) {
    for (double v : t.values()) put<double>(v);
  }

  std::string& buffer() { return buffer_; }

 private:
  std::string buffer_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > size_) {
      throw ChecksumError("checkpoint payload ends prematurely");
    }
    T value;
    std::memcpy(&value, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto len = get<std::uint32_t>();
    if (pos_ + len > size_) {
      throw ChecksumError("checkpoint payload ends prematurely");
    }
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }

  Tensor get_tensor(Index rows, Index cols) {
    Tensor t(rows, cols);
    auto& v = t.mutable_values();
    for (double& x : v) x = get<double>();
    return t;
  }

  bool exhausted() const { return pos_ == size_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const TrainConfig& c) {
  w.put<double>(c.gamma);
  w.put<double>(c.gamma_sharp);
  w.put<double>(c.lambda);
  w.put<double>(c.delta);
  w.put<double>(c.delta_p);
  for (Index width : c.widths) w.put<std::int64_t>(width);
  w.put<std::int64_t>(c.sinkhorn_iters);
  w.put<double>(c.learn_rate);
  w.put<double>(c.beta1);
  w.put<double>(c.beta2);
  w.put<std::int64_t>(c.epochs);
  w.put<std::int64_t>(c.batch_size);
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint8_t>(c.use_graph_learning ? 1 : 0);
  w.put<std::uint8_t>(c.use_sharpening ? 1 : 0);
  w.put<std::uint8_t>(c.use_constraint_loss ? 1 : 0);
  w.put<std::uint8_t>(c.share_edge_score ? 1 : 0);
  w.put<double>(c.grad_clip_norm);
  w.put<double>(c.clamp_eps);
  w.put<double>(c.adam_eps);
}

TrainConfig read_config(Reader& r) {
  TrainConfig c;
  c.gamma = r.get<double>();
  c.gamma_sharp = r.get<double>();
  c.lambda = r.get<double>();
  c.delta = r.get<double>();
  c.delta_p = r.get<double>();
  for (Index& width : c.widths) width = r.get<std::int64_t>();
  c.sinkhorn_iters = static_cast<int>(r.get<std::int64_t>());
  c.learn_rate = r.get<double>();
  c.beta1 = r.get<double>();
  c.beta2 = r.get<double>();
  c.epochs = static_cast<int>(r.get<std::int64_t>());
  c.batch_size = static_cast<int>(r.get<std::int64_t>());
  c.seed = r.get<std::uint64_t>();
  c.use_graph_learning = r.get<std::uint8_t>() != 0;
  c.use_sharpening = r.get<std::uint8_t>() != 0;
  c.use_constraint_loss = r.get<std::uint8_t>() != 0;
  c.share_edge_score = r.get<std::uint8_t>() != 0;
  c.grad_clip_norm = r.get<double>();
  c.clamp_eps = r.get<double>();
  c.adam_eps = r.get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const TrainState& state,
                     const std::filesystem::path& path) {
  Writer w;
  w.buffer().append(kMagic, sizeof(kMagic));
  w.put<std::uint16_t>(kVersion);

  write_config(w, state.config);
  w.put<std::int64_t>(state.input_dim);
  w.put<std::int64_t>(state.adam_step);
  w.put<std::int64_t>(state.epochs_completed);

  w.put<std::uint32_t>(static_cast<std::uint32_t>(state.history.size()));
  for (const EpochStats& s : state.history) {
    w.put<std::int64_t>(s.epoch);
    w.put<double>(s.mean_loss_sol);
    w.put<double>(s.mean_loss_con);
    w.put<double>(s.mean_loss_total);
    w.put<double>(s.train_accuracy);
  }

  w.put<std::uint32_t>(static_cast<std::uint32_t>(state.params.size()));
  for (const auto& [name, p] : state.params.entries()) {
    w.put_string(name);
    w.put<std::int64_t>(p.value.rows());
    w.put<std::int64_t>(p.value.cols());
    w.put_values(p.value);
    w.put_values(p.moment1);
    w.put_values(p.moment2);
  }

  w.put<std::uint64_t>(fnv1a(w.buffer().data(), w.buffer().size()));

  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  file.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::string bytes((std::istreambuf_iterator<char>(file)),
                    std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint16_t) +
                         sizeof(std::uint64_t)) {
    throw ChecksumError("checkpoint file is truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  std::uint16_t version;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  if (version != kVersion) {
    throw VersionError("unsupported checkpoint version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kVersion));
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(bytes.data(), body)) {
    throw ChecksumError("checkpoint checksum mismatch (corrupt file)");
  }

  Reader r(bytes.data() + sizeof(kMagic) + sizeof(std::uint16_t),
           body - sizeof(kMagic) - sizeof(std::uint16_t));
  TrainState state;
  state.config = read_config(r);
  state.input_dim = r.get<std::int64_t>();
  state.adam_step = r.get<std::int64_t>();
  state.epochs_completed = static_cast<int>(r.get<std::int64_t>());

  const auto history_count = r.get<std::uint32_t>();
  state.history.reserve(history_count);
  for (std::uint32_t i = 0; i < history_count; ++i) {
    EpochStats s;
    s.epoch = static_cast<int>(r.get<std::int64_t>());
    s.mean_loss_sol = r.get<double>();
    s.mean_loss_con = r.get<double>();
    s.mean_loss_total = r.get<double>();
    s.train_accuracy = r.get<double>();
    state.history.push_back(s);
  }

  const auto param_count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < param_count; ++i) {
    const std::string name = r.get_string();
    const Index rows = r.get<std::int64_t>();
    const Index cols = r.get<std::int64_t>();
    if (rows < 1 || cols < 1) {
      throw ChecksumError("checkpoint parameter has invalid shape");
    }
    Param& p = state.params.create(name, r.get_tensor(rows, cols));
    p.moment1 = r.get_tensor(rows, cols);
    p.moment2 = r.get_tensor(rows, cols);
  }
  if (!r.exhausted()) {
    throw ChecksumError("checkpoint has trailing bytes");
  }
  return state;
}

}  // namespace glmnet
