#include "glmnet/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "glmnet/errors.hpp"

namespace glmnet {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_matrix(std::string& out, const Tensor& t) {
  for (Index i = 0; i < t.rows(); ++i) {
    for (Index j = 0; j < t.cols(); ++j) {
      if (j > 0) out.push_back(' ');
      append_double(out, t(i, j));
    }
    out.push_back('\n');
  }
}

class LineReader {
 public:
  explicit LineReader(std::string text) : text_(std::move(text)) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    prev_pos_ = pos_;
    const std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) {
      line = std::string_view(text_).substr(pos_);
      pos_ = text_.size();
    } else {
      line = std::string_view(text_).substr(pos_, end - pos_);
      pos_ = end + 1;
    }
    ++line_number_;
    return true;
  }

  // Steps back over the line most recently returned by next().
  void unread() {
    pos_ = prev_pos_;
    --line_number_;
  }

  std::size_t line_number() const { return line_number_; }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t prev_pos_ = 0;
  std::size_t line_number_ = 0;
};

[[noreturn]] void fail(const LineReader& reader, const std::string& what) {
  throw ParseError("line " + std::to_string(reader.line_number()) + ": " +
                   what);
}

std::string_view expect_line(LineReader& reader, const char* context) {
  std::string_view line;
  if (!reader.next(line)) {
    throw ParseError("unexpected end of file while reading " +
                     std::string(context));
  }
  return line;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const std::size_t next = line.find(' ', pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

double parse_double(const LineReader& reader, std::string_view field) {
  double value = 0.0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    fail(reader, "bad decimal '" + std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_int(const LineReader& reader, std::string_view field) {
  std::int64_t value = 0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    fail(reader, "bad integer '" + std::string(field) + "'");
  }
  return value;
}

Tensor read_matrix(LineReader& reader, Index rows, Index cols,
                   const char* context) {
  Tensor out(rows, cols);
  auto& v = out.mutable_values();
  for (Index i = 0; i < rows; ++i) {
    const auto fields = split_fields(expect_line(reader, context));
    if (static_cast<Index>(fields.size()) != cols) {
      fail(reader, std::string(context) + " row has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(cols));
    }
    for (Index j = 0; j < cols; ++j) {
      v[i * cols + j] = parse_double(reader, fields[j]);
    }
  }
  return out;
}

void validate_support(const Tensor& s, Index nodes, std::uint64_t sample_id,
                      const char* name) {
  if (s.rows() != nodes || s.cols() != nodes) {
    throw ContractError("sample " + std::to_string(sample_id) + ": " + name +
                        " must be " + std::to_string(nodes) + "x" +
                        std::to_string(nodes) + ", got " + shape_string(s));
  }
  for (Index i = 0; i < nodes; ++i) {
    if (!(s(i, i) > 0.0)) {
      throw ContractError("sample " + std::to_string(sample_id) + ": " + name +
                          " diagonal entry " + std::to_string(i) +
                          " is not positive");
    }
    for (Index j = 0; j < nodes; ++j) {
      if (s(i, j) < 0.0) {
        throw ContractError("sample " + std::to_string(sample_id) + ": " +
                            name + " has a negative weight");
      }
    }
  }
}

}  // namespace

void save_features(const std::vector<GraphPair>& pairs,
                   const std::filesystem::path& path) {
  std::string out;
  out += "GLM1 " + std::to_string(pairs.size()) + "\n";
  for (const GraphPair& pair : pairs) {
    out += "sample " + std::to_string(pair.sample_id) + " " +
           std::to_string(pair.x_feats.rows()) + " " +
           std::to_string(pair.y_feats.rows()) + " " +
           std::to_string(pair.x_feats.cols()) + "\n";
    append_matrix(out, pair.x_feats);
    append_matrix(out, pair.y_feats);
    out += "perm\n";
    append_matrix(out, pair.truth.perm);
    if (pair.support_x) {
      out += "support_x\n";
      append_matrix(out, *pair.support_x);
    }
    if (pair.support_y) {
      out += "support_y\n";
      append_matrix(out, *pair.support_y);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

std::vector<GraphPair> load_features(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  LineReader reader(buffer.str());

  const auto header = split_fields(expect_line(reader, "header"));
  if (header.size() != 2 || header[0] != "GLM1") {
    fail(reader, "expected header 'GLM1 <num_samples>'");
  }
  const std::int64_t count = parse_int(reader, header[1]);
  if (count < 0) fail(reader, "negative sample count");

  std::vector<GraphPair> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  std::set<std::uint64_t> seen_ids;

  for (std::int64_t s = 0; s < count; ++s) {
    const auto head = split_fields(expect_line(reader, "sample header"));
    if (head.size() != 5 || head[0] != "sample") {
      fail(reader, "expected 'sample <id> <m> <n> <p>'");
    }
    const std::int64_t id = parse_int(reader, head[1]);
    const Index m = parse_int(reader, head[2]);
    const Index n = parse_int(reader, head[3]);
    const Index p = parse_int(reader, head[4]);
    if (m < 1 || n < 1 || p < 1) fail(reader, "sample dimensions must be >= 1");
    if (!seen_ids.insert(static_cast<std::uint64_t>(id)).second) {
      throw ContractError("duplicate sample id " + std::to_string(id));
    }

    GraphPair pair;
    pair.sample_id = static_cast<std::uint64_t>(id);
    pair.x_feats = read_matrix(reader, m, p, "x features");
    pair.y_feats = read_matrix(reader, n, p, "y features");

    const auto perm_tag = expect_line(reader, "perm tag");
    if (perm_tag != "perm") fail(reader, "expected 'perm'");
    Tensor perm = read_matrix(reader, m, n, "perm");
    try {
      pair.truth = GroundTruth::from_matrix(std::move(perm));
    } catch (const ContractError& e) {
      throw ContractError("sample " + std::to_string(id) + ": " + e.what());
    }

    // Optional support blocks, in x-then-y order.
    std::string_view tag;
    if (reader.next(tag)) {
      if (tag == "support_x") {
        pair.support_x = read_matrix(reader, m, m, "support_x");
        if (!reader.next(tag)) tag = {};
      }
      if (tag == "support_y") {
        pair.support_y = read_matrix(reader, n, n, "support_y");
        if (!reader.next(tag)) tag = {};
      }
      if (tag == "support_x") {
        fail(reader, "support blocks must appear as support_x then support_y");
      }
      if (!tag.empty()) reader.unread();
    }
    if (pair.support_x) {
      validate_support(*pair.support_x, m, pair.sample_id, "support_x");
    }
    if (pair.support_y) {
      validate_support(*pair.support_y, n, pair.sample_id, "support_y");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace glmnet
