#include "glmnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glmnet/errors.hpp"

namespace glmnet {

namespace {

void ensure_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

Tape* tape_of(const Tensor& a, const Tensor& b) {
  if (a.recorded() && b.recorded() && a.tape() != b.tape()) {
    throw ContractError("operands belong to different computation records");
  }
  return a.recorded() ? a.tape() : b.tape();
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  const Index r = a.rows(), s = a.cols(), t = b.cols();
  Tensor out(r, t);
  auto& o = out.mutable_values();
  const auto& av = a.values();
  const auto& bv = b.values();
  for (Index i = 0; i < r; ++i) {
    for (Index k = 0; k < s; ++k) {
      const double aik = av[i * s + k];
      for (Index j = 0; j < t; ++j) {
        o[i * t + j] += aik * bv[k * t + j];
      }
    }
  }
  return out;
}

Tensor softmax_values(const Tensor& a, const Tensor* mask) {
  const Index r = a.rows(), c = a.cols();
  Tensor out(r, c);
  auto& o = out.mutable_values();
  const auto& av = a.values();
  for (Index i = 0; i < r; ++i) {
    // Max over the supported entries keeps every exponent <= 0; adding a
    // constant to the row of logits therefore cancels exactly.
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < c; ++j) {
      if (mask && (*mask)(i, j) <= 0.0) continue;
      mx = std::max(mx, av[i * c + j]);
    }
    if (!std::isfinite(mx)) {
      throw DegenerateRowError("row " + std::to_string(i) +
                               " of the softmax support has no positive "
                               "weight");
    }
    double denom = 0.0;
    for (Index j = 0; j < c; ++j) {
      const double w = mask ? (*mask)(i, j) : 1.0;
      const double e = w > 0.0 ? w * std::exp(av[i * c + j] - mx) : 0.0;
      o[i * c + j] = e;
      denom += e;
    }
    for (Index j = 0; j < c; ++j) o[i * c + j] /= denom;
  }
  return out;
}

}  // namespace

std::int32_t Tape::intern(const Tensor& t) {
  if (t.recorded()) {
    if (t.tape() != this) {
      throw ContractError("tensor belongs to a different computation record");
    }
    return t.node();
  }
  Node node;
  node.op = OpKind::kLeaf;
  node.value = t;
  node.value.tape_ = this;
  node.value.node_ = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

Tensor Tape::leaf(const Tensor& value) {
  ensure_finite(value, "leaf");
  return nodes_[intern(value.recorded() ? value.detached() : value)].value;
}

Tensor Tape::param(ParamStore& store, const std::string& name) {
  Param& p = store.entry(name);
  ensure_finite(p.value, "param");
  Node node;
  node.op = OpKind::kLeaf;
  node.value = p.value;
  node.value.tape_ = this;
  node.value.node_ = static_cast<std::int32_t>(nodes_.size());
  node.bound = &p;
  node.needs_grad = true;
  nodes_.push_back(std::move(node));
  return nodes_.back().value;
}

Tensor Tape::push(OpKind op, std::int32_t in0, std::int32_t in1, Tensor value,
                  double alpha, double beta, Index split) {
  Node node;
  node.op = op;
  node.in0 = in0;
  node.in1 = in1;
  node.alpha = alpha;
  node.beta = beta;
  node.split = split;
  node.needs_grad = (in0 >= 0 && nodes_[in0].needs_grad) ||
                    (in1 >= 0 && nodes_[in1].needs_grad);
  node.value = std::move(value);
  node.value.tape_ = this;
  node.value.node_ = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  return nodes_.back().value;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.recorded() || loss.tape() != this) {
    throw ContractError("loss is not recorded on this computation record");
  }
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward needs a scalar 1x1 loss, got " +
                        shape_string(loss));
  }

  std::vector<std::vector<double>> adj(nodes_.size());
  std::vector<std::uint8_t> seen(nodes_.size(), 0);
  auto touch = [&](std::int32_t id) -> std::vector<double>& {
    if (!seen[id]) {
      adj[id].assign(static_cast<std::size_t>(nodes_[id].value.size()), 0.0);
      seen[id] = 1;
    }
    return adj[id];
  };
  touch(loss.node())[0] = 1.0;

  for (std::int32_t id = loss.node(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!seen[id] || !n.needs_grad) continue;
    const std::vector<double>& g = adj[id];
    const Index r = n.value.rows(), c = n.value.cols();

    const bool want0 = n.in0 >= 0 && nodes_[n.in0].needs_grad;
    const bool want1 = n.in1 >= 0 && nodes_[n.in1].needs_grad;

    switch (n.op) {
      case OpKind::kLeaf: {
        if (n.bound) {
          auto& acc = n.bound->grad.mutable_values();
          for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
        }
        break;
      }
      case OpKind::kMatmul: {
        const Tensor& a = nodes_[n.in0].value;
        const Tensor& b = nodes_[n.in1].value;
        const Index s = a.cols();
        if (want0) {
          auto& da = touch(n.in0);
          const auto& bv = b.values();
          for (Index i = 0; i < r; ++i) {
            for (Index k = 0; k < s; ++k) {
              double acc = 0.0;
              for (Index j = 0; j < c; ++j) acc += g[i * c + j] * bv[k * c + j];
              da[i * s + k] += acc;
            }
          }
        }
        if (want1) {
          auto& db = touch(n.in1);
          const auto& av = a.values();
          for (Index i = 0; i < r; ++i) {
            for (Index k = 0; k < s; ++k) {
              const double aik = av[i * s + k];
              for (Index j = 0; j < c; ++j) db[k * c + j] += aik * g[i * c + j];
            }
          }
        }
        break;
      }
      case OpKind::kTranspose: {
        if (want0) {
          auto& da = touch(n.in0);
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) da[j * r + i] += g[i * c + j];
        }
        break;
      }
      case OpKind::kRelu: {
        if (want0) {
          auto& da = touch(n.in0);
          const auto& x = nodes_[n.in0].value.values();
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (x[k] > 0.0) da[k] += g[k];
          }
        }
        break;
      }
      case OpKind::kExp: {
        if (want0) {
          auto& da = touch(n.in0);
          const auto& y = n.value.values();
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += g[k] * y[k];
        }
        break;
      }
      case OpKind::kLog: {
        if (want0) {
          auto& da = touch(n.in0);
          const auto& x = nodes_[n.in0].value.values();
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += g[k] / x[k];
        }
        break;
      }
      case OpKind::kHadamard: {
        const auto& a = nodes_[n.in0].value.values();
        const auto& b = nodes_[n.in1].value.values();
        if (want0) {
          auto& da = touch(n.in0);
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += g[k] * b[k];
        }
        if (want1) {
          auto& db = touch(n.in1);
          for (std::size_t k = 0; k < g.size(); ++k) db[k] += g[k] * a[k];
        }
        break;
      }
      case OpKind::kScalarMix: {
        if (want0) {
          auto& da = touch(n.in0);
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += n.alpha * g[k];
        }
        if (want1) {
          auto& db = touch(n.in1);
          for (std::size_t k = 0; k < g.size(); ++k) db[k] += n.beta * g[k];
        }
        break;
      }
      case OpKind::kAffine: {
        if (want0) {
          auto& da = touch(n.in0);
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += n.alpha * g[k];
        }
        break;
      }
      case OpKind::kRowSoftmax: {
        if (want0) {
          auto& da = touch(n.in0);
          const auto& y = n.value.values();
          for (Index i = 0; i < r; ++i) {
            double dot = 0.0;
            for (Index j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
            for (Index j = 0; j < c; ++j) {
              da[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
            }
          }
        }
        break;
      }
      case OpKind::kConcatCols: {
        const Index ca = n.split;
        if (want0) {
          auto& da = touch(n.in0);
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < ca; ++j) da[i * ca + j] += g[i * c + j];
        }
        if (want1) {
          auto& db = touch(n.in1);
          const Index cb = c - ca;
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < cb; ++j) db[i * cb + j] += g[i * c + ca + j];
        }
        break;
      }
      case OpKind::kSliceRows: {
        if (want0) {
          auto& da = touch(n.in0);
          const Index begin = n.split;
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j)
              da[(begin + i) * c + j] += g[i * c + j];
        }
        break;
      }
      case OpKind::kSumAll: {
        if (want0) {
          auto& da = touch(n.in0);
          for (double& v : da) v += g[0];
        }
        break;
      }
      case OpKind::kRowSums: {
        if (want0) {
          auto& da = touch(n.in0);
          const Index ac = nodes_[n.in0].value.cols();
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < ac; ++j) da[i * ac + j] += g[i];
        }
        break;
      }
      case OpKind::kColSums: {
        if (want0) {
          auto& da = touch(n.in0);
          const Index ar = nodes_[n.in0].value.rows();
          for (Index i = 0; i < ar; ++i)
            for (Index j = 0; j < c; ++j) da[i * c + j] += g[j];
        }
        break;
      }
      case OpKind::kDivRowwise: {
        const auto& y = n.value.values();
        const auto& rv = nodes_[n.in1].value.values();
        if (want0) {
          auto& da = touch(n.in0);
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j)
              da[i * c + j] += g[i * c + j] / rv[i];
        }
        if (want1) {
          auto& dr = touch(n.in1);
          for (Index i = 0; i < r; ++i) {
            double acc = 0.0;
            for (Index j = 0; j < c; ++j) acc += g[i * c + j] * y[i * c + j];
            dr[i] -= acc / rv[i];
          }
        }
        break;
      }
      case OpKind::kDivColwise: {
        const auto& y = n.value.values();
        const auto& cv = nodes_[n.in1].value.values();
        if (want0) {
          auto& da = touch(n.in0);
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j)
              da[i * c + j] += g[i * c + j] / cv[j];
        }
        if (want1) {
          auto& dc = touch(n.in1);
          for (Index j = 0; j < c; ++j) {
            double acc = 0.0;
            for (Index i = 0; i < r; ++i) acc += g[i * c + j] * y[i * c + j];
            dc[j] -= acc / cv[j];
          }
        }
        break;
      }
      case OpKind::kClamp: {
        if (want0) {
          auto& da = touch(n.in0);
          const auto& x = nodes_[n.in0].value.values();
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (x[k] > n.alpha && x[k] < n.beta) da[k] += g[k];
          }
        }
        break;
      }
      case OpKind::kClampPass: {
        if (want0) {
          auto& da = touch(n.in0);
          for (std::size_t k = 0; k < g.size(); ++k) da[k] += g[k];
        }
        break;
      }
    }
  }
}

// --- op wrappers -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul inner dimensions differ: " + shape_string(a) +
                         " * " + shape_string(b));
  }
  Tensor out = matmul_values(a, b);
  ensure_finite(out, "matmul");
  Tape* tape = tape_of(a, b);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kMatmul, tape->intern(a), tape->intern(b),
                    std::move(out));
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  auto& o = out.mutable_values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) o[j * a.rows() + i] = a(i, j);
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kTranspose, a.node(), -1, std::move(out));
}

Tensor relu(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  const auto& x = a.values();
  for (std::size_t k = 0; k < x.size(); ++k) o[k] = x[k] > 0.0 ? x[k] : 0.0;
  ensure_finite(out, "relu");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kRelu, a.node(), -1, std::move(out));
}

Tensor exp(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  const auto& x = a.values();
  for (std::size_t k = 0; k < x.size(); ++k) o[k] = std::exp(x[k]);
  ensure_finite(out, "exp");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kExp, a.node(), -1, std::move(out));
}

Tensor log(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  const auto& x = a.values();
  for (std::size_t k = 0; k < x.size(); ++k) o[k] = std::log(x[k]);
  ensure_finite(out, "log");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kLog, a.node(), -1, std::move(out));
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) {
    throw DimensionError("hadamard shapes differ: " + shape_string(a) +
                         " vs " + shape_string(b));
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index k = 0; k < a.size(); ++k) o[k] = a.values()[k] * b.values()[k];
  ensure_finite(out, "hadamard");
  Tape* tape = tape_of(a, b);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kHadamard, tape->intern(a), tape->intern(b),
                    std::move(out));
}

Tensor scalar_mix(double alpha, const Tensor& a, double beta,
                  const Tensor& b) {
  if (!same_shape(a, b)) {
    throw DimensionError("scalar_mix shapes differ: " + shape_string(a) +
                         " vs " + shape_string(b));
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index k = 0; k < a.size(); ++k) {
    o[k] = alpha * a.values()[k] + beta * b.values()[k];
  }
  ensure_finite(out, "scalar_mix");
  Tape* tape = tape_of(a, b);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kScalarMix, tape->intern(a), tape->intern(b),
                    std::move(out), alpha, beta);
}

Tensor affine(const Tensor& a, double scale, double shift) {
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index k = 0; k < a.size(); ++k) o[k] = scale * a.values()[k] + shift;
  ensure_finite(out, "affine");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kAffine, a.node(), -1, std::move(out),
                        scale, shift);
}

Tensor row_softmax(const Tensor& a, const std::optional<Tensor>& mask) {
  if (mask) {
    if (!same_shape(a, *mask)) {
      throw DimensionError("softmax mask shape " + shape_string(*mask) +
                           " does not match logits " + shape_string(a));
    }
    for (Index k = 0; k < mask->size(); ++k) {
      if (mask->values()[k] < 0.0) {
        throw ContractError("softmax mask must be nonnegative");
      }
    }
  }
  Tensor out = softmax_values(a, mask ? &*mask : nullptr);
  ensure_finite(out, "row_softmax");
  if (!a.recorded()) return out;
  // The mask is a fixed weighting; gradient flows through the logits only, so
  // the node does not need the mask once the forward value is cached.
  return a.tape()->push(Tape::OpKind::kRowSoftmax, a.node(), -1,
                        std::move(out));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols row counts differ: " + shape_string(a) +
                         " vs " + shape_string(b));
  }
  const Index r = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out(r, ca + cb);
  auto& o = out.mutable_values();
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < ca; ++j) o[i * (ca + cb) + j] = a(i, j);
    for (Index j = 0; j < cb; ++j) o[i * (ca + cb) + ca + j] = b(i, j);
  }
  ensure_finite(out, "concat_cols");
  Tape* tape = tape_of(a, b);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kConcatCols, tape->intern(a),
                    tape->intern(b), std::move(out), 0.0, 0.0, ca);
}

Tensor slice_rows(const Tensor& a, Index begin, Index end) {
  if (begin < 0 || end > a.rows() || begin >= end) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") out of range for " +
                         shape_string(a));
  }
  const Index c = a.cols();
  Tensor out(end - begin, c);
  auto& o = out.mutable_values();
  for (Index i = begin; i < end; ++i)
    for (Index j = 0; j < c; ++j) o[(i - begin) * c + j] = a(i, j);
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kSliceRows, a.node(), -1, std::move(out),
                        0.0, 0.0, begin);
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  Tensor out = Tensor::scalar(acc);
  ensure_finite(out, "sum_all");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kSumAll, a.node(), -1, std::move(out));
}

Tensor row_sums(const Tensor& a) {
  Tensor out(a.rows(), 1);
  auto& o = out.mutable_values();
  for (Index i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < a.cols(); ++j) acc += a(i, j);
    o[i] = acc;
  }
  ensure_finite(out, "row_sums");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kRowSums, a.node(), -1, std::move(out));
}

Tensor col_sums(const Tensor& a) {
  Tensor out(1, a.cols());
  auto& o = out.mutable_values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) o[j] += a(i, j);
  ensure_finite(out, "col_sums");
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kColSums, a.node(), -1, std::move(out));
}

Tensor div_rowwise(const Tensor& a, const Tensor& r) {
  if (r.rows() != a.rows() || r.cols() != 1) {
    throw DimensionError("div_rowwise divisor must be " +
                         std::to_string(a.rows()) + "x1, got " +
                         shape_string(r));
  }
  for (Index i = 0; i < r.rows(); ++i) {
    if (r(i, 0) == 0.0) {
      throw DegenerateRowError("zero divisor at row " + std::to_string(i));
    }
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) o[i * a.cols() + j] = a(i, j) / r(i, 0);
  ensure_finite(out, "div_rowwise");
  Tape* tape = tape_of(a, r);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kDivRowwise, tape->intern(a),
                    tape->intern(r), std::move(out));
}

Tensor div_colwise(const Tensor& a, const Tensor& c) {
  if (c.cols() != a.cols() || c.rows() != 1) {
    throw DimensionError("div_colwise divisor must be 1x" +
                         std::to_string(a.cols()) + ", got " +
                         shape_string(c));
  }
  for (Index j = 0; j < c.cols(); ++j) {
    if (c(0, j) == 0.0) {
      throw DegenerateRowError("zero divisor at column " + std::to_string(j));
    }
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) o[i * a.cols() + j] = a(i, j) / c(0, j);
  ensure_finite(out, "div_colwise");
  Tape* tape = tape_of(a, c);
  if (!tape) return out;
  return tape->push(Tape::OpKind::kDivColwise, tape->intern(a),
                    tape->intern(c), std::move(out));
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo < hi)) {
    throw ContractError("clamp bounds must satisfy lo < hi");
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index k = 0; k < a.size(); ++k) {
    o[k] = std::min(hi, std::max(lo, a.values()[k]));
  }
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kClamp, a.node(), -1, std::move(out), lo,
                        hi);
}

Tensor clamp_passthrough(const Tensor& a, double lo, double hi) {
  if (!(lo < hi)) {
    throw ContractError("clamp bounds must satisfy lo < hi");
  }
  Tensor out(a.rows(), a.cols());
  auto& o = out.mutable_values();
  for (Index k = 0; k < a.size(); ++k) {
    o[k] = std::min(hi, std::max(lo, a.values()[k]));
  }
  if (!a.recorded()) return out;
  return a.tape()->push(Tape::OpKind::kClampPass, a.node(), -1, std::move(out),
                        lo, hi);
}

}  // namespace glmnet
