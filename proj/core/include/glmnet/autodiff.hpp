#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glmnet/param_store.hpp"
#include "glmnet/tensor.hpp"

namespace glmnet {

/// Records every op applied to tensors created on it, in issue order (so the
/// record is topologically sorted by construction), and replays the adjoint
/// rules in reverse on backward(). One tape per training step; a tape is
/// confined to a single session and never shared across threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Intern a detached value as a leaf. Leaves have no gradient storage
  /// unless bound to a parameter.
  Tensor leaf(const Tensor& value);

  /// Leaf bound to a parameter: backward() accumulates d(loss)/d(param) into
  /// the store's gradient slot. The store must outlive the tape.
  Tensor param(ParamStore& store, const std::string& name);

  /// Reverse sweep from a scalar (1x1) loss recorded on this tape. Visits
  /// every reachable node exactly once in reverse topological order and adds
  /// into bound parameters' gradient accumulators (no implicit zeroing, so
  /// gradients of separate losses sum).
  void backward(const Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class OpKind : std::uint8_t {
    kLeaf,
    kMatmul,
    kTranspose,
    kRelu,
    kExp,
    kLog,
    kHadamard,
    kScalarMix,   // alpha*a + beta*b
    kAffine,      // alpha*a + beta
    kRowSoftmax,  // optional nonnegative mask baked into the forward value
    kConcatCols,
    kSliceRows,
    kSumAll,
    kRowSums,
    kColSums,
    kDivRowwise,
    kDivColwise,
    kClamp,      // alpha = lo, beta = hi
    kClampPass,  // clamp values, but backward treats it as the identity
  };

  struct Node {
    OpKind op = OpKind::kLeaf;
    std::int32_t in0 = -1;
    std::int32_t in1 = -1;
    double alpha = 0.0;
    double beta = 0.0;
    Index split = 0;  // slice begin / concat left width
    Tensor value;
    Param* bound = nullptr;
    bool needs_grad = false;
  };

  std::int32_t intern(const Tensor& t);
  Tensor push(OpKind op, std::int32_t in0, std::int32_t in1, Tensor value,
              double alpha = 0.0, double beta = 0.0, Index split = 0);

  std::vector<Node> nodes_;

  friend Tensor matmul(const Tensor&, const Tensor&);
  friend Tensor transpose(const Tensor&);
  friend Tensor relu(const Tensor&);
  friend Tensor exp(const Tensor&);
  friend Tensor log(const Tensor&);
  friend Tensor hadamard(const Tensor&, const Tensor&);
  friend Tensor scalar_mix(double, const Tensor&, double, const Tensor&);
  friend Tensor affine(const Tensor&, double, double);
  friend Tensor row_softmax(const Tensor&, const std::optional<Tensor>&);
  friend Tensor concat_cols(const Tensor&, const Tensor&);
  friend Tensor slice_rows(const Tensor&, Index, Index);
  friend Tensor sum_all(const Tensor&);
  friend Tensor row_sums(const Tensor&);
  friend Tensor col_sums(const Tensor&);
  friend Tensor div_rowwise(const Tensor&, const Tensor&);
  friend Tensor div_colwise(const Tensor&, const Tensor&);
  friend Tensor clamp(const Tensor&, double, double);
  friend Tensor clamp_passthrough(const Tensor&, double, double);
};

// --- Recorded ops -----------------------------------------------------------
//
// Each op computes eagerly. If any input is recorded, the result is recorded
// on that tape (detached inputs are interned as constant leaves); if all
// inputs are detached the result is a plain detached tensor, so the same
// forward code serves training and evaluation.

/// Standard matrix product; gradients G*b^T and a^T*G.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

/// Elementwise max(0, x); subgradient at 0 taken as 0.
Tensor relu(const Tensor& a);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

/// Elementwise product.
Tensor hadamard(const Tensor& a, const Tensor& b);

/// alpha*a + beta*b for same-shape tensors.
Tensor scalar_mix(double alpha, const Tensor& a, double beta, const Tensor& b);

/// Elementwise scale*x + shift.
Tensor affine(const Tensor& a, double scale, double shift);

/// Per-row softmax with max-subtraction. With a mask, entry (i,j) becomes
/// mask(i,j)*exp(a(i,j)) normalized over the row; each mask row needs at
/// least one strictly positive weight. Gradient flows to the logits only.
Tensor row_softmax(const Tensor& a, const std::optional<Tensor>& mask = {});

/// Columns of a followed by columns of b; the backward pass splits the
/// incoming gradient at a's width.
Tensor concat_cols(const Tensor& a, const Tensor& b);

/// Rows [begin, end) of a.
Tensor slice_rows(const Tensor& a, Index begin, Index end);

/// Sum of all entries as a 1x1 tensor.
Tensor sum_all(const Tensor& a);

Tensor row_sums(const Tensor& a);  // r x 1
Tensor col_sums(const Tensor& a);  // 1 x c

/// a(i,j) / r(i,0); r must be r x 1 with nonzero entries.
Tensor div_rowwise(const Tensor& a, const Tensor& r);
/// a(i,j) / c(0,j); c must be 1 x c with nonzero entries.
Tensor div_colwise(const Tensor& a, const Tensor& c);

/// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
Tensor clamp(const Tensor& a, double lo, double hi);

/// Clamp to [lo, hi] but let the full gradient through, as if the op were
/// the identity. Keeps saturated entries correctable when the clamp only
/// exists to make a following log finite.
Tensor clamp_passthrough(const Tensor& a, double lo, double hi);

}  // namespace glmnet
