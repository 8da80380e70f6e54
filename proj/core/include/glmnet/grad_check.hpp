#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "glmnet/autodiff.hpp"
#include "glmnet/param_store.hpp"

namespace glmnet {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Per parameter, check all entries when there are at most this many,
  // otherwise a seeded random subsample of this size.
  int entries_per_param = 32;
  std::uint64_t seed = 0;
};

struct GradCheckParamReport {
  std::string name;
  int entries_checked = 0;
  double max_rel_error = 0.0;
  Index worst_row = 0;
  Index worst_col = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  bool passed = false;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::vector<GradCheckParamReport> params;

  std::string to_string() const;
};

/// Compares the tape's gradients against central finite differences.
///
/// `forward` must build the scalar loss on the supplied tape from the current
/// store contents and be deterministic given the parameter values. Relative
/// error is |analytic - numeric| / max(1, |analytic|, |numeric|). Reports,
/// never throws on mismatch.
GradCheckReport grad_check(const std::function<Tensor(Tape&)>& forward,
                           ParamStore& params, const GradCheckOptions& opts);

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& forward,
                           ParamStore& params, double step, double tolerance);

}  // namespace glmnet
