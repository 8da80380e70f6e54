#include "glmnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "glmnet/errors.hpp"

namespace glmnet {

namespace {

double loss_value(const std::function<Tensor(Tape&)>& forward) {
  Tape tape;
  Tensor loss = forward(tape);
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("grad_check forward must return a 1x1 loss");
  }
  return loss(0, 0);
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& forward,
                           ParamStore& params, const GradCheckOptions& opts) {
  GradCheckReport report;
  report.tolerance = opts.tolerance;

  // Analytic pass.
  params.zero_grads();
  {
    Tape tape;
    Tensor loss = forward(tape);
    tape.backward(loss);
  }
  std::map<std::string, Tensor> analytic;
  for (const auto& [name, p] : params.entries()) {
    analytic.emplace(name, p.grad.detached());
  }

  std::mt19937_64 rng(opts.seed);
  for (auto& [name, p] : params.entries()) {
    GradCheckParamReport pr;
    pr.name = name;

    std::vector<Index> picks(static_cast<std::size_t>(p.value.size()));
    std::iota(picks.begin(), picks.end(), Index{0});
    if (static_cast<int>(picks.size()) > opts.entries_per_param) {
      // Seeded Fisher-Yates prefix; independent of std::shuffle internals.
      for (int i = 0; i < opts.entries_per_param; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng() % (picks.size() - i));
        std::swap(picks[i], picks[j]);
      }
      picks.resize(static_cast<std::size_t>(opts.entries_per_param));
    }

    const Tensor& grads = analytic.at(name);
    for (Index flat : picks) {
      const Index i = flat / p.value.cols();
      const Index j = flat % p.value.cols();
      const double saved = p.value(i, j);
      p.value.at(i, j) = saved + opts.step;
      const double up = loss_value(forward);
      p.value.at(i, j) = saved - opts.step;
      const double down = loss_value(forward);
      p.value.at(i, j) = saved;

      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = grads(i, j);
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      ++pr.entries_checked;
      if (rel > pr.max_rel_error) {
        pr.max_rel_error = rel;
        pr.worst_row = i;
        pr.worst_col = j;
        pr.worst_analytic = a;
        pr.worst_numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, pr.max_rel_error);
    report.params.push_back(std::move(pr));
  }
  report.passed = report.max_rel_error <= opts.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& forward,
                           ParamStore& params, double step, double tolerance) {
  GradCheckOptions opts;
  opts.step = step;
  opts.tolerance = tolerance;
  return grad_check(forward, params, opts);
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << "  max rel err " << max_rel_error
     << "  (tol " << tolerance << ")\n";
  for (const auto& p : params) {
    os << "  " << p.name << ": checked " << p.entries_checked
       << " entries, max rel err " << p.max_rel_error << " at (" << p.worst_row
       << "," << p.worst_col << ") analytic " << p.worst_analytic
       << " numeric " << p.worst_numeric << "\n";
  }
  return os.str();
}

}  // namespace glmnet
