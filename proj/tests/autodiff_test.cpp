#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "glmnet/autodiff.hpp"
#include "glmnet/errors.hpp"
#include "glmnet/grad_check.hpp"
#include "glmnet/param_store.hpp"
#include "test_util.hpp"

using namespace glmnet;
using glmtest::random_tensor;

TEST_CASE("tensor construction and access") {
  Tensor t{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 2);
  CHECK(t(1, 0) == 3.0);
  CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0}), DimensionError);

  // Copies share storage until one side writes.
  Tensor copy = t;
  copy.at(0, 0) = 9.0;
  CHECK(t(0, 0) == 1.0);
  CHECK(copy(0, 0) == 9.0);
}

TEST_CASE("recorded tensors are immutable") {
  Tape tape;
  Tensor a = tape.leaf(Tensor{{1.0, 2.0}});
  CHECK_THROWS_AS(a.at(0, 0) = 5.0, ContractError);
  Tensor d = a.detached();
  d.at(0, 0) = 5.0;
  CHECK(d(0, 0) == 5.0);
}

TEST_CASE("matmul identity and projector") {
  Tensor m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(max_abs_diff(matmul(Tensor::identity(2), m), m) == 0.0);

  Tensor proj{{1.0, 0.0}, {0.0, 0.0}};
  Tensor v{{5.0}, {7.0}};
  Tensor out = matmul(proj, v);
  CHECK(out(0, 0) == 5.0);
  CHECK(out(1, 0) == 0.0);

  CHECK_THROWS_AS(matmul(Tensor(2, 3), Tensor(2, 3)), DimensionError);
}

TEST_CASE("matmul gradient matches hand-rolled central differences") {
  std::mt19937_64 rng(7);
  Tensor a0 = random_tensor(3, 4, rng);
  Tensor b0 = random_tensor(4, 2, rng);

  ParamStore store;
  store.create("a", a0.detached());

  auto loss_at = [&](const Tensor& a_val) {
    return sum_all(matmul(a_val, b0))(0, 0);
  };

  store.zero_grads();
  Tape tape;
  Tensor a = tape.param(store, "a");
  tape.backward(sum_all(matmul(a, b0)));

  const double h = 1e-5;
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 4; ++j) {
      Tensor up = a0.detached();
      up.at(i, j) += h;
      Tensor down = a0.detached();
      down.at(i, j) -= h;
      const double numeric = (loss_at(up) - loss_at(down)) / (2.0 * h);
      const double analytic = store.entry("a").grad(i, j);
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("relu basics") {
  Tensor out = relu(Tensor{{-1.0, 2.0}});
  CHECK(out(0, 0) == 0.0);
  CHECK(out(0, 1) == 2.0);

  std::mt19937_64 rng(3);
  Tensor pos = random_tensor(3, 3, rng, 0.5, 2.0);
  CHECK(max_abs_diff(relu(pos), pos) == 0.0);
}

TEST_CASE("row_softmax values") {
  Tensor uniform = row_softmax(Tensor(1, 3));
  for (Index j = 0; j < 3; ++j) CHECK(uniform(0, j) == doctest::Approx(1.0 / 3));

  Tensor masked = row_softmax(Tensor(1, 3), Tensor{{1.0, 0.0, 1.0}});
  CHECK(masked(0, 0) == doctest::Approx(0.5));
  CHECK(masked(0, 1) == 0.0);
  CHECK(masked(0, 2) == doctest::Approx(0.5));

  Tensor logs{{std::log(1.0), std::log(2.0), std::log(3.0)}};
  Tensor out = row_softmax(logs);
  CHECK(std::abs(out(0, 0) - 1.0 / 6) < 1e-14);
  CHECK(std::abs(out(0, 1) - 2.0 / 6) < 1e-14);
  CHECK(std::abs(out(0, 2) - 3.0 / 6) < 1e-14);
}

TEST_CASE("row_softmax properties and errors") {
  std::mt19937_64 rng(11);
  Tensor logits = random_tensor(5, 6, rng, -3.0, 3.0);
  Tensor out = row_softmax(logits);
  for (Index i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < 6; ++j) sum += out(i, j);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  // Shifting one row of logits by a constant does not move the output.
  Tensor shifted = logits.detached();
  for (Index j = 0; j < 6; ++j) shifted.at(2, j) += 13.75;
  CHECK(max_abs_diff(row_softmax(shifted), out) < 1e-12);

  Tensor bad_mask(2, 2);
  bad_mask.at(0, 0) = 1.0;  // second row all zero
  CHECK_THROWS_AS(row_softmax(Tensor(2, 2), bad_mask), DegenerateRowError);
  Tensor negative{{1.0, -1.0}};
  CHECK_THROWS_AS(row_softmax(Tensor(1, 2), negative), ContractError);
  CHECK_THROWS_AS(row_softmax(Tensor(2, 2), Tensor(3, 3)), DimensionError);
}

TEST_CASE("concat_cols") {
  Tensor out = concat_cols(Tensor{{1.0}, {2.0}}, Tensor{{3.0}, {4.0}});
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 3.0);
  CHECK(out(1, 0) == 2.0);
  CHECK(out(1, 1) == 4.0);

  // Zero-width right operand is the identity.
  Tensor left{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(max_abs_diff(concat_cols(left, Tensor(2, 0)), left) == 0.0);

  CHECK_THROWS_AS(concat_cols(Tensor(2, 1), Tensor(3, 1)), DimensionError);
}

TEST_CASE("scalar_mix") {
  std::mt19937_64 rng(5);
  Tensor a = random_tensor(3, 3, rng);
  Tensor b = random_tensor(3, 3, rng);
  CHECK(max_abs_diff(scalar_mix(1.0, a, 0.0, b), a) == 0.0);

  Tensor collinear = scalar_mix(0.25, a, 0.5, a);
  for (Index k = 0; k < a.size(); ++k) {
    CHECK(collinear.values()[k] == doctest::Approx(0.75 * a.values()[k]));
  }

  // The smoothing-layer mixing at its default weight.
  Tensor mixed = scalar_mix(1.0 - 0.5, a, 0.5, b);
  for (Index k = 0; k < a.size(); ++k) {
    CHECK(mixed.values()[k] ==
          doctest::Approx(0.5 * a.values()[k] + 0.5 * b.values()[k]));
  }
}

TEST_CASE("finite-difference check across every differentiable op") {
  std::mt19937_64 rng(17);
  // Weighted sums make the cotangent non-uniform so backward rules cannot
  // pass by accident.
  Tensor w34 = random_tensor(3, 4, rng);
  Tensor w43 = random_tensor(4, 3, rng);
  Tensor w33 = random_tensor(3, 3, rng);
  Tensor w31 = random_tensor(3, 1, rng);
  Tensor w13 = random_tensor(1, 3, rng);
  Tensor w38 = random_tensor(3, 8, rng);
  Tensor w21 = random_tensor(2, 1, rng) ;

  ParamStore store;
  store.create("a", random_tensor(3, 4, rng));
  store.create("b", random_tensor(4, 3, rng));
  // Bounded away from relu/clamp kinks and from zero for log/div.
  store.create("pos", random_tensor(3, 4, rng, 0.5, 1.5));
  store.create("div_r", random_tensor(3, 1, rng, 0.7, 1.3));
  store.create("div_c", random_tensor(1, 4, rng, 0.7, 1.3));

  using Forward = std::function<Tensor(Tape&)>;
  std::vector<std::pair<const char*, Forward>> cases;
  cases.emplace_back("matmul", [&](Tape& t) {
    return sum_all(hadamard(w33, matmul(t.param(store, "a"),
                                        t.param(store, "b"))));
  });
  cases.emplace_back("transpose", [&](Tape& t) {
    return sum_all(hadamard(w43, transpose(t.param(store, "a"))));
  });
  cases.emplace_back("relu", [&](Tape& t) {
    return sum_all(hadamard(w34, relu(t.param(store, "pos"))));
  });
  cases.emplace_back("exp", [&](Tape& t) {
    return sum_all(hadamard(w34, exp(t.param(store, "a"))));
  });
  cases.emplace_back("log", [&](Tape& t) {
    return sum_all(hadamard(w34, log(t.param(store, "pos"))));
  });
  cases.emplace_back("hadamard", [&](Tape& t) {
    return sum_all(hadamard(w34, hadamard(t.param(store, "a"),
                                          t.param(store, "pos"))));
  });
  cases.emplace_back("scalar_mix", [&](Tape& t) {
    return sum_all(hadamard(
        w34, scalar_mix(0.3, t.param(store, "a"), -1.7,
                        t.param(store, "pos"))));
  });
  cases.emplace_back("affine", [&](Tape& t) {
    return sum_all(hadamard(w34, affine(t.param(store, "a"), 2.5, -0.75)));
  });
  cases.emplace_back("row_softmax", [&](Tape& t) {
    return sum_all(hadamard(w34, row_softmax(t.param(store, "a"))));
  });
  Tensor mask{{1.0, 0.0, 1.0, 1.0},
              {0.0, 2.0, 1.0, 0.0},
              {1.0, 1.0, 0.0, 1.0}};
  cases.emplace_back("row_softmax_masked", [&](Tape& t) {
    return sum_all(hadamard(w34, row_softmax(t.param(store, "a"), mask)));
  });
  cases.emplace_back("concat_cols", [&](Tape& t) {
    return sum_all(hadamard(w38, concat_cols(transpose(t.param(store, "b")),
                                             t.param(store, "a"))));
  });
  cases.emplace_back("slice_rows", [&](Tape& t) {
    return sum_all(hadamard(w21, slice_rows(t.param(store, "div_r"), 1, 3)));
  });
  cases.emplace_back("row_sums", [&](Tape& t) {
    return sum_all(hadamard(w31, row_sums(t.param(store, "a"))));
  });
  cases.emplace_back("col_sums", [&](Tape& t) {
    return sum_all(hadamard(w13, col_sums(t.param(store, "b"))));
  });
  cases.emplace_back("div_rowwise", [&](Tape& t) {
    return sum_all(hadamard(w34, div_rowwise(t.param(store, "a"),
                                             t.param(store, "div_r"))));
  });
  cases.emplace_back("div_colwise", [&](Tape& t) {
    return sum_all(hadamard(w34, div_colwise(t.param(store, "a"),
                                             t.param(store, "div_c"))));
  });
  cases.emplace_back("clamp", [&](Tape& t) {
    return sum_all(hadamard(w34, clamp(t.param(store, "pos"), 0.01, 10.0)));
  });

  for (auto& [name, forward] : cases) {
    CAPTURE(name);
    GradCheckReport report = grad_check(forward, store, 1e-5, 1e-6);
    INFO(report.to_string());
    CHECK(report.passed);
  }
}

TEST_CASE("backward on simple losses") {
  ParamStore store;
  std::mt19937_64 rng(23);
  store.create("p", random_tensor(3, 2, rng));

  SUBCASE("sum gives all-ones gradient") {
    store.zero_grads();
    Tape tape;
    tape.backward(sum_all(tape.param(store, "p")));
    const Tensor& g = store.entry("p").grad;
    for (double v : g.values()) CHECK(v == 1.0);
  }

  SUBCASE("half squared norm gives the parameter back") {
    store.zero_grads();
    Tape tape;
    Tensor p = tape.param(store, "p");
    tape.backward(affine(sum_all(hadamard(p, p)), 0.5, 0.0));
    CHECK(max_abs_diff(store.entry("p").grad, store.entry("p").value) < 1e-15);
  }

  SUBCASE("gradients accumulate across backward calls") {
    store.zero_grads();
    Tape tape;
    Tensor loss = sum_all(tape.param(store, "p"));
    tape.backward(loss);
    tape.backward(loss);
    for (double v : store.entry("p").grad.values()) CHECK(v == 2.0);
  }
}

TEST_CASE("backward is linear over losses") {
  ParamStore store;
  std::mt19937_64 rng(29);
  store.create("p", random_tensor(4, 4, rng));
  Tensor c1 = random_tensor(4, 4, rng);
  Tensor c2 = random_tensor(4, 4, rng);

  store.zero_grads();
  {
    Tape tape;
    Tensor p = tape.param(store, "p");
    Tensor joint = scalar_mix(1.0, sum_all(hadamard(p, c1)), 1.0,
                              sum_all(hadamard(p, c2)));
    tape.backward(joint);
  }
  Tensor joint_grad = store.entry("p").grad.detached();

  store.zero_grads();
  {
    Tape tape;
    Tensor p = tape.param(store, "p");
    tape.backward(sum_all(hadamard(p, c1)));
    tape.backward(sum_all(hadamard(p, c2)));
  }
  CHECK(max_abs_diff(joint_grad, store.entry("p").grad) < 1e-12);
}

TEST_CASE("backward contract violations") {
  ParamStore store;
  store.create("p", Tensor::full(2, 2, 1.0));
  Tape tape;
  Tensor p = tape.param(store, "p");
  CHECK_THROWS_AS(tape.backward(relu(p)), ContractError);  // non-scalar

  Tape other;
  CHECK_THROWS_AS(other.backward(sum_all(p)), ContractError);
  CHECK_THROWS_AS(scalar_mix(1.0, p, 1.0, other.leaf(Tensor(2, 2))),
                  ContractError);
}

TEST_CASE("replaying the same computation is bit-identical") {
  std::mt19937_64 rng(31);
  Tensor a = random_tensor(4, 4, rng);
  Tensor b = random_tensor(4, 4, rng);
  auto run = [&]() {
    Tape tape;
    Tensor out = row_softmax(matmul(relu(tape.leaf(a)), tape.leaf(b)));
    return out.detached();
  };
  Tensor first = run();
  Tensor second = run();
  for (Index k = 0; k < first.size(); ++k) {
    CHECK(first.values()[k] == second.values()[k]);
  }
}

TEST_CASE("non-finite forward values are rejected") {
  CHECK_THROWS_AS(exp(Tensor::full(1, 1, 1000.0)), NumericError);
  CHECK_THROWS_AS(log(Tensor(1, 1)), NumericError);
}

TEST_CASE("grad_check on a linear model is exact to 1e-8") {
  ParamStore store;
  std::mt19937_64 rng(37);
  store.create("w", random_tensor(4, 3, rng));
  Tensor x = random_tensor(5, 4, rng);

  auto forward = [&](Tape& tape) {
    return sum_all(matmul(x, tape.param(store, "w")));
  };
  GradCheckReport report = grad_check(forward, store, 1e-5, 1e-8);
  INFO(report.to_string());
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("grad_check through relu away from the kink") {
  ParamStore store;
  std::mt19937_64 rng(41);
  // Entries at least 0.5 in magnitude: far beyond 10x the step.
  Tensor init(3, 3);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      const double sign = unit_uniform(rng) < 0.5 ? -1.0 : 1.0;
      init.at(i, j) = sign * uniform_in(rng, 0.5, 1.5);
    }
  }
  store.create("p", init);
  Tensor weight = random_tensor(3, 3, rng);

  auto forward = [&](Tape& tape) {
    return sum_all(hadamard(weight, relu(tape.param(store, "p"))));
  };
  GradCheckReport report = grad_check(forward, store, 1e-5, 1e-6);
  INFO(report.to_string());
  CHECK(report.passed);
}
