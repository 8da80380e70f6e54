#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "glmnet/errors.hpp"
#include "glmnet/grad_check.hpp"
#include "glmnet/match.hpp"
#include "test_util.hpp"

using namespace glmnet;
using glmtest::random_tensor;

namespace {

double assignment_score(const Tensor& scores, const std::vector<Index>& cols) {
  double total = 0.0;
  for (Index i = 0; i < static_cast<Index>(cols.size()); ++i) {
    if (cols[i] >= 0) total += scores(i, cols[i]);
  }
  return total;
}

// Exhaustive best assignment over all column permutations (square only).
std::pair<double, std::vector<Index>> best_by_enumeration(
    const Tensor& scores) {
  const Index n = scores.rows();
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = -1e300;
  std::vector<Index> best_perm;
  do {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += scores(i, perm[i]);
    if (total > best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_perm};
}

Tensor random_positive(Index r, Index c, std::mt19937_64& rng) {
  return random_tensor(r, c, rng, 0.05, 2.0);
}

}  // namespace

TEST_CASE("ground truth validation") {
  GroundTruth ok = GroundTruth::from_matrix(Tensor{{0.0, 1.0}, {0.0, 0.0}});
  CHECK(ok.match_count() == 1);
  CHECK_THROWS_AS(GroundTruth::from_matrix(Tensor{{1.0, 1.0}, {0.0, 0.0}}),
                  ContractError);
  CHECK_THROWS_AS(GroundTruth::from_matrix(Tensor{{1.0, 0.0}, {1.0, 0.0}}),
                  ContractError);
  CHECK_THROWS_AS(GroundTruth::from_matrix(Tensor{{0.5, 0.0}, {0.0, 1.0}}),
                  ContractError);
}

TEST_CASE("affinity matrix") {
  std::mt19937_64 rng(1);

  SUBCASE("zero metric gives equal entries") {
    EmbeddingPair emb{random_tensor(3, 4, rng), random_tensor(5, 4, rng)};
    Tensor c = affinity_matrix(emb, Tensor::zeros(4, 4), 2.0);
    for (double v : c.values()) CHECK(v == doctest::Approx(1.0));
  }

  SUBCASE("identity embeddings make the diagonal dominate") {
    const double temp = 2.0;
    EmbeddingPair emb{Tensor::identity(3), Tensor::identity(3)};
    Tensor c = affinity_matrix(emb, affine(Tensor::identity(3), temp, 0.0),
                               temp);
    for (Index i = 0; i < 3; ++i) {
      CHECK(c(i, i) == doctest::Approx(1.0));
      for (Index j = 0; j < 3; ++j) {
        if (i != j) {
          CHECK(c(i, j) == doctest::Approx(std::exp(-1.0)));
          CHECK(c(i, i) > c(i, j));
        }
      }
    }
  }

  SUBCASE("strictly positive for any finite input") {
    EmbeddingPair emb{random_tensor(4, 3, rng, -50.0, 50.0),
                      random_tensor(4, 3, rng, -50.0, 50.0)};
    Tensor c = affinity_matrix(emb, random_tensor(3, 3, rng), 1.0);
    for (double v : c.values()) CHECK(v > 0.0);
  }

  CHECK_THROWS_AS(affinity_matrix({Tensor(2, 2), Tensor(2, 2)},
                                  Tensor::identity(2), 0.0),
                  ContractError);
}

TEST_CASE("sinkhorn contracts") {
  std::mt19937_64 rng(2);

  SUBCASE("doubly stochastic input is a fixed point") {
    Tensor ds{{0.4, 0.6}, {0.6, 0.4}};
    CHECK(max_abs_diff(sinkhorn(ds, 5), ds) < 1e-9);
  }

  SUBCASE("all-ones becomes uniform after one iteration") {
    Tensor c = sinkhorn(Tensor::full(4, 4, 1.0), 1);
    for (double v : c.values()) CHECK(v == doctest::Approx(0.25));
  }

  SUBCASE("random positive 4x4 balances within 1e-6 after 20 iterations") {
    for (int trial = 0; trial < 20; ++trial) {
      Tensor c = sinkhorn(random_positive(4, 4, rng), 20);
      for (Index i = 0; i < 4; ++i) {
        double rs = 0.0, cs = 0.0;
        for (Index j = 0; j < 4; ++j) {
          rs += c(i, j);
          cs += c(j, i);
        }
        CHECK(std::abs(rs - 1.0) < 1e-6);
        CHECK(std::abs(cs - 1.0) < 1e-6);
      }
    }
  }

  SUBCASE("positive rescaling cancels in the first normalization") {
    Tensor input = random_positive(5, 5, rng);
    Tensor scaled = input.detached();
    for (double& v : scaled.mutable_values()) v *= 123.0;
    CHECK(max_abs_diff(sinkhorn(input, 20), sinkhorn(scaled, 20)) < 1e-9);
  }

  SUBCASE("wide rectangles end row-stochastic, tall ones column-stochastic") {
    Tensor wide = sinkhorn(random_positive(3, 5, rng), 20);
    for (Index i = 0; i < 3; ++i) {
      double rs = 0.0;
      for (Index j = 0; j < 5; ++j) rs += wide(i, j);
      // Exact up to the epsilon guard in the divisor.
      CHECK(std::abs(rs - 1.0) < 1e-9);
    }
    for (Index j = 0; j < 5; ++j) {
      double cs = 0.0;
      for (Index i = 0; i < 3; ++i) cs += wide(i, j);
      CHECK(cs <= 1.0 + 1e-6);
    }

    Tensor tall = sinkhorn(random_positive(5, 3, rng), 20);
    for (Index j = 0; j < 3; ++j) {
      double cs = 0.0;
      for (Index i = 0; i < 5; ++i) cs += tall(i, j);
      CHECK(std::abs(cs - 1.0) < 1e-9);
    }
  }

  CHECK_THROWS_AS(sinkhorn(Tensor(2, 2), 20), ContractError);
  CHECK_THROWS_AS(sinkhorn(Tensor::full(2, 2, 1.0), 0), ContractError);
}

TEST_CASE("constraint loss closed form") {
  SUBCASE("permutation matrices cost nothing") {
    Tensor perm{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
    CHECK(constraint_loss(perm)(0, 0) == 0.0);
    CHECK(constraint_loss_bruteforce(perm) == 0.0);
  }

  SUBCASE("uniform 2x2 costs exactly 2") {
    Tensor c = Tensor::full(2, 2, 0.5);
    CHECK(constraint_loss(c)(0, 0) == doctest::Approx(2.0));
    CHECK(constraint_loss_bruteforce(c) == doctest::Approx(2.0));
  }

  SUBCASE("single entry has no conflicting pair") {
    CHECK(constraint_loss(Tensor::full(1, 1, 0.7))(0, 0) == 0.0);
    CHECK(constraint_loss_bruteforce(Tensor::full(1, 1, 0.7)) == 0.0);
  }

  SUBCASE("closed form equals the materialized quadratic form") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const Index m = 2 + static_cast<Index>(rng() % 6);
      const Index n = 2 + static_cast<Index>(rng() % 6);
      Tensor c = random_tensor(m, n, rng, 0.0, 1.0);
      const double fast = constraint_loss(c)(0, 0);
      const double slow = constraint_loss_bruteforce(c);
      CHECK(std::abs(fast - slow) < 1e-10);
      CHECK(fast >= 0.0);
    }
  }

  SUBCASE("zero exactly when no two positive entries share a line") {
    Tensor scattered(3, 4);
    scattered.at(0, 2) = 0.3;
    scattered.at(1, 0) = 0.9;
    scattered.at(2, 3) = 0.4;
    CHECK(constraint_loss(scattered)(0, 0) == 0.0);
    scattered.at(2, 0) = 0.1;  // now shares a column
    CHECK(constraint_loss(scattered)(0, 0) > 0.0);
  }

  CHECK_THROWS_AS(constraint_loss(Tensor{{-0.1}}), ContractError);
  CHECK_THROWS_AS(constraint_loss_bruteforce(Tensor(101, 101)), ContractError);
}

TEST_CASE("constraint loss gradient") {
  std::mt19937_64 rng(4);
  ParamStore store;
  store.create("c", random_tensor(4, 5, rng, 0.1, 0.9));
  auto forward = [&](Tape& tape) {
    return constraint_loss(tape.param(store, "c"));
  };
  GradCheckReport report = grad_check(forward, store, 1e-5, 1e-5);
  INFO(report.to_string());
  CHECK(report.passed);
}

TEST_CASE("cross entropy loss") {
  GroundTruth truth = GroundTruth::from_matrix(Tensor::identity(2));

  SUBCASE("perfect prediction costs only the clamp epsilon") {
    CHECK(cross_entropy_loss(Tensor::identity(2), truth)(0, 0) ==
          doctest::Approx(0.0).epsilon(1e-5));
  }

  SUBCASE("uniform half on 2x2 against the identity costs 4 ln 2") {
    const double loss =
        cross_entropy_loss(Tensor::full(2, 2, 0.5), truth)(0, 0);
    CHECK(loss == doctest::Approx(4.0 * std::log(2.0)));
    CHECK(loss == doctest::Approx(2.7726).epsilon(1e-4));
  }

  SUBCASE("nonnegative and minimized at the truth") {
    std::mt19937_64 rng(5);
    const double at_truth =
        cross_entropy_loss(Tensor::identity(2), truth)(0, 0);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor c = random_tensor(2, 2, rng, 0.0, 1.0);
      const double loss = cross_entropy_loss(c, truth)(0, 0);
      CHECK(loss >= 0.0);
      CHECK(loss >= at_truth);
    }
  }

  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(6);
    GroundTruth t5 = GroundTruth::from_matrix(Tensor::identity(5));
    ParamStore store;
    store.create("c", random_tensor(5, 5, rng, 0.15, 0.85));
    auto forward = [&](Tape& tape) {
      return cross_entropy_loss(tape.param(store, "c"), t5);
    };
    GradCheckReport report = grad_check(forward, store, 1e-5, 1e-6);
    INFO(report.to_string());
    CHECK(report.passed);
  }

  CHECK_THROWS_AS(cross_entropy_loss(Tensor(3, 3), truth), DimensionError);
  CHECK_THROWS_AS(cross_entropy_loss(Tensor::identity(2), truth, 0.7),
                  ContractError);
}

TEST_CASE("total loss composition") {
  GroundTruth truth = GroundTruth::from_matrix(Tensor::identity(2));
  Tensor uniform = Tensor::full(2, 2, 0.5);

  const double sol = cross_entropy_loss(uniform, truth)(0, 0);
  CHECK(total_loss(uniform, truth, 0.0)(0, 0) == sol);
  CHECK(total_loss(uniform, truth, 0.1)(0, 0) ==
        doctest::Approx(2.7726 + 0.1 * 2.0).epsilon(1e-4));

  // On a permutation the constraint term vanishes.
  Tensor perm{{0.0, 1.0}, {1.0, 0.0}};
  CHECK(total_loss(perm, truth, 0.7)(0, 0) ==
        cross_entropy_loss(perm, truth)(0, 0));

  CHECK_THROWS_AS(total_loss(uniform, truth, -0.5), ContractError);

  SUBCASE("gradient of the combined loss") {
    std::mt19937_64 rng(7);
    ParamStore store;
    store.create("c", random_tensor(2, 2, rng, 0.2, 0.8));
    auto forward = [&](Tape& tape) {
      return total_loss(tape.param(store, "c"), truth, 0.1);
    };
    GradCheckReport report = grad_check(forward, store, 1e-5, 1e-5);
    INFO(report.to_string());
    CHECK(report.passed);
  }
}

TEST_CASE("hungarian discretization") {
  SUBCASE("identity and anti-diagonal") {
    std::vector<Index> id = hungarian_discretize(Tensor::identity(3));
    CHECK(id == std::vector<Index>{0, 1, 2});

    Tensor anti(3, 3);
    anti.at(0, 2) = 1.0;
    anti.at(1, 1) = 1.0;
    anti.at(2, 0) = 1.0;
    CHECK(hungarian_discretize(anti) == std::vector<Index>{2, 1, 0});
  }

  SUBCASE("matches exhaustive search on random square problems") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      const Index n = 3 + static_cast<Index>(rng() % 3);  // up to 5x5
      Tensor scores = random_tensor(n, n, rng);
      auto assignment = hungarian_discretize(scores);
      auto [best, best_perm] = best_by_enumeration(scores);
      CHECK(assignment_score(scores, assignment) ==
            doctest::Approx(best).epsilon(1e-12));
      CHECK(assignment == best_perm);
    }
  }

  SUBCASE("invariant under row and column shifts") {
    std::mt19937_64 rng(9);
    Tensor scores = random_tensor(5, 5, rng);
    auto base = hungarian_discretize(scores);
    Tensor shifted = scores.detached();
    for (Index j = 0; j < 5; ++j) shifted.at(2, j) += 7.25;   // a row
    for (Index i = 0; i < 5; ++i) shifted.at(i, 3) -= 3.5;    // a column
    CHECK(hungarian_discretize(shifted) == base);
  }

  SUBCASE("rectangular problems match every row or column once") {
    std::mt19937_64 rng(10);
    Tensor wide = random_tensor(3, 6, rng);
    auto a = hungarian_discretize(wide);
    std::vector<int> used(6, 0);
    for (Index i = 0; i < 3; ++i) {
      CHECK(a[i] >= 0);
      CHECK(++used[a[i]] == 1);
    }

    Tensor tall = random_tensor(6, 3, rng);
    auto b = hungarian_discretize(tall);
    int matched = 0;
    std::vector<int> cols(3, 0);
    for (Index i = 0; i < 6; ++i) {
      if (b[i] >= 0) {
        ++matched;
        CHECK(++cols[b[i]] == 1);
      }
    }
    CHECK(matched == 3);
  }
}

TEST_CASE("matching accuracy") {
  GroundTruth truth = GroundTruth::from_matrix(Tensor::identity(5));
  MatchPrediction exact{Tensor::identity(5), {0, 1, 2, 3, 4}};
  CHECK(matching_accuracy(exact, truth) == 1.0);

  MatchPrediction disjoint{Tensor::identity(5), {1, 2, 3, 4, 0}};
  CHECK(matching_accuracy(disjoint, truth) == 0.0);

  MatchPrediction partial{Tensor::identity(5), {0, 1, 2, 4, 3}};
  CHECK(matching_accuracy(partial, truth) == doctest::Approx(0.6));

  GroundTruth empty = GroundTruth::from_matrix(Tensor(3, 3));
  CHECK_THROWS_AS(matching_accuracy(exact, empty), ContractError);
}
