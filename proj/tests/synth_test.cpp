#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "glmnet/dataset_io.hpp"
#include "glmnet/errors.hpp"
#include "glmnet/synth.hpp"

using namespace glmnet;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) return false;
  for (Index k = 0; k < a.size(); ++k) {
    if (a.values()[k] != b.values()[k]) return false;
  }
  return true;
}

bool pairs_equal(const GraphPair& a, const GraphPair& b) {
  if (!bitwise_equal(a.x_feats, b.x_feats)) return false;
  if (!bitwise_equal(a.y_feats, b.y_feats)) return false;
  if (!bitwise_equal(a.truth.perm, b.truth.perm)) return false;
  if (a.support_x.has_value() != b.support_x.has_value()) return false;
  if (a.support_x && !bitwise_equal(*a.support_x, *b.support_x)) return false;
  if (a.support_y.has_value() != b.support_y.has_value()) return false;
  if (a.support_y && !bitwise_equal(*a.support_y, *b.support_y)) return false;
  return a.sample_id == b.sample_id;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

SynthConfig noiseless_config() {
  SynthConfig config;
  config.n_inliers = 6;
  config.n_outliers = 0;
  config.noise_sigma = 0.0;
  config.deform = DeformRange::identity();
  config.knn_k = 2;
  config.feat_dim = 8;
  config.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("noiseless clone: side two is a permutation of side one") {
  GraphPair pair = generate_pair(noiseless_config());
  REQUIRE(pair.truth.match_count() == 6);
  for (Index i = 0; i < 6; ++i) {
    Index target = -1;
    for (Index j = 0; j < 6; ++j) {
      if (pair.truth.perm(i, j) == 1.0) target = j;
    }
    REQUIRE(target >= 0);
    for (Index d = 0; d < 8; ++d) {
      CHECK(pair.y_feats(target, d) == pair.x_feats(i, d));
    }
  }
}

TEST_CASE("generation is deterministic given the seed") {
  SynthConfig config;
  config.n_inliers = 8;
  config.n_outliers = 2;
  config.noise_sigma = 0.05;
  config.seed = 77;
  GraphPair a = generate_pair(config);
  GraphPair b = generate_pair(config);
  CHECK(pairs_equal(a, b));

  config.seed = 78;
  CHECK(!pairs_equal(a, generate_pair(config)));
}

TEST_CASE("outlier bookkeeping") {
  SynthConfig config;
  config.n_inliers = 10;
  config.n_outliers = 2;
  config.noise_sigma = 0.05;
  config.seed = 3;
  GraphPair pair = generate_pair(config);
  CHECK(pair.x_feats.rows() == 12);
  CHECK(pair.y_feats.rows() == 12);
  CHECK(pair.truth.perm.rows() == 12);
  CHECK(pair.truth.perm.cols() == 12);
  CHECK(pair.truth.match_count() == 10);
}

TEST_CASE("k-NN supports have exactly k+1 positive entries per row") {
  SynthConfig config;
  config.n_inliers = 9;
  config.n_outliers = 3;
  config.knn_k = 4;
  config.seed = 11;
  GraphPair pair = generate_pair(config);
  REQUIRE(pair.support_x.has_value());
  REQUIRE(pair.support_y.has_value());
  for (const Tensor* support : {&*pair.support_x, &*pair.support_y}) {
    for (Index i = 0; i < support->rows(); ++i) {
      int positive = 0;
      for (Index j = 0; j < support->cols(); ++j) {
        if ((*support)(i, j) > 0.0) ++positive;
      }
      CHECK(positive == 5);
      CHECK((*support)(i, i) > 0.0);
    }
  }
}

TEST_CASE("nearest-neighbor baseline is perfect on the noiseless task") {
  CHECK(nearest_neighbor_accuracy(generate_pair(noiseless_config())) == 1.0);
}

TEST_CASE("invalid configs are rejected") {
  SynthConfig config;
  config.n_inliers = 0;
  CHECK_THROWS_AS(generate_pair(config), ContractError);
  config.n_inliers = 5;
  config.knn_k = 5;
  CHECK_THROWS_AS(generate_pair(config), ContractError);
  config.knn_k = 2;
  config.noise_sigma = -1.0;
  CHECK_THROWS_AS(generate_pair(config), ContractError);
}

TEST_CASE("derived per-sample seeds differ") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 100; ++i) {
    seeds.insert(derive_sample_seed(42, i));
  }
  CHECK(seeds.size() == 100);
}

TEST_CASE("batch split") {
  std::vector<GraphPair> data;
  for (int i = 0; i < 10; ++i) {
    SynthConfig config;
    config.n_inliers = 4;
    config.knn_k = 2;
    config.feat_dim = 4;
    config.seed = derive_sample_seed(1, i);
    GraphPair pair = generate_pair(config);
    pair.sample_id = static_cast<std::uint64_t>(i);
    data.push_back(std::move(pair));
  }

  auto [train, test] = batch_split(data, 0.8, 99);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);

  auto [train2, test2] = batch_split(data, 0.8, 99);
  for (std::size_t i = 0; i < train.size(); ++i) {
    CHECK(train[i].sample_id == train2[i].sample_id);
  }

  // Union of the halves is the input as a multiset of ids.
  std::multiset<std::uint64_t> seen;
  for (const auto& p : train) seen.insert(p.sample_id);
  for (const auto& p : test) seen.insert(p.sample_id);
  std::multiset<std::uint64_t> expected;
  for (const auto& p : data) expected.insert(p.sample_id);
  CHECK(seen == expected);

  CHECK_THROWS_AS(batch_split({}, 0.5, 0), ContractError);
  CHECK_THROWS_AS(batch_split(data, 1.0, 0), ContractError);
}

TEST_CASE("dataset file round trip is bit-identical") {
  std::vector<GraphPair> pairs;
  for (int i = 0; i < 4; ++i) {
    SynthConfig config;
    config.n_inliers = 5;
    config.n_outliers = 1;
    config.noise_sigma = 0.03;
    config.knn_k = 2;
    config.feat_dim = 6;
    config.seed = derive_sample_seed(7, i);
    GraphPair pair = generate_pair(config);
    pair.sample_id = static_cast<std::uint64_t>(i);
    pairs.push_back(std::move(pair));
  }

  const auto path = temp_file("glmnet_roundtrip.glm");
  save_features(pairs, path);
  std::vector<GraphPair> loaded = load_features(path);
  REQUIRE(loaded.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs_equal(pairs[i], loaded[i]));
  }

  // Saving the loaded data reproduces the file byte for byte.
  const auto path2 = temp_file("glmnet_roundtrip2.glm");
  save_features(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("truncated file fails cleanly") {
  std::vector<GraphPair> pairs{generate_pair(noiseless_config())};
  const auto path = temp_file("glmnet_truncated.glm");
  save_features(pairs, path);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();

  CHECK_THROWS_AS(load_features(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("a double match in the permutation names the sample") {
  const auto path = temp_file("glmnet_badperm.glm");
  std::ofstream out(path, std::ios::binary);
  out << "GLM1 1\n"
      << "sample 9 2 2 1\n"
      << "0.5\n0.25\n"
      << "1\n2\n"
      << "perm\n"
      << "1 1\n"
      << "0 0\n";
  out.close();

  try {
    load_features(path);
    FAIL("expected an invariant violation");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("sample 9") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed text reports the line") {
  const auto path = temp_file("glmnet_badline.glm");
  std::ofstream out(path, std::ios::binary);
  out << "GLM1 1\n"
      << "sample 0 1 1 2\n"
      << "0.5 oops\n"
      << "1 2\n"
      << "perm\n"
      << "1\n";
  out.close();

  try {
    load_features(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::filesystem::remove(path);
}
