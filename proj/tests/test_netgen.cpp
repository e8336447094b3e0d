#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "featgenn/netgen.hpp"
#include "test_support.hpp"

using namespace featgenn;

namespace {

GeneratorConfig tiny_config() {
  GeneratorConfig cfg;
  cfg.conv_layers = 1;
  cfg.channels = 1;
  cfg.kernel = 1;
  cfg.pool_group = 2;
  cfg.mlp_hidden = {};
  cfg.n_out = 1;
  return cfg;
}

CorrelationMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  CorrelationMatrix m;
  const auto n = static_cast<Eigen::Index>(rows.size());
  m.r.resize(n, n);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m.r(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("genome layout counts every weight and bias") {
  GeneratorConfig cfg;
  cfg.conv_layers = 1;
  cfg.channels = 4;
  cfg.kernel = 3;
  cfg.pool_group = 2;
  cfg.mlp_hidden = {16};
  cfg.n_out = 2;
  auto layout = GenomeLayout::for_config(cfg, 8);
  // conv 4*3 + 4, pooled width 4*4 = 16, dense 16*16 + 16, head 16*2 + 2
  CHECK(layout.total == 322);
  CHECK(layout.positions == std::vector<std::size_t>{8, 4});

  cfg.conv_layers = 2;
  auto deep = GenomeLayout::for_config(cfg, 9);
  CHECK(deep.positions == std::vector<std::size_t>{9, 5, 3});
  CHECK(deep.total == (12 + 4) + (4 * 4 * 3 + 4) + (12 * 16 + 16) + (16 * 2 + 2));
}

TEST_CASE("init_genome is deterministic with zero biases and bounded weights") {
  GeneratorConfig cfg;
  auto a = init_genome(cfg, 10, 77);
  auto b = init_genome(cfg, 10, 77);
  auto c = init_genome(cfg, 10, 78);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
  auto check_block = [&](const ParamBlock& blk) {
    const double limit = std::sqrt(6.0 / static_cast<double>(blk.fan_in + blk.fan_out));
    for (std::size_t i = 0; i < blk.bias_count; ++i) CHECK(a.weights[blk.bias_offset + i] == 0.0);
    for (std::size_t i = 0; i < blk.weight_count; ++i) CHECK(std::abs(a.weights[blk.weight_offset + i]) <= limit);
  };
  for (const auto& blk : a.layout.conv) check_block(blk);
  for (const auto& blk : a.layout.dense) check_block(blk);
}

TEST_CASE("pool plan pairs the most correlated positions") {
  auto m = from_rows({{1.0, 0.9, 0.1, 0.0}, {0.9, 1.0, 0.2, 0.1}, {0.1, 0.2, 1.0, 0.8}, {0.0, 0.1, 0.8, 1.0}});
  auto plan = build_pool_plan(m, 2);
  std::set<std::vector<std::size_t>> groups(plan.groups.begin(), plan.groups.end());
  CHECK(groups == std::set<std::vector<std::size_t>>{{0, 1}, {2, 3}});
}

TEST_CASE("pool plan with an odd count leaves a singleton") {
  auto m = from_rows({{1.0, 0.5, 0.2}, {0.5, 1.0, 0.3}, {0.2, 0.3, 1.0}});
  auto plan = build_pool_plan(m, 2);
  // Scores: 1.7/3, 1.8/3, 1.5/3; position 1 seeds and takes its strongest peer.
  REQUIRE(plan.groups.size() == 2);
  CHECK(plan.groups[0] == std::vector<std::size_t>{0, 1});
  CHECK(plan.groups[1] == std::vector<std::size_t>{2});
}

TEST_CASE("pool plan breaks ties toward the lowest index") {
  CorrelationMatrix m;
  m.r = Matrix::Identity(4, 4);
  auto plan = build_pool_plan(m, 2);
  CHECK(plan.groups == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});
  CHECK(build_pool_plan(m, 2) == plan);
}

TEST_CASE("pool plans partition positions into ceil(d/k) groups of size <= k") {
  std::mt19937_64 rng(31);
  for (std::size_t d : {1u, 2u, 5u, 8u, 13u, 20u}) {
    for (int k : {2, 3, 4}) {
      Matrix x = featgenn::testing::random_matrix(30, static_cast<Eigen::Index>(d), rng);
      auto plan = build_pool_plan(correlation_matrix(x), k);
      CHECK(plan.groups.size() == (d + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k));
      std::vector<std::size_t> all;
      for (const auto& g : plan.groups) {
        CHECK(g.size() <= static_cast<std::size_t>(k));
        CHECK(std::is_sorted(g.begin(), g.end()));
        all.insert(all.end(), g.begin(), g.end());
      }
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < d; ++i) CHECK(all[i] == i);
      CHECK(all.size() == d);
    }
  }
}

TEST_CASE("correlation pooling weights a pair by softmax of scores") {
  PoolPlan plan;
  plan.groups = {{0, 1}};
  plan.scores = {1.0, 0.0};
  Matrix act(1, 2);
  act << 1.0, 0.0;
  Matrix out = correlation_pool(act, plan, CorrelationScores{plan.scores});
  CHECK(out(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  act << 0.0, 1.0;
  out = correlation_pool(act, plan, CorrelationScores{plan.scores});
  CHECK(out(0, 0) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("correlation pooling rejects plans that do not partition the input") {
  Matrix act = Matrix::Ones(2, 3);
  PoolPlan overlap{0, {{0, 1}, {1, 2}}, {0, 0, 0}};
  PoolPlan missing{0, {{0, 1}}, {0, 0, 0}};
  CHECK_THROWS(correlation_pool(act, overlap, CorrelationScores{overlap.scores}));
  CHECK_THROWS(correlation_pool(act, missing, CorrelationScores{missing.scores}));
}

TEST_CASE("max pooling matches a brute-force window scan") {
  std::mt19937_64 rng(8);
  Matrix act = featgenn::testing::random_matrix(1000, 7, rng);
  for (int k : {2, 3}) {
    Matrix out = max_pool(act, k);
    const Eigen::Index groups = (7 + k - 1) / k;
    REQUIRE(out.cols() == groups);
    for (Eigen::Index r = 0; r < act.rows(); ++r) {
      for (Eigen::Index g = 0; g < groups; ++g) {
        double best = -1e300;
        for (Eigen::Index c = g * k; c < std::min<Eigen::Index>(7, (g + 1) * k); ++c) best = std::max(best, act(r, c));
        CHECK(out(r, g) == best);
      }
    }
  }
}

TEST_CASE("a tiny network reproduces a hand computation") {
  GeneratorConfig cfg = tiny_config();
  Genome g;
  g.layout = GenomeLayout::for_config(cfg, 2);
  REQUIRE(g.layout.total == 4);
  g.weights = {0.5, 0.1, 2.0, -0.3};
  std::vector<PoolPlan> plans{PoolPlan{0, {{0, 1}}, {0.2, 0.7}}};

  Matrix x(2, 2);
  x << 1.0, -1.0, 0.4, 2.0;
  Matrix out = network_forward(x, g, cfg, plans);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 1);
  const double w0 = std::exp(0.2) / (std::exp(0.2) + std::exp(0.7));
  for (Eigen::Index r = 0; r < 2; ++r) {
    const double a = std::tanh(0.5 * x(r, 0) + 0.1);
    const double b = std::tanh(0.5 * x(r, 1) + 0.1);
    const double expected = 2.0 * (w0 * a + (1.0 - w0) * b) - 0.3;
    CHECK(out(r, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("a three-tap convolution pads with zeros at the edges") {
  GeneratorConfig cfg = tiny_config();
  cfg.kernel = 3;
  cfg.pooling = Pooling::max;
  cfg.pool_group = 3;
  Genome g;
  g.layout = GenomeLayout::for_config(cfg, 3);
  REQUIRE(g.layout.total == 6);
  g.weights = {1.0, 2.0, 3.0, 0.0, 1.0, 0.0};
  Matrix x(1, 3);
  x << 0.1, 0.2, 0.3;
  const double p0 = std::tanh(2.0 * 0.1 + 3.0 * 0.2);
  const double p1 = std::tanh(1.0 * 0.1 + 2.0 * 0.2 + 3.0 * 0.3);
  const double p2 = std::tanh(1.0 * 0.2 + 2.0 * 0.3);
  Matrix out = network_forward(x, g, cfg, {});
  CHECK(out(0, 0) == doctest::Approx(std::max({p0, p1, p2})).epsilon(1e-12));
}

TEST_CASE("an all-zero genome produces zero features") {
  GeneratorConfig cfg;
  cfg.pooling = Pooling::max;
  Genome g = init_genome(cfg, 6, 1);
  std::fill(g.weights.begin(), g.weights.end(), 0.0);
  std::mt19937_64 rng(2);
  Matrix x = featgenn::testing::random_matrix(5, 6, rng);
  CHECK(network_forward(x, g, cfg, {}).isZero(0.0));
}

TEST_CASE("network_forward is deterministic and sized n_out") {
  GeneratorConfig cfg;
  cfg.n_out = 3;
  std::mt19937_64 rng(5);
  Matrix x = featgenn::testing::random_matrix(40, 10, rng);
  Genome g = init_genome(cfg, 10, 9);
  auto plans = update_pool_plans(g, cfg, x, 0.8, 4);
  REQUIRE(plans.size() == 2);
  Matrix a = network_forward(x, g, cfg, plans);
  Matrix b = network_forward(x, g, cfg, plans);
  CHECK(a.rows() == 40);
  CHECK(a.cols() == 3);
  CHECK(a == b);
  CHECK(a.allFinite());
}

TEST_CASE("network_forward rejects mismatched genomes and plans") {
  GeneratorConfig cfg;
  std::mt19937_64 rng(5);
  Matrix x = featgenn::testing::random_matrix(10, 6, rng);
  Genome g = init_genome(cfg, 7, 1);
  CHECK_THROWS(network_forward(x, g, cfg, {}));
  Genome ok = init_genome(cfg, 6, 1);
  CHECK_THROWS(network_forward(x, ok, cfg, {}));
}

TEST_CASE("update_pool_plans builds one plan per conv layer sized to its positions") {
  GeneratorConfig cfg;
  cfg.conv_layers = 3;
  std::mt19937_64 rng(6);
  Matrix x = featgenn::testing::random_matrix(60, 11, rng);
  Genome g = init_genome(cfg, 11, 3);
  auto plans = update_pool_plans(g, cfg, x, 0.5, 10);
  REQUIRE(plans.size() == 3);
  for (std::size_t l = 0; l < plans.size(); ++l) {
    CHECK(plans[l].layer == static_cast<int>(l));
    CHECK(plans[l].scores.size() == g.layout.positions[l]);
  }
  // Layer 0 depends only on the sampled input rows.
  auto sample = take_rows(x, subsample_rows(60, 0.5, 10));
  CHECK(plans[0] == build_pool_plan(correlation_matrix(sample), cfg.pool_group, 0));
  CHECK(update_pool_plans(g, cfg, x, 0.5, 10) == plans);

  auto acts = layer_activations(x, g, cfg, plans);
  REQUIRE(acts.size() == 3);
  CHECK(static_cast<std::size_t>(acts[0].cols()) == g.layout.positions[1]);

  cfg.pooling = Pooling::max;
  CHECK(update_pool_plans(init_genome(cfg, 11, 3), cfg, x, 0.5, 10).empty());
}

TEST_CASE("a duplicated raw feature lands in the same layer-0 pair") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix base = featgenn::testing::random_matrix(50, 7, rng);
    const Eigen::Index src = trial % 7;
    Matrix x(50, 8);
    x.leftCols(7) = base;
    x.col(7) = base.col(src);
    auto plan = build_pool_plan(correlation_matrix(x), 2);
    bool together = false;
    for (const auto& g : plan.groups)
      together = together || g == std::vector<std::size_t>{static_cast<std::size_t>(src), 7};
    CHECK(together);
  }
}

TEST_CASE("correlation pooling of identical columns returns that column") {
  std::mt19937_64 rng(45);
  Matrix col = featgenn::testing::random_matrix(30, 1, rng);
  Matrix act(30, 3);
  act << col, col, col;
  PoolPlan plan{0, {{0, 1, 2}}, {0.1, -0.4, 0.9}};
  Matrix out = correlation_pool(act, plan, CorrelationScores{plan.scores});
  CHECK((out.col(0) - col.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}
