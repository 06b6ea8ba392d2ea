#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/models.hpp"

using namespace vsr;
using vsrtest::bit_equal;

namespace {

// Small generator used where the default 1.3M-parameter net would be wasteful.
GeneratorConfig tiny_gen() {
  GeneratorConfig cfg;
  cfg.base_channels = 8;
  cfg.num_res_blocks = 2;
  cfg.patch_size = 16;
  return cfg;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("generator architecture counts") {
  Generator g(GeneratorConfig{}, 1);
  CHECK(g.conv_count() == 34);
  CHECK(g.param_count() == 1330369);

  // per residual block: two 64->64 3x3 convs with bias = 2*(64*64*9 + 64)
  GeneratorConfig one_less;
  one_less.num_res_blocks = 14;
  Generator g14(one_less, 1);
  CHECK(g.param_count() - g14.param_count() == 73856);
  CHECK(g14.conv_count() == 32);

  // the analytic decomposition: frame conv + fusion conv + mid conv + blocks + out conv
  const std::int64_t frame = 64 * 1 * 9 + 64;
  const std::int64_t fuse = 64 * 320 * 9 + 64;
  const std::int64_t mid = 64 * 64 * 9 + 64;
  const std::int64_t out = 1 * 64 * 9 + 1;
  CHECK(g.param_count() == frame + fuse + mid + 15 * 73856 + out);
}

TEST_CASE("generator forward shape on the paper geometry") {
  Generator g(GeneratorConfig{}, 3);
  Rng rng(4);
  Tensor y = randn({2, 5, 1, 36, 36}, rng, 0.1);
  Tensor x = g.forward(y);
  CHECK(x.shape() == Shape{2, 1, 36, 36});
  CHECK(x.all_finite());
}

TEST_CASE("generator rejects wrong frame counts") {
  Generator g(tiny_gen(), 3);
  Rng rng(4);
  CHECK_THROWS_AS(g.forward(randn({1, 4, 1, 16, 16}, rng)), ShapeError);
  CHECK_THROWS_AS(g.forward(randn({1, 5, 2, 16, 16}, rng)), ShapeError);
}

TEST_CASE("zero parameters give a zero output (no global skip)") {
  Generator g(tiny_gen(), 5);
  for (Parameter* p : g.params()) p->value.zero();
  Rng rng(6);
  Tensor y = randn({1, 5, 1, 16, 16}, rng);
  Tensor x = g.forward(y);
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(x[i] == 0.0);
}

TEST_CASE("generator seeding is deterministic") {
  Generator a(tiny_gen(), 11), b(tiny_gen(), 11), c(tiny_gen(), 12);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  REQUIRE(pa.size() == pb.size());
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    all_same = all_same && bit_equal(pa[i]->value, pb[i]->value);
    any_diff = any_diff || !bit_equal(pa[i]->value, pc[i]->value);
  }
  CHECK(all_same);
  CHECK(any_diff);

  Rng rng(7);
  Tensor y = randn({1, 5, 1, 16, 16}, rng, 0.2);
  CHECK(bit_equal(a.forward(y), b.forward(y)));
}

TEST_CASE("constant input gives a constant interior") {
  // zero padding breaks translation symmetry one pixel per convolution; the
  // 2-block network stacks 8 convs, so pixels at least 8 from every edge see
  // no border at all and must be exactly flat
  Generator g(tiny_gen(), 13);
  Tensor y = Tensor::full({1, 5, 1, 48, 48}, 0.37);
  Tensor x = g.forward(y);
  const double center = x.at(0, 0, 24, 24);
  for (std::int64_t i = 20; i <= 28; ++i)
    for (std::int64_t j = 20; j <= 28; ++j)
      CHECK(std::fabs(x.at(0, 0, i, j) - center) <= 1e-9);
}

TEST_CASE("generator zero_grads and named access") {
  Generator g(tiny_gen(), 15);
  Parameter& w = g.param("conv_frame.weight");
  w.grad.fill(1.0);
  g.zero_grads();
  for (std::int64_t i = 0; i < w.grad.numel(); ++i) CHECK(w.grad[i] == 0.0);
  CHECK_THROWS_AS(g.param("no.such.tensor"), ConfigError);
}

TEST_CASE("generator config validation") {
  GeneratorConfig bad = tiny_gen();
  bad.input_frames = 4;
  CHECK_THROWS_AS(Generator(bad, 1), ConfigError);
  bad = tiny_gen();
  bad.kernel = 4;
  CHECK_THROWS_AS(Generator(bad, 1), ConfigError);
  bad = tiny_gen();
  bad.patch_size = 1;
  CHECK_THROWS_AS(Generator(bad, 1), ConfigError);
}

TEST_CASE("discriminator stage geometry and dense head") {
  Discriminator d(DiscriminatorConfig{}, 2);
  CHECK(d.stage_sizes() == std::vector<std::int64_t>{18, 9, 5});

  // 256 * 5 * 5 inputs to one logit
  CHECK(d.param("fc.weight").value.numel() + d.param("fc.bias").value.numel() == 6401);

  Rng rng(3);
  Tensor patch = randn({4, 1, 36, 36}, rng, 0.3);
  Tensor p = d.forward(patch, BnMode::kTrain);
  CHECK(p.shape() == Shape{4, 1});
  for (std::int64_t i = 0; i < 4; ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }
}

TEST_CASE("zeroed discriminator outputs sigmoid of the final bias") {
  DiscriminatorConfig cfg;
  cfg.conv_channels = {4, 8};
  cfg.input_size = 16;
  Discriminator d(cfg, 4);
  for (Parameter* p : d.params()) p->value.zero();
  d.param("fc.bias").value[0] = 0.73;

  Rng rng(5);
  Tensor patch = randn({2, 1, 16, 16}, rng);
  Tensor p = d.forward(patch, BnMode::kEval);
  const double want = 1.0 / (1.0 + std::exp(-0.73));
  CHECK(p[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("discriminator train mode updates running stats, eval does not") {
  DiscriminatorConfig cfg;
  cfg.conv_channels = {4, 8};
  cfg.input_size = 16;
  Discriminator d(cfg, 6);
  Rng rng(7);
  Tensor patch = randn({2, 1, 16, 16}, rng, 0.4);

  std::vector<Tensor> before;
  for (auto& [name, t] : d.state_tensors()) before.push_back(*t);

  d.forward(patch, BnMode::kEval);
  std::size_t k = 0;
  for (auto& [name, t] : d.state_tensors()) CHECK(bit_equal(*t, before[k++]));

  d.forward(patch, BnMode::kTrain);
  bool changed = false;
  k = 0;
  for (auto& [name, t] : d.state_tensors()) changed = changed || !bit_equal(*t, before[k++]);
  CHECK(changed);
}

TEST_CASE("discriminator rejects wrong input size") {
  DiscriminatorConfig cfg;
  cfg.conv_channels = {4};
  cfg.input_size = 16;
  Discriminator d(cfg, 1);
  Rng rng(2);
  CHECK_THROWS_AS(d.forward(randn({1, 1, 20, 20}, rng), BnMode::kEval), ShapeError);
}

TEST_CASE("feature net default taps on 36x36 input") {
  FeatureNet fn((FeatureNetSpec()));
  Rng rng(8);
  Tensor img = randn({2, 1, 36, 36}, rng, 0.2);
  std::vector<Tensor> taps = fn.forward(img);
  REQUIRE(taps.size() == 2);
  CHECK(taps[0].shape() == Shape{2, 32, 18, 18});
  CHECK(taps[1].shape() == Shape{2, 32, 18, 18});
  for (const Tensor& t : taps) CHECK(t.all_finite());
}

TEST_CASE("feature net is seeded and frozen") {
  FeatureNet a((FeatureNetSpec())), b((FeatureNetSpec()));
  Rng rng(9);
  Tensor img = randn({1, 1, 24, 24}, rng, 0.2);
  std::vector<Tensor> ta = a.forward(img), tb = b.forward(img);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(bit_equal(ta[i], tb[i]));

  FeatureNetSpec other;
  other.seed = 43;
  FeatureNet c(other);
  CHECK_FALSE(bit_equal(c.forward(img)[0], ta[0]));
}

TEST_CASE("feature net spec validation") {
  FeatureNetSpec bad;
  bad.taps = {};
  CHECK_THROWS_AS(FeatureNet{bad}, ConfigError);
  bad = FeatureNetSpec{};
  bad.taps = {5};
  CHECK_THROWS_AS(FeatureNet{bad}, ConfigError);
  bad = FeatureNetSpec{};
  bad.pool_after = {9};
  CHECK_THROWS_AS(FeatureNet{bad}, ConfigError);
}

}  // TEST_SUITE
