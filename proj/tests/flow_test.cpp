#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowcast/error.hpp"
#include "flowcast/flow/checkpoint.hpp"
#include "flowcast/flow/flow_model.hpp"
#include "flowcast/numerics/ops.hpp"
#include "support.hpp"

namespace flowcast::flow {
namespace {

using numerics::Graph;
using numerics::Rng;
using testing::log_abs_det;
using testing::numeric_jacobian;
using testing::randomize;

FlowConfig small_config(std::size_t dim, std::size_t cond_dim, std::size_t blocks, CouplingVariant v,
                        std::uint64_t seed = 1) {
  FlowConfig c;
  c.dim = dim;
  c.cond_dim = cond_dim;
  c.blocks = blocks;
  c.variant = v;
  c.nets = {.conv_channels = 6, .kernel = 3, .dense_hidden = 8};
  c.seed = seed;
  return c;
}

// Sets every tensor of one block to random values.
void randomize_block(CouplingBlock& block, std::uint64_t seed, double scale = 0.4) {
  Rng rng(seed);
  block.visit("b", [&](const std::string& name, Array& t) {
    const bool variance = name.find("running_var") != std::string::npos;
    for (double& v : t.values()) v = variance ? rng.uniform(0.5, 1.5) : rng.uniform(-scale, scale);
  });
}

class BothVariants : public ::testing::TestWithParam<CouplingVariant> {};

TEST_P(BothVariants, FreshBlockIsIdentity) {
  Rng rng(3);
  CouplingBlock block(GetParam(), 6, 4, false, {}, rng);
  const Array x = rng.uniform_array({5, 6}, -2, 2);
  const Array c = rng.uniform_array({5, 4}, -2, 2);
  const CouplingOutput out = block.forward(x, c);
  EXPECT_EQ(out.y, x);
  for (double v : out.logdet.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(block.inverse(x, c), x);
}

TEST_P(BothVariants, ForwardInverseRoundTrip) {
  Rng rng(4);
  for (bool flipped : {false, true}) {
    CouplingBlock block(GetParam(), 7, 5, flipped, {}, rng);
    randomize_block(block, 40 + flipped);
    const Array x = rng.uniform_array({20, 7}, -2, 2);
    const Array c = rng.uniform_array({20, 5}, -2, 2);
    EXPECT_LT(numerics::max_abs_difference(block.inverse(block.forward(x, c).y, c), x), 1e-12);
  }
}

TEST_P(BothVariants, LogDetMatchesNumericJacobian) {
  Rng rng(5);
  for (std::size_t dim : {2u, 3u, 4u, 6u}) {
    for (bool flipped : {false, true}) {
      CouplingBlock block(GetParam(), dim, 3, flipped, {}, rng);
      randomize_block(block, 50 + dim + flipped);
      const Array c = rng.uniform_array({1, 3}, -2, 2);
      const std::vector<double> x = testing::to_vector(rng.uniform_array({dim}, -2, 2));
      auto f = [&](const std::vector<double>& v) {
        return testing::to_vector(block.forward(Array({1, dim}, v), c).y);
      };
      const double numeric = log_abs_det(numeric_jacobian(f, x));
      const double analytic = block.forward(Array({1, dim}, x), c).logdet[0];
      EXPECT_LT(testing::relative_error(analytic, numeric, 1e-3), 1e-4) << "dim " << dim;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Coupling, BothVariants,
                         ::testing::Values(CouplingVariant::Vanilla, CouplingVariant::Reinforced),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Coupling, ConstantAffineCase) {
  Rng rng(6);
  CouplingBlock block(CouplingVariant::Vanilla, 2, 1, false, {}, rng);
  ASSERT_EQ(block.split(), 1u);
  block.scale_net().conv3.bias->value[0] = std::atanh(std::log(2.0));
  block.shift_net().conv3.bias->value[0] = 0.5;
  const Array x = Array({1, 2}, {0.7, -1.3});
  const Array c = Array({1, 1}, {0.2});
  const CouplingOutput out = block.forward(x, c);
  EXPECT_NEAR(out.y[0], 0.7, 1e-15);
  EXPECT_NEAR(out.y[1], 2.0 * -1.3 + 0.5, 1e-12);
  EXPECT_NEAR(out.logdet[0], std::log(2.0), 1e-12);
  const Array back = block.inverse(out.y, c);
  EXPECT_NEAR(back[1], (out.y[1] - 0.5) / 2.0, 1e-12);
  EXPECT_NEAR(back[1], -1.3, 1e-12);
}

TEST(Coupling, ReinforcedJacobianIsBlockTriangular) {
  Rng rng(7);
  CouplingBlock block(CouplingVariant::Reinforced, 6, 3, false, {}, rng);
  randomize_block(block, 70);
  const Array c = rng.uniform_array({1, 3}, -2, 2);
  const auto x = testing::to_vector(rng.uniform_array({6}, -2, 2));
  const auto jac = numeric_jacobian(
      [&](const std::vector<double>& v) { return testing::to_vector(block.forward(Array({1, 6}, v), c).y); }, x);
  const auto [a0, a1] = block.pass_range();
  const auto [b0, b1] = block.transform_range();
  for (std::size_t i = a0; i < a1; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      if (j != i) EXPECT_LT(std::abs(jac[i][j]), 1e-8) << i << "," << j;
    }
  }
  for (std::size_t i = b0; i < b1; ++i) {
    for (std::size_t j = b0; j < b1; ++j) {
      if (j != i) EXPECT_LT(std::abs(jac[i][j]), 1e-8);
    }
  }
}

TEST(Coupling, PassThroughDependsOnConditionOnlyWhenReinforced) {
  Rng rng(8);
  for (auto variant : {CouplingVariant::Vanilla, CouplingVariant::Reinforced}) {
    CouplingBlock block(variant, 4, 3, true, {}, rng);
    randomize_block(block, 80);
    const Array x = rng.uniform_array({1, 4}, -2, 2);
    const auto c = testing::to_vector(rng.uniform_array({3}, -2, 2));
    const auto [a0, a1] = block.pass_range();
    const auto jac = numeric_jacobian(
        [&](const std::vector<double>& v) {
          const Array y = block.forward(x, Array({1, 3}, v)).y;
          return std::vector<double>(y.values().begin() + a0, y.values().begin() + a1);
        },
        c);
    double largest = 0.0;
    for (const auto& row : jac) {
      for (double v : row) largest = std::max(largest, std::abs(v));
    }
    if (variant == CouplingVariant::Vanilla) {
      EXPECT_EQ(largest, 0.0);
    } else {
      EXPECT_GT(largest, 1e-3);
    }
  }
}

TEST(Coupling, RejectsDimensionMismatch) {
  Rng rng(9);
  CouplingBlock block(CouplingVariant::Reinforced, 4, 3, false, {}, rng);
  EXPECT_THROW(block.forward(Array({2, 5}), Array({2, 3})), DimensionError);
  EXPECT_THROW(block.forward(Array({2, 4}), Array({2, 2})), DimensionError);
  EXPECT_THROW(block.inverse(Array({2, 4}), Array({3, 3})), DimensionError);
}

TEST(Coupling, ScaleIsBounded) {
  Rng rng(10);
  CouplingBlock block(CouplingVariant::Reinforced, 4, 2, false, {}, rng);
  randomize_block(block, 100, 5.0);
  const Array x = rng.uniform_array({30, 4}, -50, 50);
  const Array c = rng.uniform_array({30, 2}, -50, 50);
  const CouplingOutput out = block.forward(x, c);
  for (double v : out.logdet.values()) EXPECT_LE(std::abs(v), 4.0 + 1e-12);
}

TEST(Coupling, OneDimensionalData) {
  Rng rng(11);
  CouplingBlock block(CouplingVariant::Reinforced, 1, 2, false, {}, rng);
  randomize_block(block, 110);
  const Array x = rng.uniform_array({8, 1}, -2, 2);
  const Array c = rng.uniform_array({8, 2}, -2, 2);
  const CouplingOutput out = block.forward(x, c);
  EXPECT_LT(numerics::max_abs_difference(block.inverse(out.y, c), x), 1e-12);
  for (std::size_t i = 0; i < 8; ++i) {
    const double h = 1e-6;
    const double up = block.forward(Array({1, 1}, {x[i] + h}), c.rows(i, i + 1)).y[0];
    const double dn = block.forward(Array({1, 1}, {x[i] - h}), c.rows(i, i + 1)).y[0];
    EXPECT_NEAR(out.logdet[i], std::log(std::abs((up - dn) / (2 * h))), 1e-6);
  }
}

TEST(Flow, AlternatesOrientation) {
  FlowModel model(small_config(5, 3, 4, CouplingVariant::Vanilla));
  for (std::size_t k = 1; k < model.blocks().size(); ++k) {
    EXPECT_NE(model.blocks()[k].flipped(), model.blocks()[k - 1].flipped());
  }
  EXPECT_THROW(FlowModel(small_config(5, 3, 0, CouplingVariant::Vanilla)), InputError);
}

TEST(Flow, IdentityLogProb) {
  FlowModel model(small_config(2, 3, 9, CouplingVariant::Reinforced));
  const Array c({1, 3}, 0.4);
  EXPECT_NEAR(model.log_prob(Array({1, 2}, {0.0, 0.0}), c).log_prob[0], -std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(model.log_prob(Array({1, 2}, {1.0, 0.0}), c).log_prob[0], -std::log(2 * std::numbers::pi) - 0.5,
              1e-12);
  EXPECT_NEAR(-std::log(2 * std::numbers::pi), -1.837877, 1e-6);
}

TEST(Flow, IdentitySampleReturnsLatent) {
  FlowModel model(small_config(4, 3, 3, CouplingVariant::Vanilla));
  Rng rng(12);
  const Array z = rng.normal_array({6, 4});
  EXPECT_EQ(model.sample(rng.normal_array({6, 3}), z), z);
}

TEST(Flow, TraceSumsToTotalLogDet) {
  FlowModel model(small_config(4, 3, 5, CouplingVariant::Reinforced));
  randomize(model, 13);
  Rng rng(13);
  const Array x = rng.uniform_array({7, 4}, -2, 2);
  const Array c = rng.uniform_array({7, 3}, -2, 2);
  const LogProbResult r = model.log_prob(x, c);
  ASSERT_EQ(r.trace.block_logdets.size(), 5u);
  const Array total = r.trace.total_logdet();
  for (std::size_t i = 0; i < 7; ++i) {
    double z2 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) z2 += r.trace.latent(i, j) * r.trace.latent(i, j);
    EXPECT_NEAR(r.log_prob[i], -0.5 * z2 - 2.0 * std::log(2 * std::numbers::pi) + total[i], 1e-12);
  }
  EXPECT_LT(numerics::max_abs_difference(r.trace.latent, model.forward(x, c)), 1e-15);
}

TEST(Flow, FullLogDetMatchesNumericJacobian) {
  Rng rng(14);
  for (auto variant : {CouplingVariant::Vanilla, CouplingVariant::Reinforced}) {
    FlowModel model(small_config(5, 3, 4, variant, 14));
    randomize(model, 140);
    const Array c = rng.uniform_array({1, 3}, -2, 2);
    const auto x = testing::to_vector(rng.uniform_array({5}, -2, 2));
    const auto jac = numeric_jacobian(
        [&](const std::vector<double>& v) { return testing::to_vector(model.forward(Array({1, 5}, v), c)); }, x);
    const double analytic = model.log_prob(Array({1, 5}, x), c).trace.total_logdet()[0];
    EXPECT_LT(testing::relative_error(analytic, log_abs_det(jac), 1e-3), 1e-4);
  }
}

TEST(Flow, SampleRoundTrip) {
  FlowModel model(small_config(6, 4, 9, CouplingVariant::Reinforced));
  randomize(model, 15);
  Rng rng(15);
  const Array c = rng.uniform_array({50, 4}, -2, 2);
  const Array z = rng.normal_array({50, 6});
  const Array x = model.sample(c, z);
  EXPECT_LT(numerics::max_abs_difference(model.forward(x, c), z), 1e-6);
  const Array origin = model.sample(c, Array({50, 6}, 0.0));
  EXPECT_LT(model.forward(origin, c).max_abs(), 1e-6);
}

// Density integrates to one over a grid for a fixed condition.
TEST(Flow, DensityNormalizesIn1dAnd2d) {
  for (std::size_t dim : {1u, 2u}) {
    FlowModel model(small_config(dim, 2, 3, CouplingVariant::Reinforced, 16));
    randomize(model, 160 + dim, 0.2);
    const Array c({1, 2}, {0.3, -0.8});
    const double lo = -12.0, hi = 12.0;
    const std::size_t n = dim == 1 ? 4001 : 241;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> pts;
    if (dim == 1) {
      for (std::size_t i = 0; i < n; ++i) pts.push_back(lo + h * i);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          pts.push_back(lo + h * i);
          pts.push_back(lo + h * j);
        }
      }
    }
    const std::size_t count = pts.size() / dim;
    Array cs({count, 2});
    for (std::size_t i = 0; i < count; ++i) cs(i, 0) = 0.3, cs(i, 1) = -0.8;
    const Array lp = model.log_prob(Array({count, dim}, pts), cs).log_prob;
    double mass = 0.0;
    for (double v : lp.values()) mass += std::exp(v);
    mass *= std::pow(h, static_cast<double>(dim));
    EXPECT_NEAR(mass, 1.0, 0.02) << "dim " << dim;
  }
}

TEST(Flow, CloneIsIndependent) {
  FlowModel model(small_config(4, 3, 2, CouplingVariant::Reinforced));
  randomize(model, 17);
  FlowModel copy = model.clone();
  Rng rng(17);
  const Array x = rng.uniform_array({3, 4}, -1, 1);
  const Array c = rng.uniform_array({3, 3}, -1, 1);
  EXPECT_EQ(copy.forward(x, c), model.forward(x, c));
  randomize(copy, 18);
  EXPECT_NE(copy.forward(x, c), model.forward(x, c));
  const auto snap = model.snapshot();
  randomize(model, 19);
  model.restore(snap);
  EXPECT_NE(copy.forward(x, c), model.forward(x, c));
  randomize(copy, 17);
  EXPECT_EQ(copy.forward(x, c), model.forward(x, c));
}

TEST(Flow, RejectsMismatchedBatches) {
  FlowModel model(small_config(4, 3, 2, CouplingVariant::Vanilla));
  EXPECT_THROW(model.log_prob(Array({2, 4}), Array({3, 3})), DimensionError);
  EXPECT_THROW(model.sample(Array({2, 3}), Array({2, 5})), DimensionError);
}

TEST(Flow, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(20);
  for (auto variant : {CouplingVariant::Vanilla, CouplingVariant::Reinforced}) {
    FlowModel model(small_config(4, 3, 2, variant, 20));
    randomize(model, 200);
    model.set_training(true);
    const Array x = rng.uniform_array({5, 4}, -2, 2);
    const Array c = rng.uniform_array({5, 3}, -2, 2);
    const auto check = testing::check_parameter_gradients(model.parameters(), [&](Graph& g) {
      return numerics::mean(model.log_prob(g.constant(x), g.constant(c)));
    });
    EXPECT_LT(check.max_relative_error, 1e-4);
    EXPECT_GT(check.checked, 500u);
  }
}

TEST(Checkpoint, RoundTripAndByteStable) {
  FlowModel model(small_config(4, 3, 3, CouplingVariant::Reinforced, 21));
  randomize(model, 21);
  const auto dir = testing::scratch_dir("checkpoint");
  save_checkpoint(model, dir / "a", {{"note", "x"}});
  save_checkpoint(model, dir / "b", {{"note", "x"}});
  EXPECT_EQ(testing::read_file(dir / "a" / "params.bin"), testing::read_file(dir / "b" / "params.bin"));
  EXPECT_EQ(testing::read_file(dir / "a" / "manifest.json"), testing::read_file(dir / "b" / "manifest.json"));

  LoadedCheckpoint loaded = load_checkpoint(dir / "a");
  EXPECT_EQ(loaded.metadata.at("note"), "x");
  EXPECT_EQ(loaded.model.config().variant, CouplingVariant::Reinforced);
  Rng rng(21);
  const Array x = rng.uniform_array({4, 4}, -2, 2);
  const Array c = rng.uniform_array({4, 3}, -2, 2);
  EXPECT_EQ(loaded.model.forward(x, c), model.forward(x, c));

  // 8 bytes per stored value, little-endian.
  std::size_t values = 0;
  model.each_tensor([&](const std::string&, const Array& a) { values += a.size(); });
  EXPECT_EQ(testing::read_file(dir / "a" / "params.bin").size(), 8 * values);
}

TEST(Checkpoint, RejectsBrokenInput) {
  const auto dir = testing::scratch_dir("checkpoint_bad");
  EXPECT_THROW(load_checkpoint(dir / "missing"), InputError);
  FlowModel model(small_config(2, 2, 1, CouplingVariant::Vanilla));
  save_checkpoint(model, dir / "ok");
  std::filesystem::resize_file(dir / "ok" / "params.bin", 16);
  EXPECT_THROW(load_checkpoint(dir / "ok"), InputError);
  std::ofstream(dir / "ok" / "manifest.json") << "{not json";
  EXPECT_THROW(load_checkpoint(dir / "ok"), InputError);
}

TEST(Variant, StringTags) {
  EXPECT_EQ(to_string(CouplingVariant::Vanilla), "vanilla");
  EXPECT_EQ(parse_variant("reinforced"), CouplingVariant::Reinforced);
  EXPECT_THROW(parse_variant("glow"), InputError);
}

}  // namespace
}  // namespace flowcast::flow
