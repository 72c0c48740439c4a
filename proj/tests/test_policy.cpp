#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "abmhedge/errors.hpp"
#include "abmhedge/hedging.hpp"
#include "abmhedge/policy.hpp"

using namespace abmhedge;
using namespace abmhedge::hedging;

namespace {

PolicyWeights random_policy(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  auto w = zero_policy();
  for (auto& l : w.layers) {
    for (auto& x : l.weights) x = n(gen);
    for (auto& x : l.bias) x = n(gen);
    if (l.batch_norm) {
      for (auto& x : l.batch_norm->mean) x = n(gen);
      for (auto& x : l.batch_norm->var) x = u(gen);
      for (auto& x : l.batch_norm->gamma) x = u(gen);
      for (auto& x : l.batch_norm->beta) x = n(gen);
    }
  }
  return w;
}

double eigen_forward(const PolicyWeights& w, const Eigen::Vector3d& input) {
  Eigen::VectorXd x = input;
  for (const auto& l : w.layers) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        l.weights.data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    const Eigen::Map<const Eigen::VectorXd> b(l.bias.data(), static_cast<Eigen::Index>(l.out));
    Eigen::VectorXd y = W * x + b;
    if (l.batch_norm) {
      const auto& bn = *l.batch_norm;
      const Eigen::Map<const Eigen::ArrayXd> mean(bn.mean.data(), y.size());
      const Eigen::Map<const Eigen::ArrayXd> var(bn.var.data(), y.size());
      const Eigen::Map<const Eigen::ArrayXd> gamma(bn.gamma.data(), y.size());
      const Eigen::Map<const Eigen::ArrayXd> beta(bn.beta.data(), y.size());
      y = (gamma * (y.array() - mean) / (var + bn.eps).sqrt() + beta).matrix();
    }
    if (l.activation == Activation::relu) y = y.cwiseMax(0.0);
    if (l.activation == Activation::sigmoid) y = (1.0 / (1.0 + (-y.array()).exp())).matrix();
    x = y;
  }
  return w.output_scale * x(0);
}

}  // namespace

TEST(Policy, ForwardPassMatchesMatrixOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> hold(0.0, 100.0), price(70.0, 130.0);
  std::uniform_int_distribution<int> ttm(1, 30);
  OptionSpec o;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = random_policy(seed);
    ASSERT_NO_THROW(w.validate());
    for (int k = 0; k < 100; ++k) {
      const HedgingEpisodeState s{hold(gen), price(gen), static_cast<std::size_t>(ttm(gen)), 0};
      const Eigen::Vector3d in(s.holding / 100.0, s.price / o.strike, s.ttm_days / 30.0);
      EXPECT_NEAR(policy_forward(w, s, o), eigen_forward(w, in), 1e-9);
    }
  }
}

TEST(Policy, ZeroWeightsGiveHalfScale) {
  const auto w = zero_policy();
  OptionSpec o;
  for (double p : {50.0, 100.0, 180.0})
    for (std::size_t t : {1u, 15u, 30u}) EXPECT_DOUBLE_EQ(policy_forward(w, {37.0, p, t, 0}, o), 50.0);
}

TEST(Policy, SaturatedOutputBias) {
  auto w = zero_policy();
  w.layers.back().bias[0] = 30.0;
  EXPECT_NEAR(policy_forward(w, {0, 100, 10, 0}, OptionSpec{}), 100.0, 1e-10);
  w.layers.back().bias[0] = -30.0;
  EXPECT_NEAR(policy_forward(w, {0, 100, 10, 0}, OptionSpec{}), 0.0, 1e-10);
}

TEST(Policy, OutputsStayInRange) {
  OptionSpec o;
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    auto w = random_policy(seed);
    for (auto& x : w.layers.back().weights) x *= 50.0;
    for (double p : {1.0, 60.0, 100.0, 1e4}) {
      const double a = policy_forward(w, {100.0, p, 5, 0}, o);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 100.0);
    }
  }
}

TEST(Policy, InputNormalizationScales) {
  auto w = random_policy(2);
  w.input.holding_scale = 50.0;
  w.input.price_scale = 120.0;
  w.input.ttm_scale = 10.0;
  OptionSpec o;
  o.strike = 90.0;
  const HedgingEpisodeState s{20.0, 95.0, 7, 23};
  EXPECT_NEAR(policy_forward(w, s, o), eigen_forward(w, {0.4, 95.0 / 120.0, 0.7}), 1e-9);
  EXPECT_EQ(policy_forward_raw(w, {0.4, 95.0 / 120.0, 0.7}), policy_forward(w, s, o));
}

TEST(Policy, JsonRoundTripIsExact) {
  auto w = random_policy(4);
  w.input.price_scale = 100.0;
  w.layers[1].batch_norm.reset();
  const auto back = policy_from_json(to_json(w));
  EXPECT_EQ(back, w);
  EXPECT_EQ(to_json(back), to_json(w));
  const auto dir = std::filesystem::temp_directory_path() / "abmhedge_policy_test";
  std::filesystem::create_directories(dir);
  write_policy(w, dir / "p.json");
  EXPECT_EQ(read_policy(dir / "p.json"), w);
  EXPECT_FALSE(std::filesystem::exists(dir / "p.json.part"));
  std::filesystem::remove_all(dir);
}

TEST(Policy, MalformedDocumentsAreRejected) {
  auto w = zero_policy({4});
  w.layers[0].in = 2;
  EXPECT_THROW(w.validate(), FormatError);
  w = zero_policy({4});
  w.layers[0].weights.pop_back();
  EXPECT_THROW(w.validate(), FormatError);
  w = zero_policy({4});
  w.layers.back().activation = Activation::relu;
  EXPECT_THROW(w.validate(), FormatError);
  w = zero_policy({4});
  w.layers[0].bias[1] = std::nan("");
  EXPECT_THROW(w.validate(), FormatError);
  w = zero_policy({4});
  w.schema_version = 2;
  EXPECT_THROW(w.validate(), FormatError);
  w = zero_policy({4});
  w.layers[0].batch_norm->var[0] = -1.0;
  EXPECT_THROW(w.validate(), FormatError);

  const std::string good = to_json(zero_policy({4}));
  EXPECT_NO_THROW(policy_from_json(good));
  EXPECT_THROW(policy_from_json("{"), FormatError);
  EXPECT_THROW(policy_from_json("{\"schema_version\": 1}"), FormatError);
  std::string bad_act = good;
  bad_act.replace(bad_act.find("\"relu\""), 6, "\"tanh\"");
  EXPECT_THROW(policy_from_json(bad_act), FormatError);
  std::string bad_scale = good;
  bad_scale.replace(bad_scale.find("\"strike\""), 8, "\"spot\"");
  EXPECT_THROW(policy_from_json(bad_scale), FormatError);
  EXPECT_THROW(read_policy("/nonexistent/policy.json"), FormatError);
}
