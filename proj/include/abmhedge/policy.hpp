#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace abmhedge::hedging {

struct OptionSpec;
struct HedgingEpisodeState;

enum class Activation { relu, sigmoid, none };

/// Inference-time batch normalization: gamma * (x - mean) / sqrt(var + eps) + beta.
struct BatchNorm {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> gamma;
  std::vector<double> beta;
  double eps = 1e-5;

  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

/// affine -> optional batch norm -> activation. Weights are row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  std::optional<BatchNorm> batch_norm;
  Activation activation = Activation::none;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Maps the state (holding, price, ttm) to network inputs
/// (holding / holding_scale, price / price_scale, ttm / ttm_scale).
/// A scale of nullopt means "the episode's strike" for price and
/// "the option maturity in days" for ttm.
struct InputNormalization {
  double holding_scale = 100.0;
  std::optional<double> price_scale;
  std::optional<double> ttm_scale;

  friend bool operator==(const InputNormalization&, const InputNormalization&) = default;
};

inline constexpr int kPolicySchemaVersion = 1;

/// Portable actor network shared between the trainer and the evaluator.
struct PolicyWeights {
  int schema_version = kPolicySchemaVersion;
  InputNormalization input;
  std::vector<DenseLayer> layers;
  double output_scale = 100.0;  ///< sigmoid output times this = shares held

  /// Throws FormatError unless the layers chain 3 -> ... -> 1, every array has
  /// the declared size, all values are finite, and the last layer is sigmoid.
  void validate() const;

  friend bool operator==(const PolicyWeights&, const PolicyWeights&) = default;
};

/// Forward pass on already-normalized inputs.
double policy_forward_raw(const PolicyWeights& weights, const std::array<double, 3>& inputs);

/// Action in [0, output_scale] for a hedging state.
double policy_forward(const PolicyWeights& weights, const HedgingEpisodeState& state,
                      const OptionSpec& option);

std::string to_json(const PolicyWeights& weights);
PolicyWeights policy_from_json(const std::string& text);

PolicyWeights read_policy(const std::filesystem::path& path);
void write_policy(const PolicyWeights& weights, const std::filesystem::path& path);

/// 3 -> hidden... -> 1 network with every parameter zero and identity batch norms.
PolicyWeights zero_policy(const std::vector<std::size_t>& hidden = {32, 64, 32});

}  // namespace abmhedge::hedging
