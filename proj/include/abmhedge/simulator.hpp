#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "abmhedge/scenario_set.hpp"

namespace abmhedge::sim {

/// Chiarella-Heston parameters. All rates are per trading day; prices and
/// fundamental values are in logs.
struct ModelParams {
  double kappa = 0.0;    ///< fundamental-trader demand per unit log gap
  double beta = 0.0;     ///< momentum demand scale
  double gamma = 10.0;   ///< momentum saturation, > 0
  double omega = 1.0;    ///< volatility-trader demand scale
  double g = 0.0;        ///< fundamental log drift
  double sigma_f = 0.0;  ///< fundamental volatility
  double alpha = 1.0 / 6.0;  ///< momentum decay
  double phi = 0.0;      ///< variance mean reversion
  double theta = 0.0;    ///< long-run variance
  double sigma = 0.0;    ///< vol-of-vol
  double rho = 0.0;      ///< corr(price noise, variance noise)

  /// Throws ParameterError naming the first offending field. alpha = 0 is
  /// accepted so the Heston reduction (kappa = alpha = 0) stays expressible.
  void validate() const;
};

struct InitialState {
  double p0 = 4.605170185988092;  ///< ln(100)
  double f0 = 4.605170185988092;
  double m0 = 0.0;
  double var0 = 0.0;

  void validate() const;
};

/// p0 = f0 = ln(100), m0 = 0, var0 = theta: the fixed point of the noiseless dynamics.
InitialState default_initial_state(const ModelParams& params);

struct GbmParams {
  double mu = 0.0;     ///< per-day drift of the price level
  double sigma = 0.0;  ///< per-day volatility
  double s0 = 100.0;   ///< initial price (level)

  void validate() const;
};

/// Heston in log price with drift mu on the log: x' = x + mu + sqrt(V) eps_s.
struct HestonParams {
  double mu = 0.0;
  double var0 = 0.0;
  double phi = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double s0 = 100.0;

  void validate() const;
};

/// Chiarella with constant-scale noise traders (sigma_n) in place of volatility traders.
struct ExtendedChiarellaParams {
  double kappa = 0.0;
  double beta = 0.0;
  double gamma = 10.0;
  double sigma_n = 0.0;
  double g = 0.0;
  double sigma_f = 0.0;
  double alpha = 1.0 / 6.0;

  void validate() const;
};

/// Per-step state of one simulated path. Index 0 holds the initial condition.
struct PathTrace {
  std::vector<double> log_price;
  std::vector<double> fundamental;
  std::vector<double> momentum;
  std::vector<double> variance;
};

struct RunOptions {
  std::size_t threads = 1;  ///< 0 = hardware concurrency
};

ScenarioSet simulate_chiarella_heston(const ModelParams& params, const InitialState& init,
                                      std::size_t n_steps, std::size_t n_paths,
                                      std::uint64_t seed, RunOptions opts = {});

ScenarioSet simulate_gbm(const GbmParams& params, std::size_t n_steps, std::size_t n_paths,
                         std::uint64_t seed, RunOptions opts = {});

ScenarioSet simulate_heston(const HestonParams& params, std::size_t n_steps,
                            std::size_t n_paths, std::uint64_t seed, RunOptions opts = {});

ScenarioSet simulate_extended_chiarella(const ExtendedChiarellaParams& params,
                                        const InitialState& init, std::size_t n_steps,
                                        std::size_t n_paths, std::uint64_t seed,
                                        RunOptions opts = {});

/// Full state trace of path `path_index`; identical to the corresponding row
/// of the simulate_* output.
PathTrace trace_chiarella_heston(const ModelParams& params, const InitialState& init,
                                 std::size_t n_steps, std::uint64_t seed,
                                 std::uint64_t path_index);
PathTrace trace_heston(const HestonParams& params, std::size_t n_steps, std::uint64_t seed,
                       std::uint64_t path_index);

/// One Euler step of the variance with full truncation.
double next_variance(double var, double phi, double theta, double sigma, double eps_v);

// ---------------------------------------------------------------------------
// Model registry: uniform access by tag and named parameters, used by the
// calibration grid and the CLI.

enum class ModelKind { chiarella_heston, gbm, heston, extended_chiarella };

std::string_view model_tag(ModelKind kind);
ModelKind model_kind_from_tag(std::string_view tag);

struct ChiarellaHestonSpec {
  ModelParams params;
  InitialState init;
};
struct ExtendedChiarellaSpec {
  ExtendedChiarellaParams params;
  InitialState init;
};

using ModelSpec = std::variant<ChiarellaHestonSpec, GbmParams, HestonParams, ExtendedChiarellaSpec>;

using NamedParams = std::map<std::string, double>;

ModelKind kind_of(const ModelSpec& spec);

/// Parameter names accepted by make_model for `kind`, in canonical order.
const std::vector<std::string>& param_names(ModelKind kind);

/// Builds a validated model from named values. Every name in param_names(kind)
/// must be present; unknown names throw ParameterError.
ModelSpec make_model(ModelKind kind, const NamedParams& values);

NamedParams to_named(const ModelSpec& spec);

/// Built-in parameter sets with S&P-like daily statistics (about 1% daily
/// volatility), used when no calibration result is supplied.
ModelSpec default_model(ModelKind kind);

ScenarioSet simulate(const ModelSpec& spec, std::size_t n_steps, std::size_t n_paths,
                     std::uint64_t seed, RunOptions opts = {});

}  // namespace abmhedge::sim
