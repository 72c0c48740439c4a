#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "abmhedge/scenario_set.hpp"

namespace abmhedge::facts {

/// Reference (or simulated) values of the four stylized facts.
struct StylizedFactsTarget {
  double hill = 0.0;                   ///< tail index of |returns|; lower = fatter tail
  double vol = 0.0;                    ///< per-day return volatility
  std::vector<double> acf_returns;     ///< lags 1..max_lag
  std::vector<double> acf_sq_returns;  ///< lags 1..max_lag
  std::size_t max_lag = 0;
  double tail_fraction = 0.0;
  bool hill_degenerate = false;

  friend bool operator==(const StylizedFactsTarget&, const StylizedFactsTarget&) = default;
};

struct DistanceWeights {
  double hill = 1.0;
  double vol = 1.0;
  double acf = 1.0;
  double acf_sq = 1.0;

  /// Throws ParameterError if any weight is negative or all are zero.
  void validate() const;
};

/// Statistic configuration shared by the reference and simulated sides.
struct FactsConfig {
  double tail_fraction = 0.05;
  std::size_t max_lag = 20;
  std::size_t burn_in = 250;  ///< simulated prices discarded from the start of each path
};

/// The four weighted components and their sum.
struct DistanceBreakdown {
  double hill = 0.0;
  double vol = 0.0;
  double acf = 0.0;
  double acf_sq = 0.0;
  double total = 0.0;
};

/// Tail index reported (with the degenerate flag) when 1 / xi would exceed it.
inline constexpr double kHillCap = 1000.0;
inline constexpr std::size_t kMinTailObservations = 10;

struct HillResult {
  double index = 0.0;
  bool degenerate = false;
};

/// r_t = ln(P_{t+1} / P_t).
std::vector<double> log_returns(std::span<const double> prices);

/// Hill estimate over the k = floor(tail_fraction * n) largest absolute returns,
/// returned as the tail index 1 / xi (capped at kHillCap).
HillResult hill_estimator(std::span<const double> returns, double tail_fraction);

/// Sample autocorrelations at lags 1..max_lag.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// Sample standard deviation (n - 1 denominator).
double realized_volatility(std::span<const double> returns);

/// All four statistics of one return series.
StylizedFactsTarget compute_facts(std::span<const double> returns, double tail_fraction,
                                  std::size_t max_lag);

/// Target statistics of a historical price series (at least 500 prices).
StylizedFactsTarget reference_stats(std::span<const double> prices, double tail_fraction,
                                    std::size_t max_lag);

/// Per-path statistics averaged over the paths of a scenario set, after burn-in.
StylizedFactsTarget scenario_stats(const ScenarioSet& scenarios, const FactsConfig& config,
                                   std::size_t threads = 1);

/// Weighted distance between averaged simulated statistics and a target.
DistanceBreakdown facts_distance(const StylizedFactsTarget& simulated,
                                 const StylizedFactsTarget& target,
                                 const DistanceWeights& weights);

DistanceBreakdown stylized_facts_distance(const ScenarioSet& scenarios,
                                          const StylizedFactsTarget& target,
                                          const DistanceWeights& weights,
                                          const FactsConfig& config, std::size_t threads = 1);

std::string to_json(const StylizedFactsTarget& stats);
StylizedFactsTarget stats_from_json(const std::string& text);

/// "lag,acf_returns,acf_sq_returns" rows for plotting.
std::string acf_csv(const StylizedFactsTarget& stats);

}  // namespace abmhedge::facts
