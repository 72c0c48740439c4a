#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "abmhedge/policy.hpp"
#include "abmhedge/scenario_set.hpp"

namespace abmhedge::hedging {

/// European call sold by the hedger. Time is measured in trading days, so
/// pricing_vol and rate are per day.
struct OptionSpec {
  double strike = 100.0;
  std::size_t maturity_days = 30;
  double contract_multiplier = 100.0;
  double pricing_vol = 0.01;
  double rate = 0.0;

  void validate() const;
};

/// Holding H_t (shares carried over (t, t+1]), price S_t, days to maturity, t.
struct HedgingEpisodeState {
  double holding = 0.0;
  double price = 0.0;
  std::size_t ttm_days = 0;
  std::size_t step_index = 0;
};

struct CostLevel {
  double pi = 0.0;  ///< proportional cost on traded value
};

/// Black-Scholes call in consistent units (vol and rate per unit of ttm).
double bs_call_price(double spot, double strike, double rate, double vol, double ttm);

/// Black-Scholes call delta; at expiry (or zero vol) a step at the
/// (discounted) strike with 0.5 at equality.
double bs_call_delta(double spot, double strike, double rate, double vol, double ttm);

/// Accounting P&L of a short option hedged with the underlying:
/// -(V_next - V) + H (S_next - S) - pi |S_next (H_next - H)|.
double accounting_reward(double v, double v_next, double s, double s_next, double h,
                         double h_next, double pi);

/// Option value per contract with `ttm_days` remaining.
double contract_value(const OptionSpec& option, double spot, std::size_t ttm_days);

HedgingEpisodeState env_reset(std::span<const double> path, const OptionSpec& option);

struct StepResult {
  HedgingEpisodeState next;
  double reward = 0.0;
  bool clamped = false;     ///< action was outside [0, multiplier] and was clamped
  bool liquidated = false;  ///< final step: the position was closed to zero
  bool done = false;
};

/// Advances one day: H_{t+1} = action (clamped to [0, multiplier]; forced to 0
/// on the final step), S moves from path[t] to path[t+1], ttm decreases by one.
/// Throws EpisodeFinishedError at maturity.
StepResult env_step(const HedgingEpisodeState& state, double action, std::span<const double> path,
                    const OptionSpec& option, CostLevel cost);

/// Target holding as a function of the current state.
using Policy = std::function<double(const HedgingEpisodeState&, const OptionSpec&)>;

/// multiplier * delta at the current price with ttm one day shorter.
double delta_hedge_policy(const HedgingEpisodeState& state, const OptionSpec& option);

Policy make_delta_policy();
Policy make_never_hedge_policy();
Policy make_neural_policy(PolicyWeights weights);

/// Total P&L of one episode.
double run_episode(const Policy& policy, std::span<const double> path, const OptionSpec& option,
                   CostLevel cost);

struct EvaluationConfig {
  double es_confidence = 0.95;
  bool atm_strike = true;  ///< strike = first price of each path; otherwise option.strike
  std::size_t threads = 1;
};

struct CostReport {
  double pi = 0.0;
  double mean_pnl = 0.0;
  double std_pnl = 0.0;
  double expected_shortfall = 0.0;      ///< mean of the worst (1 - q) share of episode P&L
  double expected_shortfall_pct = 0.0;  ///< as a percentage of the mean initial premium; NaN if premium is 0
  double mean_premium = 0.0;            ///< mean initial option value per contract
  std::vector<double> pnl;              ///< per-episode P&L in scenario order
};

struct EvaluationReport {
  std::string policy;
  std::size_t n_episodes = 0;
  std::size_t maturity_days = 0;
  double es_confidence = 0.95;
  std::vector<CostReport> costs;
};

/// Expected shortfall of the worst (1 - confidence) share of `pnl`.
double expected_shortfall(std::span<const double> pnl, double confidence);

EvaluationReport evaluate_policy(const Policy& policy, std::string policy_name,
                                 const ScenarioSet& scenarios, const OptionSpec& option,
                                 std::span<const double> cost_levels,
                                 const EvaluationConfig& config = {});

/// Rolling windows of `window` returns rebuilt from `initial_price`;
/// length - window scenarios of window + 1 prices.
ScenarioSet build_test_scenarios(std::span<const double> prices, std::size_t window = 30,
                                 double initial_price = 100.0);

/// Cost levels 0.01%, 0.1%, 0.2%, 0.4%, 0.6%, 1.0%.
std::vector<double> default_cost_levels();

std::string to_json(const EvaluationReport& report);
/// "episode,pnl_<pi>..." with one column per cost level.
std::string pnl_csv(const EvaluationReport& report);

}  // namespace abmhedge::hedging
