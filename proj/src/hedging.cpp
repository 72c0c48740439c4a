#include "abmhedge/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "abmhedge/format.hpp"
#include "abmhedge/errors.hpp"
#include "abmhedge/json_util.hpp"
#include "abmhedge/parallel.hpp"

namespace abmhedge::hedging {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void check_bs_domain(double spot, double strike, double vol, double ttm) {
  if (!(spot > 0.0) || !(strike > 0.0) || !(vol >= 0.0) || !(ttm >= 0.0) || !std::isfinite(spot) ||
      !std::isfinite(strike) || !std::isfinite(vol) || !std::isfinite(ttm)) {
    throw DomainError("Black-Scholes inputs need spot > 0, strike > 0, vol >= 0, ttm >= 0");
  }
}

double step_at(double x, double edge) {
  if (x > edge) return 1.0;
  if (x < edge) return 0.0;
  return 0.5;
}

}  // namespace

void OptionSpec::validate() const {
  if (!(strike > 0.0)) throw ParameterError("strike must be > 0");
  if (maturity_days < 1) throw ParameterError("maturity_days must be >= 1");
  if (!(pricing_vol >= 0.0)) throw ParameterError("pricing_vol must be >= 0");
  if (!(contract_multiplier > 0.0)) throw ParameterError("contract_multiplier must be > 0");
  if (!std::isfinite(rate)) throw ParameterError("rate must be finite");
}

double bs_call_price(double spot, double strike, double rate, double vol, double ttm) {
  check_bs_domain(spot, strike, vol, ttm);
  if (ttm == 0.0) return std::max(spot - strike, 0.0);
  const double discounted_strike = strike * std::exp(-rate * ttm);
  if (vol == 0.0) return std::max(spot - discounted_strike, 0.0);
  const double sd = vol * std::sqrt(ttm);
  const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * ttm) / sd;
  const double d2 = d1 - sd;
  return spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2);
}

double bs_call_delta(double spot, double strike, double rate, double vol, double ttm) {
  check_bs_domain(spot, strike, vol, ttm);
  if (ttm == 0.0) return step_at(spot, strike);
  if (vol == 0.0) return step_at(spot, strike * std::exp(-rate * ttm));
  const double sd = vol * std::sqrt(ttm);
  const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * ttm) / sd;
  return norm_cdf(d1);
}

double accounting_reward(double v, double v_next, double s, double s_next, double h,
                         double h_next, double pi) {
  return -(v_next - v) + h * (s_next - s) - pi * std::fabs(s_next * (h_next - h));
}

double contract_value(const OptionSpec& option, double spot, std::size_t ttm_days) {
  return option.contract_multiplier *
         bs_call_price(spot, option.strike, option.rate, option.pricing_vol,
                       static_cast<double>(ttm_days));
}

HedgingEpisodeState env_reset(std::span<const double> path, const OptionSpec& option) {
  option.validate();
  if (path.size() < option.maturity_days + 1) {
    throw ParameterError("path shorter than maturity_days + 1");
  }
  return {0.0, path[0], option.maturity_days, 0};
}

StepResult env_step(const HedgingEpisodeState& state, double action, std::span<const double> path,
                    const OptionSpec& option, CostLevel cost) {
  const std::size_t t = state.step_index;
  if (t >= option.maturity_days || state.ttm_days == 0) {
    throw EpisodeFinishedError("hedging episode already reached maturity");
  }
  if (path.size() < t + 2) throw ParameterError("path too short for step " + std::to_string(t));
  if (std::isnan(action)) throw ParameterError("action is NaN");
  if (!(cost.pi >= 0.0)) throw ParameterError("transaction cost must be >= 0");

  StepResult r;
  double next_holding = std::clamp(action, 0.0, option.contract_multiplier);
  r.clamped = next_holding != action;
  r.done = t + 1 == option.maturity_days;
  if (r.done) {
    r.liquidated = next_holding != 0.0;
    next_holding = 0.0;
  }
  const double s = path[t];
  const double s_next = path[t + 1];
  const double v = contract_value(option, s, state.ttm_days);
  const double v_next = contract_value(option, s_next, state.ttm_days - 1);
  r.reward = accounting_reward(v, v_next, s, s_next, state.holding, next_holding, cost.pi);
  r.next = {next_holding, s_next, state.ttm_days - 1, t + 1};
  return r;
}

double delta_hedge_policy(const HedgingEpisodeState& state, const OptionSpec& option) {
  const std::size_t ttm_after = state.ttm_days == 0 ? 0 : state.ttm_days - 1;
  return option.contract_multiplier * bs_call_delta(state.price, option.strike, option.rate,
                                                    option.pricing_vol,
                                                    static_cast<double>(ttm_after));
}

Policy make_delta_policy() { return delta_hedge_policy; }

Policy make_never_hedge_policy() {
  return [](const HedgingEpisodeState&, const OptionSpec&) { return 0.0; };
}

Policy make_neural_policy(PolicyWeights weights) {
  weights.validate();
  return [w = std::move(weights)](const HedgingEpisodeState& s, const OptionSpec& o) {
    return policy_forward(w, s, o);
  };
}

double run_episode(const Policy& policy, std::span<const double> path, const OptionSpec& option,
                   CostLevel cost) {
  HedgingEpisodeState state = env_reset(path, option);
  double total = 0.0;
  for (bool done = false; !done;) {
    const StepResult r = env_step(state, policy(state, option), path, option, cost);
    total += r.reward;
    state = r.next;
    done = r.done;
  }
  return total;
}

double expected_shortfall(std::span<const double> pnl, double confidence) {
  if (pnl.empty()) throw InsufficientDataError("expected shortfall of an empty sample");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("ES confidence must lie in (0, 1)");
  std::vector<double> sorted(pnl.begin(), pnl.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - confidence) * static_cast<double>(sorted.size());
  const auto n_tail = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(tail - 1e-9)), 1,
                                              sorted.size());
  return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_tail), 0.0) /
         static_cast<double>(n_tail);
}

EvaluationReport evaluate_policy(const Policy& policy, std::string policy_name,
                                 const ScenarioSet& scenarios, const OptionSpec& option,
                                 std::span<const double> cost_levels,
                                 const EvaluationConfig& config) {
  option.validate();
  if (scenarios.path_length() != option.maturity_days + 1) {
    throw ParameterError("scenario length " + std::to_string(scenarios.path_length()) +
                         " does not equal maturity_days + 1");
  }
  if (scenarios.n_paths() == 0) throw InsufficientDataError("no scenarios to evaluate");
  EvaluationReport report;
  report.policy = std::move(policy_name);
  report.n_episodes = scenarios.n_paths();
  report.maturity_days = option.maturity_days;
  report.es_confidence = config.es_confidence;

  auto option_for = [&](std::size_t i) {
    OptionSpec o = option;
    if (config.atm_strike) o.strike = scenarios.path(i)[0];
    return o;
  };
  double premium_sum = 0.0;
  for (std::size_t i = 0; i < scenarios.n_paths(); ++i) {
    const OptionSpec o = option_for(i);
    premium_sum += contract_value(o, scenarios.path(i)[0], o.maturity_days);
  }
  const double mean_premium = premium_sum / static_cast<double>(scenarios.n_paths());

  for (const double pi : cost_levels) {
    CostReport c;
    c.pi = pi;
    c.mean_premium = mean_premium;
    c.pnl.resize(scenarios.n_paths());
    parallel_for(scenarios.n_paths(), config.threads, [&](std::size_t i) {
      c.pnl[i] = run_episode(policy, scenarios.path(i), option_for(i), CostLevel{pi});
    });
    const double n = static_cast<double>(c.pnl.size());
    c.mean_pnl = std::accumulate(c.pnl.begin(), c.pnl.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : c.pnl) ss += (x - c.mean_pnl) * (x - c.mean_pnl);
    c.std_pnl = c.pnl.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    c.expected_shortfall = expected_shortfall(c.pnl, config.es_confidence);
    c.expected_shortfall_pct =
        mean_premium > 0.0 ? 100.0 * c.expected_shortfall / mean_premium : std::nan("");
    report.costs.push_back(std::move(c));
  }
  return report;
}

ScenarioSet build_test_scenarios(std::span<const double> prices, std::size_t window,
                                 double initial_price) {
  if (window < 1) throw ParameterError("window must be >= 1");
  if (!(initial_price > 0.0)) throw ParameterError("initial_price must be > 0");
  if (prices.size() < window + 1) {
    throw InsufficientDataError("need at least window + 1 prices, got " + std::to_string(prices.size()));
  }
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
      throw DomainError("nonpositive price at index " + std::to_string(i));
    }
  }
  const std::size_t count = prices.size() - window;
  ScenarioSet set(count, window + 1, 0, "historical");
  for (std::size_t s = 0; s < count; ++s) {
    auto out = set.path(s);
    out[0] = initial_price;
    for (std::size_t j = 0; j < window; ++j) out[j + 1] = out[j] * (prices[s + j + 1] / prices[s + j]);
  }
  return set;
}

std::vector<double> default_cost_levels() { return {0.0001, 0.001, 0.002, 0.004, 0.006, 0.01}; }

std::string to_json(const EvaluationReport& report) {
  using json_util::json;
  json j;
  j["policy"] = report.policy;
  j["n_episodes"] = report.n_episodes;
  j["maturity_days"] = report.maturity_days;
  j["es_confidence"] = report.es_confidence;
  json costs = json::array();
  for (const auto& c : report.costs) {
    costs.push_back({{"pi", c.pi},
                     {"mean_pnl", c.mean_pnl},
                     {"std_pnl", c.std_pnl},
                     {"expected_shortfall", c.expected_shortfall},
                     {"expected_shortfall_pct", std::isfinite(c.expected_shortfall_pct)
                                                    ? json(c.expected_shortfall_pct)
                                                    : json(nullptr)},
                     {"mean_premium", c.mean_premium}});
  }
  j["costs"] = std::move(costs);
  return j.dump(2);
}

std::string pnl_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "episode";
  for (const auto& c : report.costs) out << ",pnl_" << shortest(c.pi);
  out << '\n';
  for (std::size_t i = 0; i < report.n_episodes; ++i) {
    out << i;
    for (const auto& c : report.costs) out << ',' << shortest(c.pnl[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace abmhedge::hedging
