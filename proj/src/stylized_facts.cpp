#include "abmhedge/stylized_facts.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "abmhedge/format.hpp"
#include "abmhedge/errors.hpp"
#include "abmhedge/json_util.hpp"
#include "abmhedge/parallel.hpp"

namespace abmhedge::facts {

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

void DistanceWeights::validate() const {
  for (const double w : {hill, vol, acf, acf_sq}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("distance weights must be >= 0");
  }
  if (hill == 0.0 && vol == 0.0 && acf == 0.0 && acf_sq == 0.0) {
    throw ParameterError("distance weights must not all be zero");
  }
}

std::vector<double> log_returns(std::span<const double> prices) {
  if (prices.size() < 2) throw InsufficientDataError("log_returns needs at least 2 prices");
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
      throw DomainError("nonpositive or non-finite price at index " + std::to_string(i));
    }
  }
  std::vector<double> out(prices.size() - 1);
  for (std::size_t t = 0; t + 1 < prices.size(); ++t) out[t] = std::log(prices[t + 1] / prices[t]);
  return out;
}

HillResult hill_estimator(std::span<const double> returns, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw ParameterError("tail_fraction must lie in (0, 1)");
  }
  const auto k = static_cast<std::size_t>(std::floor(tail_fraction * returns.size()));
  if (k < kMinTailObservations || k + 1 > returns.size()) {
    throw InsufficientDataError("Hill estimator needs at least " +
                                std::to_string(kMinTailObservations) + " tail observations, got " +
                                std::to_string(k));
  }
  std::vector<double> abs_r(returns.size());
  std::transform(returns.begin(), returns.end(), abs_r.begin(), [](double r) { return std::fabs(r); });
  std::partial_sort(abs_r.begin(), abs_r.begin() + static_cast<std::ptrdiff_t>(k + 1), abs_r.end(),
                    std::greater<>());
  const double threshold = abs_r[k];
  if (!(threshold > 0.0)) throw DomainError("Hill estimator threshold order statistic is zero");
  double xi = 0.0;
  for (std::size_t i = 0; i < k; ++i) xi += std::log(abs_r[i] / threshold);
  xi /= static_cast<double>(k);
  if (xi * kHillCap <= 1.0) return {kHillCap, true};
  return {1.0 / xi, false};
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  if (series.size() <= max_lag + 1) {
    throw InsufficientDataError("acf needs more than max_lag + 1 observations");
  }
  const double mean = mean_of(series);
  double denom = 0.0;
  double max_abs = 0.0;
  for (const double x : series) {
    denom += (x - mean) * (x - mean);
    max_abs = std::max(max_abs, std::fabs(x));
  }
  // Zero variance up to rounding of the inputs.
  const double sd = std::sqrt(denom / static_cast<double>(series.size()));
  if (denom == 0.0 || sd <= 1e-9 * max_abs) {
    throw DegenerateError("acf of a series with zero variance is undefined");
  }
  std::vector<double> out(max_lag);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double num = 0.0;
    for (std::size_t t = 0; t + lag < series.size(); ++t) {
      num += (series[t] - mean) * (series[t + lag] - mean);
    }
    out[lag - 1] = std::clamp(num / denom, -1.0, 1.0);
  }
  return out;
}

double realized_volatility(std::span<const double> returns) {
  if (returns.size() < 2) throw InsufficientDataError("realized_volatility needs >= 2 returns");
  // Shifted by the first value so a constant series gives exactly zero.
  const double shift = returns.front();
  double sum = 0.0;
  for (const double r : returns) sum += r - shift;
  const double mean = sum / static_cast<double>(returns.size());
  double ss = 0.0;
  for (const double r : returns) ss += (r - shift - mean) * (r - shift - mean);
  return std::sqrt(ss / static_cast<double>(returns.size() - 1));
}

StylizedFactsTarget compute_facts(std::span<const double> returns, double tail_fraction,
                                  std::size_t max_lag) {
  StylizedFactsTarget out;
  const HillResult hill = hill_estimator(returns, tail_fraction);
  out.hill = hill.index;
  out.hill_degenerate = hill.degenerate;
  out.vol = realized_volatility(returns);
  out.acf_returns = acf(returns, max_lag);
  std::vector<double> sq(returns.size());
  std::transform(returns.begin(), returns.end(), sq.begin(), [](double r) { return r * r; });
  out.acf_sq_returns = acf(sq, max_lag);
  out.max_lag = max_lag;
  out.tail_fraction = tail_fraction;
  return out;
}

StylizedFactsTarget reference_stats(std::span<const double> prices, double tail_fraction,
                                    std::size_t max_lag) {
  if (prices.size() < 500) {
    throw InsufficientDataError("reference statistics need at least 500 prices, got " +
                                std::to_string(prices.size()));
  }
  const auto r = log_returns(prices);
  return compute_facts(r, tail_fraction, max_lag);
}

StylizedFactsTarget scenario_stats(const ScenarioSet& scenarios, const FactsConfig& config,
                                   std::size_t threads) {
  if (scenarios.n_paths() == 0) throw InsufficientDataError("scenario set is empty");
  if (scenarios.path_length() <= config.burn_in + 2) {
    throw InsufficientDataError("paths shorter than burn-in");
  }
  std::vector<StylizedFactsTarget> per_path(scenarios.n_paths());
  parallel_for(scenarios.n_paths(), threads, [&](std::size_t i) {
    const auto path = scenarios.path(i).subspan(config.burn_in);
    per_path[i] = compute_facts(log_returns(path), config.tail_fraction, config.max_lag);
  });
  StylizedFactsTarget avg;
  avg.max_lag = config.max_lag;
  avg.tail_fraction = config.tail_fraction;
  avg.acf_returns.assign(config.max_lag, 0.0);
  avg.acf_sq_returns.assign(config.max_lag, 0.0);
  for (const auto& s : per_path) {
    avg.hill += s.hill;
    avg.vol += s.vol;
    avg.hill_degenerate = avg.hill_degenerate || s.hill_degenerate;
    for (std::size_t l = 0; l < config.max_lag; ++l) {
      avg.acf_returns[l] += s.acf_returns[l];
      avg.acf_sq_returns[l] += s.acf_sq_returns[l];
    }
  }
  const auto m = static_cast<double>(per_path.size());
  avg.hill /= m;
  avg.vol /= m;
  for (std::size_t l = 0; l < config.max_lag; ++l) {
    avg.acf_returns[l] /= m;
    avg.acf_sq_returns[l] /= m;
  }
  return avg;
}

DistanceBreakdown facts_distance(const StylizedFactsTarget& simulated,
                                 const StylizedFactsTarget& target,
                                 const DistanceWeights& weights) {
  weights.validate();
  if (!(target.hill > 0.0) || !(target.vol > 0.0)) {
    throw DegenerateError("target Hill index and volatility must be positive");
  }
  if (simulated.acf_returns.size() != target.acf_returns.size() ||
      simulated.acf_sq_returns.size() != target.acf_sq_returns.size() ||
      target.acf_returns.empty()) {
    throw ParameterError("simulated and target ACF lag ranges differ");
  }
  auto mean_abs_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  };
  DistanceBreakdown d;
  d.hill = std::fabs(simulated.hill - target.hill) / target.hill;
  d.vol = std::fabs(simulated.vol - target.vol) / target.vol;
  d.acf = mean_abs_diff(simulated.acf_returns, target.acf_returns);
  d.acf_sq = mean_abs_diff(simulated.acf_sq_returns, target.acf_sq_returns);
  d.total = weights.hill * d.hill + weights.vol * d.vol + weights.acf * d.acf +
            weights.acf_sq * d.acf_sq;
  return d;
}

DistanceBreakdown stylized_facts_distance(const ScenarioSet& scenarios,
                                          const StylizedFactsTarget& target,
                                          const DistanceWeights& weights,
                                          const FactsConfig& config, std::size_t threads) {
  if (config.max_lag != target.max_lag) {
    throw ParameterError("max_lag differs between configuration and target");
  }
  return facts_distance(scenario_stats(scenarios, config, threads), target, weights);
}

std::string to_json(const StylizedFactsTarget& stats) {
  json_util::json j;
  j["hill"] = stats.hill;
  j["hill_degenerate"] = stats.hill_degenerate;
  j["vol"] = stats.vol;
  j["acf_returns"] = stats.acf_returns;
  j["acf_sq_returns"] = stats.acf_sq_returns;
  j["max_lag"] = stats.max_lag;
  j["tail_fraction"] = stats.tail_fraction;
  return j.dump(2);
}

StylizedFactsTarget stats_from_json(const std::string& text) {
  const auto j = json_util::parse(text);
  StylizedFactsTarget s;
  s.hill = json_util::number_at(j, "hill");
  s.vol = json_util::number_at(j, "vol");
  s.acf_returns = json_util::numbers_at(j, "acf_returns");
  s.acf_sq_returns = json_util::numbers_at(j, "acf_sq_returns");
  const double lag = json_util::number_at(j, "max_lag");
  if (lag < 1 || lag != std::floor(lag)) throw FormatError("max_lag must be a positive integer");
  s.max_lag = static_cast<std::size_t>(lag);
  s.tail_fraction = json_util::number_at(j, "tail_fraction");
  s.hill_degenerate = j.value("hill_degenerate", false);
  if (s.acf_returns.size() != s.max_lag || s.acf_sq_returns.size() != s.max_lag) {
    throw FormatError("ACF arrays do not match max_lag");
  }
  return s;
}

std::string acf_csv(const StylizedFactsTarget& stats) {
  std::ostringstream out;
  out << "lag,acf_returns,acf_sq_returns\n";
  for (std::size_t l = 0; l < stats.acf_returns.size(); ++l) {
    out << (l + 1) << ',' << shortest(stats.acf_returns[l]) << ',' << shortest(stats.acf_sq_returns[l])
        << '\n';
  }
  return out.str();
}

}  // namespace abmhedge::facts
