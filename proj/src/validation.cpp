#include "abmhedge/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "abmhedge/errors.hpp"
#include "abmhedge/parallel.hpp"
#include "abmhedge/stylized_facts.hpp"

namespace abmhedge::validation {

void GslDivConfig::validate() const {
  if (n_symbols < 2) throw ParameterError("GSL-div needs at least 2 symbols");
  if (word_lengths.empty()) throw ParameterError("GSL-div needs at least one word length");
  for (const auto l : word_lengths) {
    if (l < 1) throw ParameterError("GSL-div word lengths must be >= 1");
    if (std::pow(static_cast<double>(n_symbols), static_cast<double>(l)) > 1.8e19) {
      throw ParameterError("GSL-div word length too large for the alphabet");
    }
  }
  if (!word_weights.empty()) {
    if (word_weights.size() != word_lengths.size()) {
      throw ParameterError("GSL-div weights must match the word lengths");
    }
    double sum = 0.0;
    for (const double w : word_weights) {
      if (!(w >= 0.0)) throw ParameterError("GSL-div weights must be nonnegative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ParameterError("GSL-div weights must sum to 1");
  }
}

std::vector<double> GslDivConfig::resolved_weights() const {
  if (!word_weights.empty()) return word_weights;
  return std::vector<double>(word_lengths.size(), 1.0 / static_cast<double>(word_lengths.size()));
}

std::vector<double> quantile_edges(std::span<const double> returns, std::size_t n_symbols) {
  if (returns.empty()) throw InsufficientDataError("no returns to compute bin edges");
  std::vector<double> sorted(returns.begin(), returns.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges(n_symbols - 1);
  const double last = static_cast<double>(sorted.size() - 1);
  for (std::size_t k = 1; k < n_symbols; ++k) {
    const double h = last * static_cast<double>(k) / static_cast<double>(n_symbols);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    edges[k - 1] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return edges;
}

std::vector<std::uint32_t> symbolize(std::span<const double> values, std::span<const double> edges) {
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::uint32_t>(std::upper_bound(edges.begin(), edges.end(), values[i]) -
                                        edges.begin());
  }
  return out;
}

double l_divergence(std::span<const std::uint32_t> observed, std::span<const std::uint32_t> simulated,
                    std::size_t n_symbols, std::size_t length) {
  if (observed.size() < length || simulated.size() < length) {
    throw InsufficientDataError("series too short for word length " + std::to_string(length));
  }
  // Word code -> (observed count, simulated count).
  std::unordered_map<std::uint64_t, std::array<std::size_t, 2>> counts;
  auto add_words = [&](std::span<const std::uint32_t> symbols, int side) {
    for (std::size_t start = 0; start + length <= symbols.size(); ++start) {
      std::uint64_t code = 0;
      for (std::size_t i = 0; i < length; ++i) code = code * n_symbols + symbols[start + i];
      ++counts[code][side];
    }
  };
  add_words(observed, 0);
  add_words(simulated, 1);

  // Deterministic accumulation order; identical inputs give term-by-term equal sums.
  std::vector<std::pair<std::uint64_t, std::array<std::size_t, 2>>> words(counts.begin(), counts.end());
  std::sort(words.begin(), words.end());
  const double n_obs = static_cast<double>(observed.size() - length + 1);
  const double n_sim = static_cast<double>(simulated.size() - length + 1);
  auto plogp = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
  double h_obs = 0.0, h_sim = 0.0, h_mix = 0.0;
  for (const auto& [code, c] : words) {
    const double fo = static_cast<double>(c[0]) / n_obs;
    const double fs = static_cast<double>(c[1]) / n_sim;
    h_obs -= plogp(fo);
    h_sim -= plogp(fs);
    h_mix -= plogp(0.5 * (fo + fs));
  }
  return std::max(0.0, 2.0 * h_mix - h_obs - h_sim);
}

double gsl_div(std::span<const double> observed, std::span<const double> simulated,
               const GslDivConfig& config) {
  config.validate();
  const std::size_t longest = *std::max_element(config.word_lengths.begin(), config.word_lengths.end());
  if (observed.size() < longest + 1 || simulated.size() < longest + 1) {
    throw InsufficientDataError("series too short for the longest GSL-div word");
  }
  const auto r_obs = facts::log_returns(observed);
  const auto r_sim = facts::log_returns(simulated);
  const auto edges = quantile_edges(r_obs, config.n_symbols);
  const auto s_obs = symbolize(r_obs, edges);
  const auto s_sim = symbolize(r_sim, edges);
  if (std::all_of(s_obs.begin(), s_obs.end(), [&](std::uint32_t s) { return s == s_obs.front(); })) {
    throw DegenerateError("observed returns fall into a single symbol");
  }
  const auto weights = config.resolved_weights();
  double score = 0.0;
  for (std::size_t i = 0; i < config.word_lengths.size(); ++i) {
    score += weights[i] * l_divergence(s_obs, s_sim, config.n_symbols, config.word_lengths[i]);
  }
  return score;
}

std::vector<double> gsl_div_scores(const ScenarioSet& scenarios, std::span<const double> reference,
                                   const GslDivConfig& config, std::size_t threads) {
  std::vector<double> out(scenarios.n_paths());
  parallel_for(scenarios.n_paths(), threads,
               [&](std::size_t i) { out[i] = gsl_div(reference, scenarios.path(i), config); });
  return out;
}

std::vector<double> gsl_div_sample(const sim::ModelSpec& model, std::span<const double> reference,
                                   std::size_t n_scenarios, const GslDivConfig& config,
                                   std::uint64_t seed, std::size_t threads) {
  if (n_scenarios < 1) throw ParameterError("need at least one scenario");
  if (reference.size() < 2) throw InsufficientDataError("reference series too short");
  const auto set = sim::simulate(model, reference.size() - 1, n_scenarios, seed, {threads});
  return gsl_div_scores(set, reference, config, threads);
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

WelchResult welch_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) throw InsufficientDataError("Welch test needs >= 2 samples per side");
  auto moments = [](std::span<const double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::pair{m, ss / static_cast<double>(v.size() - 1)};
  };
  const auto [mx, vx] = moments(xs);
  const auto [my, vy] = moments(ys);
  if (!std::isfinite(vx) || !std::isfinite(vy)) throw DomainError("Welch test needs finite variances");
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  const double sx = vx / nx;
  const double sy = vy / ny;
  if (sx + sy == 0.0) throw DegenerateError("Welch test: both samples have zero variance");
  WelchResult r;
  r.t = (mx - my) / std::sqrt(sx + sy);
  r.df = (sx + sy) * (sx + sy) / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
  r.p_value = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace abmhedge::validation
