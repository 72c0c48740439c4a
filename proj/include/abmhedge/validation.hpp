#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "abmhedge/scenario_set.hpp"
#include "abmhedge/simulator.hpp"

namespace abmhedge::validation {

/// Symbolization and word-length settings for the GSL divergence.
struct GslDivConfig {
  std::size_t n_symbols = 5;                           ///< alphabet size b
  std::vector<std::size_t> word_lengths{1, 2, 3, 4, 5, 6};
  std::vector<double> word_weights;                    ///< empty = uniform

  /// Throws ParameterError unless b >= 2, lengths >= 1 and weights are
  /// nonnegative, match the lengths and sum to 1.
  void validate() const;
  std::vector<double> resolved_weights() const;
};

/// b - 1 interior bin edges at the k/b quantiles (linear interpolation) of `returns`.
std::vector<double> quantile_edges(std::span<const double> returns, std::size_t n_symbols);

/// Symbol in [0, b) of each value: the number of edges at or below it.
std::vector<std::uint32_t> symbolize(std::span<const double> values, std::span<const double> edges);

/// Subtracted L-divergence (base-2 entropies) between the word distributions of two
/// symbol sequences at word length `length`: 2 H(mix) - H(obs) - H(sim) >= 0.
double l_divergence(std::span<const std::uint32_t> observed, std::span<const std::uint32_t> simulated,
                    std::size_t n_symbols, std::size_t length);

/// Weighted mean over word lengths of the subtracted L-divergence between the
/// symbolized log returns of two price series. Bin edges come from `observed`.
/// Throws DegenerateError when the observed returns occupy a single symbol.
double gsl_div(std::span<const double> observed, std::span<const double> simulated,
               const GslDivConfig& config = {});

/// gsl_div of every path of `scenarios` against the reference series.
std::vector<double> gsl_div_scores(const ScenarioSet& scenarios, std::span<const double> reference,
                                   const GslDivConfig& config = {}, std::size_t threads = 1);

/// Generates `n_scenarios` paths of the reference's length from `model` and scores each.
std::vector<double> gsl_div_sample(const sim::ModelSpec& model, std::span<const double> reference,
                                   std::size_t n_scenarios, const GslDivConfig& config,
                                   std::uint64_t seed, std::size_t threads = 1);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  ///< two-sided
};

/// Welch unequal-variance two-sample t-test, t = (mean_x - mean_y) / se.
WelchResult welch_t_test(std::span<const double> xs, std::span<const double> ys);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace abmhedge::validation
