#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "abmhedge/simulator.hpp"
#include "abmhedge/stylized_facts.hpp"

namespace abmhedge::calib {

/// Parameters fixed directly from historical data rather than searched.
struct FixedParams {
  double alpha = 1.0 / 6.0;  ///< one-week trend horizon: 1 / (1 + 5)
  double gamma = 10.0;
  double mu = 0.0;       ///< mean daily log return
  double g = 0.0;        ///< mu - sigma_f^2 / 2
  double sigma_f = 0.0;  ///< std of daily log returns
  double sigma = 0.0;    ///< std of the rolling volatility series
  double rho = 0.0;      ///< corr(return, next change of rolling volatility)
  bool rho_degenerate = false;  ///< returns or volatility changes had zero variance
};

inline constexpr std::size_t kDefaultVolWindow = 30;

/// Throws InsufficientDataError for fewer than vol_window + 2 prices.
FixedParams fixed_params_from_history(std::span<const double> prices,
                                      std::size_t vol_window = kDefaultVolWindow);

/// Rolling sample standard deviation over trailing windows of `window` returns;
/// element j covers returns [j, j + window).
std::vector<double> rolling_volatility(std::span<const double> returns, std::size_t window);

struct Axis {
  std::string name;
  std::vector<double> levels;
};

/// `count` levels from lo to hi inclusive, log-spaced or linear.
std::vector<double> spaced_levels(double lo, double hi, std::size_t count, bool log_spaced);

struct GridSpec {
  std::vector<Axis> axes;  ///< searched parameters; the last axis varies fastest
  std::size_t replications = 3;
  std::size_t paths = 16;
  std::size_t steps = 3000;
  std::uint64_t seed = 0;
  /// Same replication seeds at every grid point; otherwise seeds also depend on the point index.
  bool common_random_numbers = true;
  facts::FactsConfig facts;

  std::size_t size() const;
  /// Throws ParameterError on empty axes or negative theta/phi levels.
  void validate() const;
};

/// Search axes used when no grid file is supplied.
GridSpec default_grid(sim::ModelKind kind, const FixedParams& fixed);

/// Non-searched parameter values for `kind` derived from the fixed parameters.
sim::NamedParams base_params(sim::ModelKind kind, const FixedParams& fixed);

struct GridRow {
  std::vector<std::size_t> index;
  std::vector<double> values;  ///< one per axis
  double mean_distance = std::numeric_limits<double>::infinity();
  double std_distance = 0.0;
  facts::DistanceBreakdown mean_components;
  std::string diagnostic;  ///< nonempty when the point failed
};

struct Provenance {
  std::string data_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct CalibrationResult {
  sim::ModelKind model = sim::ModelKind::chiarella_heston;
  std::vector<std::string> axis_names;
  sim::NamedParams best_params;  ///< full parameter set of the selected point
  double best_distance = std::numeric_limits<double>::infinity();
  facts::DistanceBreakdown best_components;
  std::vector<GridRow> table;
  Provenance provenance;

  sim::ModelSpec best_model() const { return sim::make_model(model, best_params); }
};

/// Full parameter set at one grid point: base values overridden by axis values.
/// For models with a var0 parameter that is neither in `base` nor on an axis,
/// var0 follows theta.
sim::NamedParams resolve_point(sim::ModelKind kind, const sim::NamedParams& base,
                               const std::vector<Axis>& axes, std::span<const double> values);

/// Exhaustive search minimizing the mean stylized-facts distance over
/// replications. Ties resolve to the lexicographically first grid index.
CalibrationResult grid_search_calibrate(sim::ModelKind kind, const GridSpec& grid,
                                        const facts::StylizedFactsTarget& target,
                                        const sim::NamedParams& base,
                                        const facts::DistanceWeights& weights,
                                        std::size_t threads = 1);

/// Chiarella-Heston search with the remaining parameters taken from `fixed`.
CalibrationResult grid_search_calibrate(const GridSpec& grid,
                                        const facts::StylizedFactsTarget& target,
                                        const FixedParams& fixed,
                                        const facts::DistanceWeights& weights,
                                        std::size_t threads = 1);

std::string to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const std::string& text);

/// "i_axis...,axis...,mean_distance,std_distance,hill,vol,acf,acf_sq,diagnostic" rows.
std::string table_csv(const CalibrationResult& result);

std::string to_json(const FixedParams& fixed);

}  // namespace abmhedge::calib
