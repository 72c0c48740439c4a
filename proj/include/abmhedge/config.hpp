#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "abmhedge/calibration.hpp"
#include "abmhedge/data_io.hpp"
#include "abmhedge/hedging.hpp"
#include "abmhedge/stylized_facts.hpp"
#include "abmhedge/validation.hpp"

namespace abmhedge::config {

using Value = std::variant<bool, double, std::string, std::vector<double>>;

/// Flat key/value document in a TOML subset: `key = value` lines, `[section]`
/// headers prefixing keys with "section.", `#` comments, numbers, booleans,
/// quoted strings and `[a, b, ...]` numeric lists. Keys keep file order.
class Config {
 public:
  void set(std::string key, Value value);
  bool has(const std::string& key) const;
  const Value* find(const std::string& key) const;
  const std::vector<std::pair<std::string, Value>>& entries() const { return entries_; }

  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

Config parse_config(const std::string& text);
std::string to_text(const Config& config);

/// Every tunable default across modules.
struct Settings {
  facts::FactsConfig facts;
  facts::DistanceWeights weights;
  std::size_t vol_window = calib::kDefaultVolWindow;
  validation::GslDivConfig gsl;
  hedging::OptionSpec option;
  std::optional<double> pricing_vol;  ///< per day; derived from the data source when unset
  double es_confidence = 0.95;
  std::vector<double> costs = hedging::default_cost_levels();
  bool atm_strike = true;
  double initial_price = 100.0;  ///< rebuilt historical test scenarios start here
  io::ColumnMap columns;
  io::SplitSpec split;
};

/// Applies a config document over the defaults; unknown keys throw ParameterError.
Settings settings_from(const Config& config);
Config to_config(const Settings& settings);

/// Grid file: meta keys (model, replications, paths, steps, seed,
/// common_random_numbers, burn_in) plus one axis per remaining parameter name,
/// given as an explicit list or as name.min / name.max / name.count /
/// name.spacing ("log" or "linear"). Axes absent from the file fall back to
/// default_grid() only when the file declares none.
calib::GridSpec grid_from_config(const Config& grid_file, sim::ModelKind kind,
                                 const calib::FixedParams& fixed, const Settings& settings);

}  // namespace abmhedge::config
