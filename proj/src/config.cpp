#include "abmhedge/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "abmhedge/errors.hpp"
#include "abmhedge/format.hpp"

namespace abmhedge::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  const auto res = std::from_chars(begin, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("config line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}


}  // namespace

void Config::set(std::string key, Value value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

const Value* Config::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

double Config::number(const std::string& key, double fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  throw ParameterError("config key '" + key + "' must be a number");
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  const double v = number(key, static_cast<double>(fallback));
  if (v < 0 || v != std::floor(v)) {
    throw ParameterError("config key '" + key + "' must be a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* b = std::get_if<bool>(v)) return *b;
  throw ParameterError("config key '" + key + "' must be true or false");
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  throw ParameterError("config key '" + key + "' must be a string");
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* l = std::get_if<std::vector<double>>(v)) return *l;
  if (const auto* d = std::get_if<double>(v)) return {*d};
  throw ParameterError("config key '" + key + "' must be a list of numbers");
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw FormatError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    if (!section.empty()) key = section + "." + key;
    if (value == "true" || value == "false") {
      cfg.set(key, value == "true");
    } else if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw FormatError("config line " + std::to_string(line_no) + ": unterminated string");
      }
      cfg.set(key, value.substr(1, value.size() - 2));
    } else if (value.front() == '[') {
      if (value.back() != ']') {
        throw FormatError("config line " + std::to_string(line_no) + ": unterminated list");
      }
      std::vector<double> items;
      std::istringstream ls(value.substr(1, value.size() - 2));
      std::string item;
      while (std::getline(ls, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(parse_number(item, line_no));
      }
      cfg.set(key, std::move(items));
    } else {
      cfg.set(key, parse_number(value, line_no));
    }
  }
  return cfg;
}

std::string to_text(const Config& config) {
  std::ostringstream out;
  for (const auto& [key, value] : config.entries()) {
    out << key << " = ";
    if (const auto* b = std::get_if<bool>(&value)) {
      out << (*b ? "true" : "false");
    } else if (const auto* d = std::get_if<double>(&value)) {
      out << shortest(*d);
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      out << '"' << *s << '"';
    } else {
      const auto& l = std::get<std::vector<double>>(value);
      out << '[';
      for (std::size_t i = 0; i < l.size(); ++i) out << (i ? ", " : "") << shortest(l[i]);
      out << ']';
    }
    out << '\n';
  }
  return out.str();
}

namespace {

const std::set<std::string>& settings_keys() {
  static const std::set<std::string> keys = {
      "facts.tail_fraction", "facts.max_lag",  "facts.burn_in",  "weights.hill",
      "weights.vol",         "weights.acf",    "weights.acf_sq", "calibration.vol_window",
      "gsl.n_symbols",       "gsl.word_lengths", "gsl.word_weights", "hedge.maturity_days",
      "hedge.contract_multiplier", "hedge.rate", "hedge.strike", "hedge.pricing_vol",
      "hedge.es_confidence", "hedge.costs",    "hedge.atm_strike", "hedge.initial_price",
      "data.date_column",    "data.close_column", "data.calibration_len", "data.test_len"};
  return keys;
}

std::vector<std::size_t> to_sizes(const std::vector<double>& xs, const std::string& key) {
  std::vector<std::size_t> out;
  for (const double x : xs) {
    if (x < 1 || x != std::floor(x)) throw ParameterError(key + " entries must be positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

Settings settings_from(const Config& c) {
  for (const auto& [key, value] : c.entries()) {
    if (!settings_keys().contains(key)) throw ParameterError("unknown config key '" + key + "'");
  }
  Settings s;
  s.facts.tail_fraction = c.number("facts.tail_fraction", s.facts.tail_fraction);
  s.facts.max_lag = c.count("facts.max_lag", s.facts.max_lag);
  s.facts.burn_in = c.count("facts.burn_in", s.facts.burn_in);
  s.weights.hill = c.number("weights.hill", s.weights.hill);
  s.weights.vol = c.number("weights.vol", s.weights.vol);
  s.weights.acf = c.number("weights.acf", s.weights.acf);
  s.weights.acf_sq = c.number("weights.acf_sq", s.weights.acf_sq);
  s.weights.validate();
  s.vol_window = c.count("calibration.vol_window", s.vol_window);
  s.gsl.n_symbols = c.count("gsl.n_symbols", s.gsl.n_symbols);
  if (c.has("gsl.word_lengths")) {
    s.gsl.word_lengths = to_sizes(c.list("gsl.word_lengths", {}), "gsl.word_lengths");
  }
  s.gsl.word_weights = c.list("gsl.word_weights", s.gsl.word_weights);
  s.gsl.validate();
  s.option.maturity_days = c.count("hedge.maturity_days", s.option.maturity_days);
  s.option.contract_multiplier = c.number("hedge.contract_multiplier", s.option.contract_multiplier);
  s.option.rate = c.number("hedge.rate", s.option.rate);
  s.option.strike = c.number("hedge.strike", s.option.strike);
  if (c.has("hedge.pricing_vol")) s.pricing_vol = c.number("hedge.pricing_vol", 0.0);
  s.es_confidence = c.number("hedge.es_confidence", s.es_confidence);
  s.costs = c.list("hedge.costs", s.costs);
  s.atm_strike = c.flag("hedge.atm_strike", s.atm_strike);
  s.initial_price = c.number("hedge.initial_price", s.initial_price);
  s.columns.date = c.text("data.date_column", s.columns.date);
  s.columns.close = c.text("data.close_column", s.columns.close);
  s.split.calibration_len = c.count("data.calibration_len", s.split.calibration_len);
  s.split.test_len = c.count("data.test_len", s.split.test_len);
  return s;
}

Config to_config(const Settings& s) {
  Config c;
  auto sizes = [](const std::vector<std::size_t>& v) {
    return std::vector<double>(v.begin(), v.end());
  };
  c.set("facts.tail_fraction", s.facts.tail_fraction);
  c.set("facts.max_lag", static_cast<double>(s.facts.max_lag));
  c.set("facts.burn_in", static_cast<double>(s.facts.burn_in));
  c.set("weights.hill", s.weights.hill);
  c.set("weights.vol", s.weights.vol);
  c.set("weights.acf", s.weights.acf);
  c.set("weights.acf_sq", s.weights.acf_sq);
  c.set("calibration.vol_window", static_cast<double>(s.vol_window));
  c.set("gsl.n_symbols", static_cast<double>(s.gsl.n_symbols));
  c.set("gsl.word_lengths", sizes(s.gsl.word_lengths));
  c.set("gsl.word_weights", s.gsl.resolved_weights());
  c.set("hedge.maturity_days", static_cast<double>(s.option.maturity_days));
  c.set("hedge.contract_multiplier", s.option.contract_multiplier);
  c.set("hedge.rate", s.option.rate);
  c.set("hedge.strike", s.option.strike);
  if (s.pricing_vol) c.set("hedge.pricing_vol", *s.pricing_vol);
  c.set("hedge.es_confidence", s.es_confidence);
  c.set("hedge.costs", s.costs);
  c.set("hedge.atm_strike", s.atm_strike);
  c.set("hedge.initial_price", s.initial_price);
  c.set("data.date_column", s.columns.date);
  c.set("data.close_column", s.columns.close);
  c.set("data.calibration_len", static_cast<double>(s.split.calibration_len));
  c.set("data.test_len", static_cast<double>(s.split.test_len));
  return c;
}

calib::GridSpec grid_from_config(const Config& g, sim::ModelKind kind,
                                 const calib::FixedParams& fixed, const Settings& settings) {
  static const std::set<std::string> meta = {"model", "replications", "paths", "steps", "seed",
                                             "common_random_numbers", "burn_in"};
  calib::GridSpec grid = calib::default_grid(kind, fixed);
  grid.facts = settings.facts;
  grid.replications = g.count("replications", grid.replications);
  grid.paths = g.count("paths", grid.paths);
  grid.steps = g.count("steps", grid.steps);
  grid.seed = g.count("seed", grid.seed);
  grid.common_random_numbers = g.flag("common_random_numbers", grid.common_random_numbers);
  grid.facts.burn_in = g.count("burn_in", grid.facts.burn_in);
  if (g.has("model") && sim::model_kind_from_tag(g.text("model", "")) != kind) {
    throw ParameterError("grid file is for model '" + g.text("model", "") + "'");
  }

  const auto& names = sim::param_names(kind);
  std::vector<calib::Axis> axes;
  std::set<std::string> seen;
  for (const auto& [key, value] : g.entries()) {
    if (meta.contains(key)) continue;
    const auto dot = key.find('.');
    const std::string name = key.substr(0, dot);
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ParameterError("grid key '" + key + "' is not a parameter of " +
                           std::string(sim::model_tag(kind)));
    }
    if (!seen.insert(name).second) continue;
    calib::Axis axis{name, {}};
    if (g.has(name)) {
      axis.levels = g.list(name, {});
    } else {
      const std::string spacing = g.text(name + ".spacing", "linear");
      if (spacing != "log" && spacing != "linear") {
        throw ParameterError(name + ".spacing must be \"log\" or \"linear\"");
      }
      if (!g.has(name + ".min") || !g.has(name + ".max")) {
        throw ParameterError("axis '" + name + "' needs a list or min and max");
      }
      axis.levels = calib::spaced_levels(g.number(name + ".min", 0.0), g.number(name + ".max", 0.0),
                                         g.count(name + ".count", 5), spacing == "log");
    }
    axes.push_back(std::move(axis));
  }
  if (!axes.empty()) grid.axes = std::move(axes);
  grid.validate();
  return grid;
}

}  // namespace abmhedge::config
