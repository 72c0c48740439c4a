#include "abmhedge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "abmhedge/format.hpp"
#include "abmhedge/errors.hpp"
#include "abmhedge/json_util.hpp"
#include "abmhedge/parallel.hpp"
#include "abmhedge/rng.hpp"

namespace abmhedge::calib {

using json_util::json;

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  return xs.size() < 2 ? 0.0 : facts::realized_volatility(xs);
}

// Pearson correlation; nullopt-like NaN when either side has no spread.
double pearson(std::span<const double> xs, std::span<const double> ys, double spread_floor) {
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const auto n = static_cast<double>(xs.size());
  if (std::sqrt(sxx / n) <= spread_floor || std::sqrt(syy / n) <= spread_floor) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::vector<double> rolling_volatility(std::span<const double> returns, std::size_t window) {
  if (window < 2) throw ParameterError("volatility window must be >= 2");
  if (returns.size() < window) throw InsufficientDataError("fewer returns than the volatility window");
  std::vector<double> out(returns.size() - window + 1);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = sample_sd(returns.subspan(j, window));
  return out;
}

FixedParams fixed_params_from_history(std::span<const double> prices, std::size_t vol_window) {
  if (prices.size() < vol_window + 2) {
    throw InsufficientDataError("fixed parameters need at least vol_window + 2 prices, got " +
                                std::to_string(prices.size()));
  }
  const auto r = facts::log_returns(prices);
  FixedParams out;
  out.mu = mean_of(r);
  out.sigma_f = sample_sd(r);
  out.g = out.mu - 0.5 * out.sigma_f * out.sigma_f;

  const auto v = rolling_volatility(r, vol_window);
  out.sigma = sample_sd(v);

  // v[j] is the volatility of the window ending at return j + W - 1. Pair each
  // return r_t with the change v(end t+1) - v(end t).
  std::vector<double> rets, dvol;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    rets.push_back(r[j + vol_window - 1]);
    dvol.push_back(v[j + 1] - v[j]);
  }
  // Spread below this is rounding noise of the log transform.
  constexpr double kSpreadFloor = 1e-12;
  const double rho = rets.size() >= 2 ? pearson(rets, dvol, kSpreadFloor) : std::nan("");
  if (std::isnan(rho)) {
    out.rho = 0.0;
    out.rho_degenerate = true;
  } else {
    out.rho = std::clamp(rho, -1.0, 1.0);
  }
  return out;
}

std::vector<double> spaced_levels(double lo, double hi, std::size_t count, bool log_spaced) {
  if (count == 0) throw ParameterError("axis level count must be >= 1");
  if (log_spaced && !(lo > 0.0 && hi > 0.0)) throw ParameterError("log-spaced axis needs positive bounds");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = log_spaced ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))) : lo + u * (hi - lo);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.levels.size();
  return axes.empty() ? 0 : n;
}

void GridSpec::validate() const {
  if (axes.empty()) throw ParameterError("grid has no axes");
  for (const auto& a : axes) {
    if (a.levels.empty()) throw ParameterError("grid axis '" + a.name + "' is empty");
    if (a.name == "theta" || a.name == "phi") {
      for (const double x : a.levels) {
        if (x < 0.0) throw ParameterError("grid axis '" + a.name + "' must be >= 0");
      }
    }
  }
  if (replications < 1 || paths < 1 || steps < 1) {
    throw ParameterError("replications, paths and steps must be >= 1");
  }
}

sim::NamedParams base_params(sim::ModelKind kind, const FixedParams& fixed) {
  // Model defaults for anything not estimated from data; var0 is left out so
  // that it follows theta.
  auto base = sim::to_named(sim::default_model(kind));
  base.erase("var0");
  const double log100 = std::log(100.0);
  auto put = [&](std::initializer_list<std::pair<const char*, double>> values) {
    for (const auto& [k, v] : values) base[k] = v;
  };
  switch (kind) {
    case sim::ModelKind::chiarella_heston:
      put({{"gamma", fixed.gamma}, {"alpha", fixed.alpha}, {"g", fixed.g},
           {"sigma_f", fixed.sigma_f}, {"sigma", fixed.sigma}, {"rho", fixed.rho},
           {"p0", log100}, {"f0", log100}, {"m0", 0.0}});
      break;
    case sim::ModelKind::gbm:
      put({{"mu", fixed.mu}, {"sigma", fixed.sigma_f}, {"s0", 100.0}});
      break;
    case sim::ModelKind::heston:
      put({{"mu", fixed.mu}, {"sigma", fixed.sigma}, {"rho", fixed.rho}, {"s0", 100.0}});
      break;
    case sim::ModelKind::extended_chiarella:
      put({{"gamma", fixed.gamma}, {"alpha", fixed.alpha}, {"g", fixed.g},
           {"sigma_f", fixed.sigma_f}, {"p0", log100}, {"f0", log100}, {"m0", 0.0}});
      break;
  }
  return base;
}

GridSpec default_grid(sim::ModelKind kind, const FixedParams& fixed) {
  GridSpec grid;
  const double var_f = fixed.sigma_f * fixed.sigma_f;
  const double sf = fixed.sigma_f > 0.0 ? fixed.sigma_f : 0.01;
  const double vf = var_f > 0.0 ? var_f : 1e-4;
  switch (kind) {
    case sim::ModelKind::chiarella_heston:
      grid.axes = {{"kappa", spaced_levels(0.01, 0.5, 6, true)},
                   {"beta", spaced_levels(0.01, 1.0, 6, true)},
                   {"omega", spaced_levels(0.1, 3.0, 6, true)},
                   {"theta", spaced_levels(vf / 4.0, 4.0 * vf, 5, true)},
                   {"phi", spaced_levels(0.01, 0.5, 5, true)}};
      break;
    case sim::ModelKind::gbm:
      grid.axes = {{"sigma", spaced_levels(0.5 * sf, 1.5 * sf, 11, false)}};
      break;
    case sim::ModelKind::heston:
      grid.axes = {{"phi", spaced_levels(0.01, 0.5, 5, true)},
                   {"theta", spaced_levels(vf / 4.0, 4.0 * vf, 5, true)}};
      break;
    case sim::ModelKind::extended_chiarella:
      grid.axes = {{"kappa", spaced_levels(0.01, 0.5, 6, true)},
                   {"beta", spaced_levels(0.01, 1.0, 6, true)},
                   {"sigma_n", spaced_levels(0.5 * sf, 1.5 * sf, 5, false)}};
      break;
  }
  return grid;
}

sim::NamedParams resolve_point(sim::ModelKind kind, const sim::NamedParams& base,
                               const std::vector<Axis>& axes, std::span<const double> values) {
  sim::NamedParams out = base;
  bool var0_given = base.contains("var0");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    out[axes[a].name] = values[a];
    var0_given = var0_given || axes[a].name == "var0";
  }
  const auto& names = sim::param_names(kind);
  const bool has_var0 = std::find(names.begin(), names.end(), "var0") != names.end();
  if (has_var0 && !var0_given && out.contains("theta")) out["var0"] = out.at("theta");
  return out;
}

CalibrationResult grid_search_calibrate(sim::ModelKind kind, const GridSpec& grid,
                                        const facts::StylizedFactsTarget& target,
                                        const sim::NamedParams& base,
                                        const facts::DistanceWeights& weights,
                                        std::size_t threads) {
  grid.validate();
  weights.validate();
  if (grid.facts.max_lag != target.max_lag || grid.facts.tail_fraction != target.tail_fraction) {
    throw ParameterError("grid statistic configuration differs from the target's");
  }

  CalibrationResult result;
  result.model = kind;
  for (const auto& a : grid.axes) result.axis_names.push_back(a.name);
  const std::size_t n_points = grid.size();
  result.table.resize(n_points);

  // Row-major enumeration: the last axis varies fastest.
  for (std::size_t p = 0; p < n_points; ++p) {
    GridRow& row = result.table[p];
    row.index.resize(grid.axes.size());
    row.values.resize(grid.axes.size());
    std::size_t rem = p;
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      const std::size_t n = grid.axes[a].levels.size();
      row.index[a] = rem % n;
      row.values[a] = grid.axes[a].levels[row.index[a]];
      rem /= n;
    }
  }

  const std::size_t work = n_points * grid.replications;
  std::vector<facts::DistanceBreakdown> rep_dist(work);
  std::vector<std::string> rep_error(work);
  parallel_for(work, threads, [&](std::size_t w) {
    const std::size_t p = w / grid.replications;
    const std::size_t r = w % grid.replications;
    std::string purpose = "calibration/replication/" + std::to_string(r);
    if (!grid.common_random_numbers) purpose += "/point/" + std::to_string(p);
    const std::uint64_t seed = derive_seed(grid.seed, purpose);
    try {
      const auto params = resolve_point(kind, base, grid.axes, result.table[p].values);
      const auto model = sim::make_model(kind, params);
      const auto scenarios = sim::simulate(model, grid.steps, grid.paths, seed);
      rep_dist[w] = facts::stylized_facts_distance(scenarios, target, weights, grid.facts);
    } catch (const std::exception& e) {
      rep_error[w] = e.what();
    }
  });

  for (std::size_t p = 0; p < n_points; ++p) {
    GridRow& row = result.table[p];
    std::vector<double> totals;
    facts::DistanceBreakdown sum;
    for (std::size_t r = 0; r < grid.replications; ++r) {
      const std::size_t w = p * grid.replications + r;
      if (!rep_error[w].empty()) {
        row.diagnostic = rep_error[w];
        break;
      }
      totals.push_back(rep_dist[w].total);
      sum.hill += rep_dist[w].hill;
      sum.vol += rep_dist[w].vol;
      sum.acf += rep_dist[w].acf;
      sum.acf_sq += rep_dist[w].acf_sq;
    }
    if (!row.diagnostic.empty()) continue;
    const double n = static_cast<double>(totals.size());
    row.mean_distance = mean_of(totals);
    row.std_distance = sample_sd(totals);
    row.mean_components = {sum.hill / n, sum.vol / n, sum.acf / n, sum.acf_sq / n, row.mean_distance};
    if (!std::isfinite(row.mean_distance)) {
      row.diagnostic = "non-finite distance";
      row.mean_distance = std::numeric_limits<double>::infinity();
    }
  }

  std::size_t best = 0;
  for (std::size_t p = 1; p < n_points; ++p) {
    if (result.table[p].mean_distance < result.table[best].mean_distance) best = p;
  }
  result.best_distance = result.table[best].mean_distance;
  result.best_components = result.table[best].mean_components;
  result.best_params = resolve_point(kind, base, grid.axes, result.table[best].values);

  result.provenance.seed = grid.seed;
  result.provenance.data_hash = std::to_string(fnv1a64(facts::to_json(target)));
  std::ostringstream cfg;
  cfg.precision(17);
  cfg << sim::model_tag(kind) << ';' << grid.replications << ';' << grid.paths << ';' << grid.steps
      << ';' << grid.seed << ';' << grid.common_random_numbers << ';' << grid.facts.burn_in << ';'
      << grid.facts.max_lag << ';' << grid.facts.tail_fraction << ';' << weights.hill << ','
      << weights.vol << ',' << weights.acf << ',' << weights.acf_sq;
  for (const auto& a : grid.axes) {
    cfg << ';' << a.name;
    for (const double x : a.levels) cfg << ',' << x;
  }
  for (const auto& [k, v] : base) cfg << ';' << k << '=' << v;
  result.provenance.config_hash = std::to_string(fnv1a64(cfg.str()));
  return result;
}

CalibrationResult grid_search_calibrate(const GridSpec& grid,
                                        const facts::StylizedFactsTarget& target,
                                        const FixedParams& fixed,
                                        const facts::DistanceWeights& weights,
                                        std::size_t threads) {
  return grid_search_calibrate(sim::ModelKind::chiarella_heston, grid, target,
                               base_params(sim::ModelKind::chiarella_heston, fixed), weights,
                               threads);
}

namespace {

json components_json(const facts::DistanceBreakdown& d) {
  return {{"hill", d.hill}, {"vol", d.vol}, {"acf", d.acf}, {"acf_sq", d.acf_sq}, {"total", d.total}};
}

// JSON has no infinity; failed points carry null.
json distance_json(double d) { return std::isfinite(d) ? json(d) : json(nullptr); }

double distance_from(const json& j, const std::string& key) {
  if (!j.contains(key)) throw FormatError("missing key '" + key + "'");
  if (j.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return json_util::to_double(j.at(key), key);
}

facts::DistanceBreakdown components_from(const json& j) {
  return {json_util::number_at(j, "hill"), json_util::number_at(j, "vol"),
          json_util::number_at(j, "acf"), json_util::number_at(j, "acf_sq"),
          distance_from(j, "total")};
}

}  // namespace

std::string to_json(const CalibrationResult& result) {
  json j;
  j["model"] = sim::model_tag(result.model);
  j["axes"] = result.axis_names;
  j["best_params"] = result.best_params;
  j["best_distance"] = distance_json(result.best_distance);
  j["best_components"] = components_json(result.best_components);
  j["best_components"]["total"] = distance_json(result.best_components.total);
  json rows = json::array();
  for (const auto& row : result.table) {
    json r;
    r["index"] = row.index;
    r["values"] = row.values;
    r["mean_distance"] = distance_json(row.mean_distance);
    r["std_distance"] = row.std_distance;
    r["components"] = components_json(row.mean_components);
    r["components"]["total"] = distance_json(row.mean_components.total);
    r["diagnostic"] = row.diagnostic;
    rows.push_back(std::move(r));
  }
  j["table"] = std::move(rows);
  j["provenance"] = {{"data_hash", result.provenance.data_hash},
                     {"config_hash", result.provenance.config_hash},
                     {"seed", result.provenance.seed}};
  return j.dump(2);
}

CalibrationResult calibration_from_json(const std::string& text) {
  const json j = json_util::parse(text);
  CalibrationResult r;
  try {
    r.model = sim::model_kind_from_tag(j.at("model").get<std::string>());
    r.axis_names = j.at("axes").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("best_params").items()) {
      r.best_params[k] = json_util::to_double(v, "best_params." + k);
    }
    r.best_distance = distance_from(j, "best_distance");
    r.best_components = components_from(j.at("best_components"));
    for (const auto& row : j.at("table")) {
      GridRow g;
      g.index = row.at("index").get<std::vector<std::size_t>>();
      g.values = json_util::numbers_at(row, "values");
      g.mean_distance = distance_from(row, "mean_distance");
      g.std_distance = json_util::number_at(row, "std_distance");
      g.mean_components = components_from(row.at("components"));
      g.diagnostic = row.at("diagnostic").get<std::string>();
      r.table.push_back(std::move(g));
    }
    const auto& prov = j.at("provenance");
    r.provenance.data_hash = prov.at("data_hash").get<std::string>();
    r.provenance.config_hash = prov.at("config_hash").get<std::string>();
    r.provenance.seed = prov.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed calibration result: ") + e.what());
  }
  return r;
}

std::string table_csv(const CalibrationResult& result) {
  std::ostringstream out;
  for (const auto& name : result.axis_names) out << "i_" << name << ',';
  for (const auto& name : result.axis_names) out << name << ',';
  out << "mean_distance,std_distance,hill,vol,acf,acf_sq,diagnostic\n";
  for (const auto& row : result.table) {
    for (const auto i : row.index) out << i << ',';
    for (const auto v : row.values) out << shortest(v) << ',';
    for (const double v : {row.mean_distance, row.std_distance, row.mean_components.hill,
                           row.mean_components.vol, row.mean_components.acf,
                           row.mean_components.acf_sq}) {
      out << shortest(v) << ',';
    }
    std::string diag = row.diagnostic;
    std::replace(diag.begin(), diag.end(), '"', '\'');
    out << '"' << diag << "\"\n";
  }
  return out.str();
}

std::string to_json(const FixedParams& fixed) {
  json j = {{"alpha", fixed.alpha},   {"gamma", fixed.gamma}, {"mu", fixed.mu},
            {"g", fixed.g},           {"sigma_f", fixed.sigma_f}, {"sigma", fixed.sigma},
            {"rho", fixed.rho},       {"rho_degenerate", fixed.rho_degenerate}};
  return j.dump(2);
}

}  // namespace abmhedge::calib
