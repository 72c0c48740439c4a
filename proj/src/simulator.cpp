#include "abmhedge/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "abmhedge/errors.hpp"
#include "abmhedge/parallel.hpp"
#include "abmhedge/rng.hpp"

namespace abmhedge::sim {

namespace {

void require(bool ok, std::string_view field, std::string_view rule, double value) {
  if (!ok) {
    throw ParameterError(std::string(field) + " must satisfy " + std::string(rule) + ", got " +
                         std::to_string(value));
  }
}

void require_finite(std::string_view field, double value) {
  require(std::isfinite(value), field, "finite", value);
}

void check_shape(std::size_t n_steps, std::size_t n_paths) {
  if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
  if (n_paths < 1) throw ParameterError("n_paths must be >= 1");
}

// Full truncation: the clamped variance feeds both square roots.
inline double vol_of(double var) { return std::sqrt(std::max(var, 0.0)); }

struct ChState {
  double p, f, m, v;
};

// One day of the discrete Chiarella-Heston dynamics.
inline ChState ch_step(const ModelParams& k, const ChState& s, const StepDraws& d) {
  const auto [eps_s, eps_v] = correlated_normal_pair(k.rho, d.eps_s, d.z);
  const double dp = k.kappa * (s.f - s.p) + k.beta * std::tanh(k.gamma * s.m) +
                    k.omega * vol_of(s.v) * eps_s;
  ChState n;
  n.p = s.p + dp;
  n.m = (1.0 - k.alpha) * s.m + k.alpha * dp;
  n.f = s.f + k.g + k.sigma_f * d.eta;
  n.v = next_variance(s.v, k.phi, k.theta, k.sigma, eps_v);
  return n;
}

inline bool finite(const ChState& s) {
  return std::isfinite(s.p) && std::isfinite(s.f) && std::isfinite(s.m) && std::isfinite(s.v);
}

ParamSnapshot snapshot(const ModelSpec& spec) {
  const NamedParams named = to_named(spec);
  const auto& order = param_names(kind_of(spec));
  ParamSnapshot out;
  out.reserve(order.size());
  for (const auto& name : order) out.emplace_back(name, named.at(name));
  return out;
}

template <typename PathFn>
ScenarioSet run_paths(std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                      const ModelSpec& spec, RunOptions opts, PathFn&& fill) {
  ScenarioSet set(n_paths, n_steps + 1, seed, std::string(model_tag(kind_of(spec))),
                  snapshot(spec));
  parallel_for(n_paths, opts.threads, [&](std::size_t i) {
    fill(CounterRng(seed, i), i, set.path(i));
  });
  return set;
}

}  // namespace

double next_variance(double var, double phi, double theta, double sigma, double eps_v) {
  const double next = var + phi * (theta - var) + sigma * vol_of(var) * eps_v;
  return std::max(next, 0.0);
}

void ModelParams::validate() const {
  for (const auto& [name, v] :
       {std::pair{"kappa", kappa}, {"beta", beta}, {"gamma", gamma}, {"omega", omega},
        {"g", g}, {"sigma_f", sigma_f}, {"alpha", alpha}, {"phi", phi}, {"theta", theta},
        {"sigma", sigma}, {"rho", rho}}) {
    require_finite(name, v);
  }
  require(gamma > 0.0, "gamma", "> 0", gamma);
  require(alpha >= 0.0 && alpha <= 1.0, "alpha", "[0, 1]", alpha);
  require(rho >= -1.0 && rho <= 1.0, "rho", "[-1, 1]", rho);
  require(theta >= 0.0, "theta", ">= 0", theta);
  require(phi >= 0.0, "phi", ">= 0", phi);
  require(sigma >= 0.0, "sigma", ">= 0", sigma);
  require(sigma_f >= 0.0, "sigma_f", ">= 0", sigma_f);
}

void InitialState::validate() const {
  require_finite("p0", p0);
  require_finite("f0", f0);
  require_finite("m0", m0);
  require_finite("var0", var0);
  require(var0 >= 0.0, "var0", ">= 0", var0);
}

InitialState default_initial_state(const ModelParams& params) {
  InitialState init;
  init.var0 = params.theta;
  return init;
}

void GbmParams::validate() const {
  require_finite("mu", mu);
  require_finite("sigma", sigma);
  require(sigma >= 0.0, "sigma", ">= 0", sigma);
  require(std::isfinite(s0) && s0 > 0.0, "s0", "> 0", s0);
}

void HestonParams::validate() const {
  require_finite("mu", mu);
  for (const auto& [name, v] : {std::pair{"var0", var0}, {"phi", phi}, {"theta", theta},
                                {"sigma", sigma}}) {
    require(std::isfinite(v) && v >= 0.0, name, ">= 0", v);
  }
  require(rho >= -1.0 && rho <= 1.0, "rho", "[-1, 1]", rho);
  require(std::isfinite(s0) && s0 > 0.0, "s0", "> 0", s0);
}

void ExtendedChiarellaParams::validate() const {
  for (const auto& [name, v] :
       {std::pair{"kappa", kappa}, {"beta", beta}, {"gamma", gamma}, {"sigma_n", sigma_n},
        {"g", g}, {"sigma_f", sigma_f}, {"alpha", alpha}}) {
    require_finite(name, v);
  }
  require(gamma > 0.0, "gamma", "> 0", gamma);
  require(alpha >= 0.0 && alpha <= 1.0, "alpha", "[0, 1]", alpha);
  require(sigma_n >= 0.0, "sigma_n", ">= 0", sigma_n);
  require(sigma_f >= 0.0, "sigma_f", ">= 0", sigma_f);
}

ScenarioSet simulate_chiarella_heston(const ModelParams& params, const InitialState& init,
                                      std::size_t n_steps, std::size_t n_paths,
                                      std::uint64_t seed, RunOptions opts) {
  params.validate();
  init.validate();
  check_shape(n_steps, n_paths);
  return run_paths(n_steps, n_paths, seed, ChiarellaHestonSpec{params, init}, opts,
                   [&](const CounterRng& rng, std::size_t path, std::span<double> out) {
                     ChState s{init.p0, init.f0, init.m0, init.var0};
                     out[0] = std::exp(s.p);
                     for (std::size_t t = 0; t < n_steps; ++t) {
                       s = ch_step(params, s, rng.draws(t));
                       out[t + 1] = std::exp(s.p);
                       if (!finite(s) || !(out[t + 1] > 0.0) || !std::isfinite(out[t + 1])) {
                         throw SimulationError("non-finite Chiarella-Heston state", path, t + 1);
                       }
                     }
                   });
}

PathTrace trace_chiarella_heston(const ModelParams& params, const InitialState& init,
                                 std::size_t n_steps, std::uint64_t seed,
                                 std::uint64_t path_index) {
  params.validate();
  init.validate();
  const CounterRng rng(seed, path_index);
  PathTrace tr;
  ChState s{init.p0, init.f0, init.m0, init.var0};
  auto record = [&] {
    tr.log_price.push_back(s.p);
    tr.fundamental.push_back(s.f);
    tr.momentum.push_back(s.m);
    tr.variance.push_back(s.v);
  };
  record();
  for (std::size_t t = 0; t < n_steps; ++t) {
    s = ch_step(params, s, rng.draws(t));
    if (!finite(s)) throw SimulationError("non-finite Chiarella-Heston state", path_index, t + 1);
    record();
  }
  return tr;
}

ScenarioSet simulate_gbm(const GbmParams& params, std::size_t n_steps, std::size_t n_paths,
                         std::uint64_t seed, RunOptions opts) {
  params.validate();
  check_shape(n_steps, n_paths);
  const double drift = params.mu - 0.5 * params.sigma * params.sigma;
  return run_paths(n_steps, n_paths, seed, params, opts,
                   [&](const CounterRng& rng, std::size_t path, std::span<double> out) {
                     double x = 0.0;  // cumulative log return
                     out[0] = params.s0;
                     for (std::size_t t = 0; t < n_steps; ++t) {
                       x = x + drift + params.sigma * rng.draws(t).eps_s;
                       out[t + 1] = params.s0 * std::exp(x);
                       if (!std::isfinite(out[t + 1]) || !(out[t + 1] > 0.0)) {
                         throw SimulationError("non-finite GBM price", path, t + 1);
                       }
                     }
                   });
}

namespace {

struct HestonState {
  double x, v;
};

inline HestonState heston_step(const HestonParams& k, const HestonState& s, const StepDraws& d) {
  const auto [eps_s, eps_v] = correlated_normal_pair(k.rho, d.eps_s, d.z);
  return {s.x + (k.mu + vol_of(s.v) * eps_s), next_variance(s.v, k.phi, k.theta, k.sigma, eps_v)};
}

}  // namespace

ScenarioSet simulate_heston(const HestonParams& params, std::size_t n_steps,
                            std::size_t n_paths, std::uint64_t seed, RunOptions opts) {
  params.validate();
  check_shape(n_steps, n_paths);
  return run_paths(n_steps, n_paths, seed, params, opts,
                   [&](const CounterRng& rng, std::size_t path, std::span<double> out) {
                     HestonState s{0.0, params.var0};  // x is the cumulative log return
                     out[0] = params.s0;
                     for (std::size_t t = 0; t < n_steps; ++t) {
                       s = heston_step(params, s, rng.draws(t));
                       out[t + 1] = params.s0 * std::exp(s.x);
                       if (!std::isfinite(s.x) || !std::isfinite(s.v) || !(out[t + 1] > 0.0) ||
                           !std::isfinite(out[t + 1])) {
                         throw SimulationError("non-finite Heston state", path, t + 1);
                       }
                     }
                   });
}

PathTrace trace_heston(const HestonParams& params, std::size_t n_steps, std::uint64_t seed,
                       std::uint64_t path_index) {
  params.validate();
  const CounterRng rng(seed, path_index);
  PathTrace tr;
  HestonState s{std::log(params.s0), params.var0};
  tr.log_price.push_back(s.x);
  tr.variance.push_back(s.v);
  for (std::size_t t = 0; t < n_steps; ++t) {
    s = heston_step(params, s, rng.draws(t));
    if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
      throw SimulationError("non-finite Heston state", path_index, t + 1);
    }
    tr.log_price.push_back(s.x);
    tr.variance.push_back(s.v);
  }
  return tr;
}

ScenarioSet simulate_extended_chiarella(const ExtendedChiarellaParams& params,
                                        const InitialState& init, std::size_t n_steps,
                                        std::size_t n_paths, std::uint64_t seed,
                                        RunOptions opts) {
  params.validate();
  init.validate();
  check_shape(n_steps, n_paths);
  const auto& k = params;
  return run_paths(
      n_steps, n_paths, seed, ExtendedChiarellaSpec{params, init}, opts,
      [&](const CounterRng& rng, std::size_t path, std::span<double> out) {
        double p = init.p0;
        double f = init.f0;
        double m = init.m0;
        out[0] = std::exp(p);
        for (std::size_t t = 0; t < n_steps; ++t) {
          // Draw order matches the Chiarella-Heston step: (eps_s, z) pair, then eta.
          const StepDraws d = rng.draws(t);
          const double dp = k.kappa * (f - p) + k.beta * std::tanh(k.gamma * m) + k.sigma_n * d.eps_s;
          p = p + dp;
          m = (1.0 - k.alpha) * m + k.alpha * dp;
          f = f + k.g + k.sigma_f * d.eta;
          out[t + 1] = std::exp(p);
          if (!std::isfinite(p) || !std::isfinite(f) || !std::isfinite(m) || !(out[t + 1] > 0.0) ||
              !std::isfinite(out[t + 1])) {
            throw SimulationError("non-finite extended Chiarella state", path, t + 1);
          }
        }
      });
}

// ---------------------------------------------------------------------------

std::string_view model_tag(ModelKind kind) {
  switch (kind) {
    case ModelKind::chiarella_heston: return "chiarella-heston";
    case ModelKind::gbm: return "gbm";
    case ModelKind::heston: return "heston";
    case ModelKind::extended_chiarella: return "extended-chiarella";
  }
  return "unknown";
}

ModelKind model_kind_from_tag(std::string_view tag) {
  for (auto kind : {ModelKind::chiarella_heston, ModelKind::gbm, ModelKind::heston,
                    ModelKind::extended_chiarella}) {
    if (model_tag(kind) == tag) return kind;
  }
  throw ParameterError("unknown model tag '" + std::string(tag) + "'");
}

ModelKind kind_of(const ModelSpec& spec) {
  return static_cast<ModelKind>(spec.index());
}

const std::vector<std::string>& param_names(ModelKind kind) {
  static const std::vector<std::string> ch = {"kappa", "beta",  "gamma", "omega", "g",
                                              "sigma_f", "alpha", "phi", "theta", "sigma",
                                              "rho",   "p0",    "f0",    "m0",    "var0"};
  static const std::vector<std::string> gbm = {"mu", "sigma", "s0"};
  static const std::vector<std::string> heston = {"mu",    "var0", "phi", "theta",
                                                  "sigma", "rho",  "s0"};
  static const std::vector<std::string> ec = {"kappa",   "beta",  "gamma", "sigma_n", "g",
                                              "sigma_f", "alpha", "p0",    "f0",      "m0"};
  switch (kind) {
    case ModelKind::chiarella_heston: return ch;
    case ModelKind::gbm: return gbm;
    case ModelKind::heston: return heston;
    case ModelKind::extended_chiarella: return ec;
  }
  return ch;
}

ModelSpec make_model(ModelKind kind, const NamedParams& values) {
  const auto& names = param_names(kind);
  for (const auto& [name, value] : values) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ParameterError("parameter '" + name + "' is not defined for model " +
                           std::string(model_tag(kind)));
    }
  }
  auto get = [&](const std::string& name) {
    const auto it = values.find(name);
    if (it == values.end()) {
      throw ParameterError("missing parameter '" + name + "' for model " +
                           std::string(model_tag(kind)));
    }
    return it->second;
  };
  switch (kind) {
    case ModelKind::chiarella_heston: {
      ChiarellaHestonSpec s;
      s.params = {get("kappa"), get("beta"), get("gamma"), get("omega"), get("g"), get("sigma_f"),
                  get("alpha"), get("phi"),  get("theta"), get("sigma"), get("rho")};
      s.init = {get("p0"), get("f0"), get("m0"), get("var0")};
      s.params.validate();
      s.init.validate();
      return s;
    }
    case ModelKind::gbm: {
      GbmParams s{get("mu"), get("sigma"), get("s0")};
      s.validate();
      return s;
    }
    case ModelKind::heston: {
      HestonParams s{get("mu"),    get("var0"), get("phi"), get("theta"),
                     get("sigma"), get("rho"),  get("s0")};
      s.validate();
      return s;
    }
    case ModelKind::extended_chiarella: {
      ExtendedChiarellaSpec s;
      s.params = {get("kappa"), get("beta"), get("gamma"), get("sigma_n"),
                  get("g"),     get("sigma_f"), get("alpha")};
      s.init = {get("p0"), get("f0"), get("m0"), 0.0};
      s.params.validate();
      s.init.validate();
      return s;
    }
  }
  throw ParameterError("unknown model kind");
}

NamedParams to_named(const ModelSpec& spec) {
  struct Visitor {
    NamedParams operator()(const ChiarellaHestonSpec& s) const {
      const auto& k = s.params;
      return {{"kappa", k.kappa}, {"beta", k.beta},   {"gamma", k.gamma}, {"omega", k.omega},
              {"g", k.g},         {"sigma_f", k.sigma_f}, {"alpha", k.alpha}, {"phi", k.phi},
              {"theta", k.theta}, {"sigma", k.sigma}, {"rho", k.rho},     {"p0", s.init.p0},
              {"f0", s.init.f0},  {"m0", s.init.m0},  {"var0", s.init.var0}};
    }
    NamedParams operator()(const GbmParams& s) const {
      return {{"mu", s.mu}, {"sigma", s.sigma}, {"s0", s.s0}};
    }
    NamedParams operator()(const HestonParams& s) const {
      return {{"mu", s.mu},       {"var0", s.var0}, {"phi", s.phi}, {"theta", s.theta},
              {"sigma", s.sigma}, {"rho", s.rho},   {"s0", s.s0}};
    }
    NamedParams operator()(const ExtendedChiarellaSpec& s) const {
      const auto& k = s.params;
      return {{"kappa", k.kappa}, {"beta", k.beta},       {"gamma", k.gamma},
              {"sigma_n", k.sigma_n}, {"g", k.g},         {"sigma_f", k.sigma_f},
              {"alpha", k.alpha}, {"p0", s.init.p0},      {"f0", s.init.f0},
              {"m0", s.init.m0}};
    }
  };
  return std::visit(Visitor{}, spec);
}

ModelSpec default_model(ModelKind kind) {
  switch (kind) {
    case ModelKind::chiarella_heston: {
      ModelParams k;
      k.kappa = 0.01;
      k.beta = 0.01;
      k.gamma = 10.0;
      k.omega = 1.0;
      k.g = 0.0003;
      k.sigma_f = 0.01;
      k.alpha = 1.0 / 6.0;
      k.phi = 0.02;
      k.theta = 1e-4;
      k.sigma = 1.4e-3;
      k.rho = -0.5;
      return ChiarellaHestonSpec{k, default_initial_state(k)};
    }
    case ModelKind::gbm:
      return GbmParams{0.0003, 0.01, 100.0};
    case ModelKind::heston:
      return HestonParams{0.0003, 1e-4, 0.05, 1e-4, 1.5e-3, -0.5, 100.0};
    case ModelKind::extended_chiarella: {
      ExtendedChiarellaParams k{0.01, 0.01, 10.0, 0.01, 0.0003, 0.01, 1.0 / 6.0};
      return ExtendedChiarellaSpec{k, InitialState{}};
    }
  }
  throw ParameterError("unknown model kind");
}

ScenarioSet simulate(const ModelSpec& spec, std::size_t n_steps, std::size_t n_paths,
                     std::uint64_t seed, RunOptions opts) {
  struct Visitor {
    std::size_t n_steps, n_paths;
    std::uint64_t seed;
    RunOptions opts;
    ScenarioSet operator()(const ChiarellaHestonSpec& s) const {
      return simulate_chiarella_heston(s.params, s.init, n_steps, n_paths, seed, opts);
    }
    ScenarioSet operator()(const GbmParams& s) const {
      return simulate_gbm(s, n_steps, n_paths, seed, opts);
    }
    ScenarioSet operator()(const HestonParams& s) const {
      return simulate_heston(s, n_steps, n_paths, seed, opts);
    }
    ScenarioSet operator()(const ExtendedChiarellaSpec& s) const {
      return simulate_extended_chiarella(s.params, s.init, n_steps, n_paths, seed, opts);
    }
  };
  return std::visit(Visitor{n_steps, n_paths, seed, opts}, spec);
}

}  // namespace abmhedge::sim
