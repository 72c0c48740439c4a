// abmhedge: command-line front end for simulation, calibration, validation
// and hedging evaluation.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "abmhedge/calibration.hpp"
#include "abmhedge/config.hpp"
#include "abmhedge/data_io.hpp"
#include "abmhedge/errors.hpp"
#include "abmhedge/hedging.hpp"
#include "abmhedge/json_util.hpp"
#include "abmhedge/parallel.hpp"
#include "abmhedge/policy.hpp"
#include "abmhedge/rng.hpp"
#include "abmhedge/scenario_set.hpp"
#include "abmhedge/simulator.hpp"
#include "abmhedge/stylized_facts.hpp"
#include "abmhedge/validation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace abmhedge;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string config_path;
};

// Bookkeeping for one invocation; becomes <primary output>.manifest.json.
class Run {
 public:
  Run(std::string subcommand, std::vector<std::string> argv, const Common& common)
      : subcommand_(std::move(subcommand)), argv_(std::move(argv)), common_(common),
        start_(std::chrono::steady_clock::now()) {
    if (!common.config_path.empty()) {
      input(common.config_path);
      settings_ = config::settings_from(config::parse_config(io::read_text(common.config_path)));
    }
    seeds_["root"] = common.seed;
  }

  const config::Settings& settings() const { return settings_; }
  config::Settings& settings() { return settings_; }
  std::size_t threads() const { return resolve_threads(common_.threads); }

  std::uint64_t seed_for(const std::string& purpose) {
    const std::uint64_t s = derive_seed(common_.seed, purpose);
    seeds_[purpose] = s;
    return s;
  }

  void input(const std::string& path) { inputs_[path] = io::file_hash(path); }
  void output(const std::string& path) { outputs_.push_back(path); }

  void write_manifest(const std::string& primary_output) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m;
    m["subcommand"] = subcommand_;
    m["argv"] = argv_;
    json cfg = json::object();
    const auto snapshot = config::to_config(settings_);
    for (const auto& [key, value] : snapshot.entries()) {
      std::visit([&](const auto& v) { cfg[key] = v; }, value);
    }
    m["config"] = cfg;
    m["seeds"] = seeds_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["threads"] = threads();
    m["duration_seconds"] = seconds;
    io::write_text(primary_output + ".manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  Common common_;
  config::Settings settings_;
  json seeds_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

bool looks_like_scenarios(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  char magic[4] = {};
  const bool ok = std::fread(magic, 1, 4, f) == 4 && std::string(magic, 4) == "CHSC";
  std::fclose(f);
  return ok;
}

// Model from a tag and/or a parameter file. A CalibrationResult file fixes the
// model; a flat {"name": value} object overrides the named defaults of `tag`.
sim::ModelSpec resolve_model(const std::string& tag, const std::string& params_path, Run& run) {
  if (params_path.empty()) {
    return sim::default_model(sim::model_kind_from_tag(tag.empty() ? "chiarella-heston" : tag));
  }
  run.input(params_path);
  const std::string text = io::read_text(params_path);
  const auto j = json_util::parse(text);
  if (j.is_object() && j.contains("best_params")) {
    const auto result = calib::calibration_from_json(text);
    if (!tag.empty() && sim::model_kind_from_tag(tag) != result.model) {
      throw ParameterError("--model " + tag + " conflicts with calibration result for " +
                           std::string(sim::model_tag(result.model)));
    }
    return result.best_model();
  }
  if (!j.is_object()) throw FormatError(params_path + ": expected a JSON object");
  const auto kind = sim::model_kind_from_tag(tag.empty() ? "chiarella-heston" : tag);
  auto named = sim::to_named(sim::default_model(kind));
  for (const auto& [key, value] : j.items()) {
    if (!named.contains(key)) {
      throw ParameterError("unknown parameter '" + key + "' for " + std::string(sim::model_tag(kind)));
    }
    named[key] = json_util::number_at(j, key);
  }
  return sim::make_model(kind, named);
}

std::vector<double> window_prices(const io::PriceHistory& history, const std::string& window,
                                  const config::Settings& settings) {
  if (window == "all") return history.closes;
  const auto [cal, test] = io::split_history(history, settings.split);
  return window == "calibration" ? cal.closes : test.closes;
}

io::PriceHistory load_history(const std::string& path, Run& run) {
  run.input(path);
  return io::ingest_csv(path, run.settings().columns);
}

// Per-day pricing volatility implied by a generator.
double model_vol(const sim::ModelSpec& spec) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, sim::ChiarellaHestonSpec>) {
          return m.params.sigma_f;
        } else if constexpr (std::is_same_v<T, sim::GbmParams>) {
          return m.sigma;
        } else if constexpr (std::is_same_v<T, sim::HestonParams>) {
          return std::sqrt(m.theta);
        } else {
          return m.params.sigma_f;
        }
      },
      spec);
}

double pooled_vol(const ScenarioSet& set) {
  std::vector<double> r;
  r.reserve(set.n_paths() * set.n_steps());
  for (std::size_t i = 0; i < set.n_paths(); ++i) {
    const auto lr = facts::log_returns(set.path(i));
    r.insert(r.end(), lr.begin(), lr.end());
  }
  return facts::realized_volatility(r);
}

void check_window(const std::string& w) {
  if (w != "all" && w != "calibration" && w != "test") {
    throw ParameterError("--window must be all, calibration or test");
  }
}

// ---- subcommands ----

void cmd_simulate(Run& run, const std::string& model, const std::string& params, std::size_t paths,
                  std::size_t steps, const std::string& out, const std::string& csv,
                  const std::string& purpose) {
  const auto spec = resolve_model(model, params, run);
  const auto set = sim::simulate(spec, steps, paths, run.seed_for(purpose), {run.threads()});
  write_scenarios(set, out);
  run.output(out);
  if (!csv.empty()) {
    write_scenarios_csv(set, csv);
    run.output(csv);
  }
  run.write_manifest(out);
}

void cmd_stats(Run& run, const std::string& data, const std::string& scenarios,
               const std::string& window, const std::string& out, const std::string& acf_out) {
  const auto& s = run.settings();
  facts::StylizedFactsTarget stats;
  if (!data.empty()) {
    check_window(window);
    const auto prices = window_prices(load_history(data, run), window, s);
    stats = facts::reference_stats(prices, s.facts.tail_fraction, s.facts.max_lag);
  } else {
    run.input(scenarios);
    stats = facts::scenario_stats(read_scenarios(scenarios), s.facts, run.threads());
  }
  io::write_text(out, facts::to_json(stats) + "\n");
  run.output(out);
  if (!acf_out.empty()) {
    io::write_text(acf_out, facts::acf_csv(stats));
    run.output(acf_out);
  }
  run.write_manifest(out);
}

void cmd_calibrate(Run& run, const std::string& data, const std::string& grid_path,
                   const std::string& model, const std::string& window, const std::string& out,
                   const std::string& table_out) {
  check_window(window);
  const auto& s = run.settings();
  const auto history = load_history(data, run);
  const auto prices = window_prices(history, window, s);
  const auto kind = sim::model_kind_from_tag(model);
  const auto fixed = calib::fixed_params_from_history(prices, s.vol_window);
  const auto target = facts::reference_stats(prices, s.facts.tail_fraction, s.facts.max_lag);

  config::Config grid_file;
  if (!grid_path.empty()) {
    run.input(grid_path);
    grid_file = config::parse_config(io::read_text(grid_path));
  }
  auto grid = config::grid_from_config(grid_file, kind, fixed, s);
  if (!grid_file.has("seed")) grid.seed = run.seed_for("calibrate");

  auto result = kind == sim::ModelKind::chiarella_heston
                    ? calib::grid_search_calibrate(grid, target, fixed, s.weights, run.threads())
                    : calib::grid_search_calibrate(kind, grid, target,
                                                   calib::base_params(kind, fixed), s.weights,
                                                   run.threads());
  result.provenance.data_hash = io::file_hash(data);
  io::write_text(out, calib::to_json(result) + "\n");
  run.output(out);
  if (!table_out.empty()) {
    io::write_text(table_out, calib::table_csv(result));
    run.output(table_out);
  }
  run.write_manifest(out);
}

std::vector<double> gsl_samples(Run& run, const std::string& source, const std::string& label,
                                std::span<const double> reference, std::size_t n_scenarios) {
  const auto& s = run.settings();
  if (fs::exists(source) && looks_like_scenarios(source)) {
    run.input(source);
    return validation::gsl_div_scores(read_scenarios(source), reference, s.gsl, run.threads());
  }
  const auto spec = fs::exists(source) ? resolve_model("", source, run) : resolve_model(source, "", run);
  return validation::gsl_div_sample(spec, reference, n_scenarios, s.gsl,
                                    run.seed_for("validate/" + label), run.threads());
}

void cmd_validate(Run& run, const std::string& a, const std::string& b, const std::string& ref,
                  const std::string& window, std::size_t n_scenarios, const std::string& out) {
  check_window(window);
  const auto reference = window_prices(load_history(ref, run), window, run.settings());
  const auto xs = gsl_samples(run, a, "a", reference, n_scenarios);
  const auto ys = gsl_samples(run, b, "b", reference, n_scenarios);
  const auto welch = validation::welch_t_test(xs, ys);
  auto mean = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  json j;
  j["mean_a"] = mean(xs);
  j["mean_b"] = mean(ys);
  j["t"] = welch.t;
  j["df"] = welch.df;
  j["p"] = welch.p_value;
  j["samples_a"] = xs;
  j["samples_b"] = ys;
  io::write_text(out, j.dump(2) + "\n");
  run.output(out);
  run.write_manifest(out);
}

struct HedgeArgs {
  std::string scenarios, data, model, params, policy = "delta", out, pnl_csv;
  std::size_t paths = 1000;
  std::optional<std::size_t> steps;
  std::vector<double> costs;
  std::optional<double> es_confidence, pricing_vol;
};

void cmd_hedge_eval(Run& run, const HedgeArgs& a) {
  auto& s = run.settings();
  ScenarioSet set;
  double vol = 0.0;
  if (!a.scenarios.empty()) {
    run.input(a.scenarios);
    set = read_scenarios(a.scenarios);
    vol = pooled_vol(set);
  } else if (!a.data.empty()) {
    const auto history = load_history(a.data, run);
    const auto [cal, test] = io::split_history(history, s.split);
    set = hedging::build_test_scenarios(test.closes, a.steps.value_or(s.option.maturity_days),
                                        s.initial_price);
    vol = facts::realized_volatility(facts::log_returns(cal.closes));
  } else {
    const auto spec = resolve_model(a.model, a.params, run);
    set = sim::simulate(spec, a.steps.value_or(s.option.maturity_days), a.paths,
                        run.seed_for("hedge-eval"), {run.threads()});
    vol = model_vol(spec);
  }
  if (a.pricing_vol) s.pricing_vol = *a.pricing_vol;
  if (a.es_confidence) s.es_confidence = *a.es_confidence;
  if (!a.costs.empty()) s.costs = a.costs;

  hedging::OptionSpec option = s.option;
  option.maturity_days = set.n_steps();
  option.pricing_vol = s.pricing_vol.value_or(vol);

  hedging::Policy policy;
  std::string name = a.policy;
  if (a.policy == "delta") {
    policy = hedging::make_delta_policy();
  } else if (a.policy == "never") {
    policy = hedging::make_never_hedge_policy();
  } else {
    run.input(a.policy);
    policy = hedging::make_neural_policy(hedging::read_policy(a.policy));
    name = "neural:" + io::file_hash(a.policy);
  }
  const auto report = hedging::evaluate_policy(policy, name, set, option, s.costs,
                                               {s.es_confidence, s.atm_strike, run.threads()});
  io::write_text(a.out, hedging::to_json(report) + "\n");
  run.output(a.out);
  if (!a.pnl_csv.empty()) {
    io::write_text(a.pnl_csv, hedging::pnl_csv(report));
    run.output(a.pnl_csv);
  }
  run.write_manifest(a.out);
}

int dispatch(int argc, char** argv);

// Re-executes the argv stored in a manifest after checking input hashes.
int cmd_replay(const std::string& manifest_path) {
  const auto m = json_util::parse(io::read_text(manifest_path));
  for (const auto& [path, hash] : m.at("inputs").items()) {
    if (io::file_hash(path) != hash.get<std::string>()) {
      throw FormatError("input " + path + " changed since the manifest was written");
    }
  }
  auto args = m.at("argv").get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw FormatError("manifest has no replayable argv");
  args.insert(args.begin(), "abmhedge");
  std::vector<char*> ptrs;
  for (auto& s : args) ptrs.push_back(s.data());
  return dispatch(static_cast<int>(ptrs.size()), ptrs.data());
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Agent-based market simulation, calibration and hedging evaluation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "root seed; per-purpose seeds are derived from it");
    sub->add_option("--threads", common.threads, "worker threads (0 = all cores)");
    sub->add_option("--config", common.config_path, "settings file overriding the defaults")
        ->check(CLI::ExistingFile);
  };

  std::string model, params, out, csv, data, scenarios, window, grid, table, a, b, ref, acf_out;
  std::size_t paths = 0, steps = 0, n_scenarios = 100;

  auto* simulate = app.add_subcommand("simulate", "generate price paths");
  add_common(simulate);
  simulate->add_option("--model", model, "model tag");
  simulate->add_option("--params", params, "calibration result or flat parameter JSON")
      ->check(CLI::ExistingFile);
  simulate->add_option("--paths", paths, "number of paths")->required();
  simulate->add_option("--steps", steps, "steps per path")->required();
  simulate->add_option("--out", out, "scenario file")->required();
  simulate->add_option("--csv", csv, "also write paths as CSV rows");

  std::size_t export_paths = 50000, export_steps = 30;
  auto* exporter = app.add_subcommand("export-training-set", "write trainer scenarios");
  add_common(exporter);
  exporter->add_option("--calibration,--params", params, "calibration result JSON")
      ->check(CLI::ExistingFile);
  exporter->add_option("--model", model, "model tag");
  exporter->add_option("--paths", export_paths, "number of episodes (M)");
  exporter->add_option("--steps", export_steps, "days per episode (N)");
  exporter->add_option("--out", out, "scenario file")->required();

  auto* stats = app.add_subcommand("stats", "stylized facts of a price history or scenario set");
  add_common(stats);
  auto* stats_data = stats->add_option("--data", data, "price CSV")->check(CLI::ExistingFile);
  auto* stats_scn = stats->add_option("--scenarios", scenarios, "scenario file")->check(CLI::ExistingFile);
  stats_data->excludes(stats_scn);
  stats->add_option("--window", window, "all | calibration | test")->default_val("all");
  stats->add_option("--out", out, "stats JSON")->required();
  stats->add_option("--acf-csv", acf_out, "lag vs ACF CSV");

  auto* calibrate = app.add_subcommand("calibrate", "grid-search model calibration");
  add_common(calibrate);
  calibrate->add_option("--data", data, "price CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--grid", grid, "grid spec file")->check(CLI::ExistingFile);
  calibrate->add_option("--model", model, "model tag")->default_val("chiarella-heston");
  calibrate->add_option("--window", window, "all | calibration | test")->default_val("calibration");
  calibrate->add_option("--out", out, "calibration result JSON")->required();
  calibrate->add_option("--table", table, "per-point table CSV");

  auto* validate = app.add_subcommand("validate", "GSL-div comparison of two sources");
  add_common(validate);
  validate->add_option("--a", a, "scenario file, parameter JSON or model tag")->required();
  validate->add_option("--b", b, "scenario file, parameter JSON or model tag")->required();
  validate->add_option("--ref", ref, "reference price CSV")->required()->check(CLI::ExistingFile);
  validate->add_option("--window", window, "all | calibration | test")->default_val("all");
  validate->add_option("--n-scenarios", n_scenarios, "paths generated for model sources");
  validate->add_option("--out", out, "result JSON")->required();

  HedgeArgs h;
  std::size_t hedge_steps = 0;
  auto* hedge = app.add_subcommand("hedge-eval", "evaluate a hedging policy");
  add_common(hedge);
  auto* h_scn = hedge->add_option("--scenarios", h.scenarios, "scenario file")->check(CLI::ExistingFile);
  auto* h_data = hedge->add_option("--data", h.data, "price CSV; episodes from its test window")
                     ->check(CLI::ExistingFile);
  h_scn->excludes(h_data);
  hedge->add_option("--model", h.model, "generator model tag");
  hedge->add_option("--params", h.params, "generator parameters")->check(CLI::ExistingFile);
  hedge->add_option("--paths", h.paths, "generated episodes");
  auto* h_steps = hedge->add_option("--steps", hedge_steps, "days per episode");
  hedge->add_option("--policy", h.policy, "delta | never | policy weights JSON");
  hedge->add_option("--costs", h.costs, "proportional cost levels")->delimiter(',');
  hedge->add_option("--es-confidence", h.es_confidence, "expected shortfall confidence");
  hedge->add_option("--pricing-vol", h.pricing_vol, "per-day Black-Scholes volatility");
  hedge->add_option("--out", h.out, "report JSON")->required();
  hedge->add_option("--pnl-csv", h.pnl_csv, "per-episode P&L CSV");

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "re-run the invocation recorded in a manifest");
  replay->add_option("manifest", manifest, "manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  const std::string sub = args.front();
  if (replay->parsed()) return cmd_replay(manifest);

  Run run(sub, args, common);
  if (simulate->parsed()) {
    cmd_simulate(run, model, params, paths, steps, out, csv, "simulate");
  } else if (exporter->parsed()) {
    cmd_simulate(run, model, params, export_paths, export_steps, out, "", "export-training-set");
  } else if (stats->parsed()) {
    if (data.empty() && scenarios.empty()) throw ParameterError("stats needs --data or --scenarios");
    cmd_stats(run, data, scenarios, window, out, acf_out);
  } else if (calibrate->parsed()) {
    cmd_calibrate(run, data, grid, model, window, out, table);
  } else if (validate->parsed()) {
    cmd_validate(run, a, b, ref, window, n_scenarios, out);
  } else if (hedge->parsed()) {
    if (h_steps->count() > 0) h.steps = hedge_steps;
    cmd_hedge_eval(run, h);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
