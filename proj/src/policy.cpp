#include "abmhedge/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "abmhedge/data_io.hpp"
#include "abmhedge/errors.hpp"
#include "abmhedge/hedging.hpp"
#include "abmhedge/json_util.hpp"

namespace abmhedge::hedging {

using json_util::json;

namespace {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::none: return "none";
  }
  return "none";
}

Activation activation_from(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "none") return Activation::none;
  throw FormatError("unknown activation '" + name + "'");
}

void require_size(const std::vector<double>& v, std::size_t n, const std::string& what) {
  if (v.size() != n) {
    throw FormatError(what + " has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(n));
  }
  for (const double x : v) {
    if (!std::isfinite(x)) throw FormatError(what + " contains a non-finite value");
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

json optional_scale(const std::optional<double>& s, const char* symbolic) {
  return s ? json(*s) : json(symbolic);
}

std::optional<double> scale_from(const json& j, const std::string& key, const char* symbolic) {
  if (!j.contains(key)) throw FormatError("input." + key + " missing");
  const json& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != symbolic) {
      throw FormatError("input." + key + " must be a number or \"" + symbolic + "\"");
    }
    return std::nullopt;
  }
  return json_util::to_double(v, "input." + key);
}

}  // namespace

void PolicyWeights::validate() const {
  if (schema_version != kPolicySchemaVersion) {
    throw FormatError("unsupported policy schema version " + std::to_string(schema_version));
  }
  if (layers.empty()) throw FormatError("policy has no layers");
  std::size_t width = 3;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string tag = "layer " + std::to_string(i);
    if (l.in != width) {
      throw FormatError(tag + " expects " + std::to_string(l.in) + " inputs, previous layer gives " +
                        std::to_string(width));
    }
    if (l.out == 0) throw FormatError(tag + " has zero outputs");
    require_size(l.weights, l.in * l.out, tag + " weights");
    require_size(l.bias, l.out, tag + " bias");
    if (l.batch_norm) {
      const auto& bn = *l.batch_norm;
      require_size(bn.mean, l.out, tag + " batch_norm.mean");
      require_size(bn.var, l.out, tag + " batch_norm.var");
      require_size(bn.gamma, l.out, tag + " batch_norm.gamma");
      require_size(bn.beta, l.out, tag + " batch_norm.beta");
      if (!(bn.eps >= 0.0)) throw FormatError(tag + " batch_norm.eps must be >= 0");
      for (const double v : bn.var) {
        if (!(v + bn.eps > 0.0)) throw FormatError(tag + " batch_norm.var + eps must be > 0");
      }
    }
    width = l.out;
  }
  if (width != 1) throw FormatError("policy output width is " + std::to_string(width) + ", expected 1");
  if (layers.back().activation != Activation::sigmoid) {
    throw FormatError("policy output layer must use a sigmoid activation");
  }
  if (!(input.holding_scale > 0.0) || (input.price_scale && !(*input.price_scale > 0.0)) ||
      (input.ttm_scale && !(*input.ttm_scale > 0.0))) {
    throw FormatError("input scales must be positive");
  }
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) {
    throw FormatError("output_scale must be positive");
  }
}

double policy_forward_raw(const PolicyWeights& weights, const std::array<double, 3>& inputs) {
  std::vector<double> x(inputs.begin(), inputs.end());
  std::vector<double> y;
  for (const auto& l : weights.layers) {
    if (x.size() != l.in) throw FormatError("policy layer dimension mismatch");
    y.assign(l.out, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) acc += l.weights[o * l.in + i] * x[i];
      if (l.batch_norm) {
        const auto& bn = *l.batch_norm;
        acc = bn.gamma[o] * (acc - bn.mean[o]) / std::sqrt(bn.var[o] + bn.eps) + bn.beta[o];
      }
      switch (l.activation) {
        case Activation::relu: acc = std::max(acc, 0.0); break;
        case Activation::sigmoid: acc = sigmoid(acc); break;
        case Activation::none: break;
      }
      y[o] = acc;
    }
    x.swap(y);
  }
  if (x.size() != 1) throw FormatError("policy output is not scalar");
  return weights.output_scale * x[0];
}

double policy_forward(const PolicyWeights& weights, const HedgingEpisodeState& state,
                      const OptionSpec& option) {
  const auto& in = weights.input;
  const double price_scale = in.price_scale.value_or(option.strike);
  const double ttm_scale = in.ttm_scale.value_or(static_cast<double>(option.maturity_days));
  const double action = policy_forward_raw(
      weights, {state.holding / in.holding_scale, state.price / price_scale,
                static_cast<double>(state.ttm_days) / ttm_scale});
  return std::clamp(action, 0.0, weights.output_scale);
}

std::string to_json(const PolicyWeights& w) {
  json j;
  j["schema_version"] = w.schema_version;
  j["input"] = {{"order", {"holding", "price", "ttm"}},
                {"holding_scale", w.input.holding_scale},
                {"price_scale", optional_scale(w.input.price_scale, "strike")},
                {"ttm_scale", optional_scale(w.input.ttm_scale, "maturity")}};
  json layers = json::array();
  for (const auto& l : w.layers) {
    json lj = {{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias},
               {"activation", activation_name(l.activation)}};
    if (l.batch_norm) {
      const auto& bn = *l.batch_norm;
      lj["batch_norm"] = {{"mean", bn.mean}, {"var", bn.var}, {"gamma", bn.gamma},
                          {"beta", bn.beta}, {"eps", bn.eps}};
    } else {
      lj["batch_norm"] = nullptr;
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["output_scale"] = w.output_scale;
  return j.dump(2);
}

PolicyWeights policy_from_json(const std::string& text) {
  const json j = json_util::parse(text);
  PolicyWeights w;
  try {
    w.schema_version = j.at("schema_version").get<int>();
    const json& in = j.at("input");
    if (in.contains("order") &&
        in.at("order") != json::array({"holding", "price", "ttm"})) {
      throw FormatError("input.order must be [\"holding\", \"price\", \"ttm\"]");
    }
    w.input.holding_scale = json_util::number_at(in, "holding_scale");
    w.input.price_scale = scale_from(in, "price_scale", "strike");
    w.input.ttm_scale = scale_from(in, "ttm_scale", "maturity");
    for (const json& lj : j.at("layers")) {
      DenseLayer l;
      l.in = lj.at("in").get<std::size_t>();
      l.out = lj.at("out").get<std::size_t>();
      l.weights = json_util::numbers_at(lj, "weights");
      l.bias = json_util::numbers_at(lj, "bias");
      l.activation = activation_from(lj.at("activation").get<std::string>());
      if (lj.contains("batch_norm") && !lj.at("batch_norm").is_null()) {
        const json& bj = lj.at("batch_norm");
        BatchNorm bn;
        bn.mean = json_util::numbers_at(bj, "mean");
        bn.var = json_util::numbers_at(bj, "var");
        bn.gamma = json_util::numbers_at(bj, "gamma");
        bn.beta = json_util::numbers_at(bj, "beta");
        bn.eps = json_util::number_at(bj, "eps");
        l.batch_norm = std::move(bn);
      }
      w.layers.push_back(std::move(l));
    }
    w.output_scale = json_util::number_at(j, "output_scale");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed policy weights: ") + e.what());
  }
  w.validate();
  return w;
}

PolicyWeights read_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

void write_policy(const PolicyWeights& weights, const std::filesystem::path& path) {
  weights.validate();
  io::write_text(path, to_json(weights) + "\n");
}

PolicyWeights zero_policy(const std::vector<std::size_t>& hidden) {
  PolicyWeights w;
  std::size_t width = 3;
  for (const std::size_t h : hidden) {
    DenseLayer l;
    l.in = width;
    l.out = h;
    l.weights.assign(width * h, 0.0);
    l.bias.assign(h, 0.0);
    l.batch_norm = BatchNorm{std::vector<double>(h, 0.0), std::vector<double>(h, 1.0),
                             std::vector<double>(h, 1.0), std::vector<double>(h, 0.0), 1e-5};
    l.activation = Activation::relu;
    w.layers.push_back(std::move(l));
    width = h;
  }
  DenseLayer out;
  out.in = width;
  out.out = 1;
  out.weights.assign(width, 0.0);
  out.bias.assign(1, 0.0);
  out.activation = Activation::sigmoid;
  w.layers.push_back(std::move(out));
  return w;
}

}  // namespace abmhedge::hedging
