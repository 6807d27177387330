#include "wobble/mlp.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace wobble {

void validate_mlp(const MlpModel& m) {
  if (m.layers.empty()) fail(Errc::invalid_argument, "model has no layers");
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& layer = m.layers[i];
    if (layer.weights.dims.size() != 2) {
      fail(Errc::dim_mismatch, "layer " + std::to_string(i) + ": weights must be [in, out]");
    }
    if (layer.bias.dims.size() != 1 || layer.bias.dims[0] != layer.out()) {
      fail(Errc::dim_mismatch, "layer " + std::to_string(i) + ": bias must be [out]");
    }
    if (i > 0 && m.layers[i - 1].out() != layer.in()) {
      fail(Errc::dim_mismatch, "layer " + std::to_string(i) + ": input does not chain");
    }
  }
  if (m.classes() < 2) fail(Errc::invalid_argument, "model must have at least 2 classes");
}

std::vector<double> mlp_logits(const MlpModel& m, std::span<const double> x) {
  if (m.layers.empty()) fail(Errc::invalid_argument, "model has no layers");
  if (x.size() != m.input_dim()) {
    fail(Errc::dim_mismatch, "input length " + std::to_string(x.size()) +
                                 " does not match model input " +
                                 std::to_string(m.input_dim()));
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& layer : m.layers) {
    const std::size_t in = layer.in();
    const std::size_t out = layer.out();
    next.assign(layer.bias.data.begin(), layer.bias.data.end());
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = cur[i];
      if (xi == 0.0) continue;
      const float* w = layer.weights.data.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) next[o] += xi * static_cast<double>(w[o]);
    }
    if (layer.activation == Activation::relu) {
      for (auto& v : next) v = std::max(v, 0.0);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x) {
  return softmax(mlp_logits(m, x));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

MlpModel load_mlp(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, manifest.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
    fail(Errc::parse_error, manifest.string() + ": expected {\"layers\": [...]}");
  }
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  MlpModel m;
  for (const auto& jl : j["layers"]) {
    DenseLayer layer;
    try {
      layer.weights = load_tensor(resolve(jl.at("weights_path").get<std::string>()));
      layer.bias = load_tensor(resolve(jl.at("bias_path").get<std::string>()));
      const auto act = jl.value("activation", std::string("none"));
      if (act == "relu") {
        layer.activation = Activation::relu;
      } else if (act == "none") {
        layer.activation = Activation::none;
      } else {
        fail(Errc::unknown_mode, "unknown activation '" + act + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, manifest.string() + ": " + e.what());
    }
    m.layers.push_back(std::move(layer));
  }
  validate_mlp(m);
  return m;
}

void save_mlp(const MlpModel& m, const std::filesystem::path& manifest) {
  validate_mlp(m);
  const auto stem = manifest.stem().string();
  const auto base = manifest.parent_path();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto w = stem + ".layer" + std::to_string(i) + ".weights.wobt";
    const auto b = stem + ".layer" + std::to_string(i) + ".bias.wobt";
    save_tensor(m.layers[i].weights, base / w);
    save_tensor(m.layers[i].bias, base / b);
    layers.push_back({{"weights_path", w},
                      {"bias_path", b},
                      {"activation", m.layers[i].activation == Activation::relu ? "relu" : "none"}});
  }
  write_text_file(manifest, nlohmann::json{{"layers", layers}}.dump(2) + "\n");
}

}  // namespace wobble
