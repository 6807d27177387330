#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "wobble/data_io.hpp"

namespace wobble {

enum class Activation { relu, none };

struct DenseLayer {
  Tensor weights;  // [in, out]
  Tensor bias;     // [out]
  Activation activation = Activation::none;

  std::size_t in() const noexcept { return weights.dims.at(0); }
  std::size_t out() const noexcept { return weights.dims.at(1); }
};

/// Dense feed-forward reference classifier. The final layer's outputs are
/// logits; probabilities come from a softmax on top.
struct MlpModel {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().in(); }
  std::size_t classes() const { return layers.back().out(); }
};

void validate_mlp(const MlpModel& m);

std::vector<double> mlp_logits(const MlpModel& m, std::span<const double> x);

/// Softmax of the logits. Output sums to 1 within rounding.
std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Manifest: {"layers":[{"weights_path":..,"bias_path":..,"activation":"relu"|"none"},..]}
MlpModel load_mlp(const std::filesystem::path& manifest);
void save_mlp(const MlpModel& m, const std::filesystem::path& manifest);

}  // namespace wobble
