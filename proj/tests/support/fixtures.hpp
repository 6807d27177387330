#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wobble/wobble.hpp"

namespace wobble::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// [rows, cols] matrix of U(lo, hi) draws.
Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                      double hi = 1.0);

std::vector<double> normal_sample(std::size_t n, double mean, double sd, CounterRng& rng);

/// Dense layer with N(0, scale^2) weights and biases.
DenseLayer random_layer(std::size_t in, std::size_t out, Activation act, double scale,
                        CounterRng& rng);

/// Two-layer ReLU network with random weights. Soft outputs, deterministic.
MlpModel random_mlp(std::size_t in, std::size_t hidden, std::size_t classes, std::uint64_t seed,
                    double scale = 1.0);

/// Single-layer linear model logits = x W + b.
MlpModel linear_model(const std::vector<std::vector<double>>& w, const std::vector<double>& b);

Tensor vector_tensor(const std::vector<double>& v);

TriggerSpec make_trigger(std::string id, std::vector<double> mask, std::vector<double> pattern,
                         TriggerMode mode = TriggerMode::overlay,
                         std::optional<std::uint32_t> target = std::nullopt);

}  // namespace wobble::testing
