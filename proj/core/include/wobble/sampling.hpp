#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wobble/matrix.hpp"

namespace wobble {

enum class Clip { none, unit_interval };

std::string_view to_string(Clip clip) noexcept;
Clip parse_clip(std::string_view text);

inline constexpr std::uint64_t kDefaultSeed = 0x5EED'2020'0B0B'1E55ull;

struct NoiseConfig {
  double sigma = 0.15;  // per-dimension std-dev in input units
  std::size_t n_samples = 500;
  std::uint64_t seed = kDefaultSeed;
  Clip clip = Clip::none;
};

void validate(const NoiseConfig& cfg);

struct PerturbationCloud {
  std::vector<double> center;
  Matrix points;  // [n_samples, d]
};

/// Draws x' ~ N(x, sigma^2 I). Sample i, coordinate c uses Philox with key
/// `seed` and counter (c / 2, i, point_index), so a cloud depends only on
/// (x, cfg, point_index) and clouds can be generated in any order.
PerturbationCloud sample_cloud(std::span<const double> x, const NoiseConfig& cfg,
                               std::uint64_t point_index);

}  // namespace wobble
