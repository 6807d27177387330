#include "wobble/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wobble/philox.hpp"
#include "wobble/special.hpp"

namespace wobble {

std::string_view to_string(Clip clip) noexcept {
  return clip == Clip::none ? "none" : "unit_interval";
}

Clip parse_clip(std::string_view text) {
  if (text == "none") return Clip::none;
  if (text == "unit_interval" || text == "unit") return Clip::unit_interval;
  fail(Errc::unknown_mode, "unknown clip mode '" + std::string(text) + "'");
}

void validate(const NoiseConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) {
    fail(Errc::invalid_argument, "sigma must be finite and >= 0");
  }
  if (cfg.n_samples < 1) fail(Errc::invalid_argument, "n_samples must be >= 1");
  if (cfg.n_samples > 0xFFFFFFFFull) fail(Errc::invalid_argument, "n_samples must fit in 32 bits");
}

PerturbationCloud sample_cloud(std::span<const double> x, const NoiseConfig& cfg,
                               std::uint64_t point_index) {
  validate(cfg);
  for (double v : x) {
    if (!std::isfinite(v)) fail(Errc::invalid_argument, "cloud center must be finite");
  }
  const std::size_t d = x.size();
  PerturbationCloud cloud{std::vector<double>(x.begin(), x.end()), Matrix(cfg.n_samples, d)};
  const PhiloxKey key{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32)};
  const auto pid_lo = static_cast<std::uint32_t>(point_index);
  const auto pid_hi = static_cast<std::uint32_t>(point_index >> 32);

  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    auto row = cloud.points.row(i);
    if (cfg.sigma == 0.0) {
      std::copy(x.begin(), x.end(), row.begin());
    } else {
      for (std::size_t c = 0; c < d; c += 2) {
        const auto block = philox4x32_10(
            {static_cast<std::uint32_t>(c / 2), static_cast<std::uint32_t>(i), pid_lo, pid_hi}, key);
        row[c] = x[c] + cfg.sigma * inv_norm_cdf(uniform_open01(block[0], block[1]));
        if (c + 1 < d) {
          row[c + 1] = x[c + 1] + cfg.sigma * inv_norm_cdf(uniform_open01(block[2], block[3]));
        }
      }
    }
    if (cfg.clip == Clip::unit_interval) {
      for (auto& v : row) v = std::clamp(v, 0.0, 1.0);
    }
  }
  return cloud;
}

}  // namespace wobble
