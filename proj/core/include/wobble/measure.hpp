#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wobble/oracle.hpp"
#include "wobble/sampling.hpp"

namespace wobble {

enum class MeasureKind { entropy, variance };
enum class ProbSource { top1_onehot, soft };

std::string_view to_string(MeasureKind kind) noexcept;
std::string_view to_string(ProbSource source) noexcept;
MeasureKind parse_measure_kind(std::string_view text);
ProbSource parse_prob_source(std::string_view text);

inline constexpr double kDefaultSmoothing = 1e-5;

struct MeasureConfig {
  NoiseConfig noise;
  double c = kDefaultSmoothing;  // keeps log() away from zero
  MeasureKind kind = MeasureKind::entropy;
  ProbSource prob_source = ProbSource::top1_onehot;
};

void validate(const MeasureConfig& cfg);

/// Top-1 class frequencies over a cloud. `a[i] == counts[i] / total`.
struct ClassHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::vector<double> a;
};

ClassHistogram class_histogram(std::span<const std::uint32_t> labels, std::uint32_t k);

/// W_e = sum_i -a_i * ln(a_i + c).
double wobbliness_entropy(std::span<const double> a, double c);
inline double wobbliness_entropy(const ClassHistogram& h, double c) {
  return wobbliness_entropy(h.a, c);
}

/// W_v: sum over classes of the population variance of that class's output
/// across the rows (one-hot or soft prediction vectors).
double wobbliness_variance(const Matrix& outputs);

/// One-hot rows for the given labels.
Matrix one_hot(std::span<const std::uint32_t> labels, std::uint32_t k);

struct DistributionMeta {
  double sigma = 0.0;
  std::size_t n_samples = 0;
  MeasureKind kind = MeasureKind::entropy;
  double c = kDefaultSmoothing;
  Clip clip = Clip::none;
  std::uint64_t seed = 0;
  ProbSource prob_source = ProbSource::top1_onehot;
  bool prob_source_degraded = false;  // soft requested, oracle only had top-1
  std::string oracle;                 // handle fingerprint
  std::size_t point_count = 0;
  std::optional<std::uint32_t> class_filter;
  std::string label;  // free-form tag, e.g. "clean" / "triggered" / "train"
};

struct WobblinessDistribution {
  std::vector<double> values;
  DistributionMeta meta;
};

/// Thrown when the oracle fails part way; reports how far measurement got.
class MeasureAborted : public Error {
 public:
  MeasureAborted(Errc code, const std::string& what, std::size_t failed_point,
                 std::size_t completed)
      : Error(code, what), failed_point_(failed_point), completed_(completed) {}
  std::size_t failed_point() const noexcept { return failed_point_; }
  std::size_t completed() const noexcept { return completed_; }

 private:
  std::size_t failed_point_;
  std::size_t completed_;
};

/// Measure value for one point from the oracle's answers over its cloud.
double measure_from_predictions(const PredictionBatch& batch, std::uint32_t k,
                                const MeasureConfig& cfg, bool use_soft);

/// For each row j of `points`: sample_cloud(row, cfg.noise, ids[j]), classify,
/// reduce. `point_ids` defaults to 0..N-1; passing the same ids for two
/// point sets gives paired clouds.
WobblinessDistribution measure_points(OracleHandle& h, const Matrix& points,
                                      const MeasureConfig& cfg,
                                      std::span<const std::uint64_t> point_ids = {});

/// Same result as the single-handle overload for any `jobs`; each worker
/// opens its own handle from `factory`.
WobblinessDistribution measure_points(const OracleFactory& factory, const Matrix& points,
                                      const MeasureConfig& cfg, std::size_t jobs,
                                      std::span<const std::uint64_t> point_ids = {});

struct DecompositionReport {
  double bias2 = 0.0;
  double var_f = 0.0;  // entropy of the mean soft prediction
  double var_y = 0.0;  // entropy of the (fixed) label distribution
  double loss = 0.0;   // mean cross-entropy over the cloud
};

/// Cross-entropy bias/variance split around x for one-hot label y.
DecompositionReport ce_decomposition(OracleHandle& h, std::span<const double> x,
                                     std::uint32_t y, const NoiseConfig& noise,
                                     std::uint64_t point_index = 0);

/// Kernel of ce_decomposition over an explicit set of soft predictions.
DecompositionReport ce_decomposition_from_probs(const Matrix& probs, std::uint32_t y);

}  // namespace wobble
