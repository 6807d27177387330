#include "wobble/measure.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace wobble {

std::string_view to_string(MeasureKind kind) noexcept {
  return kind == MeasureKind::entropy ? "entropy" : "variance";
}

std::string_view to_string(ProbSource source) noexcept {
  return source == ProbSource::top1_onehot ? "top1_onehot" : "soft";
}

MeasureKind parse_measure_kind(std::string_view text) {
  if (text == "entropy" || text == "we") return MeasureKind::entropy;
  if (text == "variance" || text == "wv") return MeasureKind::variance;
  fail(Errc::unknown_mode, "unknown measure kind '" + std::string(text) + "'");
}

ProbSource parse_prob_source(std::string_view text) {
  if (text == "top1_onehot" || text == "top1" || text == "onehot") return ProbSource::top1_onehot;
  if (text == "soft") return ProbSource::soft;
  fail(Errc::unknown_mode, "unknown probability source '" + std::string(text) + "'");
}

void validate(const MeasureConfig& cfg) {
  validate(cfg.noise);
  if (!(cfg.c > 0.0) || !std::isfinite(cfg.c)) fail(Errc::invalid_argument, "c must be > 0");
}

ClassHistogram class_histogram(std::span<const std::uint32_t> labels, std::uint32_t k) {
  if (labels.empty()) fail(Errc::invalid_argument, "class histogram of an empty label list");
  if (k == 0) fail(Errc::invalid_argument, "class count must be >= 1");
  ClassHistogram h;
  h.counts.assign(k, 0);
  for (auto y : labels) {
    if (y >= k) {
      fail(Errc::out_of_range, "label " + std::to_string(y) + " not below " + std::to_string(k));
    }
    ++h.counts[y];
  }
  h.total = labels.size();
  h.a.resize(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    h.a[i] = static_cast<double>(h.counts[i]) / static_cast<double>(h.total);
  }
  return h;
}

double wobbliness_entropy(std::span<const double> a, double c) {
  double w = 0.0;
  for (double ai : a) {
    if (ai > 0.0) w -= ai * std::log(ai + c);
  }
  return w;
}

Matrix one_hot(std::span<const std::uint32_t> labels, std::uint32_t k) {
  Matrix m(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) fail(Errc::out_of_range, "label not below class count");
    m(i, labels[i]) = 1.0;
  }
  return m;
}

double wobbliness_variance(const Matrix& outputs) {
  if (outputs.rows() == 0 || outputs.cols() == 0) {
    fail(Errc::invalid_argument, "variance of an empty output set");
  }
  const std::size_t k = outputs.cols();
  std::vector<double> mean(k, 0.0);
  std::vector<double> m2(k, 0.0);
  for (std::size_t i = 0; i < outputs.rows(); ++i) {
    auto row = outputs.row(i);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (std::abs(sum - 1.0) > 1e-5) {
      fail(Errc::invalid_argument, "output row " + std::to_string(i) + " does not sum to 1");
    }
    // Welford update per class.
    const double n = static_cast<double>(i + 1);
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = row[c] - mean[c];
      mean[c] += delta / n;
      m2[c] += delta * (row[c] - mean[c]);
    }
  }
  double total = 0.0;
  for (double v : m2) total += v;
  return total / static_cast<double>(outputs.rows());
}

double measure_from_predictions(const PredictionBatch& batch, std::uint32_t k,
                                const MeasureConfig& cfg, bool use_soft) {
  if (use_soft && !batch.probs) {
    fail(Errc::unsupported, "soft outputs requested but the oracle returned none");
  }
  if (cfg.kind == MeasureKind::entropy) {
    if (!use_soft) return wobbliness_entropy(class_histogram(batch.labels, k), cfg.c);
    const auto& p = *batch.probs;
    std::vector<double> mean(k, 0.0);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::uint32_t c = 0; c < k; ++c) mean[c] += p(i, c);
    }
    for (auto& v : mean) v /= static_cast<double>(p.rows());
    return wobbliness_entropy(mean, cfg.c);
  }
  if (use_soft) return wobbliness_variance(*batch.probs);
  return wobbliness_variance(one_hot(batch.labels, k));
}

namespace {

DistributionMeta make_meta(const OracleHandle& h, const MeasureConfig& cfg, std::size_t n,
                           bool use_soft) {
  DistributionMeta meta;
  meta.sigma = cfg.noise.sigma;
  meta.n_samples = cfg.noise.n_samples;
  meta.kind = cfg.kind;
  meta.c = cfg.c;
  meta.clip = cfg.noise.clip;
  meta.seed = cfg.noise.seed;
  meta.prob_source = use_soft ? ProbSource::soft : ProbSource::top1_onehot;
  meta.prob_source_degraded = cfg.prob_source == ProbSource::soft && !use_soft;
  meta.oracle = h.fingerprint();
  meta.point_count = n;
  return meta;
}

void check_inputs(const OracleHandle& h, const Matrix& points,
                  std::span<const std::uint64_t> point_ids) {
  if (points.cols() != h.input_dim()) {
    fail(Errc::dim_mismatch, "points have dimension " + std::to_string(points.cols()) +
                                 " but the oracle expects " + std::to_string(h.input_dim()));
  }
  if (!point_ids.empty() && point_ids.size() != points.rows()) {
    fail(Errc::dim_mismatch, "point id count differs from point count");
  }
}

double measure_one(OracleHandle& h, const Matrix& points, std::size_t j,
                   const MeasureConfig& cfg, bool use_soft,
                   std::span<const std::uint64_t> point_ids) {
  const std::uint64_t id = point_ids.empty() ? j : point_ids[j];
  const auto cloud = sample_cloud(points.row(j), cfg.noise, id);
  const auto batch = h.classify(cloud.points);
  return measure_from_predictions(batch, h.classes(), cfg, use_soft);
}

}  // namespace

WobblinessDistribution measure_points(OracleHandle& h, const Matrix& points,
                                      const MeasureConfig& cfg,
                                      std::span<const std::uint64_t> point_ids) {
  validate(cfg);
  check_inputs(h, points, point_ids);
  const bool use_soft = cfg.prob_source == ProbSource::soft && h.supports_probs();
  WobblinessDistribution dist;
  dist.meta = make_meta(h, cfg, points.rows(), use_soft);
  dist.values.reserve(points.rows());
  for (std::size_t j = 0; j < points.rows(); ++j) {
    try {
      dist.values.push_back(measure_one(h, points, j, cfg, use_soft, point_ids));
    } catch (const Error& e) {
      throw MeasureAborted(e.code(),
                           "point " + std::to_string(j) + " (" + std::to_string(j) + "/" +
                               std::to_string(points.rows()) + " done): " + e.what(),
                           j, j);
    }
  }
  return dist;
}

WobblinessDistribution measure_points(const OracleFactory& factory, const Matrix& points,
                                      const MeasureConfig& cfg, std::size_t jobs,
                                      std::span<const std::uint64_t> point_ids) {
  validate(cfg);
  jobs = std::max<std::size_t>(1, std::min(jobs, points.rows()));
  if (jobs == 1) {
    auto h = factory();
    return measure_points(h, points, cfg, point_ids);
  }

  std::vector<double> values(points.rows(), 0.0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::optional<std::pair<std::size_t, Error>> first_error;
  std::optional<DistributionMeta> meta;

  auto record = [&](std::size_t j, const Error& e) {
    std::lock_guard lock(mu);
    if (!first_error || j < first_error->first) first_error.emplace(j, e);
    stop = true;
  };

  auto worker = [&] {
    std::optional<OracleHandle> h;
    try {
      h.emplace(factory());
      check_inputs(*h, points, point_ids);
    } catch (const Error& e) {
      record(0, e);
      return;
    }
    const bool use_soft = cfg.prob_source == ProbSource::soft && h->supports_probs();
    {
      std::lock_guard lock(mu);
      if (!meta) meta = make_meta(*h, cfg, points.rows(), use_soft);
    }
    while (!stop) {
      const std::size_t j = next.fetch_add(1);
      if (j >= points.rows()) break;
      try {
        values[j] = measure_one(*h, points, j, cfg, use_soft, point_ids);
        ++done;
      } catch (const Error& e) {
        record(j, e);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (first_error) {
    const auto& [j, e] = *first_error;
    throw MeasureAborted(e.code(),
                         "point " + std::to_string(j) + " (" + std::to_string(done.load()) + "/" +
                             std::to_string(points.rows()) + " done): " + e.what(),
                         j, done.load());
  }
  return WobblinessDistribution{std::move(values), std::move(*meta)};
}

DecompositionReport ce_decomposition_from_probs(const Matrix& probs, std::uint32_t y) {
  if (probs.rows() == 0) fail(Errc::invalid_argument, "no predictions to decompose");
  if (y >= probs.cols()) fail(Errc::out_of_range, "label not below class count");
  const std::size_t n = probs.rows();
  const std::size_t k = probs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) mean[c] += probs(i, c);
  }
  for (auto& v : mean) v *= inv_n;

  std::vector<double> log_mean(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) log_mean[c] = mean[c] > 0.0 ? std::log(mean[c]) : 0.0;

  DecompositionReport r;
  for (std::size_t c = 0; c < k; ++c) {
    if (mean[c] > 0.0) r.var_f -= mean[c] * log_mean[c];
  }
  // H(y, E y) and H(E y) both vanish for a fixed one-hot label.
  r.var_y = 0.0;
  double loss = 0.0;
  double bias = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ce_label = -std::log(probs(i, y));
    double ce_mean = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (probs(i, c) > 0.0) ce_mean -= probs(i, c) * log_mean[c];
    }
    loss += ce_label;
    bias += ce_label - ce_mean - r.var_y;
  }
  r.loss = loss * inv_n;
  r.bias2 = bias * inv_n;
  return r;
}

DecompositionReport ce_decomposition(OracleHandle& h, std::span<const double> x,
                                     std::uint32_t y, const NoiseConfig& noise,
                                     std::uint64_t point_index) {
  if (!h.supports_probs()) {
    fail(Errc::unsupported, "decomposition needs an oracle with soft outputs");
  }
  if (y >= h.classes()) fail(Errc::out_of_range, "label not below class count");
  const auto cloud = sample_cloud(x, noise, point_index);
  const auto batch = h.classify(cloud.points);
  if (!batch.probs) fail(Errc::unsupported, "oracle returned no soft outputs");
  return ce_decomposition_from_probs(*batch.probs, y);
}

}  // namespace wobble
