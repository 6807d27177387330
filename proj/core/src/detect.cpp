#include "wobble/detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace wobble {

std::vector<double> apply_trigger(std::span<const double> x, const TriggerSpec& t) {
  if (x.size() != t.dim()) {
    fail(Errc::dim_mismatch, "trigger dimension " + std::to_string(t.dim()) +
                                 " does not match input dimension " + std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = t.mask.data[i];
    const double p = t.pattern.data[i];
    if (t.mode == TriggerMode::overlay) {
      out[i] = m == 0.0 ? x[i] : (m == 1.0 ? p : (1.0 - m) * x[i] + m * p);
    } else {
      out[i] = std::clamp(x[i] + m * p, 0.0, 1.0);
    }
  }
  return out;
}

Matrix apply_trigger(const Matrix& points, const TriggerSpec& t) {
  Matrix out(points.rows(), points.cols());
  for (std::size_t j = 0; j < points.rows(); ++j) {
    const auto row = apply_trigger(points.row(j), t);
    std::copy(row.begin(), row.end(), out.row(j).begin());
  }
  return out;
}

std::vector<TestResult> compare_samples(std::span<const double> a, std::span<const double> b,
                                        const DetectOptions& opts) {
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  if (opts.remove_outliers) {
    sa = remove_outliers(sa).values;
    sb = remove_outliers(sb).values;
  }
  std::vector<TestResult> results;
  for (auto kind : opts.tests) {
    auto r = run_test(kind, sa, sb, opts.test_options);
    r.outliers_removed = opts.remove_outliers;
    results.push_back(std::move(r));
  }
  return results;
}

const TestResult* DetectionReport::result(TestKind kind) const {
  for (const auto& r : results) {
    if (r.test_name == to_string(kind)) return &r;
  }
  return nullptr;
}

bool DetectionReport::flags_backdoor(TestKind kind, double alpha) const {
  const auto* r = result(kind);
  return r != nullptr && r->p_value < alpha;
}

namespace {

void check_detect_inputs(const Matrix& points, const TriggerSpec& t) {
  if (points.rows() < 2) fail(Errc::invalid_argument, "backdoor test needs at least 2 points");
  if (points.cols() != t.dim()) {
    fail(Errc::dim_mismatch, "trigger '" + t.id + "' has dimension " + std::to_string(t.dim()) +
                                 " but points have " + std::to_string(points.cols()));
  }
}

std::optional<double> hit_rate(OracleHandle& h, const Matrix& triggered, const TriggerSpec& t) {
  if (!t.target_class) return std::nullopt;
  const auto batch = h.classify(triggered);
  const auto hits = std::count(batch.labels.begin(), batch.labels.end(), *t.target_class);
  return static_cast<double>(hits) / static_cast<double>(batch.labels.size());
}

DetectionReport finish_report(const TriggerSpec& t, const MeasureConfig& cfg,
                              WobblinessDistribution clean, WobblinessDistribution triggered,
                              const DetectOptions& opts) {
  DetectionReport report;
  report.trigger_id = t.id;
  report.sigma = cfg.noise.sigma;
  clean.meta.label = "clean";
  triggered.meta.label = "triggered:" + t.id;
  report.results = compare_samples(clean.values, triggered.values, opts);
  report.clean = std::move(clean);
  report.triggered = std::move(triggered);
  return report;
}

}  // namespace

DetectionReport backdoor_test(OracleHandle& h, const Matrix& points, const TriggerSpec& t,
                              const MeasureConfig& cfg, const DetectOptions& opts) {
  check_detect_inputs(points, t);
  const Matrix triggered = apply_trigger(points, t);
  auto clean = measure_points(h, points, cfg);
  auto trig = measure_points(h, triggered, cfg);
  auto report = finish_report(t, cfg, std::move(clean), std::move(trig), opts);
  report.target_hit_rate = hit_rate(h, triggered, t);
  return report;
}

DetectionReport backdoor_test(const OracleFactory& factory, const Matrix& points,
                              const TriggerSpec& t, const MeasureConfig& cfg,
                              const DetectOptions& opts, std::size_t jobs) {
  if (jobs <= 1) {
    auto h = factory();
    return backdoor_test(h, points, t, cfg, opts);
  }
  check_detect_inputs(points, t);
  const Matrix triggered = apply_trigger(points, t);
  auto clean = measure_points(factory, points, cfg, jobs);
  auto trig = measure_points(factory, triggered, cfg, jobs);
  auto report = finish_report(t, cfg, std::move(clean), std::move(trig), opts);
  if (t.target_class) {
    auto h = factory();
    report.target_hit_rate = hit_rate(h, triggered, t);
  }
  return report;
}

void check_compatible(const DistributionMeta& a, const DistributionMeta& b) {
  if (a.sigma != b.sigma || a.n_samples != b.n_samples || a.kind != b.kind) {
    fail(Errc::incompatible,
         "distributions are not comparable (sigma " + std::to_string(a.sigma) + " vs " +
             std::to_string(b.sigma) + ", n " + std::to_string(a.n_samples) + " vs " +
             std::to_string(b.n_samples) + ", kind " + std::string(to_string(a.kind)) + " vs " +
             std::string(to_string(b.kind)) + ")");
  }
}

ComparisonReport compare_distributions(const WobblinessDistribution& d1,
                                       const WobblinessDistribution& d2,
                                       const DetectOptions& opts) {
  check_compatible(d1.meta, d2.meta);
  ComparisonReport r;
  r.first_meta = d1.meta;
  r.second_meta = d2.meta;
  r.first_box = boxplot_summary(d1.values);
  r.second_box = boxplot_summary(d2.values);
  r.results = compare_samples(d1.values, d2.values, opts);
  const double i1 = r.first_box.iqr();
  const double i2 = r.second_box.iqr();
  r.iqr_order = i1 < i2 ? -1 : (i1 > i2 ? 1 : 0);
  return r;
}

std::vector<ClassComparison> compare_classes(const WobblinessDistribution& d,
                                             std::span<const std::uint32_t> labels,
                                             std::uint32_t classes,
                                             const DetectOptions& opts) {
  if (labels.size() != d.values.size()) {
    fail(Errc::dim_mismatch, "one label per measured point is required");
  }
  std::vector<ClassComparison> out;
  for (std::uint32_t c = 0; c < classes; ++c) {
    WobblinessDistribution in{{}, d.meta}, rest{{}, d.meta};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= classes) fail(Errc::out_of_range, "label not below class count");
      (labels[i] == c ? in : rest).values.push_back(d.values[i]);
    }
    if (in.values.size() < 2 || rest.values.size() < 2) continue;
    in.meta.class_filter = c;
    in.meta.point_count = in.values.size();
    rest.meta.point_count = rest.values.size();
    rest.meta.label = "rest";
    out.push_back({c, in.values.size(), compare_distributions(in, rest, opts)});
  }
  return out;
}

bool BatteryNetwork::is_implanted(const std::string& trigger_id) const {
  if (!poisoned) return false;
  if (implanted.empty()) return true;
  return std::find(implanted.begin(), implanted.end(), trigger_id) != implanted.end();
}

BatteryResult run_battery(const std::vector<BatteryNetwork>& networks,
                          const std::vector<TriggerSpec>& triggers, const Matrix& points,
                          const MeasureConfig& cfg, const DetectOptions& opts,
                          std::size_t jobs) {
  if (networks.size() < 2) fail(Errc::invalid_argument, "battery needs at least 2 networks");
  if (triggers.empty()) fail(Errc::invalid_argument, "battery needs at least 1 trigger");

  BatteryResult result;
  result.cells.resize(networks.size() * triggers.size());
  for (std::size_t n = 0; n < networks.size(); ++n) {
    for (std::size_t t = 0; t < triggers.size(); ++t) {
      auto& cell = result.cells[n * triggers.size() + t];
      cell.network_id = networks[n].id;
      cell.trigger_id = triggers[t].id;
      cell.implanted = networks[n].is_implanted(triggers[t].id);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.cells.size()) return;
      auto& cell = result.cells[i];
      const auto& net = networks[i / triggers.size()];
      const auto& trig = triggers[i % triggers.size()];
      try {
        auto h = net.open();
        const auto report = backdoor_test(h, points, trig, cfg, opts);
        for (const auto& r : report.results) cell.p_values[r.test_name] = r.p_value;
        cell.target_hit_rate = report.target_hit_rate;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = "network '" + net.id + "', trigger '" + trig.id + "': " + e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, result.cells.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.failed_cells = static_cast<std::size_t>(
      std::count_if(result.cells.begin(), result.cells.end(), [](auto& c) { return c.failed; }));
  for (auto kind : opts.tests) {
    const std::string name(to_string(kind));
    std::vector<double> scores;
    std::vector<bool> truth;
    for (const auto& cell : result.cells) {
      if (cell.failed) continue;
      scores.push_back(cell.p_values.at(name));
      truth.push_back(cell.implanted);
    }
    result.roc[name] = roc_auc(scores, truth);
  }
  return result;
}

}  // namespace wobble
