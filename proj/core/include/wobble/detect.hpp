#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wobble/data_io.hpp"
#include "wobble/measure.hpp"
#include "wobble/stats.hpp"

namespace wobble {

/// overlay:  x' = (1 - mask) * x + mask * pattern
/// additive: x' = clamp(x + mask * pattern, 0, 1)
std::vector<double> apply_trigger(std::span<const double> x, const TriggerSpec& t);
Matrix apply_trigger(const Matrix& points, const TriggerSpec& t);

struct DetectOptions {
  bool remove_outliers = false;
  std::vector<TestKind> tests{std::begin(kAllTests), std::end(kAllTests)};
  TestOptions test_options;
};

/// Runs the selected tests on two samples, after optional outlier removal
/// applied to each sample separately.
std::vector<TestResult> compare_samples(std::span<const double> a, std::span<const double> b,
                                        const DetectOptions& opts);

struct DetectionReport {
  std::string trigger_id;
  std::vector<TestResult> results;
  WobblinessDistribution clean;
  WobblinessDistribution triggered;
  double sigma = 0.0;
  /// Fraction of triggered centre points the oracle assigns to the trigger's
  /// target class, when one is declared.
  std::optional<double> target_hit_rate;

  const TestResult* result(TestKind kind) const;
  /// True when the named test rejects equal spread at `alpha`.
  bool flags_backdoor(TestKind kind, double alpha) const;
};

/// Measures W on the clean points and on the triggered points with the same
/// cloud seeds, then compares the two samples. Small p-values mean the
/// trigger behaves like a backdoor.
DetectionReport backdoor_test(OracleHandle& h, const Matrix& points, const TriggerSpec& t,
                              const MeasureConfig& cfg, const DetectOptions& opts = {});

DetectionReport backdoor_test(const OracleFactory& factory, const Matrix& points,
                              const TriggerSpec& t, const MeasureConfig& cfg,
                              const DetectOptions& opts, std::size_t jobs);

struct ComparisonReport {
  DistributionMeta first_meta;
  DistributionMeta second_meta;
  BoxplotSummary first_box;
  BoxplotSummary second_box;
  std::vector<TestResult> results;
  /// -1 when the first distribution has the smaller IQR, +1 when larger, 0 when equal.
  int iqr_order = 0;
};

/// Rejects distributions measured with different sigma, n_samples or kind.
void check_compatible(const DistributionMeta& a, const DistributionMeta& b);

ComparisonReport compare_distributions(const WobblinessDistribution& d1,
                                       const WobblinessDistribution& d2,
                                       const DetectOptions& opts = {});

struct ClassComparison {
  std::uint32_t class_id = 0;
  std::size_t count = 0;
  ComparisonReport report;  // this class against all other classes
};

/// Splits one distribution by per-point labels and compares each class with
/// the rest. Classes with fewer than two points on either side are skipped.
std::vector<ClassComparison> compare_classes(const WobblinessDistribution& d,
                                             std::span<const std::uint32_t> labels,
                                             std::uint32_t classes,
                                             const DetectOptions& opts = {});

struct BatteryNetwork {
  std::string id;
  OracleFactory open;
  std::string description;
  bool poisoned = false;
  /// Trigger ids implanted in this network. Empty with poisoned = true means
  /// every candidate trigger counts as implanted.
  std::vector<std::string> implanted;

  bool is_implanted(const std::string& trigger_id) const;
};

struct BatteryCell {
  std::string network_id;
  std::string trigger_id;
  bool implanted = false;
  bool failed = false;
  std::string error;
  std::map<std::string, double> p_values;  // by test name
  std::optional<double> target_hit_rate;
};

struct BatteryResult {
  std::vector<BatteryCell> cells;                 // network-major, trigger-minor order
  std::map<std::string, RocCurve> roc;            // by test name
  std::size_t failed_cells = 0;
};

/// Every (network, trigger) pair through backdoor_test, then one ROC per test
/// with p-value as the score. Failed cells are reported and left out of the ROC.
BatteryResult run_battery(const std::vector<BatteryNetwork>& networks,
                          const std::vector<TriggerSpec>& triggers, const Matrix& points,
                          const MeasureConfig& cfg, const DetectOptions& opts = {},
                          std::size_t jobs = 1);

}  // namespace wobble
