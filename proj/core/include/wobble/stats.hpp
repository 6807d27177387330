#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wobble {

/// Linear-interpolation quantile on the sorted values at position q * (n - 1).
double quantile(std::span<const double> values, double q);

/// Same, for values already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double q);

struct BoxplotSummary {
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double lower_fence = 0.0;  // q25 - 1.5 IQR
  double upper_fence = 0.0;  // q75 + 1.5 IQR
  double mean = 0.0;
  std::vector<std::size_t> outlier_indices;  // ascending

  double iqr() const noexcept { return q75 - q25; }
};

/// Tukey boxplot: a value is an outlier iff it lies strictly outside the fences.
BoxplotSummary boxplot_summary(std::span<const double> values);

struct OutlierRemoval {
  std::vector<double> values;
  std::size_t removed = 0;
  /// Set when removal would have emptied the sample; values are then the input.
  bool kept_all_to_avoid_empty = false;
};

/// Drops boxplot outliers. All-equal samples are returned unchanged.
OutlierRemoval remove_outliers(std::span<const double> values);

struct TestResult {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool outliers_removed = false;
  bool degenerate = false;
  std::size_t permutations = 0;  // 0 = analytic p-value
};

enum class TestKind { levene, fligner, ks };

std::string_view to_string(TestKind kind) noexcept;
TestKind parse_test_kind(std::string_view text);
inline constexpr TestKind kAllTests[] = {TestKind::levene, TestKind::fligner, TestKind::ks};

struct TestOptions {
  /// When > 0, the p-value is the fraction of this many label permutations
  /// whose statistic is at least the observed one.
  std::size_t permutations = 0;
  std::uint64_t seed = 0x9E3779B97F4A7C15ull;
};

/// Mean-centred Levene statistic for two groups (the F-ratio of the
/// absolute deviations from each group's mean).
double levene_statistic(std::span<const double> a, std::span<const double> b);

/// Fligner-Killeen statistic: median-centred, normal scores of the pooled
/// ranks of absolute deviations (midranks for ties).
double fligner_statistic(std::span<const double> a, std::span<const double> b);

/// Two-sample Smirnov D = sup |F_a - F_b|, exact via merged order statistics.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Upper tail of F(1, N - 2). Degenerate input (all deviations equal) gives
/// statistic 0, p 1, flagged.
TestResult levene_test(std::span<const double> a, std::span<const double> b,
                       const TestOptions& opts = {});

/// Upper tail of chi-square with 1 df. Degenerate input gives p 1, flagged.
TestResult fligner_test(std::span<const double> a, std::span<const double> b,
                        const TestOptions& opts = {});

/// Work bound (n_a + n_b) * min(n_a, n_b) up to which ks_test computes the
/// exact permutation tail; larger samples use the asymptotic tail.
inline constexpr double kKsExactWork = 5e7;

/// Two-sample Smirnov D. The p-value is the exact permutation tail given the
/// pooled values (ties included), or the asymptotic Kolmogorov tail at
/// D * sqrt(n_a n_b / (n_a + n_b)) past kKsExactWork.
TestResult ks_test(std::span<const double> a, std::span<const double> b,
                   const TestOptions& opts = {});

TestResult run_test(TestKind kind, std::span<const double> a, std::span<const double> b,
                    const TestOptions& opts = {});

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// ROC for "smaller score means positive" (scores are p-values). A case is
/// called positive at threshold t when score <= t. The AUC equals
/// P(score_pos < score_neg) + 0.5 P(score_pos == score_neg).
RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& truth);

}  // namespace wobble
