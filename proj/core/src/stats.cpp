#include "wobble/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wobble/error.hpp"
#include "wobble/philox.hpp"
#include "wobble/special.hpp"

namespace wobble {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (std::isnan(v)) fail(Errc::invalid_argument, std::string(what) + " contains NaN");
  }
}

void check_sizes(std::span<const double> a, std::span<const double> b, std::size_t min_size,
                 const char* test) {
  if (a.size() < min_size || b.size() < min_size) {
    fail(Errc::invalid_argument, std::string(test) + " needs at least " +
                                     std::to_string(min_size) + " values per sample");
  }
  check_finite(a, test);
  check_finite(b, test);
}

// Order-independent sum: equal multisets give bit-identical results.
double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double mean_of(std::span<const double> v) {
  return sorted_sum({v.begin(), v.end()}) / static_cast<double>(v.size());
}

double median_of(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.5);
}

struct Statistic {
  double value = 0.0;
  bool degenerate = false;
};

// Two-group one-way ANOVA F ratio on z, using the k = 2 identity
// sum n_g (zbar_g - zbar)^2 = (n_a n_b / N) (zbar_a - zbar_b)^2.
Statistic two_group_f_ratio(const std::vector<double>& za, const std::vector<double>& zb) {
  const double na = static_cast<double>(za.size());
  const double nb = static_cast<double>(zb.size());
  const double n = na + nb;
  const double ma = sorted_sum(za) / na;
  const double mb = sorted_sum(zb) / nb;
  const double between = na * nb / n * (ma - mb) * (ma - mb);
  double within = 0.0;
  for (double z : za) within += (z - ma) * (z - ma);
  for (double z : zb) within += (z - mb) * (z - mb);
  if (within == 0.0) {
    return {between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity(), true};
  }
  return {(n - 2.0) * between / within, false};
}

Statistic levene_impl(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  std::vector<double> za, zb;
  za.reserve(a.size());
  zb.reserve(b.size());
  for (double x : a) za.push_back(std::abs(x - ma));
  for (double x : b) zb.push_back(std::abs(x - mb));
  return two_group_f_ratio(za, zb);
}

Statistic fligner_impl(std::span<const double> a, std::span<const double> b) {
  const double meda = median_of(a);
  const double medb = median_of(b);
  const std::size_t na = a.size();
  const std::size_t n = na + b.size();
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < na; ++i) dev[i] = std::abs(a[i] - meda);
  for (std::size_t i = 0; i < b.size(); ++i) dev[na + i] = std::abs(b[i] - medb);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto l, auto r) { return dev[l] < dev[r]; });

  // Midranks, then normal scores.
  std::vector<double> score(n);
  if (dev[order.front()] == dev[order.back()]) return {0.0, true};
  const double denom = 2.0 * (static_cast<double>(n) + 1.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && dev[order[j + 1]] == dev[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double s = inv_norm_cdf(0.5 + rank / denom);
    for (std::size_t t = i; t <= j; ++t) score[order[t]] = s;
    i = j + 1;
  }

  std::vector<double> sa(score.begin(), score.begin() + static_cast<std::ptrdiff_t>(na));
  std::vector<double> sb(score.begin() + static_cast<std::ptrdiff_t>(na), score.end());
  const double mean_all = sorted_sum(score) / static_cast<double>(n);
  double var = 0.0;
  for (double s : score) var += (s - mean_all) * (s - mean_all);
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return {0.0, true};

  const double ma = sorted_sum(sa) / static_cast<double>(na);
  const double mb = sorted_sum(sb) / static_cast<double>(b.size());
  const double between = static_cast<double>(na) * static_cast<double>(b.size()) /
                         static_cast<double>(n) * (ma - mb) * (ma - mb);
  return {between / var, false};
}

struct KsScan {
  std::int64_t best = 0;             // max |i nb - j na| over tie-group ends
  std::vector<bool> group_end;       // pooled position k closes a tie group
};

KsScan ks_scan(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<std::int64_t>(sa.size());
  const auto nb = static_cast<std::int64_t>(sb.size());
  KsScan scan;
  scan.group_end.assign(static_cast<std::size_t>(na + nb) + 1, false);
  std::int64_t i = 0, j = 0;
  // Compare i / na with j / nb as integers: |i nb - j na|.
  while (i < na || j < nb) {
    const double t = j == nb || (i < na && sa[static_cast<std::size_t>(i)] < sb[static_cast<std::size_t>(j)])
                         ? sa[static_cast<std::size_t>(i)]
                         : sb[static_cast<std::size_t>(j)];
    while (i < na && sa[static_cast<std::size_t>(i)] == t) ++i;
    while (j < nb && sb[static_cast<std::size_t>(j)] == t) ++j;
    scan.best = std::max(scan.best, std::abs(i * nb - j * na));
    scan.group_end[static_cast<std::size_t>(i + j)] = true;
  }
  return scan;
}

double ks_impl(std::span<const double> a, std::span<const double> b) {
  return static_cast<double>(ks_scan(a, b).best) /
         (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Exact permutation tail P(D* >= D) for fixed pooled values. Relabelling the
// pooled sample walks a lattice path: after k pooled values, i came from a.
// Mass is carried forward with hypergeometric step probabilities and absorbed
// whenever a tie-group end reaches the observed distance, so ties are handled
// exactly and small tails do not cancel.
double ks_exact_upper(const KsScan& scan, std::int64_t na, std::int64_t nb) {
  if (scan.best == 0) return 1.0;
  const std::int64_t n = na + nb;
  std::vector<double> mass(static_cast<std::size_t>(na) + 1, 0.0), next(mass.size());
  mass[0] = 1.0;
  double hit = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    const double left = static_cast<double>(n - k);
    for (std::int64_t i = std::max<std::int64_t>(0, k - nb); i <= std::min(k, na); ++i) {
      const double m = mass[static_cast<std::size_t>(i)];
      if (m == 0.0) continue;
      if (i < na) next[static_cast<std::size_t>(i + 1)] += m * static_cast<double>(na - i) / left;
      const std::int64_t j = k - i;
      if (j < nb) next[static_cast<std::size_t>(i)] += m * static_cast<double>(nb - j) / left;
    }
    std::swap(mass, next);
    if (!scan.group_end[static_cast<std::size_t>(k + 1)]) continue;
    for (std::int64_t i = std::max<std::int64_t>(0, k + 1 - nb); i <= std::min(k + 1, na); ++i) {
      if (std::abs(i * nb - (k + 1 - i) * na) >= scan.best) {
        hit += mass[static_cast<std::size_t>(i)];
        mass[static_cast<std::size_t>(i)] = 0.0;
      }
    }
  }
  return std::min(1.0, hit);
}

template <typename StatFn>
double permutation_p(std::span<const double> a, std::span<const double> b, double observed,
                     const TestOptions& opts, StatFn stat) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  CounterRng rng(opts.seed, 0x7065726Dull);
  const double tol = 1e-12 * std::max(1.0, std::abs(observed));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < opts.permutations; ++r) {
    for (std::size_t i = pooled.size() - 1; i > 0; --i) {
      std::swap(pooled[i], pooled[rng.below(i + 1)]);
    }
    const std::span<const double> all(pooled);
    if (stat(all.first(a.size()), all.subspan(a.size())) >= observed - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(opts.permutations);
}

TestResult make_result(const char* name, std::span<const double> a, std::span<const double> b,
                       const TestOptions& opts) {
  TestResult r;
  r.test_name = name;
  r.n_a = a.size();
  r.n_b = b.size();
  r.permutations = opts.permutations;
  return r;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(Errc::invalid_argument, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(Errc::out_of_range, "quantile level must be in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size() || frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  check_finite(values, "quantile input");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, q);
}

BoxplotSummary boxplot_summary(std::span<const double> values) {
  if (values.empty()) fail(Errc::invalid_argument, "boxplot of an empty sample");
  check_finite(values, "boxplot input");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxplotSummary box;
  box.q25 = quantile_sorted(s, 0.25);
  box.q50 = quantile_sorted(s, 0.50);
  box.q75 = quantile_sorted(s, 0.75);
  const double iqr = box.q75 - box.q25;
  box.lower_fence = box.q25 - 1.5 * iqr;
  box.upper_fence = box.q75 + 1.5 * iqr;
  box.mean = sorted_sum(s) / static_cast<double>(s.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > box.upper_fence || values[i] < box.lower_fence) {
      box.outlier_indices.push_back(i);
    }
  }
  return box;
}

OutlierRemoval remove_outliers(std::span<const double> values) {
  OutlierRemoval out;
  if (values.empty()) fail(Errc::invalid_argument, "outlier removal on an empty sample");
  const bool all_equal =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  if (all_equal) {
    out.values.assign(values.begin(), values.end());
    return out;
  }
  const auto box = boxplot_summary(values);
  if (box.outlier_indices.size() == values.size()) {
    out.values.assign(values.begin(), values.end());
    out.kept_all_to_avoid_empty = true;
    return out;
  }
  std::size_t next = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (next < box.outlier_indices.size() && box.outlier_indices[next] == i) {
      ++next;
      continue;
    }
    out.values.push_back(values[i]);
  }
  out.removed = box.outlier_indices.size();
  return out;
}

std::string_view to_string(TestKind kind) noexcept {
  switch (kind) {
    case TestKind::levene: return "levene";
    case TestKind::fligner: return "fligner";
    case TestKind::ks: return "ks";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view text) {
  if (text == "levene") return TestKind::levene;
  if (text == "fligner") return TestKind::fligner;
  if (text == "ks") return TestKind::ks;
  fail(Errc::unknown_mode, "unknown test '" + std::string(text) + "'");
}

double levene_statistic(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 2, "levene");
  return levene_impl(a, b).value;
}

double fligner_statistic(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 2, "fligner");
  return fligner_impl(a, b).value;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 1, "ks");
  return ks_impl(a, b);
}

TestResult levene_test(std::span<const double> a, std::span<const double> b,
                       const TestOptions& opts) {
  check_sizes(a, b, 2, "levene");
  auto r = make_result("levene", a, b, opts);
  const auto s = levene_impl(a, b);
  r.statistic = s.value;
  r.degenerate = s.degenerate;
  if (s.degenerate) {
    r.p_value = s.value == 0.0 ? 1.0 : 0.0;
  } else if (opts.permutations > 0) {
    r.p_value = permutation_p(a, b, s.value, opts,
                              [](auto x, auto y) { return levene_impl(x, y).value; });
  } else {
    r.p_value = f_dist_upper(s.value, 1.0, static_cast<double>(a.size() + b.size()) - 2.0);
  }
  return r;
}

TestResult fligner_test(std::span<const double> a, std::span<const double> b,
                        const TestOptions& opts) {
  check_sizes(a, b, 2, "fligner");
  auto r = make_result("fligner", a, b, opts);
  const auto s = fligner_impl(a, b);
  r.statistic = s.value;
  r.degenerate = s.degenerate;
  if (s.degenerate) {
    r.p_value = 1.0;
  } else if (opts.permutations > 0) {
    r.p_value = permutation_p(a, b, s.value, opts,
                              [](auto x, auto y) { return fligner_impl(x, y).value; });
  } else {
    r.p_value = chi2_upper(s.value, 1.0);
  }
  return r;
}

TestResult ks_test(std::span<const double> a, std::span<const double> b,
                   const TestOptions& opts) {
  check_sizes(a, b, 1, "ks");
  auto r = make_result("ks", a, b, opts);
  const auto scan = ks_scan(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  r.statistic = static_cast<double>(scan.best) / (na * nb);
  if (opts.permutations > 0) {
    r.p_value = permutation_p(a, b, r.statistic, opts, ks_impl);
  } else if ((na + nb) * std::min(na, nb) <= kKsExactWork) {
    r.p_value = ks_exact_upper(scan, static_cast<std::int64_t>(a.size()),
                               static_cast<std::int64_t>(b.size()));
  } else {
    r.p_value = kolmogorov_upper(r.statistic * std::sqrt(na * nb / (na + nb)));
  }
  return r;
}

TestResult run_test(TestKind kind, std::span<const double> a, std::span<const double> b,
                    const TestOptions& opts) {
  switch (kind) {
    case TestKind::levene: return levene_test(a, b, opts);
    case TestKind::fligner: return fligner_test(a, b, opts);
    case TestKind::ks: return ks_test(a, b, opts);
  }
  fail(Errc::invalid_argument, "unknown test kind");
}

}  // namespace wobble
