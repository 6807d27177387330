#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wobble/error.hpp"
#include "wobble/stats.hpp"

namespace wobble {

RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& truth) {
  if (scores.size() != truth.size()) {
    fail(Errc::dim_mismatch, "scores and ground truth differ in length");
  }
  for (double s : scores) {
    if (std::isnan(s)) fail(Errc::invalid_argument, "ROC score is NaN");
  }
  const auto positives = static_cast<std::uint64_t>(std::count(truth.begin(), truth.end(), true));
  const auto negatives = static_cast<std::uint64_t>(truth.size()) - positives;
  if (positives == 0 || negatives == 0) {
    fail(Errc::invalid_argument, "ROC needs at least one positive and one negative case");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto l, auto r) { return scores[l] < scores[r]; });

  RocCurve roc;
  roc.points.push_back({-std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  // Twice the area in count units, so the AUC is exact up to the final division.
  long double twice_area = 0.0L;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    const auto tp_prev = tp;
    const auto fp_prev = fp;
    while (i < order.size() && scores[order[i]] == t) {
      truth[order[i]] ? ++tp : ++fp;
      ++i;
    }
    twice_area += static_cast<long double>(fp - fp_prev) * static_cast<long double>(tp + tp_prev);
    roc.points.push_back({t, static_cast<double>(fp) / static_cast<double>(negatives),
                          static_cast<double>(tp) / static_cast<double>(positives)});
  }
  roc.auc = static_cast<double>(twice_area / (2.0L * static_cast<long double>(positives) *
                                              static_cast<long double>(negatives)));
  return roc;
}

}  // namespace wobble
