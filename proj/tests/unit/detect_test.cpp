#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "test_oracles.hpp"
#include "wobble/detect.hpp"

using namespace wobble;
using wobble::testing::make_trigger;
using wobble::testing::planted_clean_points;
using wobble::testing::planted_trigger_oracle;
using wobble::testing::random_mlp;
using wobble::testing::uniform_matrix;

namespace {

MeasureConfig mcfg(double sigma, std::size_t n) {
  MeasureConfig c;
  c.noise.sigma = sigma;
  c.noise.n_samples = n;
  return c;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(ApplyTrigger, Examples) {
  const std::vector<double> x{0.1, 0.9, 0.4};
  EXPECT_EQ(apply_trigger(x, make_trigger("z", {0, 0, 0}, {1, 1, 1})), x);
  // Trigger tensors hold float32 values.
  EXPECT_EQ(apply_trigger(x, make_trigger("o", {1, 1, 1}, {0.3, 0.2, 0.7})),
            (std::vector<double>{0.3f, 0.2f, 0.7f}));
  const auto add = make_trigger("a", {0, 1, 0}, {0, 0.5, 0}, TriggerMode::additive);
  EXPECT_EQ(apply_trigger(x, add), (std::vector<double>{0.1, 1.0, 0.4}));
  const auto half = make_trigger("h", {0.5, 0, 0}, {1, 0, 0});
  EXPECT_DOUBLE_EQ(apply_trigger(x, half)[0], 0.55);
  EXPECT_THROW(apply_trigger(std::vector<double>{0.1, 0.2}, half), Error);
}

TEST(ApplyTrigger, OverlayIdempotentForBinaryMasks) {
  CounterRng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(20);
    std::vector<double> mask(d), pattern(d), x(d);
    for (std::size_t i = 0; i < d; ++i) {
      mask[i] = rng.below(2) ? 1.0 : 0.0;
      pattern[i] = rng.uniform();
      x[i] = rng.uniform();
    }
    const auto t = make_trigger("t", mask, pattern);
    const auto once = apply_trigger(x, t);
    EXPECT_EQ(apply_trigger(once, t), once);
  }
}

TEST(ApplyTrigger, MatrixFormAppliesRowWise) {
  const auto pts = uniform_matrix(5, 3, 2);
  const auto t = make_trigger("t", {1, 0, 0}, {0.5, 0, 0});
  const auto out = apply_trigger(pts, t);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto row = apply_trigger(pts.row(i), t);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), out.row(i).begin()));
  }
}

TEST(BackdoorTest, PlantedTriggerIsFlagged) {
  const auto p = planted_trigger_oracle(12, 3, 3, 8.0, 5);
  auto h = open_in_process(std::make_shared<MlpClassifier>(p.model));
  const auto points = planted_clean_points(25, 12, 3, 6);
  const auto r = backdoor_test(h, points, p.functional, mcfg(0.15, 500));
  EXPECT_LT(r.result(TestKind::levene)->p_value, 0.01);
  EXPECT_TRUE(r.flags_backdoor(TestKind::levene, 0.01));
  EXPECT_EQ(r.target_hit_rate, std::optional<double>(1.0));
  EXPECT_LT(mean(r.triggered.values), mean(r.clean.values));
  EXPECT_EQ(r.trigger_id, "functional");
  EXPECT_EQ(r.sigma, 0.15);
  EXPECT_EQ(r.results.size(), 3u);
}

TEST(BackdoorTest, IdentityTriggerIsDegenerate) {
  const auto p = planted_trigger_oracle(12, 3, 3, 8.0, 5);
  auto h = open_in_process(std::make_shared<MlpClassifier>(p.model));
  const auto points = planted_clean_points(25, 12, 3, 6);
  const auto r = backdoor_test(h, points, p.identity, mcfg(0.15, 200));
  EXPECT_EQ(r.clean.values, r.triggered.values);
  for (const auto& t : r.results) {
    EXPECT_EQ(t.p_value, 1.0) << t.test_name;
    EXPECT_FALSE(r.flags_backdoor(parse_test_kind(t.test_name), 0.05));
  }
}

TEST(BackdoorTest, DeterministicAcrossJobs) {
  const auto p = planted_trigger_oracle(10, 3, 2, 8.0, 7);
  auto clf = std::make_shared<MlpClassifier>(p.model);
  auto h = open_in_process(clf);
  const auto points = planted_clean_points(20, 10, 2, 8);
  const auto a = backdoor_test(h, points, p.functional, mcfg(0.2, 100));
  const auto b = backdoor_test(factory_for(clf), points, p.functional, mcfg(0.2, 100), {}, 3);
  EXPECT_EQ(a.clean.values, b.clean.values);
  EXPECT_EQ(a.triggered.values, b.triggered.values);
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(a.results[i].p_value, b.results[i].p_value);
  }
}

TEST(BackdoorTest, TriggeredLowerAtEverySigmaAboveMargin) {
  const auto p = planted_trigger_oracle(10, 3, 3, 8.0, 9);
  auto h = open_in_process(std::make_shared<MlpClassifier>(p.model));
  const auto points = planted_clean_points(25, 10, 3, 10);
  for (double sigma : {0.05, 0.1, 0.15, 0.3, 0.5}) {
    const auto r = backdoor_test(h, points, p.functional, mcfg(sigma, 200));
    EXPECT_LT(mean(r.triggered.values), mean(r.clean.values)) << sigma;
  }
}

TEST(BackdoorTest, OutlierRemovalRecorded) {
  const auto p = planted_trigger_oracle(10, 3, 3, 8.0, 9);
  auto h = open_in_process(std::make_shared<MlpClassifier>(p.model));
  DetectOptions opts;
  opts.remove_outliers = true;
  opts.tests = {TestKind::levene};
  const auto r = backdoor_test(h, planted_clean_points(25, 10, 3, 10), p.functional,
                               mcfg(0.15, 200), opts);
  ASSERT_EQ(r.results.size(), 1u);
  EXPECT_TRUE(r.results[0].outliers_removed);
  EXPECT_EQ(r.result(TestKind::ks), nullptr);
}

TEST(BackdoorTest, NeedsTwoPoints) {
  const auto p = planted_trigger_oracle(10, 3, 3, 8.0, 9);
  auto h = open_in_process(std::make_shared<MlpClassifier>(p.model));
  EXPECT_THROW(backdoor_test(h, planted_clean_points(1, 10, 3, 1), p.functional, mcfg(0.1, 10)),
               Error);
}

TEST(Compare, SelfComparison) {
  auto h = open_in_process(std::make_shared<MlpClassifier>(random_mlp(3, 6, 3, 2)));
  const auto d = measure_points(h, uniform_matrix(30, 3, 3), mcfg(0.5, 100));
  const auto r = compare_distributions(d, d);
  EXPECT_EQ(r.iqr_order, 0);
  for (const auto& t : r.results) EXPECT_EQ(t.p_value, 1.0) << t.test_name;
}

TEST(Compare, IncompatibleMetasRejected) {
  auto h = open_in_process(std::make_shared<MlpClassifier>(random_mlp(3, 6, 3, 2)));
  const auto pts = uniform_matrix(10, 3, 3);
  const auto a = measure_points(h, pts, mcfg(0.5, 50));
  const auto b = measure_points(h, pts, mcfg(0.4, 50));
  const auto c = measure_points(h, pts, mcfg(0.5, 60));
  auto vcfg = mcfg(0.5, 50);
  vcfg.kind = MeasureKind::variance;
  const auto v = measure_points(h, pts, vcfg);
  for (const auto* other : {&b, &c, &v}) {
    try {
      compare_distributions(a, *other);
      ADD_FAILURE() << "expected incompatible";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::incompatible);
    }
  }
}

TEST(Compare, PerClassSplit) {
  WobblinessDistribution d;
  d.values = {0.1, 0.2, 0.15, 0.9, 1.1, 1.0, 0.5};
  d.meta.point_count = d.values.size();
  const std::vector<std::uint32_t> labels{0, 0, 0, 1, 1, 1, 2};
  const auto out = compare_classes(d, labels, 3);
  ASSERT_EQ(out.size(), 2u);  // class 2 has a single point
  EXPECT_EQ(out[0].class_id, 0u);
  EXPECT_EQ(out[0].count, 3u);
  EXPECT_LT(out[0].report.first_box.mean, out[1].report.first_box.mean);
}

TEST(Battery, SeparatesPoisonedFromClean) {
  std::vector<BatteryNetwork> nets;
  const auto points = planted_clean_points(25, 10, 3, 30);
  std::vector<TriggerSpec> triggers;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto p = planted_trigger_oracle(10, 3, 3, s < 2 ? 8.0 : 0.0, 40 + s);
    if (triggers.empty()) triggers = {p.functional, p.decoy};
    BatteryNetwork n;
    n.id = "net" + std::to_string(s);
    n.poisoned = s < 2;
    n.implanted = {"functional"};
    n.open = factory_for(std::make_shared<MlpClassifier>(p.model));
    nets.push_back(std::move(n));
  }
  const auto r = run_battery(nets, triggers, points, mcfg(0.15, 200), {}, 2);
  ASSERT_EQ(r.cells.size(), 8u);
  EXPECT_EQ(r.failed_cells, 0u);
  EXPECT_EQ(r.cells[0].network_id, "net0");
  EXPECT_EQ(r.cells[1].trigger_id, "decoy");
  EXPECT_TRUE(r.cells[0].implanted);
  EXPECT_FALSE(r.cells[1].implanted);
  EXPECT_GE(r.roc.at("levene").auc, 0.9);

  // Shuffled ground truth carries no information.
  CounterRng rng(3);
  std::vector<double> scores;
  for (const auto& c : r.cells) scores.push_back(c.p_values.at("levene"));
  double total = 0;
  const int rounds = 400;
  for (int i = 0; i < rounds; ++i) {
    std::vector<bool> truth{true, true, false, false, false, false, false, false};
    for (std::size_t k = truth.size() - 1; k > 0; --k) {
      const std::size_t j = rng.below(k + 1);
      const bool tmp = truth[k];
      truth[k] = truth[j];
      truth[j] = tmp;
    }
    total += roc_auc(scores, truth).auc;
  }
  EXPECT_GE(total / rounds, 0.35);
  EXPECT_LE(total / rounds, 0.65);
}

TEST(Battery, UnreachableNetworkIsReportedAndExcluded) {
  const auto points = planted_clean_points(10, 10, 3, 30);
  const auto p = planted_trigger_oracle(10, 3, 3, 8.0, 1);
  const auto q = planted_trigger_oracle(10, 3, 3, 0.0, 2);
  std::vector<BatteryNetwork> nets(3);
  nets[0].id = "poisoned";
  nets[0].poisoned = true;
  nets[0].open = factory_for(std::make_shared<MlpClassifier>(p.model));
  nets[1].id = "clean";
  nets[1].open = factory_for(std::make_shared<MlpClassifier>(q.model));
  nets[2].id = "down";
  nets[2].open = []() -> OracleHandle { fail(Errc::connect_failure, "refused"); };
  const auto r = run_battery(nets, {p.functional}, points, mcfg(0.15, 100));
  EXPECT_EQ(r.failed_cells, 1u);
  EXPECT_TRUE(r.cells[2].failed);
  EXPECT_NE(r.cells[2].error.find("refused"), std::string::npos);
  EXPECT_EQ(r.roc.at("levene").auc, 1.0);
}

TEST(Battery, SingleClassTruthRejected) {
  const auto points = planted_clean_points(10, 10, 3, 30);
  const auto q = planted_trigger_oracle(10, 3, 3, 0.0, 2);
  std::vector<BatteryNetwork> nets(2);
  for (auto& n : nets) n.open = factory_for(std::make_shared<MlpClassifier>(q.model));
  nets[0].id = "a";
  nets[1].id = "b";
  EXPECT_THROW(run_battery(nets, {q.identity}, points, mcfg(0.15, 50)), Error);
  EXPECT_THROW(run_battery({nets[0]}, {q.identity}, points, mcfg(0.15, 50)), Error);
}
