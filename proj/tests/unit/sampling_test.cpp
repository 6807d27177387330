#include <gtest/gtest.h>

#include <cmath>

#include "wobble/sampling.hpp"

using namespace wobble;

namespace {

NoiseConfig config(double sigma, std::size_t n, std::uint64_t seed = kDefaultSeed) {
  NoiseConfig c;
  c.sigma = sigma;
  c.n_samples = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Cloud, ShapeAndCenter) {
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto cloud = sample_cloud(x, config(0.1, 17), 0);
  EXPECT_EQ(cloud.center, x);
  EXPECT_EQ(cloud.points.rows(), 17u);
  EXPECT_EQ(cloud.points.cols(), 3u);
}

TEST(Cloud, ZeroSigmaCopiesCenter) {
  const std::vector<double> x{0.1, -0.2, 5.0};
  const auto cloud = sample_cloud(x, config(0.0, 10), 3);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(cloud.points(i, c), x[c]);
  }
}

TEST(Cloud, PerCoordinateMomentsMatchSigma) {
  const std::vector<double> x{0.5, -1.0, 2.0, 0.0, 0.25};
  const double sigma = 0.3;
  const std::size_t n = 40000;
  const auto cloud = sample_cloud(x, config(sigma, n), 11);
  for (std::size_t c = 0; c < x.size(); ++c) {
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = cloud.points(i, c) - x[c];
      s += d;
      s2 += d * d;
    }
    // 5 standard errors.
    EXPECT_NEAR(s / n, 0.0, 5 * sigma / std::sqrt(double(n))) << c;
    EXPECT_NEAR(std::sqrt(s2 / n), sigma, 5 * sigma / std::sqrt(2.0 * n)) << c;
  }
}

TEST(Cloud, CoordinatesUncorrelated) {
  const std::vector<double> x(4, 0.0);
  const std::size_t n = 40000;
  const auto cloud = sample_cloud(x, config(1.0, n), 0);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += cloud.points(i, a) * cloud.points(i, b);
      EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(double(n))) << a << "," << b;
    }
  }
}

TEST(Cloud, DeterministicAndOrderFree) {
  const std::vector<double> x{0.3, 0.7, 0.1};
  const auto cfg = config(0.15, 50);
  const auto a5 = sample_cloud(x, cfg, 5);
  const auto a9 = sample_cloud(x, cfg, 9);
  EXPECT_EQ(sample_cloud(x, cfg, 9).points, a9.points);
  EXPECT_EQ(sample_cloud(x, cfg, 5).points, a5.points);
  EXPECT_NE(a5.points, a9.points);
}

TEST(Cloud, SeedChangesCloud) {
  const std::vector<double> x{0.3, 0.7};
  EXPECT_NE(sample_cloud(x, config(0.1, 8, 1), 0).points,
            sample_cloud(x, config(0.1, 8, 2), 0).points);
}

TEST(Cloud, PrefixOfSamplesIsStable) {
  // Sample i depends only on i, so growing n extends the cloud.
  const std::vector<double> x{0.3, 0.7, 0.9};
  const auto small = sample_cloud(x, config(0.2, 10), 4);
  const auto large = sample_cloud(x, config(0.2, 30), 4);
  EXPECT_EQ(large.points.slice_rows(0, 10), small.points);
}

TEST(Cloud, SameNoiseForDifferentCenters) {
  // Paired sampling: the offset x' - x depends on (seed, point, sample) only.
  const std::vector<double> x{0.25, 0.5, 0.75};
  const std::vector<double> y{1.0, -2.0, 0.0};
  const auto cfg = config(0.1, 20);
  const auto cx = sample_cloud(x, cfg, 2);
  const auto cy = sample_cloud(y, cfg, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      // Equal up to the rounding of x + e.
      EXPECT_NEAR(cx.points(i, c) - x[c], cy.points(i, c) - y[c], 1e-15);
    }
  }
}

TEST(Cloud, UnitClipClamps) {
  const std::vector<double> x{0.0, 1.0, 0.5};
  auto cfg = config(0.5, 500);
  cfg.clip = Clip::unit_interval;
  const auto cloud = sample_cloud(x, cfg, 0);
  bool saw_zero = false, saw_one = false;
  for (double v : cloud.points.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    saw_zero |= v == 0.0;
    saw_one |= v == 1.0;
  }
  EXPECT_TRUE(saw_zero);
  EXPECT_TRUE(saw_one);
}

TEST(Cloud, RejectsBadConfig) {
  const std::vector<double> x{0.0};
  EXPECT_THROW(sample_cloud(x, config(-0.1, 5), 0), Error);
  EXPECT_THROW(sample_cloud(x, config(std::nan(""), 5), 0), Error);
  EXPECT_THROW(sample_cloud(x, config(0.1, 0), 0), Error);
  const std::vector<double> bad{std::nan("")};
  EXPECT_THROW(sample_cloud(bad, config(0.1, 5), 0), Error);
}

TEST(Clip, Parse) {
  EXPECT_EQ(parse_clip("none"), Clip::none);
  EXPECT_EQ(parse_clip("unit"), Clip::unit_interval);
  EXPECT_EQ(parse_clip("unit_interval"), Clip::unit_interval);
  EXPECT_THROW(parse_clip("tanh"), Error);
}
