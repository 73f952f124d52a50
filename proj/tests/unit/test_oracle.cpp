#include <topodistill/oracle.hpp>
#include <topodistill/verify.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace topodistill;

namespace {
FeatureVec v1(double x) { return FeatureVec::Constant(1, x); }
FeatureVec v2(double x, double y) { return (FeatureVec(2) << x, y).finished(); }
}  // namespace

TEST(FiniteDiff, Quadratic) {
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 1.0, 2.0).finished();
  const auto g = oracle::finite_diff([](const Eigen::VectorXd& v) { return v.squaredNorm(); }, x, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
  const auto z = oracle::finite_diff([](const Eigen::VectorXd&) { return 3.0; }, x, 1e-5);
  EXPECT_EQ(z.norm(), 0.0);
}

TEST(BruteVr, HandFixtures) {
  const auto line = oracle::brute_vr_persistence(PointCloud::from_points({v1(0), v1(1), v1(3)}), 5.0);
  auto sig = oracle::signature(line);
  ASSERT_EQ(sig.size(), 3u);
  EXPECT_EQ(sig[0], (std::array<double, 3>{0, 0, 1}));
  EXPECT_EQ(sig[1], (std::array<double, 3>{0, 0, 2}));
  EXPECT_EQ(sig[2], (std::array<double, 3>{0, 0, 5}));

  const auto sq =
      oracle::brute_vr_persistence(PointCloud::from_points({v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)}), 2.0);
  ASSERT_EQ(sq.h1.points.size(), 1u);
  EXPECT_EQ(sq.h1.points[0].birth, 1.0);
  EXPECT_NEAR(sq.h1.points[0].death, std::sqrt(2.0), 1e-15);

  const auto two = oracle::brute_vr_persistence(PointCloud::from_points({v1(0), v1(2.5)}), 4.0);
  sig = oracle::signature(two);
  ASSERT_EQ(sig.size(), 2u);
  EXPECT_EQ(sig[0][2], 2.5);
  EXPECT_EQ(sig[1][2], 4.0);
  EXPECT_TRUE(two.h1.points.empty());
}

TEST(BruteVr, RejectsLargeClouds) {
  std::vector<FeatureVec> pts;
  for (int i = 0; i < 11; ++i) pts.push_back(v1(i));
  EXPECT_ANY_THROW(oracle::brute_vr_persistence(PointCloud::from_points(pts), 1.0));
}

TEST(BruteRetrieve, IdenticalPatchesAndComplexityBoundary) {
  LabeledDataset d;
  d.class_count = 1;
  for (int i = 0; i < 4; ++i) {
    d.images.emplace_back(4, 4, 1, 0.5);
    d.labels.push_back(0);
  }
  d.images[2].set(1, 1, 0, 0.9);
  const FeatureMap map(FeatureMapSpec::pixel_identity(4, 4, 1));
  const auto pool = build_pool(d, 0, map, 1.0);
  EXPECT_EQ(oracle::brute_retrieve(pool, pool.cached_z[2], 0.0, map).index, 2u);
  // flat patches have zero complexity; index 0 wins the tie
  EXPECT_EQ(oracle::brute_retrieve(pool, pool.cached_z[2], 1.0, map).index, 0u);
}

TEST(Helpers, RelativeErrorAndGap) {
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(2), b = 2 * Eigen::VectorXd::Ones(2);
  EXPECT_NEAR(oracle::relative_error(a, b), 0.5, 1e-15);
  EXPECT_EQ(oracle::relative_error(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)), 0.0);
  EXPECT_NEAR(oracle::min_gap({3.0, 1.0, 1.5, 2.2}), 0.5, 1e-15);
  EXPECT_EQ(oracle::min_gap({3.0, 1.0, 1.5, 1.0}), 0.0);
}

TEST(VerifySuites, QuickRunPasses) {
  std::ostringstream log;
  for (const auto& r : run_verify_suites(true, log)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
