#include <topodistill/error.hpp>
#include <topodistill/knn_graph.hpp>
#include <topodistill/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

using namespace topodistill;

namespace {

FeatureVec v1(double x) { return FeatureVec::Constant(1, x); }
FeatureVec v2(double x, double y) { return (FeatureVec(2) << x, y).finished(); }

PointCloud random_cloud(Rng& rng, int n, int d) {
  std::normal_distribution<double> g;
  std::vector<FeatureVec> pts;
  for (int i = 0; i < n; ++i) {
    FeatureVec p(d);
    for (int j = 0; j < d; ++j) p[j] = g(rng);
    pts.push_back(p);
  }
  return PointCloud::from_points(std::move(pts));
}

std::set<std::pair<int, int>> edge_set(const MutualKnnGraph& g) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : g.edges) s.insert({e.u, e.v});
  return s;
}

}  // namespace

TEST(MutualKnn, LineExample) {
  const auto g = build_mutual_knn(PointCloud::from_points({v1(0), v1(1), v1(2), v1(10)}), 1);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].u, 0);
  EXPECT_EQ(g.edges[0].v, 1);
  EXPECT_EQ(g.edges[0].weight, 1.0);
}

TEST(MutualKnn, UnitSquareIsComplete) {
  const auto g = build_mutual_knn(PointCloud::from_points({v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)}), 3);
  EXPECT_EQ(g.edges.size(), 6u);
  EXPECT_NEAR(g.max_weight(), std::sqrt(2.0), 1e-15);
}

TEST(MutualKnn, FullRankIsComplete) {
  Rng rng(3);
  for (int n = 2; n < 12; ++n) {
    const auto g = build_mutual_knn(random_cloud(rng, n, 3), n - 1 + n % 3);
    EXPECT_EQ(g.edges.size(), static_cast<std::size_t>(n * (n - 1) / 2));
  }
}

TEST(MutualKnn, StructuralInvariants) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto cloud = random_cloud(rng, 30, 4);
    const auto g = build_mutual_knn(cloud, 5);
    std::set<std::pair<int, int>> seen;
    for (const auto& e : g.edges) {
      EXPECT_LT(e.u, e.v);
      EXPECT_TRUE(seen.insert({e.u, e.v}).second);
      EXPECT_NEAR(e.weight, (cloud.points[e.u] - cloud.points[e.v]).norm(), 1e-12);
    }
    EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    }));
  }
}

TEST(MutualKnn, PermutationSymmetry) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto cloud = random_cloud(rng, 25, 3);
    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FeatureVec> shuffled(25);
    for (int i = 0; i < 25; ++i) shuffled[perm[i]] = cloud.points[i];
    const auto a = edge_set(build_mutual_knn(cloud, 4));
    std::set<std::pair<int, int>> back;
    for (auto [u, v] : edge_set(build_mutual_knn(PointCloud::from_points(shuffled), 4))) {
      // invert the relabeling
      const int iu = static_cast<int>(std::find(perm.begin(), perm.end(), u) - perm.begin());
      const int iv = static_cast<int>(std::find(perm.begin(), perm.end(), v) - perm.begin());
      back.insert({std::min(iu, iv), std::max(iu, iv)});
    }
    EXPECT_EQ(a, back);
  }
}

TEST(MutualKnn, MonotoneInK) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto cloud = random_cloud(rng, 30, 5);
    auto prev = edge_set(build_mutual_knn(cloud, 1));
    for (int k = 2; k < 30; ++k) {
      const auto cur = edge_set(build_mutual_knn(cloud, k));
      EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << "k " << k;
      prev = cur;
    }
  }
}

TEST(MutualKnn, ScaleEquivariance) {
  Rng rng(7);
  for (double s : {0.01, 0.5, 3.0, 1000.0}) {
    const auto cloud = random_cloud(rng, 20, 3);
    auto scaled = cloud;
    for (auto& p : scaled.points) p *= s;
    const auto a = build_mutual_knn(cloud, 4);
    const auto b = build_mutual_knn(scaled, 4);
    ASSERT_EQ(a.edges.size(), b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
      EXPECT_EQ(a.edges[i].u, b.edges[i].u);
      EXPECT_EQ(a.edges[i].v, b.edges[i].v);
      EXPECT_NEAR(b.edges[i].weight, s * a.edges[i].weight, 1e-12 * s);
    }
  }
}

TEST(MutualKnn, Errors) {
  EXPECT_THROW(build_mutual_knn(PointCloud::from_points({v1(0)}), 1), Error);
  EXPECT_THROW(build_mutual_knn(PointCloud::from_points({v1(0), v1(1)}), 0), Error);
  EXPECT_THROW(build_mutual_knn(PointCloud::from_points({v1(0), v2(1, 1)}), 1), Error);
}

TEST(Subsample, ClampsToSideSizes) {
  Rng rng(8);
  std::vector<FeatureVec> real, syn;
  for (int i = 0; i < 100; ++i) real.push_back(v1(i));
  for (int i = 0; i < 10; ++i) syn.push_back(v1(-i));
  const auto cloud = subsample_balanced(real, syn, 64, 11);
  EXPECT_EQ(cloud.side(Side::Real).size(), 64u);
  EXPECT_EQ(cloud.side(Side::Synthetic).size(), 10u);
  const auto again = subsample_balanced(real, syn, 64, 11);
  EXPECT_EQ(cloud.source, again.source);
  const auto other = subsample_balanced(real, syn, 64, 12);
  EXPECT_NE(cloud.source, other.source);
  // relative order kept, no repeats
  const auto r = cloud.side(Side::Real).source;
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_EQ(std::set<std::size_t>(r.begin(), r.end()).size(), r.size());
}

TEST(Subsample, EmptySide) {
  try {
    subsample_balanced({}, {v1(0)}, 4, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySide);
  }
}

TEST(GraphCsv, SortedByWeight) {
  const auto g = build_mutual_knn(PointCloud::from_points({v1(0), v1(3), v1(4)}), 2);
  std::ostringstream os;
  write_graph_csv(os, g);
  EXPECT_EQ(os.str(), "u,v,weight\n1,2,1\n0,1,3\n0,2,4\n");
}
