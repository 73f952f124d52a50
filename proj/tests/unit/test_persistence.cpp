#include <topodistill/error.hpp>
#include <topodistill/oracle.hpp>
#include <topodistill/persistence.hpp>
#include <topodistill/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace topodistill;

namespace {

FeatureVec v1(double x) { return FeatureVec::Constant(1, x); }
FeatureVec v2(double x, double y) { return (FeatureVec(2) << x, y).finished(); }

PointCloud random_cloud(Rng& rng, int n, int d) {
  std::uniform_real_distribution<double> u;
  std::vector<FeatureVec> pts;
  for (int i = 0; i < n; ++i) {
    FeatureVec p(d);
    for (int j = 0; j < d; ++j) p[j] = u(rng);
    pts.push_back(p);
  }
  return PointCloud::from_points(std::move(pts));
}

MutualKnnGraph complete(const PointCloud& c) { return build_mutual_knn(c, static_cast<int>(c.size()) - 1); }

std::vector<double> sorted_finite_deaths(const PersistenceDiagram& d) {
  std::vector<double> out;
  for (const auto& p : d.points)
    if (!p.capped) out.push_back(p.death);
  std::sort(out.begin(), out.end());
  return out;
}

int components(const MutualKnnGraph& g, double eps) {
  std::vector<int> parent(g.vertex_count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int n = g.vertex_count;
  for (const auto& e : g.edges) {
    if (e.weight > eps) continue;
    const int a = find(e.u), b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --n;
    }
  }
  return n;
}

}  // namespace

TEST(Persistence, CollinearThreePoints) {
  const auto d = compute_persistence(complete(PointCloud::from_points({v1(0), v1(1), v1(3)})), 5.0);
  ASSERT_EQ(d.h0.points.size(), 3u);
  EXPECT_EQ(sorted_finite_deaths(d.h0), (std::vector<double>{1.0, 2.0}));
  int capped = 0;
  for (const auto& p : d.h0.points) {
    EXPECT_EQ(p.birth, 0.0);
    if (p.capped) {
      ++capped;
      EXPECT_EQ(p.death, 5.0);
    }
  }
  EXPECT_EQ(capped, 1);
  EXPECT_TRUE(d.h1.points.empty());
}

TEST(Persistence, UnitSquareLoop) {
  const auto d =
      compute_persistence(complete(PointCloud::from_points({v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)})), 2.0);
  ASSERT_EQ(d.h1.points.size(), 1u);
  const auto& p = d.h1.points[0];
  EXPECT_EQ(p.birth, 1.0);
  EXPECT_NEAR(p.death, std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(p.capped);
  ASSERT_TRUE(p.birth_edge && p.death_edge);
  EXPECT_EQ(p.death_simplex.size(), 3u);
}

TEST(Persistence, NoEdges) {
  MutualKnnGraph g;
  g.vertex_count = 4;
  const auto d = compute_persistence(g, 2.5);
  ASSERT_EQ(d.h0.points.size(), 4u);
  for (const auto& p : d.h0.points) {
    EXPECT_TRUE(p.capped);
    EXPECT_EQ(p.death, 2.5);
  }
  EXPECT_TRUE(d.h1.points.empty());
}

TEST(Persistence, RejectsBadEpsMax) {
  MutualKnnGraph g;
  g.vertex_count = 2;
  EXPECT_THROW(compute_persistence(g, 0.0), Error);
  EXPECT_THROW(compute_persistence(g, std::numeric_limits<double>::infinity()), Error);
}

TEST(Persistence, MatchesBruteForce) {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const int n = 3 + t % 5;
    const auto cloud = random_cloud(rng, n, 2 + t % 3);
    const auto g = complete(cloud);
    const double eps = g.max_weight() * (t % 2 ? 1.5 : 0.6);
    EXPECT_TRUE(oracle::same_multiset(compute_persistence(g, eps), oracle::brute_vr_persistence(cloud, eps), 1e-9))
        << "cloud " << t;
  }
}

TEST(Persistence, CriticalEdgesCarryValues) {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const auto cloud = random_cloud(rng, 15, 3);
    const auto g = build_mutual_knn(cloud, 5);
    const auto d = compute_persistence(g, g.max_weight());
    auto len = [&](const EdgeKey& e) { return (cloud.points[e[0]] - cloud.points[e[1]]).norm(); };
    for (const auto& p : d.h0.points) {
      EXPECT_EQ(p.birth, 0.0);
      EXPECT_GE(p.death, p.birth);
      if (!p.capped) EXPECT_NEAR(p.death, len(*p.death_edge), 1e-12);
    }
    for (const auto& p : d.h1.points) {
      EXPECT_GT(p.death, p.birth);
      EXPECT_NEAR(p.birth, len(*p.birth_edge), 1e-12);
      if (!p.capped) EXPECT_NEAR(p.death, len(*p.death_edge), 1e-12);
    }
  }
}

TEST(Persistence, BarCountConservation) {
  Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const auto cloud = random_cloud(rng, 20, 3);
    const auto g = build_mutual_knn(cloud, 1 + t % 6);
    const double eps = g.edges.empty() ? 1.0 : g.max_weight() * (0.3 + 0.1 * (t % 8));
    const auto d = compute_persistence(g, eps);
    EXPECT_EQ(d.h0.points.size(), 20u);
    const auto capped = std::count_if(d.h0.points.begin(), d.h0.points.end(), [](const auto& p) { return p.capped; });
    EXPECT_EQ(capped, components(g, eps));
  }
}

TEST(Persistence, StabilityUnderSmallNoise) {
  Rng rng(24);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double delta = 1e-3;
  for (int t = 0; t < 20; ++t) {
    const auto cloud = random_cloud(rng, 7, 3);
    auto noisy = cloud;
    for (auto& p : noisy.points) {
      FeatureVec dir(3);
      for (int j = 0; j < 3; ++j) dir[j] = u(rng);
      p += delta * dir / dir.norm();
    }
    const double eps = 10.0;
    const auto a = compute_persistence(complete(cloud), eps);
    const auto b = compute_persistence(complete(noisy), eps);
    const auto da = sorted_finite_deaths(a.h0), db = sorted_finite_deaths(b.h0);
    ASSERT_EQ(da.size(), db.size());
    for (std::size_t i = 0; i < da.size(); ++i) EXPECT_LE(std::abs(da[i] - db[i]), 2 * delta + 1e-12);
    if (a.h1.points.size() == b.h1.points.size()) {
      auto sa = oracle::signature(a), sb = oracle::signature(b);
      for (std::size_t i = 0; i < sa.size(); ++i)
        if (sa[i][0] == 1 && sb[i][0] == 1) {
          EXPECT_LE(std::abs(sa[i][1] - sb[i][1]), 2 * delta + 1e-12);
          EXPECT_LE(std::abs(sa[i][2] - sb[i][2]), 2 * delta + 1e-12);
        }
    }
  }
}

TEST(Persistence, PullToAnchorScalesH0Deaths) {
  Rng rng(25);
  std::uniform_real_distribution<double> u;
  for (double alpha : {0.25, 0.5, 0.75}) {
    for (int t = 0; t < 5; ++t) {
      const auto cloud = random_cloud(rng, 12, 4);
      FeatureVec anchor(4);
      for (int j = 0; j < 4; ++j) anchor[j] = u(rng);
      auto pulled = cloud;
      for (auto& p : pulled.points) p = alpha * p + (1 - alpha) * anchor;
      const auto a = compute_persistence(complete(cloud), 100.0);
      const auto b = compute_persistence(complete(pulled), 100.0);
      const auto da = sorted_finite_deaths(a.h0), db = sorted_finite_deaths(b.h0);
      ASSERT_EQ(da.size(), db.size());
      for (std::size_t i = 0; i < da.size(); ++i) EXPECT_NEAR(db[i], alpha * da[i], 1e-9);
    }
  }
}

TEST(BettiCurve, Examples) {
  PersistenceDiagram empty{0, {}};
  const auto z = betti_curve(empty, 1.0, 16);
  EXPECT_TRUE(std::all_of(z.counts.begin(), z.counts.end(), [](int c) { return c == 0; }));
  PersistenceDiagram one{0, {}};
  PersistencePoint p;
  p.death = 2.0;
  p.capped = true;
  one.points.push_back(p);
  const auto c = betti_curve(one, 2.0, 11);
  ASSERT_EQ(c.epsilon.size(), 11u);
  EXPECT_EQ(c.epsilon.front(), 0.0);
  EXPECT_EQ(c.epsilon.back(), 2.0);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c.counts[i], 1);
  EXPECT_EQ(c.counts[10], 0);
}

TEST(BettiCurve, DegreeZeroStartsAtVertexCount) {
  Rng rng(26);
  const auto cloud = random_cloud(rng, 9, 2);
  const auto g = complete(cloud);
  const auto d = compute_persistence(g, g.max_weight());
  EXPECT_EQ(betti_curve(d.h0, g.max_weight(), kKappaGridSize).counts[0], 9);
}

TEST(Kappa, Examples) {
  auto constant = [](int degree, int value) {
    BettiCurve c;
    c.degree = degree;
    c.eps_max = 1.0;
    for (int i = 0; i < 5; ++i) {
      c.epsilon.push_back(i / 4.0);
      c.counts.push_back(value);
    }
    return c;
  };
  const BettiPair real{constant(0, 2), constant(1, 0)};
  const BettiPair syn{constant(0, 1), constant(1, 0)};
  EXPECT_DOUBLE_EQ(kappa(real, syn, 1.0), 1.0);
  EXPECT_EQ(kappa(real, real, 1.0), 0.0);
  EXPECT_EQ(kappa(syn, real, 1.0), 0.0);
  const BettiPair real_loop{constant(0, 1), constant(1, 3)};
  EXPECT_DOUBLE_EQ(kappa(real_loop, syn, 0.5), 1.5);
  BettiPair other = syn;
  other.b0.epsilon[2] = 0.6;
  EXPECT_THROW(kappa(real, other, 1.0), Error);
}

TEST(Export, DiagramAndBettiCsvHeaders) {
  const auto d = compute_persistence(complete(PointCloud::from_points({v1(0), v1(1)})), 2.0);
  std::ostringstream os;
  write_diagram_csv(os, d);
  EXPECT_EQ(os.str(), "degree,birth,death,capped\n0,0,1,0\n0,0,2,1\n");
  std::ostringstream bs;
  write_betti_csv(bs, betti_curves(d, 2.0, 3));
  EXPECT_EQ(bs.str(), "epsilon,b0,b1\n0,2,0\n1,1,0\n2,0,0\n");
}
