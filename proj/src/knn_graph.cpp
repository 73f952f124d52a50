#include <topodistill/knn_graph.hpp>

#include <topodistill/error.hpp>
#include <topodistill/rng.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace topodistill {

PointCloud PointCloud::from_points(std::vector<FeatureVec> pts, Side side) {
  PointCloud c;
  c.sides.assign(pts.size(), side);
  c.source.resize(pts.size());
  std::iota(c.source.begin(), c.source.end(), std::size_t{0});
  c.points = std::move(pts);
  return c;
}

PointCloud PointCloud::side(Side s) const {
  PointCloud out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (sides[i] != s) continue;
    out.points.push_back(points[i]);
    out.sides.push_back(s);
    out.source.push_back(source[i]);
  }
  return out;
}

double MutualKnnGraph::max_weight() const {
  double m = 0.0;
  for (const auto& e : edges) m = std::max(m, e.weight);
  return m;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t take, Rng& rng) {
  std::vector<std::size_t> all(n), out;
  std::iota(all.begin(), all.end(), std::size_t{0});
  out.reserve(take);
  std::sample(all.begin(), all.end(), std::back_inserter(out), take, rng);
  return out;
}

}  // namespace

PointCloud subsample_balanced(const std::vector<FeatureVec>& real,
                              const std::vector<FeatureVec>& syn, int n_c, std::uint64_t seed) {
  if (n_c < 1) throw Error(ErrorCode::InvalidArgument, "n_c must be >= 1");
  if (real.empty() || syn.empty()) throw Error(ErrorCode::EmptySide, "subsample needs both sides");
  Rng rng(derive_seed(seed, {0x5ab}));
  PointCloud cloud;
  auto take = [&](const std::vector<FeatureVec>& src, Side side) {
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(n_c), src.size());
    for (std::size_t i : sample_indices(src.size(), m, rng)) {
      cloud.points.push_back(src[i]);
      cloud.sides.push_back(side);
      cloud.source.push_back(i);
    }
  };
  take(real, Side::Real);
  take(syn, Side::Synthetic);
  return cloud;
}

MutualKnnGraph build_mutual_knn(const PointCloud& cloud, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const int n = static_cast<int>(cloud.size());
  if (n < 2) throw Error(ErrorCode::DegenerateCloud, "mutual k-NN needs at least two points");
  for (const auto& p : cloud.points)
    if (p.size() != cloud.points.front().size())
      throw Error(ErrorCode::DimensionMismatch, "points of mixed dimension");

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = (cloud.points[i] - cloud.points[j]).norm();
  }

  // rank_ok(i, j): j is among the k nearest of i.
  const int kk = std::min(k, n - 1);
  std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + kk, order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;
    });
    for (int r = 0; r < kk; ++r) near[i][order[r]] = 1;
  }

  MutualKnnGraph g;
  g.vertex_count = n;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (near[u][v] && near[v][u]) g.edges.push_back({u, v, dist(u, v)});
  return g;
}

void write_graph_csv(std::ostream& os, const MutualKnnGraph& g) {
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  os << "u,v,weight\n";
  char buf[64];
  for (const auto& e : edges) {
    std::snprintf(buf, sizeof buf, "%.15g", e.weight);
    os << e.u << ',' << e.v << ',' << buf << '\n';
  }
}

}  // namespace topodistill
