#pragma once

#include <topodistill/feature_space.hpp>

#include <cstdint>
#include <ostream>
#include <vector>

namespace topodistill {

enum class Side { Real, Synthetic };

struct PointCloud {
  std::vector<FeatureVec> points;
  std::vector<Side> sides;
  /// Index of each point in the list it was drawn from.
  std::vector<std::size_t> source;

  std::size_t size() const noexcept { return points.size(); }
  /// Cloud of untagged points (all marked synthetic, source = position).
  static PointCloud from_points(std::vector<FeatureVec> pts, Side side = Side::Synthetic);
  /// Points of one side only, sources preserved.
  PointCloud side(Side s) const;
};

struct GraphEdge {
  int u = 0;
  int v = 0;  // u < v
  double weight = 0.0;
};

struct MutualKnnGraph {
  int vertex_count = 0;
  std::vector<GraphEdge> edges;  // sorted by (u, v)

  double max_weight() const;
};

/// Draws min(n_c, |real|) real and min(n_c, |syn|) synthetic points uniformly
/// without replacement. Selected points keep their original relative order.
PointCloud subsample_balanced(const std::vector<FeatureVec>& real,
                              const std::vector<FeatureVec>& syn, int n_c, std::uint64_t seed);

/// Exact mutual k-NN graph; neighbor ranks break distance ties by lower index.
MutualKnnGraph build_mutual_knn(const PointCloud& cloud, int k);

/// Edge list CSV `u,v,weight`, sorted by (weight, u, v).
void write_graph_csv(std::ostream& os, const MutualKnnGraph& g);

}  // namespace topodistill
