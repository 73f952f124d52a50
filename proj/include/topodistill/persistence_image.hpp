#pragma once

#include <topodistill/persistence.hpp>

#include <cstdint>
#include <ostream>
#include <vector>

namespace topodistill {

/// Gaussian rasterization of a diagram on the normalized birth-persistence
/// square. Cell (i, j) is stored at index i * grid_side + j and centered at
/// ((i + 0.5) / grid_side, (j + 0.5) / grid_side), i along birth.
struct PersistenceImage {
  int degree = 0;
  int grid_side = 0;
  double sigma_pi = 0.0;
  double eps_max = 0.0;
  std::vector<double> cells;

  double center(int i) const { return (i + 0.5) / grid_side; }
};

/// Linear persistence weighting w(p) = p on normalized persistence.
inline double persistence_weight(double p_hat) { return p_hat; }

PersistenceImage rasterize(const PersistenceDiagram& dgm, int grid_side, double sigma_pi,
                           double eps_max);

/// ||S0 - R0||^2 + gamma * ||S1 - R1||^2 for one class.
double topo_loss(const PersistenceImage& syn0, const PersistenceImage& syn1,
                 const PersistenceImage& real0, const PersistenceImage& real1, double gamma);

struct TopoParams {
  int k_nn = 10;
  int n_c = 64;
  int grid_side = 32;
  double sigma_pi = 0.05;
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

/// Everything computed for one class while evaluating the topology loss.
struct TopoEvaluation {
  double loss = 0.0;
  /// d loss / d syn_features[i]; zero for synthetic points not subsampled.
  std::vector<FeatureVec> grad;
  double eps_max = 0.0;
  PointCloud real_cloud;
  PointCloud syn_cloud;
  DiagramPair real_diagrams;
  DiagramPair syn_diagrams;
  PersistenceImage real_pi[2];
  PersistenceImage syn_pi[2];
};

/// Diagrams of a single-side cloud: mutual k-NN graph then flag persistence.
/// A one-point cloud yields one capped H0 bar.
DiagramPair cloud_diagrams(const PointCloud& cloud, int k, double eps_max);

/// Default filtration cutoff: longest edge of the real-side mutual k-NN graph,
/// falling back to the real cloud's diameter and then to 1.
double real_side_eps_max(const PointCloud& real_cloud, int k);

/// Subsample, build per-side graphs, compute diagrams, rasterize, and return
/// the loss with its gradient w.r.t. the synthetic features. Graph structure,
/// pairing and subsample are held fixed; real features get no gradient.
TopoEvaluation topo_loss_grad(const std::vector<FeatureVec>& syn_features,
                              const std::vector<FeatureVec>& real_features,
                              const TopoParams& params);

/// CSV `cell_index,value`.
void write_pi_csv(std::ostream& os, const PersistenceImage& pi);
/// JSON sidecar {degree, grid_side, sigma_pi, eps_max}.
void write_pi_sidecar(std::ostream& os, const PersistenceImage& pi);

}  // namespace topodistill
