#pragma once

#include <topodistill/drc.hpp>
#include <topodistill/feature_space.hpp>
#include <topodistill/knn_graph.hpp>
#include <topodistill/persistence.hpp>

#include <functional>
#include <ostream>
#include <vector>

/// Reference implementations that share no code with the paths they check.
namespace topodistill::oracle {

inline constexpr std::size_t kMaxBrutePoints = 10;

/// Full Vietoris-Rips persistence of the complete graph on `points` (n <= 10):
/// every vertex, edge and triangle enters one dense GF(2) boundary matrix that
/// is reduced column by column. Same reporting conventions as
/// compute_persistence (capped survivors, degree-1 zero-length pairs dropped).
DiagramPair brute_vr_persistence(const PointCloud& points, double eps_max);

/// Direct 2-D (non-separable) evaluation of the complexity proxy.
double direct_complexity(const Image& img, double sigma_smooth);

/// Argmin of the fit-complexity score recomputed from the raw patches,
/// ignoring every cached value in the pool.
struct BruteRetrieval {
  std::size_t index = 0;
  double score = 0.0;
};
BruteRetrieval brute_retrieve(const PatchPool& pool, const FeatureVec& q, double lambda_fit,
                              const FeatureMap& map);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step);

/// Number of diagram points alive at eps (birth <= eps < death).
int count_alive(const PersistenceDiagram& dgm, double eps);

/// Sorted (degree, birth, death) triples for multiset comparison.
std::vector<std::array<double, 3>> signature(const DiagramPair& d);
bool same_multiset(const DiagramPair& a, const DiagramPair& b, double tol);

/// ||a - b|| / max(||b||, floor).
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8);

/// Smallest gap between neighbours of the sorted values; 0 on any repeat.
double min_gap(std::vector<double> values);

}  // namespace topodistill::oracle
