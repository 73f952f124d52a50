#pragma once

#include <topodistill/knn_graph.hpp>

#include <array>
#include <optional>
#include <ostream>
#include <vector>

namespace topodistill {

using EdgeKey = std::array<int, 2>;

/// One (birth, death) pair together with the simplices that created and
/// destroyed it. Capped classes never die inside the filtration and carry
/// death = eps_max with an empty death simplex.
struct PersistencePoint {
  int degree = 0;
  double birth = 0.0;
  double death = 0.0;
  bool capped = false;
  std::vector<int> birth_simplex;
  std::vector<int> death_simplex;
  /// Edge whose length equals the birth value (degree 1 only).
  std::optional<EdgeKey> birth_edge;
  /// Edge whose length equals the death value (finite points only). For a
  /// triangle this is its maximal edge.
  std::optional<EdgeKey> death_edge;

  double persistence() const { return death - birth; }
};

struct PersistenceDiagram {
  int degree = 0;
  std::vector<PersistencePoint> points;
};

struct DiagramPair {
  PersistenceDiagram h0{0, {}};
  PersistenceDiagram h1{1, {}};
};

/// Persistence of the flag complex of `graph` (vertices at 0, edges at their
/// weight, triangles at their longest edge). Only edges with weight <= eps_max
/// participate; surviving classes are capped at eps_max. Degree-1 pairs of
/// zero persistence are not reported.
DiagramPair compute_persistence(const MutualKnnGraph& graph, double eps_max);

struct BettiCurve {
  int degree = 0;
  double eps_max = 0.0;
  std::vector<double> epsilon;
  std::vector<int> counts;
};

/// count(eps) = #{points : birth <= eps < death} on grid_size uniform samples
/// of [0, eps_max].
BettiCurve betti_curve(const PersistenceDiagram& dgm, double eps_max, int grid_size);

struct BettiPair {
  BettiCurve b0;
  BettiCurve b1;
};

BettiPair betti_curves(const DiagramPair& dgms, double eps_max, int grid_size);

/// One-sided integrated Betti discrepancy (trapezoidal rule):
/// int (B0_real - B0_syn)_+ + gamma * int (B1_real - B1_syn)_+.
double kappa(const BettiPair& real, const BettiPair& syn, double gamma);

inline constexpr int kKappaGridSize = 256;

void write_diagram_csv(std::ostream& os, const DiagramPair& dgms);
void write_betti_csv(std::ostream& os, const BettiPair& curves);

}  // namespace topodistill
