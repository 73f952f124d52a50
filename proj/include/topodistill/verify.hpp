#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace topodistill {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// compute_persistence vs brute_vr_persistence on random complete-graph
/// clouds with 3..7 points in dimensions 2 and 4.
SuiteResult verify_persistence_equivalence(int clouds, std::uint64_t seed);
/// Collinear {0,1,3} H0, unit-square H1, and the two-point cloud.
SuiteResult verify_hand_fixtures();
/// topo_loss_grad vs central differences on tie-free 8+8 point clouds.
SuiteResult verify_topo_gradient(int configs, std::uint64_t seed);
/// FeatureMap::vjp vs central differences, `cases` per feature-map kind.
SuiteResult verify_embed_vjp(int cases, std::uint64_t seed);
/// retrieve vs brute_retrieve on random pools for lambda in {0, .1, .5, 1}.
SuiteResult verify_retrieval_equivalence(int pools, std::uint64_t seed);

/// All suites; `quick` shrinks the case counts.
std::vector<SuiteResult> run_verify_suites(bool quick, std::ostream& log);

}  // namespace topodistill
