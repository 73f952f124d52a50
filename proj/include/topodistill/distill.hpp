#pragma once

#include <topodistill/data_model.hpp>
#include <topodistill/drc.hpp>
#include <topodistill/feature_space.hpp>
#include <topodistill/persistence_image.hpp>

#include <string_view>
#include <vector>

namespace topodistill {

enum class DistillMode { None, StaticAnchor, Drc, DrcPta };

std::string_view to_string(DistillMode mode);
DistillMode parse_mode(std::string_view text);

struct ClassStats {
  FeatureVec mean;
  FeatureVec var;  // population variance
};

/// Per-class coordinate-wise mean and variance of raw teacher features.
std::vector<ClassStats> precompute_real_stats(const LabeledDataset& real, const FeatureMap& map);

/// Frozen linear classifier on teacher features: logits = W f + b.
struct LinearHead {
  Eigen::MatrixXd weights;  // classes x d
  Eigen::VectorXd bias;

  Eigen::VectorXd logits(const FeatureVec& f) const { return weights * f + bias; }
  int predict(const FeatureVec& f) const;
};

/// Ridge regression onto one-hot labels with a centered bias; the normal
/// equations are averaged over samples so duplicating the data is a no-op.
LinearHead fit_frozen_head(const LabeledDataset& real, const FeatureMap& map, double ridge);

double head_accuracy(const LinearHead& head, const FeatureMap& map, const std::vector<Image>& images,
                     const std::vector<int>& labels);

struct ObjectiveTerms {
  double sup = 0.0;
  double align = 0.0;
  double topo = 0.0;
  double total = 0.0;
};

/// Everything fixed for the duration of a run.
struct DistillContext {
  RunConfig config;  // effective config (lambda_topo already forced per mode)
  DistillMode mode = DistillMode::None;
  FeatureMap map;
  LinearHead head;
  std::vector<ClassStats> stats;
  std::vector<PatchPool> pools;
  const LabeledDataset* real = nullptr;
  FeatureCache real_cache;

  DistillContext(const LabeledDataset& real_data, const RunConfig& cfg, const FeatureMapSpec& spec,
                 DistillMode m);

  /// Raw teacher features of class c's real images, served from the cache.
  std::vector<FeatureVec> real_features(int c, long step);
  TopoParams topo_params(int c, long step) const;
};

struct ObjectiveEval {
  ObjectiveTerms terms;
  std::vector<Eigen::VectorXd> pixel_grad;  // one per synthetic image
};

/// Composite objective and its exact pixel gradient. The topology term is
/// included only when `with_topo` is set and lambda_topo > 0.
ObjectiveEval evaluate_objective(const SyntheticSet& syn, DistillContext& ctx, long step, bool with_topo);

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  long t = 0;
};

/// Whether the topology term is applied at `step` under the configured cadence.
bool topo_due(const RunConfig& cfg, long step, bool block_end);

/// One Adam step on the synthetic pixels; throws NonFiniteLoss on divergence.
ObjectiveTerms step_gradient(SyntheticSet& syn, AdamState& state, DistillContext& ctx, long step,
                             bool block_end);

struct StageRecord {
  int stage = 0;
  int class_id = 0;
  double pre_distance = 0.0;   // mean intra-class pairwise feature distance before mixing
  double post_distance = 0.0;  // ... after mixing
  double anchor_spread = 0.0;  // mean pairwise feature distance among the anchors used
  double fit_gap = 0.0;        // mean squared pixel distance to the anchor, before mixing
};

/// Final per-class topology comparison between real and synthetic features.
struct ClassTopology {
  int class_id = 0;
  double eps_max = 0.0;
  double kappa = 0.0;
  double topo_loss = 0.0;
  DiagramPair real_diagrams;
  DiagramPair syn_diagrams;
  BettiPair real_betti;
  BettiPair syn_betti;
  PersistenceImage syn_pi[2];
  PersistenceImage real_pi[2];
};

struct DistillDiagnostics {
  DistillMode mode = DistillMode::None;
  long steps_executed = 0;
  std::vector<double> fit_gap_delta;      // per stage
  std::vector<double> contraction_ratio;  // per stage
  std::vector<StageRecord> stages;        // per stage and class
  std::vector<double> kappa_per_class;
  std::vector<ObjectiveTerms> step_losses;
  std::vector<ClassTopology> topology;
  double head_accuracy_syn = 0.0;  // frozen head on the synthetic set
  double probe_accuracy = 0.0;     // head refit on synthetic data, scored on real data

  double mean_kappa() const;
};

struct DistillResult {
  SyntheticSet syn;
  DistillDiagnostics diagnostics;
};

/// Mean pairwise Euclidean distance of a feature list (0 for fewer than 2).
double mean_pairwise_distance(const std::vector<FeatureVec>& f);

ClassTopology analyze_class_topology(const std::vector<FeatureVec>& syn_features,
                                     const std::vector<FeatureVec>& real_features,
                                     const RunConfig& cfg, int class_id);

/// k+1 blocks of floor(B/(k+1)) Adam steps with a residual stage after each of
/// the first k blocks.
DistillResult run_distillation(const LabeledDataset& real, const RunConfig& config,
                               const FeatureMapSpec& spec, DistillMode mode);

}  // namespace topodistill
