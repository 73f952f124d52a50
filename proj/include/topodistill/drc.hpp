#pragma once

#include <topodistill/data_model.hpp>
#include <topodistill/feature_space.hpp>

#include <ostream>
#include <vector>

namespace topodistill {

/// Variance over the pixel grid of the squared gradient magnitude of the
/// Gaussian-smoothed image. Separable kernel truncated at ceil(3 sigma) with
/// half-sample reflection at borders; central differences inside, one-sided
/// at borders; squared magnitudes summed over channels.
double complexity(const Image& img, double sigma_smooth);

/// Separable Gaussian blur used by complexity().
Image gaussian_smooth(const Image& img, double sigma);

/// Per-class retrieval pool: one whole-image patch per real image, with
/// normalized teacher features and complexity cached at construction.
struct PatchPool {
  int class_id = 0;
  std::vector<Image> patches;
  std::vector<std::size_t> source_ids;  // dataset index of each patch
  std::vector<FeatureVec> cached_z;
  std::vector<double> cached_c;
  double sigma_smooth = 1.0;

  std::size_t size() const noexcept { return patches.size(); }
};

PatchPool build_pool(const LabeledDataset& real, int class_id, const FeatureMap& map,
                     double sigma_smooth);

/// (1 - lambda) * ||q_syn - z||^2 + lambda * c.
double score(const PatchPool& pool, std::size_t index, const FeatureVec& q_syn, double lambda_fit);

struct Retrieval {
  std::size_t index = 0;
  double score = 0.0;
};

/// Exhaustive argmin of score(); ties go to the lowest index.
Retrieval retrieve(const PatchPool& pool, const FeatureVec& q_syn, double lambda_fit);

/// Bilinear resize with half-pixel centers and edge clamping; returns the
/// input unchanged when the shape already matches.
Image resample(const Image& patch, int target_h, int target_w);

/// alpha * x_syn + (1 - alpha) * anchor, per pixel, clamped.
Image residual_update(const Image& x_syn, const Image& anchor, double alpha);

/// Pool manifest entry list for one class: [{source_id, complexity}, ...].
void write_pool_manifest(std::ostream& os, const std::vector<PatchPool>& pools);

}  // namespace topodistill
