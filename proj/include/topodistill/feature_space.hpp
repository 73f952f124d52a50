#pragma once

#include <topodistill/data_model.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <unordered_map>

namespace topodistill {

using FeatureVec = Eigen::VectorXd;

enum class FeatureKind { PixelIdentity, RandomProjectionTanh };

struct FeatureMapSpec {
  FeatureKind kind = FeatureKind::PixelIdentity;
  int height = 1;
  int width = 1;
  int channels = 1;
  int output_dim = 1;
  std::uint64_t seed = 0;

  int input_dim() const { return height * width * channels; }
  void validate() const;
  /// Pixel-identity spec sized for images of the given shape.
  static FeatureMapSpec pixel_identity(int h, int w, int c);

  friend bool operator==(const FeatureMapSpec&, const FeatureMapSpec&) = default;
};

/// L2 normalization; the zero vector passes through unchanged.
FeatureVec l2_normalize(const FeatureVec& v);

/// Frozen teacher. Random-projection weights are materialized once from
/// (input dims, output_dim, seed) and never change.
class FeatureMap {
 public:
  explicit FeatureMap(const FeatureMapSpec& spec);

  const FeatureMapSpec& spec() const noexcept { return spec_; }
  int output_dim() const noexcept { return spec_.output_dim; }

  FeatureVec embed(const Image& img, bool normalize = false) const;
  /// Pixel gradient of <cotangent, embed(img, normalize)>.
  Eigen::VectorXd vjp(const Image& img, const FeatureVec& cotangent, bool normalize = false) const;
  /// Same as vjp but on an unclamped pixel vector (used by gradient checks).
  FeatureVec embed_raw(std::span<const double> pixels, bool normalize = false) const;
  Eigen::VectorXd vjp_raw(std::span<const double> pixels, const FeatureVec& cotangent,
                          bool normalize = false) const;

  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

 private:
  void check_input(std::size_t n) const;

  FeatureMapSpec spec_;
  Eigen::MatrixXd weights_;  // output_dim x input_dim; empty for pixel-identity
};

FeatureVec embed(const FeatureMapSpec& spec, const Image& img, bool normalize);
Eigen::VectorXd embed_vjp(const FeatureMapSpec& spec, const Image& img,
                          const FeatureVec& cotangent, bool normalize);

/// Step-stamped cache of raw (unnormalized) features keyed by sample id. An
/// entry stamped at step s is served while current_step - s < refresh_T.
class FeatureCache {
 public:
  explicit FeatureCache(int refresh_T);

  const FeatureVec& get_or_embed(std::size_t id, const FeatureMap& map, const Image& img,
                                 long current_step);
  bool fresh(std::size_t id, long current_step) const;
  void clear() { entries_.clear(); }

  int refresh_period() const noexcept { return refresh_T_; }
  std::size_t recompute_count() const noexcept { return recomputes_; }
  std::size_t hit_count() const noexcept { return hits_; }

 private:
  struct Entry {
    FeatureVec value;
    long stamp = 0;
  };
  int refresh_T_;
  std::unordered_map<std::size_t, Entry> entries_;
  std::size_t recomputes_ = 0;
  std::size_t hits_ = 0;
};

}  // namespace topodistill
