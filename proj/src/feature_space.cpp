#include <topodistill/feature_space.hpp>

#include <topodistill/error.hpp>
#include <topodistill/rng.hpp>

#include <cmath>

namespace topodistill {

void FeatureMapSpec::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0 || output_dim <= 0)
    throw Error(ErrorCode::InvalidArgument, "feature map dimensions must be positive");
  if (kind == FeatureKind::PixelIdentity && output_dim != input_dim())
    throw Error(ErrorCode::DimensionMismatch, "pixel-identity requires output_dim = H*W*C");
}

FeatureMapSpec FeatureMapSpec::pixel_identity(int h, int w, int c) {
  return {FeatureKind::PixelIdentity, h, w, c, h * w * c, 0};
}

FeatureVec l2_normalize(const FeatureVec& v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  return v / n;
}

FeatureMap::FeatureMap(const FeatureMapSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == FeatureKind::RandomProjectionTanh) {
    const int in = spec_.input_dim();
    weights_.resize(spec_.output_dim, in);
    Rng rng(derive_seed(spec_.seed, {static_cast<std::uint64_t>(spec_.height),
                                     static_cast<std::uint64_t>(spec_.width),
                                     static_cast<std::uint64_t>(spec_.channels),
                                     static_cast<std::uint64_t>(spec_.output_dim)}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    // Row-major fill order keeps the draw sequence independent of Eigen's storage.
    for (int r = 0; r < spec_.output_dim; ++r)
      for (int c = 0; c < in; ++c) weights_(r, c) = normal(rng) * scale;
  }
}

void FeatureMap::check_input(std::size_t n) const {
  if (n != static_cast<std::size_t>(spec_.input_dim()))
    throw Error(ErrorCode::DimensionMismatch, "image size " + std::to_string(n) +
                                                  " does not match feature map input " +
                                                  std::to_string(spec_.input_dim()));
}

FeatureVec FeatureMap::embed_raw(std::span<const double> pixels, bool normalize) const {
  check_input(pixels.size());
  Eigen::Map<const Eigen::VectorXd> x(pixels.data(), static_cast<Eigen::Index>(pixels.size()));
  FeatureVec raw;
  if (spec_.kind == FeatureKind::PixelIdentity)
    raw = x;
  else
    raw = (weights_ * x).array().tanh().matrix();
  return normalize ? l2_normalize(raw) : raw;
}

Eigen::VectorXd FeatureMap::vjp_raw(std::span<const double> pixels, const FeatureVec& cotangent,
                                    bool normalize) const {
  check_input(pixels.size());
  if (cotangent.size() != spec_.output_dim)
    throw Error(ErrorCode::DimensionMismatch, "cotangent dimension does not match output_dim");
  Eigen::Map<const Eigen::VectorXd> x(pixels.data(), static_cast<Eigen::Index>(pixels.size()));

  FeatureVec raw;
  Eigen::VectorXd pre;
  if (spec_.kind == FeatureKind::PixelIdentity) {
    raw = x;
  } else {
    pre = weights_ * x;
    raw = pre.array().tanh().matrix();
  }

  // Pull the cotangent back through y = r / |r|: J^T g = (g - y <y,g>) / |r|.
  FeatureVec g = cotangent;
  if (normalize) {
    const double n = raw.norm();
    if (n == 0.0) {
      g.setZero();
    } else {
      const FeatureVec y = raw / n;
      g = (cotangent - y * y.dot(cotangent)) / n;
    }
  }

  if (spec_.kind == FeatureKind::PixelIdentity) return g;
  const Eigen::VectorXd dtanh = (1.0 - raw.array().square()).matrix();
  return weights_.transpose() * g.cwiseProduct(dtanh);
}

FeatureVec FeatureMap::embed(const Image& img, bool normalize) const {
  return embed_raw(img.pixels(), normalize);
}

Eigen::VectorXd FeatureMap::vjp(const Image& img, const FeatureVec& cotangent, bool normalize) const {
  return vjp_raw(img.pixels(), cotangent, normalize);
}

FeatureVec embed(const FeatureMapSpec& spec, const Image& img, bool normalize) {
  return FeatureMap(spec).embed(img, normalize);
}

Eigen::VectorXd embed_vjp(const FeatureMapSpec& spec, const Image& img,
                          const FeatureVec& cotangent, bool normalize) {
  return FeatureMap(spec).vjp(img, cotangent, normalize);
}

FeatureCache::FeatureCache(int refresh_T) : refresh_T_(refresh_T) {
  if (refresh_T < 1) throw Error(ErrorCode::InvalidArgument, "refresh_T must be >= 1");
}

bool FeatureCache::fresh(std::size_t id, long current_step) const {
  auto it = entries_.find(id);
  return it != entries_.end() && current_step - it->second.stamp < refresh_T_;
}

const FeatureVec& FeatureCache::get_or_embed(std::size_t id, const FeatureMap& map,
                                             const Image& img, long current_step) {
  auto it = entries_.find(id);
  if (it != entries_.end() && current_step - it->second.stamp < refresh_T_) {
    ++hits_;
    return it->second.value;
  }
  ++recomputes_;
  Entry& e = entries_[id];
  e.value = map.embed(img, false);
  e.stamp = current_step;
  return e.value;
}

}  // namespace topodistill
