#include <topodistill/data_model.hpp>

#include <topodistill/error.hpp>
#include <topodistill/rng.hpp>

#include <algorithm>
#include <cmath>

namespace topodistill {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InsufficientRealImages: return "insufficient-real-images";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptySide: return "empty-side";
    case ErrorCode::DegenerateCloud: return "degenerate-cloud";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::EmptyPool: return "empty-pool";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::EmptyClass: return "empty-class";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::NonFiniteLoss: return "non-finite-loss";
    case ErrorCode::TooLarge: return "too-large";
    case ErrorCode::MalformedImage: return "malformed-image";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::InconsistentDimensions: return "inconsistent-dimensions";
    case ErrorCode::ManifestError: return "manifest-error";
    case ErrorCode::IoFailure: return "io-failure";
  }
  return "unknown";
}

double clamp_unit(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

Image::Image(int height, int width, int channels, double fill)
    : Image(height, width, channels,
            std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                    std::max(width, 0) * std::max(channels, 0),
                                fill)) {}

Image::Image(int height, int width, int channels, std::vector<double> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width * channels)
    throw Error(ErrorCode::DimensionMismatch, "pixel count does not match image shape");
  for (auto& p : pixels_) p = clamp_unit(p);
}

void Image::set(std::size_t i, double value) { pixels_.at(i) = clamp_unit(value); }

void Image::assign(std::span<const double> values) {
  if (values.size() != pixels_.size())
    throw Error(ErrorCode::DimensionMismatch, "assign: size mismatch");
  std::transform(values.begin(), values.end(), pixels_.begin(), clamp_unit);
}

void LabeledDataset::validate() const {
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no images");
  if (images.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "images and labels differ in length");
  if (class_count <= 0) throw Error(ErrorCode::InvalidArgument, "class_count must be positive");
  std::vector<int> counts(class_count, 0);
  for (int l : labels) {
    if (l < 0 || l >= class_count)
      throw Error(ErrorCode::InvalidArgument, "label out of range: " + std::to_string(l));
    ++counts[l];
  }
  for (int c = 0; c < class_count; ++c)
    if (counts[c] == 0) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no images");
  for (const auto& img : images)
    if (!img.same_shape(images.front()))
      throw Error(ErrorCode::InconsistentDimensions, "images of mixed shape in one dataset");
}

std::vector<std::size_t> LabeledDataset::indices_of_class(int c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == c) out.push_back(i);
  return out;
}

void RunConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  auto finite = [](double v) { return std::isfinite(v); };
  check(finite(alpha) && alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1]");
  check(finite(lambda_fit) && lambda_fit >= 0.0 && lambda_fit <= 1.0, "lambda_fit must lie in [0,1]");
  check(finite(lambda_topo) && lambda_topo >= 0.0, "lambda_topo must be >= 0");
  check(finite(gamma_loop) && gamma_loop > 0.0, "gamma_loop must be > 0");
  check(k_nn >= 1, "k_nn must be >= 1");
  check(pi_grid >= 1, "pi_grid must be >= 1");
  check(residual_blocks_k >= 0, "residual_blocks_k must be >= 0");
  check(budget_B >= 1 && block_steps() >= 1, "budget_B must give every block at least one step");
  check(refresh_T >= 1, "refresh_T must be >= 1");
  check(n_c >= 1, "n_c must be >= 1");
  check(finite(sigma_smooth) && sigma_smooth > 0.0, "sigma_smooth must be > 0");
  check(finite(sigma_pi) && sigma_pi > 0.0, "sigma_pi must be > 0");
  check(finite(beta_align) && beta_align >= 0.0, "beta_align must be >= 0");
  check(finite(learn_rate) && learn_rate > 0.0, "learn_rate must be > 0");
  check(finite(adam_beta1) && adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0,1)");
  check(finite(adam_beta2) && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0,1)");
  check(finite(adam_eps) && adam_eps > 0.0, "adam_eps must be > 0");
  check(finite(ridge) && ridge > 0.0, "ridge must be > 0");
  check(ipc >= 1, "ipc must be >= 1");
}

SyntheticSet new_synthetic_set(const LabeledDataset& real, int ipc, InitMode init_mode,
                               std::uint64_t seed) {
  if (ipc < 1) throw Error(ErrorCode::InvalidArgument, "ipc must be >= 1");
  real.validate();
  const Image& ref = real.images.front();
  SyntheticSet syn;
  syn.ipc = ipc;
  syn.class_count = real.class_count;
  syn.images.reserve(static_cast<std::size_t>(ipc) * real.class_count);
  Rng rng(derive_seed(seed, {0x5e7}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < real.class_count; ++c) {
    const auto members = real.indices_of_class(c);
    if (init_mode == InitMode::RealCopy && members.size() < static_cast<std::size_t>(ipc))
      throw Error(ErrorCode::InsufficientRealImages,
                  "class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " images, ipc is " + std::to_string(ipc));
    for (int j = 0; j < ipc; ++j) {
      if (init_mode == InitMode::RealCopy) {
        syn.images.push_back(real.images[members[j]]);
      } else {
        std::vector<double> px(ref.size());
        for (auto& p : px) p = unit(rng);
        syn.images.emplace_back(ref.height(), ref.width(), ref.channels(), std::move(px));
      }
      syn.labels.push_back(c);
    }
  }
  return syn;
}

}  // namespace topodistill
