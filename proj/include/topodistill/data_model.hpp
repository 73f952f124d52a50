#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace topodistill {

/// H x W x C image with pixels stored row-major, channel-interleaved, as
/// doubles in [0,1]. Every write clamps; shape is fixed at construction.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  Image(int height, int width, int channels, std::vector<double> pixels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  std::span<const double> pixels() const noexcept { return pixels_; }
  double operator[](std::size_t i) const { return pixels_[i]; }
  double at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  void set(std::size_t i, double value);
  void set(int y, int x, int c, double value) { set(index(y, x, c), value); }
  /// Replaces all pixels; size must match.
  void assign(std::span<const double> values);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> pixels_;
};

double clamp_unit(double v) noexcept;

struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int class_count = 0;

  /// Throws unless the dataset invariants hold (sizes, label range, every
  /// class populated, uniform image shape).
  void validate() const;
  std::vector<std::size_t> indices_of_class(int c) const;
  std::size_t size() const noexcept { return images.size(); }
};

/// Synthetic images laid out in contiguous class blocks: class c occupies
/// [c*ipc, (c+1)*ipc).
struct SyntheticSet {
  std::vector<Image> images;
  std::vector<int> labels;
  int ipc = 0;
  int class_count = 0;

  std::pair<std::size_t, std::size_t> class_range(int c) const {
    return {static_cast<std::size_t>(c) * ipc, static_cast<std::size_t>(c + 1) * ipc};
  }
};

enum class InitMode { RealCopy, Noise };

enum class TopoCadence { EveryT, StageEnd, Both };

struct RunConfig {
  double alpha = 0.5;
  double lambda_fit = 0.1;
  double lambda_topo = 0.5;
  double gamma_loop = 1.0;
  int k_nn = 10;
  int pi_grid = 32;
  int budget_B = 300;
  int residual_blocks_k = 3;
  int refresh_T = 10;
  int n_c = 64;  // effective count per side is min(n_c, side size)
  double sigma_smooth = 1.0;
  double sigma_pi = 0.05;
  double beta_align = 1.0;
  double learn_rate = 0.25;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;
  double ridge = 1e-3;
  int ipc = 10;
  InitMode init_mode = InitMode::RealCopy;
  TopoCadence topo_cadence = TopoCadence::Both;
  std::uint64_t seed = 0;

  void validate() const;
  /// Steps per block, floor(B / (k+1)).
  int block_steps() const { return budget_B / (residual_blocks_k + 1); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

SyntheticSet new_synthetic_set(const LabeledDataset& real, int ipc, InitMode init_mode,
                               std::uint64_t seed);

}  // namespace topodistill
