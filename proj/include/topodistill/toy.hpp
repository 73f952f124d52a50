#pragma once

#include <topodistill/data_model.hpp>

#include <cstdint>
#include <string_view>

namespace topodistill {

struct ToyOptions {
  int classes = 2;
  int per_class = 40;
  int size = 16;  // square side in pixels
  double noise = 0.01;
  std::uint64_t seed = 0;
};

/// Single-channel images x = base_c + r (cos t U_c + sin t V_c) + noise with t
/// uniform on the circle: under the pixel-identity teacher each class lies
/// near a planar ring, and the rings of different classes live in different
/// planes around different centers.
LabeledDataset make_two_ring(const ToyOptions& opt);

/// Single-channel images of one Gaussian blob per class, centered on a class
/// specific point with random jitter and pixel noise.
LabeledDataset make_gaussian_blobs(const ToyOptions& opt);

LabeledDataset make_toy(std::string_view kind, const ToyOptions& opt);

}  // namespace topodistill
