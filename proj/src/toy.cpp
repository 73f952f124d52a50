#include <topodistill/toy.hpp>

#include <topodistill/error.hpp>
#include <topodistill/rng.hpp>

#include <cmath>
#include <numbers>

namespace topodistill {

LabeledDataset make_two_ring(const ToyOptions& opt) {
  if (opt.classes < 1 || opt.per_class < 1 || opt.size < 2)
    throw Error(ErrorCode::InvalidArgument, "toy generator needs classes, per_class >= 1 and size >= 2");
  const int n = opt.size;
  const double two_pi = 2.0 * std::numbers::pi;
  constexpr double kRadius = 0.2;
  Rng rng(derive_seed(opt.seed, {0x7260}));
  std::uniform_real_distribution<double> angle(0.0, two_pi);
  std::normal_distribution<double> noise(0.0, opt.noise);
  LabeledDataset data;
  data.class_count = opt.classes;
  for (int c = 0; c < opt.classes; ++c) {
    // Even classes oscillate along x, odd classes along y, at growing frequency.
    const double fx = 1.0 + (c % 2 == 0 ? c / 2 : 0);
    const double fy = c % 2 == 0 ? 0.0 : 1.0 + c / 2;
    const double base = 0.4 + 0.2 * (opt.classes == 1 ? 0.0 : static_cast<double>(c) / (opt.classes - 1));
    for (int s = 0; s < opt.per_class; ++s) {
      const double t = angle(rng);
      std::vector<double> px(static_cast<std::size_t>(n) * n);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double phase = two_pi * (fx * x + fy * y) / n;
          const double u = std::cos(phase), v = std::sin(phase);
          px[static_cast<std::size_t>(y) * n + x] = base + kRadius * (std::cos(t) * u + std::sin(t) * v) + noise(rng);
        }
      data.images.emplace_back(n, n, 1, std::move(px));
      data.labels.push_back(c);
    }
  }
  return data;
}

LabeledDataset make_gaussian_blobs(const ToyOptions& opt) {
  if (opt.classes < 1 || opt.per_class < 1 || opt.size < 2)
    throw Error(ErrorCode::InvalidArgument, "toy generator needs classes, per_class >= 1 and size >= 2");
  const int n = opt.size;
  Rng rng(derive_seed(opt.seed, {0xb10b}));
  std::normal_distribution<double> jitter(0.0, 0.08 * n);
  std::normal_distribution<double> noise(0.0, opt.noise);
  const double width = 0.15 * n;
  LabeledDataset data;
  data.class_count = opt.classes;
  for (int c = 0; c < opt.classes; ++c) {
    const double a = 2.0 * std::numbers::pi * c / opt.classes;
    const double cx = 0.5 * (n - 1) + 0.25 * n * std::cos(a);
    const double cy = 0.5 * (n - 1) + 0.25 * n * std::sin(a);
    for (int s = 0; s < opt.per_class; ++s) {
      const double bx = cx + jitter(rng), by = cy + jitter(rng);
      std::vector<double> px(static_cast<std::size_t>(n) * n);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double r2 = (x - bx) * (x - bx) + (y - by) * (y - by);
          px[static_cast<std::size_t>(y) * n + x] = 0.1 + 0.8 * std::exp(-r2 / (2 * width * width)) + noise(rng);
        }
      data.images.emplace_back(n, n, 1, std::move(px));
      data.labels.push_back(c);
    }
  }
  return data;
}

LabeledDataset make_toy(std::string_view kind, const ToyOptions& opt) {
  if (kind == "two-ring") return make_two_ring(opt);
  if (kind == "gaussian-blobs") return make_gaussian_blobs(opt);
  throw Error(ErrorCode::InvalidArgument, "unknown toy kind '" + std::string(kind) + "'");
}

}  // namespace topodistill
