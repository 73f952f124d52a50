#include <topodistill/drc.hpp>

#include <topodistill/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace topodistill {

namespace {

// Half-sample symmetric reflection into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

Image gaussian_smooth(const Image& img, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_smooth must be > 0");
  const int h = img.height(), w = img.width(), ch = img.channels();
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int t = -radius; t <= radius; ++t) s += kernel[t + radius] * img.at(y, reflect(x + t, w), c);
        tmp[img.index(y, x, c)] = s;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int t = -radius; t <= radius; ++t) s += kernel[t + radius] * tmp[img.index(reflect(y + t, h), x, c)];
        out[img.index(y, x, c)] = s;
      }
  return Image(h, w, ch, std::move(out));
}

double complexity(const Image& img, double sigma_smooth) {
  const Image s = gaussian_smooth(img, sigma_smooth);
  const int h = s.height(), w = s.width(), ch = s.channels();
  auto diff = [](double lo, double hi, int span) { return span == 0 ? 0.0 : (hi - lo) / span; };
  std::vector<double> mag(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, w - 1);
      double m = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double gx = diff(s.at(y, x0, c), s.at(y, x1, c), x1 - x0);
        const double gy = diff(s.at(y0, x, c), s.at(y1, x, c), y1 - y0);
        m += gx * gx + gy * gy;
      }
      mag[static_cast<std::size_t>(y) * w + x] = m;
    }
  }
  double mean = 0.0;
  for (double v : mag) mean += v;
  mean /= static_cast<double>(mag.size());
  double var = 0.0;
  for (double v : mag) var += (v - mean) * (v - mean);
  return var / static_cast<double>(mag.size());
}

PatchPool build_pool(const LabeledDataset& real, int class_id, const FeatureMap& map,
                     double sigma_smooth) {
  PatchPool pool;
  pool.class_id = class_id;
  pool.sigma_smooth = sigma_smooth;
  for (std::size_t i : real.indices_of_class(class_id)) {
    const Image& img = real.images[i];
    pool.patches.push_back(img);
    pool.source_ids.push_back(i);
    pool.cached_z.push_back(map.embed(img, true));
    pool.cached_c.push_back(complexity(img, sigma_smooth));
  }
  if (pool.patches.empty())
    throw Error(ErrorCode::EmptyPool, "class " + std::to_string(class_id) + " has no real images");
  return pool;
}

double score(const PatchPool& pool, std::size_t index, const FeatureVec& q_syn, double lambda_fit) {
  if (index >= pool.size()) throw Error(ErrorCode::IndexOutOfRange, "pool index out of range");
  if (!(lambda_fit >= 0.0 && lambda_fit <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "lambda_fit must lie in [0,1]");
  const double fit = (q_syn - pool.cached_z[index]).squaredNorm();
  return (1.0 - lambda_fit) * fit + lambda_fit * pool.cached_c[index];
}

Retrieval retrieve(const PatchPool& pool, const FeatureVec& q_syn, double lambda_fit) {
  if (pool.size() == 0) throw Error(ErrorCode::EmptyPool, "cannot retrieve from an empty pool");
  Retrieval best{0, score(pool, 0, q_syn, lambda_fit)};
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double s = score(pool, i, q_syn, lambda_fit);
    if (s < best.score) best = {i, s};
  }
  return best;
}

Image resample(const Image& patch, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) throw Error(ErrorCode::InvalidArgument, "resample target must be >= 1");
  if (patch.height() == target_h && patch.width() == target_w) return patch;
  const int h = patch.height(), w = patch.width(), ch = patch.channels();
  std::vector<double> out(static_cast<std::size_t>(target_h) * target_w * ch);
  const double sy = static_cast<double>(h) / target_h, sx = static_cast<double>(w) / target_w;
  for (int y = 0; y < target_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        const double top = (1 - tx) * patch.at(y0, x0, c) + tx * patch.at(y0, x1, c);
        const double bot = (1 - tx) * patch.at(y1, x0, c) + tx * patch.at(y1, x1, c);
        out[(static_cast<std::size_t>(y) * target_w + x) * ch + c] = (1 - ty) * top + ty * bot;
      }
    }
  }
  return Image(target_h, target_w, ch, std::move(out));
}

Image residual_update(const Image& x_syn, const Image& anchor, double alpha) {
  if (!x_syn.same_shape(anchor))
    throw Error(ErrorCode::DimensionMismatch, "residual update needs matching shapes");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0,1]");
  std::vector<double> out(x_syn.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * x_syn[i] + (1.0 - alpha) * anchor[i];
  return Image(x_syn.height(), x_syn.width(), x_syn.channels(), std::move(out));
}

void write_pool_manifest(std::ostream& os, const std::vector<PatchPool>& pools) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& pool : pools) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < pool.size(); ++i)
      entries.push_back({{"source_id", pool.source_ids[i]}, {"complexity", pool.cached_c[i]}});
    j.push_back({{"class", pool.class_id}, {"sigma_smooth", pool.sigma_smooth}, {"patches", entries}});
  }
  os << j.dump(2) << '\n';
}

}  // namespace topodistill
