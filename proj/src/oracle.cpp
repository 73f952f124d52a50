#include <topodistill/oracle.hpp>

#include <topodistill/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace topodistill::oracle {

namespace {

struct Simplex {
  std::vector<int> vertices;
  double value = 0.0;
};

}  // namespace

DiagramPair brute_vr_persistence(const PointCloud& points, double eps_max) {
  const int n = static_cast<int>(points.size());
  if (static_cast<std::size_t>(n) > kMaxBrutePoints)
    throw Error(ErrorCode::TooLarge, "brute-force persistence is limited to 10 points");
  if (!(eps_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_max must be > 0");
  auto dist = [&](int a, int b) { return (points.points[a] - points.points[b]).norm(); };

  std::vector<Simplex> cx;
  for (int a = 0; a < n; ++a) cx.push_back({{a}, 0.0});
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (dist(a, b) <= eps_max) cx.push_back({{a, b}, dist(a, b)});
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        const double v = std::max({dist(a, b), dist(a, c), dist(b, c)});
        if (v <= eps_max) cx.push_back({{a, b, c}, v});
      }
  std::sort(cx.begin(), cx.end(), [](const Simplex& x, const Simplex& y) {
    if (x.value != y.value) return x.value < y.value;
    if (x.vertices.size() != y.vertices.size()) return x.vertices.size() < y.vertices.size();
    return x.vertices < y.vertices;
  });
  const int total = static_cast<int>(cx.size());
  std::map<std::vector<int>, int> position;
  for (int i = 0; i < total; ++i) position[cx[i].vertices] = i;

  // Dense boundary matrix, one column per simplex.
  std::vector<std::vector<char>> col(total, std::vector<char>(total, 0));
  for (int j = 0; j < total; ++j) {
    const auto& s = cx[j].vertices;
    if (s.size() < 2) continue;
    for (std::size_t drop = 0; drop < s.size(); ++drop) {
      std::vector<int> face;
      for (std::size_t t = 0; t < s.size(); ++t)
        if (t != drop) face.push_back(s[t]);
      col[j][position.at(face)] ^= 1;
    }
  }
  auto low = [&](int j) {
    for (int r = total - 1; r >= 0; --r)
      if (col[j][r]) return r;
    return -1;
  };
  std::vector<int> low_of(total, -1);
  std::vector<int> paired_with(total, -1);
  for (int j = 0; j < total; ++j) {
    int l = low(j);
    bool changed = true;
    while (l >= 0 && changed) {
      changed = false;
      for (int k = 0; k < j; ++k) {
        if (low_of[k] == l) {
          for (int r = 0; r < total; ++r) col[j][r] ^= col[k][r];
          l = low(j);
          changed = true;
          break;
        }
      }
    }
    low_of[j] = l;
    if (l >= 0) {
      paired_with[l] = j;
      paired_with[j] = l;
    }
  }

  DiagramPair out;
  for (int i = 0; i < total; ++i) {
    const auto dim = cx[i].vertices.size() - 1;
    if (dim > 1) continue;
    PersistencePoint p;
    p.degree = static_cast<int>(dim);
    p.birth = cx[i].value;
    p.birth_simplex = cx[i].vertices;
    if (low_of[i] >= 0) continue;  // negative simplex: it kills, it does not create
    if (paired_with[i] >= 0) {
      p.death = cx[paired_with[i]].value;
      p.death_simplex = cx[paired_with[i]].vertices;
    } else {
      p.death = eps_max;
      p.capped = true;
    }
    if (dim == 0) {
      out.h0.points.push_back(p);
    } else if (p.death > p.birth) {
      out.h1.points.push_back(p);
    }
  }
  return out;
}

double direct_complexity(const Image& img, double sigma_smooth) {
  const int h = img.height(), w = img.width(), ch = img.channels();
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_smooth));
  auto mirror = [](int i, int n) {
    // Unfold repeatedly: reflect about -0.5 and n-0.5.
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  std::vector<std::vector<double>> k2(2 * radius + 1, std::vector<double>(2 * radius + 1));
  double norm = 0.0;
  for (int a = -radius; a <= radius; ++a)
    for (int b = -radius; b <= radius; ++b) {
      k2[a + radius][b + radius] = std::exp(-(a * a + b * b) / (2.0 * sigma_smooth * sigma_smooth));
      norm += k2[a + radius][b + radius];
    }
  std::vector<double> s(static_cast<std::size_t>(h) * w * ch);
  auto S = [&](int y, int x, int c) -> double& { return s[(static_cast<std::size_t>(y) * w + x) * ch + c]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int a = -radius; a <= radius; ++a)
          for (int b = -radius; b <= radius; ++b)
            acc += k2[a + radius][b + radius] * img.at(mirror(y + a, h), mirror(x + b, w), c);
        S(y, x, c) = acc / norm;
      }
  std::vector<double> mag;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = 0.0;
      for (int c = 0; c < ch; ++c) {
        double gx = 0.0, gy = 0.0;
        if (w > 1) gx = x == 0 ? S(y, 1, c) - S(y, 0, c)
                       : x == w - 1 ? S(y, w - 1, c) - S(y, w - 2, c)
                                    : 0.5 * (S(y, x + 1, c) - S(y, x - 1, c));
        if (h > 1) gy = y == 0 ? S(1, x, c) - S(0, x, c)
                       : y == h - 1 ? S(h - 1, x, c) - S(h - 2, x, c)
                                    : 0.5 * (S(y + 1, x, c) - S(y - 1, x, c));
        m += gx * gx + gy * gy;
      }
      mag.push_back(m);
    }
  double mean = 0.0;
  for (double v : mag) mean += v;
  mean /= static_cast<double>(mag.size());
  double var = 0.0;
  for (double v : mag) var += (v - mean) * (v - mean);
  return var / static_cast<double>(mag.size());
}

BruteRetrieval brute_retrieve(const PatchPool& pool, const FeatureVec& q, double lambda_fit,
                              const FeatureMap& map) {
  if (pool.patches.empty()) throw Error(ErrorCode::EmptyPool, "cannot retrieve from an empty pool");
  BruteRetrieval best;
  for (std::size_t i = 0; i < pool.patches.size(); ++i) {
    FeatureVec z = map.embed(pool.patches[i], false);
    const double n = z.norm();
    if (n > 0.0) z /= n;
    const double s = (1.0 - lambda_fit) * (q - z).squaredNorm() +
                     lambda_fit * direct_complexity(pool.patches[i], pool.sigma_smooth);
    if (i == 0 || s < best.score) best = {i, s};
  }
  return best;
}

Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be > 0");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

int count_alive(const PersistenceDiagram& dgm, double eps) {
  return static_cast<int>(std::count_if(dgm.points.begin(), dgm.points.end(), [&](const PersistencePoint& p) {
    return p.birth <= eps && eps < p.death;
  }));
}

std::vector<std::array<double, 3>> signature(const DiagramPair& d) {
  std::vector<std::array<double, 3>> out;
  for (const auto* dg : {&d.h0, &d.h1})
    for (const auto& p : dg->points) out.push_back({static_cast<double>(p.degree), p.birth, p.death});
  std::sort(out.begin(), out.end());
  return out;
}

bool same_multiset(const DiagramPair& a, const DiagramPair& b, double tol) {
  const auto sa = signature(a), sb = signature(b);
  if (sa.size() != sb.size()) return false;
  for (std::size_t i = 0; i < sa.size(); ++i)
    for (int k = 0; k < 3; ++k)
      if (std::abs(sa[i][k] - sb[i][k]) > tol) return false;
  return true;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

double min_gap(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i) gap = std::min(gap, values[i] - values[i - 1]);
  return gap;
}

}  // namespace topodistill::oracle
