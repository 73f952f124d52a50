#include <topodistill/persistence_image.hpp>

#include <topodistill/error.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace topodistill {

PersistenceImage rasterize(const PersistenceDiagram& dgm, int grid_side, double sigma_pi,
                           double eps_max) {
  if (!(sigma_pi > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_pi must be > 0");
  if (!(eps_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_max must be > 0");
  if (grid_side < 1) throw Error(ErrorCode::InvalidArgument, "grid_side must be >= 1");
  PersistenceImage pi{dgm.degree, grid_side, sigma_pi, eps_max,
                      std::vector<double>(static_cast<std::size_t>(grid_side) * grid_side, 0.0)};
  const double inv2s2 = 1.0 / (2.0 * sigma_pi * sigma_pi);
  for (const auto& p : dgm.points) {
    const double b = p.birth / eps_max;
    const double q = p.persistence() / eps_max;
    const double w = persistence_weight(q);
    if (w == 0.0) continue;
    for (int i = 0; i < grid_side; ++i) {
      const double dx = pi.center(i) - b;
      for (int j = 0; j < grid_side; ++j) {
        const double dy = pi.center(j) - q;
        pi.cells[static_cast<std::size_t>(i) * grid_side + j] += w * std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
  }
  return pi;
}

namespace {

void check_compatible(const PersistenceImage& a, const PersistenceImage& b) {
  if (a.grid_side != b.grid_side || a.eps_max != b.eps_max || a.cells.size() != b.cells.size())
    throw Error(ErrorCode::GridMismatch, "persistence images differ in grid or eps_max");
}

double squared_distance(const PersistenceImage& a, const PersistenceImage& b) {
  check_compatible(a, b);
  double s = 0.0;
  for (std::size_t m = 0; m < a.cells.size(); ++m) {
    const double d = a.cells[m] - b.cells[m];
    s += d * d;
  }
  return s;
}

// Adds scale * d|y_u - y_v| / d(y_u, y_v) into grad via the cloud's sources.
void add_edge_gradient(const PointCloud& cloud, const EdgeKey& e, double scale,
                       std::vector<FeatureVec>& grad) {
  const FeatureVec diff = cloud.points[e[0]] - cloud.points[e[1]];
  const double len = diff.norm();
  if (len == 0.0 || scale == 0.0) return;
  const FeatureVec g = diff * (scale / len);
  grad[cloud.source[e[0]]] += g;
  grad[cloud.source[e[1]]] -= g;
}

void backprop_diagram(const PersistenceDiagram& dgm, const PersistenceImage& syn,
                      const PersistenceImage& real, double weight, const PointCloud& cloud,
                      std::vector<FeatureVec>& grad) {
  const int side = syn.grid_side;
  const double eps = syn.eps_max;
  const double s2 = syn.sigma_pi * syn.sigma_pi;
  const double inv2s2 = 1.0 / (2.0 * s2);
  for (const auto& p : dgm.points) {
    const double b = p.birth / eps;
    const double q = p.persistence() / eps;
    double g_b = 0.0, g_q = 0.0;  // d loss / d(normalized birth, persistence)
    for (int i = 0; i < side; ++i) {
      const double dx = syn.center(i) - b;
      for (int j = 0; j < side; ++j) {
        const std::size_t m = static_cast<std::size_t>(i) * side + j;
        const double upstream = 2.0 * weight * (syn.cells[m] - real.cells[m]);
        if (upstream == 0.0) continue;
        const double dy = syn.center(j) - q;
        const double k = std::exp(-(dx * dx + dy * dy) * inv2s2);
        g_b += upstream * persistence_weight(q) * k * dx / s2;
        g_q += upstream * (k + persistence_weight(q) * k * dy / s2);
      }
    }
    // persistence = death - birth, both axes scaled by 1/eps.
    const double d_birth = (g_b - g_q) / eps;
    const double d_death = g_q / eps;
    if (p.birth_edge) add_edge_gradient(cloud, *p.birth_edge, d_birth, grad);
    if (p.death_edge && !p.capped) add_edge_gradient(cloud, *p.death_edge, d_death, grad);
  }
}

}  // namespace

double topo_loss(const PersistenceImage& syn0, const PersistenceImage& syn1,
                 const PersistenceImage& real0, const PersistenceImage& real1, double gamma) {
  return squared_distance(syn0, real0) + gamma * squared_distance(syn1, real1);
}

DiagramPair cloud_diagrams(const PointCloud& cloud, int k, double eps_max) {
  if (cloud.size() == 0) throw Error(ErrorCode::EmptySide, "empty cloud");
  if (cloud.size() == 1) {
    DiagramPair d;
    PersistencePoint p;
    p.death = eps_max;
    p.capped = true;
    p.birth_simplex = {0};
    d.h0.points.push_back(p);
    return d;
  }
  return compute_persistence(build_mutual_knn(cloud, k), eps_max);
}

double real_side_eps_max(const PointCloud& real_cloud, int k) {
  double eps = 0.0;
  if (real_cloud.size() >= 2) {
    eps = build_mutual_knn(real_cloud, k).max_weight();
    if (eps == 0.0)
      for (std::size_t i = 0; i < real_cloud.size(); ++i)
        for (std::size_t j = i + 1; j < real_cloud.size(); ++j)
          eps = std::max(eps, (real_cloud.points[i] - real_cloud.points[j]).norm());
  }
  return eps > 0.0 ? eps : 1.0;
}

TopoEvaluation topo_loss_grad(const std::vector<FeatureVec>& syn_features,
                              const std::vector<FeatureVec>& real_features,
                              const TopoParams& params) {
  if (syn_features.empty() || real_features.empty())
    throw Error(ErrorCode::EmptySide, "topology loss needs both sides");
  TopoEvaluation ev;
  const PointCloud cloud = subsample_balanced(real_features, syn_features, params.n_c, params.seed);
  ev.real_cloud = cloud.side(Side::Real);
  ev.syn_cloud = cloud.side(Side::Synthetic);
  ev.eps_max = real_side_eps_max(ev.real_cloud, params.k_nn);
  ev.real_diagrams = cloud_diagrams(ev.real_cloud, params.k_nn, ev.eps_max);
  ev.syn_diagrams = cloud_diagrams(ev.syn_cloud, params.k_nn, ev.eps_max);
  ev.real_pi[0] = rasterize(ev.real_diagrams.h0, params.grid_side, params.sigma_pi, ev.eps_max);
  ev.real_pi[1] = rasterize(ev.real_diagrams.h1, params.grid_side, params.sigma_pi, ev.eps_max);
  ev.syn_pi[0] = rasterize(ev.syn_diagrams.h0, params.grid_side, params.sigma_pi, ev.eps_max);
  ev.syn_pi[1] = rasterize(ev.syn_diagrams.h1, params.grid_side, params.sigma_pi, ev.eps_max);
  ev.loss = topo_loss(ev.syn_pi[0], ev.syn_pi[1], ev.real_pi[0], ev.real_pi[1], params.gamma);

  const auto dim = syn_features.front().size();
  ev.grad.assign(syn_features.size(), FeatureVec::Zero(dim));
  backprop_diagram(ev.syn_diagrams.h0, ev.syn_pi[0], ev.real_pi[0], 1.0, ev.syn_cloud, ev.grad);
  backprop_diagram(ev.syn_diagrams.h1, ev.syn_pi[1], ev.real_pi[1], params.gamma, ev.syn_cloud, ev.grad);
  return ev;
}

void write_pi_csv(std::ostream& os, const PersistenceImage& pi) {
  os << "cell_index,value\n";
  char buf[64];
  for (std::size_t m = 0; m < pi.cells.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%zu,%.15g\n", m, pi.cells[m]);
    os << buf;
  }
}

void write_pi_sidecar(std::ostream& os, const PersistenceImage& pi) {
  nlohmann::ordered_json j;
  j["degree"] = pi.degree;
  j["grid_side"] = pi.grid_side;
  j["sigma_pi"] = pi.sigma_pi;
  j["eps_max"] = pi.eps_max;
  os << j.dump(2) << '\n';
}

}  // namespace topodistill
