#include <topodistill/persistence.hpp>

#include <topodistill/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace topodistill {

namespace {

struct DisjointSet {
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  std::vector<int> parent;
};

// Symmetric difference of two ascending index lists.
void add_column(std::vector<int>& target, const std::vector<int>& source) {
  std::vector<int> out;
  out.reserve(target.size() + source.size());
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(out));
  target.swap(out);
}

}  // namespace

DiagramPair compute_persistence(const MutualKnnGraph& graph, double eps_max) {
  if (!(eps_max > 0.0) || !std::isfinite(eps_max))
    throw Error(ErrorCode::InvalidArgument, "eps_max must be positive and finite");
  const int n = graph.vertex_count;

  // Edge filtration order: (weight, u, v).
  std::vector<GraphEdge> edges;
  for (const auto& e : graph.edges) {
    if (!std::isfinite(e.weight)) throw Error(ErrorCode::InvalidArgument, "non-finite edge weight");
    if (e.weight <= eps_max) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  const int m = static_cast<int>(edges.size());

  DiagramPair out;

  // H0 by union-find. Roots are the minimum vertex of their component, so the
  // elder rule (all births are 0) keeps the lower root alive.
  DisjointSet ds(n);
  std::vector<char> positive(m, 0);
  for (int i = 0; i < m; ++i) {
    const auto& e = edges[i];
    int ru = ds.find(e.u), rv = ds.find(e.v);
    if (ru == rv) {
      positive[i] = 1;
      continue;
    }
    const int keep = std::min(ru, rv), die = std::max(ru, rv);
    PersistencePoint p;
    p.degree = 0;
    p.birth = 0.0;
    p.death = e.weight;
    p.birth_simplex = {die};
    p.death_simplex = {e.u, e.v};
    p.death_edge = EdgeKey{e.u, e.v};
    out.h0.points.push_back(std::move(p));
    ds.parent[die] = keep;
  }
  for (int v = 0; v < n; ++v) {
    if (ds.find(v) != v) continue;
    PersistencePoint p;
    p.degree = 0;
    p.death = eps_max;
    p.capped = true;
    p.birth_simplex = {v};
    out.h0.points.push_back(std::move(p));
  }

  // Triangles of the flag complex, restricted to participating edges.
  std::vector<std::vector<int>> edge_id(n, std::vector<int>(n, -1));
  for (int i = 0; i < m; ++i) edge_id[edges[i].u][edges[i].v] = edge_id[edges[i].v][edges[i].u] = i;
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  struct Triangle {
    std::array<int, 3> vertices;
    std::vector<int> boundary;  // ascending edge filtration indices
    double value;
  };
  std::vector<Triangle> triangles;
  for (int u = 0; u < n; ++u) {
    for (int v : adj[u]) {
      if (v <= u) continue;
      for (int w : adj[v]) {
        if (w <= v || edge_id[u][w] < 0) continue;
        std::vector<int> b = {edge_id[u][v], edge_id[u][w], edge_id[v][w]};
        std::sort(b.begin(), b.end());
        const double value = edges[b.back()].weight;
        triangles.push_back({{u, v, w}, std::move(b), value});
      }
    }
  }
  std::sort(triangles.begin(), triangles.end(), [](const Triangle& a, const Triangle& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.vertices < b.vertices;
  });

  // H1 by column reduction of the edge-triangle boundary matrix over GF(2).
  std::vector<int> pivot_owner(m, -1);
  std::vector<std::vector<int>> columns(triangles.size());
  std::vector<char> paired(m, 0);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    auto& col = columns[t];
    col = triangles[t].boundary;
    while (!col.empty() && pivot_owner[col.back()] >= 0) add_column(col, columns[pivot_owner[col.back()]]);
    if (col.empty()) continue;
    const int low = col.back();
    pivot_owner[low] = static_cast<int>(t);
    paired[low] = 1;
    const auto& birth = edges[low];
    const auto& tri = triangles[t];
    if (tri.value == birth.weight) continue;
    const auto& top = edges[tri.boundary.back()];
    PersistencePoint p;
    p.degree = 1;
    p.birth = birth.weight;
    p.death = tri.value;
    p.birth_simplex = {birth.u, birth.v};
    p.death_simplex = {tri.vertices[0], tri.vertices[1], tri.vertices[2]};
    p.birth_edge = EdgeKey{birth.u, birth.v};
    p.death_edge = EdgeKey{top.u, top.v};
    out.h1.points.push_back(std::move(p));
  }
  for (int i = 0; i < m; ++i) {
    if (!positive[i] || paired[i]) continue;
    PersistencePoint p;
    p.degree = 1;
    p.birth = edges[i].weight;
    p.death = eps_max;
    p.capped = true;
    p.birth_simplex = {edges[i].u, edges[i].v};
    p.birth_edge = EdgeKey{edges[i].u, edges[i].v};
    if (p.death > p.birth) out.h1.points.push_back(std::move(p));
  }
  return out;
}

BettiCurve betti_curve(const PersistenceDiagram& dgm, double eps_max, int grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be >= 2");
  if (!(eps_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_max must be positive");
  BettiCurve curve;
  curve.degree = dgm.degree;
  curve.eps_max = eps_max;
  curve.epsilon.resize(grid_size);
  curve.counts.assign(grid_size, 0);
  for (int i = 0; i < grid_size; ++i) {
    const double eps = eps_max * i / (grid_size - 1);
    curve.epsilon[i] = eps;
    int count = 0;
    for (const auto& p : dgm.points)
      if (p.birth <= eps && eps < p.death) ++count;
    curve.counts[i] = count;
  }
  return curve;
}

BettiPair betti_curves(const DiagramPair& dgms, double eps_max, int grid_size) {
  return {betti_curve(dgms.h0, eps_max, grid_size), betti_curve(dgms.h1, eps_max, grid_size)};
}

namespace {

double positive_part_integral(const BettiCurve& real, const BettiCurve& syn) {
  if (real.epsilon != syn.epsilon || real.eps_max != syn.eps_max)
    throw Error(ErrorCode::GridMismatch, "Betti curves sampled on different grids");
  double total = 0.0;
  for (std::size_t i = 1; i < real.epsilon.size(); ++i) {
    const double h = real.epsilon[i] - real.epsilon[i - 1];
    const double a = std::max(real.counts[i - 1] - syn.counts[i - 1], 0);
    const double b = std::max(real.counts[i] - syn.counts[i], 0);
    total += 0.5 * h * (a + b);
  }
  return total;
}

}  // namespace

double kappa(const BettiPair& real, const BettiPair& syn, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be > 0");
  return positive_part_integral(real.b0, syn.b0) + gamma * positive_part_integral(real.b1, syn.b1);
}

void write_diagram_csv(std::ostream& os, const DiagramPair& dgms) {
  os << "degree,birth,death,capped\n";
  char buf[128];
  for (const auto* d : {&dgms.h0, &dgms.h1}) {
    for (const auto& p : d->points) {
      std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g,%d\n", p.degree, p.birth, p.death,
                    p.capped ? 1 : 0);
      os << buf;
    }
  }
}

void write_betti_csv(std::ostream& os, const BettiPair& curves) {
  os << "epsilon,b0,b1\n";
  char buf[96];
  for (std::size_t i = 0; i < curves.b0.epsilon.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.15g,%d,%d\n", curves.b0.epsilon[i], curves.b0.counts[i],
                  curves.b1.counts[i]);
    os << buf;
  }
}

}  // namespace topodistill
