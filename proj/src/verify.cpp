#include <topodistill/verify.hpp>

#include <topodistill/drc.hpp>
#include <topodistill/oracle.hpp>
#include <topodistill/persistence_image.hpp>
#include <topodistill/rng.hpp>

#include <cmath>
#include <sstream>

namespace topodistill {

namespace {

FeatureVec random_point(Rng& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  FeatureVec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return v;
}

Image random_image(Rng& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> px(static_cast<std::size_t>(h) * w * c);
  for (auto& p : px) p = u(rng);
  return Image(h, w, c, std::move(px));
}

std::vector<double> pairwise(const std::vector<FeatureVec>& pts) {
  std::vector<double> d;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d.push_back((pts[i] - pts[j]).norm());
  return d;
}

SuiteResult finish(std::string name, int failures, int total, const std::string& extra = {}) {
  std::ostringstream os;
  os << (total - failures) << "/" << total << " cases agree";
  if (!extra.empty()) os << "; " << extra;
  return {std::move(name), failures == 0, os.str()};
}

}  // namespace

SuiteResult verify_persistence_equivalence(int clouds, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {1}));
  std::uniform_int_distribution<int> size(3, 7);
  int failures = 0;
  for (int t = 0; t < clouds; ++t) {
    const int n = size(rng);
    const int dim = t % 2 == 0 ? 2 : 4;
    std::vector<FeatureVec> pts;
    for (int i = 0; i < n; ++i) pts.push_back(random_point(rng, dim, 0.0, 1.0));
    const auto cloud = PointCloud::from_points(pts);
    const auto graph = build_mutual_knn(cloud, n - 1);
    // Alternate between a cutoff past the diameter and one that truncates.
    const double diameter = graph.max_weight();
    const double eps = t % 4 < 2 ? 1.5 * diameter : 0.6 * diameter;
    if (!oracle::same_multiset(compute_persistence(graph, eps), oracle::brute_vr_persistence(cloud, eps), 1e-9))
      ++failures;
  }
  return finish("persistence-oracle-equivalence", failures, clouds);
}

SuiteResult verify_hand_fixtures() {
  int failures = 0;
  auto pts1d = [](std::initializer_list<double> xs) {
    std::vector<FeatureVec> v;
    for (double x : xs) v.push_back((FeatureVec(1) << x).finished());
    return PointCloud::from_points(v);
  };
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };

  // Collinear {0, 1, 3}: H0 deaths 1, 2 and one bar capped at eps_max.
  {
    const auto cloud = pts1d({0.0, 1.0, 3.0});
    for (const auto& d : {compute_persistence(build_mutual_knn(cloud, 2), 5.0),
                          oracle::brute_vr_persistence(cloud, 5.0)}) {
      const auto sig = oracle::signature(d);
      const bool ok = sig.size() == 3 && close(sig[0][2], 1.0) && close(sig[1][2], 2.0) &&
                      close(sig[2][2], 5.0) && d.h1.points.empty();
      if (!ok) ++failures;
    }
  }
  // Unit square: one loop born at 1, filled at sqrt(2).
  {
    std::vector<FeatureVec> sq = {FeatureVec::Zero(2), (FeatureVec(2) << 1, 0).finished(),
                                  (FeatureVec(2) << 0, 1).finished(), (FeatureVec(2) << 1, 1).finished()};
    const auto cloud = PointCloud::from_points(sq);
    for (const auto& d : {compute_persistence(build_mutual_knn(cloud, 3), 2.0),
                          oracle::brute_vr_persistence(cloud, 2.0)}) {
      const bool ok = d.h1.points.size() == 1 && close(d.h1.points[0].birth, 1.0) &&
                      close(d.h1.points[0].death, std::sqrt(2.0));
      if (!ok) ++failures;
    }
  }
  // Two points: one finite merge, one capped survivor, no loops.
  {
    const auto cloud = pts1d({0.0, 0.7});
    for (const auto& d : {compute_persistence(build_mutual_knn(cloud, 1), 2.0),
                          oracle::brute_vr_persistence(cloud, 2.0)}) {
      const auto sig = oracle::signature(d);
      const bool ok = sig.size() == 2 && close(sig[0][2], 0.7) && close(sig[1][2], 2.0) && d.h1.points.empty();
      if (!ok) ++failures;
    }
  }
  return finish("hand-derived-fixtures", failures, 6);
}

SuiteResult verify_topo_gradient(int configs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {2}));
  constexpr int kPoints = 8, kDim = 4;
  const TopoParams params{10, 64, 32, 0.05, 1.0, seed};
  int failures = 0, redraws = 0;
  double worst = 0.0;
  for (int t = 0; t < configs;) {
    std::vector<FeatureVec> real, syn;
    for (int i = 0; i < kPoints; ++i) real.push_back(random_point(rng, kDim, 0.0, 1.0));
    for (int i = 0; i < kPoints; ++i) syn.push_back(random_point(rng, kDim, 0.1, 0.8));

    // Reject configurations whose synthetic filtration values nearly tie with
    // each other or with the cutoff.
    auto values = pairwise(syn);
    const double eps = real_side_eps_max(PointCloud::from_points(real, Side::Real), params.k_nn);
    values.push_back(eps);
    if (oracle::min_gap(values) < 1e-6) {
      ++redraws;
      continue;
    }
    ++t;

    const auto ev = topo_loss_grad(syn, real, params);
    Eigen::VectorXd x(kPoints * kDim), analytic(kPoints * kDim);
    for (int i = 0; i < kPoints; ++i) {
      x.segment(i * kDim, kDim) = syn[i];
      analytic.segment(i * kDim, kDim) = ev.grad[i];
    }
    auto f = [&](const Eigen::VectorXd& v) {
      std::vector<FeatureVec> s(kPoints);
      for (int i = 0; i < kPoints; ++i) s[i] = v.segment(i * kDim, kDim);
      return topo_loss_grad(s, real, params).loss;
    };
    const double err = oracle::relative_error(analytic, oracle::finite_diff(f, x, 1e-5));
    worst = std::max(worst, err);
    if (!(err < 1e-4)) ++failures;
  }
  std::ostringstream extra;
  extra << "worst relative error " << worst << ", " << redraws << " redraws";
  return finish("topology-gradient", failures, configs, extra.str());
}

SuiteResult verify_embed_vjp(int cases, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {3}));
  std::normal_distribution<double> normal(0.0, 1.0);
  int failures = 0;
  double worst = 0.0;
  for (auto kind : {FeatureKind::PixelIdentity, FeatureKind::RandomProjectionTanh}) {
    for (int t = 0; t < cases; ++t) {
      FeatureMapSpec spec{kind, 4, 4, 2, kind == FeatureKind::PixelIdentity ? 32 : 16,
                          static_cast<std::uint64_t>(t)};
      const FeatureMap map(spec);
      const Image img = random_image(rng, 4, 4, 2, 0.05, 0.95);
      FeatureVec cot(spec.output_dim);
      for (auto i = 0; i < cot.size(); ++i) cot[i] = normal(rng);
      const bool normalize = t % 2 == 1;
      const Eigen::VectorXd analytic = map.vjp(img, cot, normalize);
      auto px = img.pixels();
      const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(px.data(), static_cast<Eigen::Index>(px.size()));
      auto f = [&](const Eigen::VectorXd& v) {
        return cot.dot(map.embed_raw(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), normalize));
      };
      const double err = oracle::relative_error(analytic, oracle::finite_diff(f, x, 1e-5));
      worst = std::max(worst, err);
      if (!(err < 1e-4)) ++failures;
    }
  }
  std::ostringstream extra;
  extra << "worst relative error " << worst;
  return finish("teacher-gradient", failures, 2 * cases, extra.str());
}

SuiteResult verify_retrieval_equivalence(int pools, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {4}));
  std::uniform_int_distribution<int> pool_size(1, 256);
  const FeatureMap map(FeatureMapSpec{FeatureKind::RandomProjectionTanh, 6, 6, 1, 8, seed});
  int failures = 0, checks = 0;
  for (int t = 0; t < pools; ++t) {
    LabeledDataset data;
    data.class_count = 1;
    const int n = pool_size(rng);
    for (int i = 0; i < n; ++i) {
      // Occasionally repeat an earlier patch to exercise the tie-break.
      if (i > 0 && i % 17 == 0)
        data.images.push_back(data.images[i / 2]);
      else
        data.images.push_back(random_image(rng, 6, 6, 1));
      data.labels.push_back(0);
    }
    const PatchPool pool = build_pool(data, 0, map, 1.0);
    const FeatureVec q = map.embed(random_image(rng, 6, 6, 1), true);
    for (double lambda : {0.0, 0.1, 0.5, 1.0}) {
      ++checks;
      const auto fast = retrieve(pool, q, lambda);
      const auto slow = oracle::brute_retrieve(pool, q, lambda, map);
      if (fast.index != slow.index || std::abs(fast.score - slow.score) > 1e-12) ++failures;
    }
  }
  return finish("retrieval-equivalence", failures, checks);
}

std::vector<SuiteResult> run_verify_suites(bool quick, std::ostream& log) {
  std::vector<SuiteResult> results;
  auto run = [&](SuiteResult r) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    results.push_back(std::move(r));
  };
  run(verify_hand_fixtures());
  run(verify_persistence_equivalence(quick ? 10 : 50, 11));
  run(verify_retrieval_equivalence(quick ? 10 : 100, 13));
  run(verify_embed_vjp(quick ? 10 : 100, 17));
  run(verify_topo_gradient(quick ? 5 : 50, 19));
  return results;
}

}  // namespace topodistill
