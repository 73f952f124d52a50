#include <topodistill/distill.hpp>

#include <topodistill/error.hpp>
#include <topodistill/rng.hpp>

#include <cmath>

namespace topodistill {

namespace {

constexpr std::uint64_t kTopoStream = 0x7090;
constexpr std::uint64_t kFinalStream = 0xf17a1;
constexpr std::uint64_t kStaticStream = 0x57a71c;

}  // namespace

std::string_view to_string(DistillMode mode) {
  switch (mode) {
    case DistillMode::None: return "none";
    case DistillMode::StaticAnchor: return "static-anchor";
    case DistillMode::Drc: return "drc";
    case DistillMode::DrcPta: return "drc+pta";
  }
  return "none";
}

DistillMode parse_mode(std::string_view text) {
  for (auto m : {DistillMode::None, DistillMode::StaticAnchor, DistillMode::Drc, DistillMode::DrcPta})
    if (to_string(m) == text) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(text) + "'");
}

std::vector<ClassStats> precompute_real_stats(const LabeledDataset& real, const FeatureMap& map) {
  std::vector<ClassStats> stats(real.class_count);
  for (int c = 0; c < real.class_count; ++c) {
    const auto idx = real.indices_of_class(c);
    if (idx.empty()) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " is empty");
    std::vector<FeatureVec> f;
    for (auto i : idx) f.push_back(map.embed(real.images[i]));
    FeatureVec mean = FeatureVec::Zero(map.output_dim());
    for (const auto& v : f) mean += v;
    mean /= static_cast<double>(f.size());
    FeatureVec var = FeatureVec::Zero(map.output_dim());
    for (const auto& v : f) var += (v - mean).cwiseAbs2();
    var /= static_cast<double>(f.size());
    stats[c] = {std::move(mean), std::move(var)};
  }
  return stats;
}

int LinearHead::predict(const FeatureVec& f) const {
  Eigen::Index arg = 0;
  logits(f).maxCoeff(&arg);
  return static_cast<int>(arg);
}

LinearHead fit_frozen_head(const LabeledDataset& real, const FeatureMap& map, double ridge) {
  if (!(ridge > 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be > 0");
  real.validate();
  const auto n = static_cast<Eigen::Index>(real.size());
  const int d = map.output_dim();
  const int classes = real.class_count;
  Eigen::MatrixXd X(n, d);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = map.embed(real.images[i]).transpose();
    Y(i, real.labels[i]) = 1.0;
  }
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const Eigen::RowVectorXd y_mean = Y.colwise().mean();
  X.rowwise() -= x_mean;
  Y.rowwise() -= y_mean;
  Eigen::MatrixXd gram = X.transpose() * X / static_cast<double>(n);
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "ridge normal equations could not be factored");
  const Eigen::MatrixXd B = ldlt.solve(X.transpose() * Y / static_cast<double>(n));  // d x classes
  LinearHead head;
  head.weights = B.transpose();
  head.bias = (y_mean - x_mean * B).transpose();
  return head;
}

double head_accuracy(const LinearHead& head, const FeatureMap& map, const std::vector<Image>& images,
                     const std::vector<int>& labels) {
  if (images.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (head.predict(map.embed(images[i])) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

DistillContext::DistillContext(const LabeledDataset& real_data, const RunConfig& cfg,
                               const FeatureMapSpec& spec, DistillMode m)
    : config(cfg), mode(m), map(spec), real(&real_data), real_cache(cfg.refresh_T) {
  config.validate();
  real_data.validate();
  if (m == DistillMode::StaticAnchor || m == DistillMode::Drc) config.lambda_topo = 0.0;
  head = fit_frozen_head(real_data, map, config.ridge);
  stats = precompute_real_stats(real_data, map);
  for (int c = 0; c < real_data.class_count; ++c)
    pools.push_back(build_pool(real_data, c, map, config.sigma_smooth));
}

std::vector<FeatureVec> DistillContext::real_features(int c, long step) {
  std::vector<FeatureVec> out;
  for (auto i : real->indices_of_class(c)) out.push_back(real_cache.get_or_embed(i, map, real->images[i], step));
  return out;
}

TopoParams DistillContext::topo_params(int c, long step) const {
  return {config.k_nn, config.n_c, config.pi_grid, config.sigma_pi, config.gamma_loop,
          derive_seed(config.seed, {kTopoStream, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(step)})};
}

ObjectiveEval evaluate_objective(const SyntheticSet& syn, DistillContext& ctx, long step, bool with_topo) {
  const auto& cfg = ctx.config;
  const std::size_t total = syn.images.size();
  const int d = ctx.map.output_dim();
  std::vector<FeatureVec> feats(total);
  for (std::size_t i = 0; i < total; ++i) feats[i] = ctx.map.embed(syn.images[i]);

  ObjectiveEval out;
  std::vector<FeatureVec> cot(total, FeatureVec::Zero(d));

  // Cross-entropy of the frozen head against the synthetic labels.
  for (std::size_t i = 0; i < total; ++i) {
    const Eigen::VectorXd z = ctx.head.logits(feats[i]);
    const double zmax = z.maxCoeff();
    const Eigen::VectorXd e = (z.array() - zmax).exp().matrix();
    const double sum = e.sum();
    out.terms.sup += -(z[syn.labels[i]] - zmax - std::log(sum));
    Eigen::VectorXd p = e / sum;
    p[syn.labels[i]] -= 1.0;
    cot[i] += ctx.head.weights.transpose() * p / static_cast<double>(total);
  }
  out.terms.sup /= static_cast<double>(total);

  // Feature-moment alignment per class.
  for (int c = 0; c < syn.class_count; ++c) {
    const auto [lo, hi] = syn.class_range(c);
    const double n = static_cast<double>(hi - lo);
    FeatureVec mean = FeatureVec::Zero(d);
    for (auto i = lo; i < hi; ++i) mean += feats[i];
    mean /= n;
    FeatureVec var = FeatureVec::Zero(d);
    for (auto i = lo; i < hi; ++i) var += (feats[i] - mean).cwiseAbs2();
    var /= n;
    const FeatureVec dmean = mean - ctx.stats[c].mean;
    const FeatureVec dvar = var - ctx.stats[c].var;
    out.terms.align += dmean.squaredNorm() + dvar.squaredNorm();
    if (cfg.beta_align == 0.0) continue;
    for (auto i = lo; i < hi; ++i) {
      const FeatureVec g = 2.0 * dmean / n + (4.0 / n) * dvar.cwiseProduct(feats[i] - mean);
      cot[i] += cfg.beta_align * g;
    }
  }

  if (with_topo && cfg.lambda_topo > 0.0) {
    for (int c = 0; c < syn.class_count; ++c) {
      const auto [lo, hi] = syn.class_range(c);
      std::vector<FeatureVec> syn_c(feats.begin() + lo, feats.begin() + hi);
      const auto ev = topo_loss_grad(syn_c, ctx.real_features(c, step), ctx.topo_params(c, step));
      out.terms.topo += ev.loss;
      for (auto i = lo; i < hi; ++i) cot[i] += cfg.lambda_topo * ev.grad[i - lo];
    }
  }

  out.terms.total = out.terms.sup + cfg.beta_align * out.terms.align + cfg.lambda_topo * out.terms.topo;
  out.pixel_grad.resize(total);
  for (std::size_t i = 0; i < total; ++i) out.pixel_grad[i] = ctx.map.vjp(syn.images[i], cot[i]);
  return out;
}

bool topo_due(const RunConfig& cfg, long step, bool block_end) {
  const bool periodic = step % cfg.refresh_T == 0;
  switch (cfg.topo_cadence) {
    case TopoCadence::EveryT: return periodic;
    case TopoCadence::StageEnd: return block_end;
    case TopoCadence::Both: return periodic || block_end;
  }
  return false;
}

ObjectiveTerms step_gradient(SyntheticSet& syn, AdamState& state, DistillContext& ctx, long step,
                             bool block_end) {
  const auto& cfg = ctx.config;
  ObjectiveEval ev = evaluate_objective(syn, ctx, step, topo_due(cfg, step, block_end));
  if (!std::isfinite(ev.terms.total))
    throw Error(ErrorCode::NonFiniteLoss, "objective diverged at step " + std::to_string(step));

  const std::size_t total = syn.images.size();
  if (state.m.size() != total) {
    state.m.clear();
    state.v.clear();
    for (const auto& img : syn.images) {
      state.m.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(img.size())));
      state.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(img.size())));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < total; ++i) {
    const Eigen::VectorXd& g = ev.pixel_grad[i];
    state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * g;
    state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * g.cwiseAbs2();
    auto px = syn.images[i].pixels();
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(px.data(), static_cast<Eigen::Index>(px.size()));
    x.array() -= cfg.learn_rate * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + cfg.adam_eps);
    syn.images[i].assign(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }
  return ev.terms;
}

double DistillDiagnostics::mean_kappa() const {
  if (kappa_per_class.empty()) return 0.0;
  double s = 0.0;
  for (double k : kappa_per_class) s += k;
  return s / static_cast<double>(kappa_per_class.size());
}

double mean_pairwise_distance(const std::vector<FeatureVec>& f) {
  if (f.size() < 2) return 0.0;
  double s = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j, ++pairs) s += (f[i] - f[j]).norm();
  return s / static_cast<double>(pairs);
}

ClassTopology analyze_class_topology(const std::vector<FeatureVec>& syn_features,
                                     const std::vector<FeatureVec>& real_features,
                                     const RunConfig& cfg, int class_id) {
  const TopoParams params{cfg.k_nn, cfg.n_c, cfg.pi_grid, cfg.sigma_pi, cfg.gamma_loop,
                          derive_seed(cfg.seed, {kFinalStream, static_cast<std::uint64_t>(class_id)})};
  auto ev = topo_loss_grad(syn_features, real_features, params);
  ClassTopology t;
  t.class_id = class_id;
  t.eps_max = ev.eps_max;
  t.topo_loss = ev.loss;
  t.real_betti = betti_curves(ev.real_diagrams, ev.eps_max, kKappaGridSize);
  t.syn_betti = betti_curves(ev.syn_diagrams, ev.eps_max, kKappaGridSize);
  t.kappa = kappa(t.real_betti, t.syn_betti, cfg.gamma_loop);
  t.real_diagrams = std::move(ev.real_diagrams);
  t.syn_diagrams = std::move(ev.syn_diagrams);
  for (int q = 0; q < 2; ++q) {
    t.syn_pi[q] = std::move(ev.syn_pi[q]);
    t.real_pi[q] = std::move(ev.real_pi[q]);
  }
  return t;
}

namespace {

std::vector<FeatureVec> embed_all(const FeatureMap& map, const std::vector<Image>& images,
                                  std::size_t lo, std::size_t hi) {
  std::vector<FeatureVec> out;
  for (auto i = lo; i < hi; ++i) out.push_back(map.embed(images[i]));
  return out;
}

double mean_squared_pixel_distance(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

DistillResult run_distillation(const LabeledDataset& real, const RunConfig& config,
                               const FeatureMapSpec& spec, DistillMode mode) {
  DistillContext ctx(real, config, spec, mode);
  const auto& cfg = ctx.config;
  DistillResult result;
  SyntheticSet& syn = result.syn;
  DistillDiagnostics& diag = result.diagnostics;
  diag.mode = mode;
  syn = new_synthetic_set(real, cfg.ipc, cfg.init_mode, cfg.seed);

  // The static baseline draws one anchor per class up front and reuses it.
  std::vector<std::size_t> static_anchor(syn.class_count, 0);
  if (mode == DistillMode::StaticAnchor) {
    Rng rng(derive_seed(cfg.seed, {kStaticStream}));
    for (int c = 0; c < syn.class_count; ++c) {
      std::uniform_int_distribution<std::size_t> pick(0, ctx.pools[c].size() - 1);
      static_anchor[c] = pick(rng);
    }
  }

  const int b = cfg.block_steps();
  const int blocks = cfg.residual_blocks_k + 1;
  AdamState adam;
  long step = 0;
  for (int block = 0; block < blocks; ++block) {
    for (int s = 0; s < b; ++s, ++step)
      diag.step_losses.push_back(step_gradient(syn, adam, ctx, step, s == b - 1));
    if (block == blocks - 1 || mode == DistillMode::None) continue;

    // Residual stage.
    double gap_sum = 0.0, pre_sum = 0.0, post_sum = 0.0;
    for (int c = 0; c < syn.class_count; ++c) {
      const auto [lo, hi] = syn.class_range(c);
      const auto& pool = ctx.pools[c];
      StageRecord rec;
      rec.stage = block;
      rec.class_id = c;
      rec.pre_distance = mean_pairwise_distance(embed_all(ctx.map, syn.images, lo, hi));
      std::vector<FeatureVec> anchor_feats;
      double gap = 0.0;
      for (auto i = lo; i < hi; ++i) {
        Image& x = syn.images[i];
        std::size_t pick = static_anchor[c];
        if (mode != DistillMode::StaticAnchor) pick = retrieve(pool, ctx.map.embed(x, true), cfg.lambda_fit).index;
        const Image anchor = resample(pool.patches[pick], x.height(), x.width());
        anchor_feats.push_back(ctx.map.embed(anchor));
        gap += mean_squared_pixel_distance(x, anchor);
        x = residual_update(x, anchor, cfg.alpha);
      }
      rec.fit_gap = gap / static_cast<double>(hi - lo);
      rec.anchor_spread = mean_pairwise_distance(anchor_feats);
      rec.post_distance = mean_pairwise_distance(embed_all(ctx.map, syn.images, lo, hi));
      gap_sum += rec.fit_gap;
      pre_sum += rec.pre_distance;
      post_sum += rec.post_distance;
      diag.stages.push_back(rec);
    }
    diag.fit_gap_delta.push_back(gap_sum / syn.class_count);
    diag.contraction_ratio.push_back(pre_sum > 0.0 ? post_sum / pre_sum : 1.0);
  }
  diag.steps_executed = step;

  for (int c = 0; c < syn.class_count; ++c) {
    const auto [lo, hi] = syn.class_range(c);
    auto topo = analyze_class_topology(embed_all(ctx.map, syn.images, lo, hi), ctx.real_features(c, step),
                                       cfg, c);
    diag.kappa_per_class.push_back(topo.kappa);
    diag.topology.push_back(std::move(topo));
  }

  diag.head_accuracy_syn = head_accuracy(ctx.head, ctx.map, syn.images, syn.labels);
  LabeledDataset syn_data{syn.images, syn.labels, syn.class_count};
  const LinearHead probe = fit_frozen_head(syn_data, ctx.map, cfg.ridge);
  diag.probe_accuracy = head_accuracy(probe, ctx.map, real.images, real.labels);
  return result;
}

}  // namespace topodistill
