#include <topodistill/cli.hpp>

#include <topodistill/error.hpp>
#include <topodistill/io.hpp>
#include <topodistill/persistence_image.hpp>
#include <topodistill/toy.hpp>
#include <topodistill/verify.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace topodistill {

namespace {

using json = nlohmann::ordered_json;

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
  os << text;
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

struct Loaded {
  RunManifest manifest;
  LabeledDataset data;
  fs::path dataset_path;
};

Loaded load_run(const fs::path& manifest_path) {
  Loaded l;
  l.manifest = load_manifest(manifest_path);
  l.dataset_path = fs::absolute(resolve_dataset_path(l.manifest, manifest_path));
  const auto& s = l.manifest.feature_map;
  l.data = ingest_dataset(l.dataset_path, std::array<int, 3>{s.height, s.width, s.channels});
  return l;
}

int cmd_distill(const std::string& manifest_path, std::string out_dir, std::ostream& out) {
  Loaded l = load_run(manifest_path);
  if (out_dir.empty()) out_dir = (fs::path(manifest_path).parent_path() / "run").string();
  const auto result = run_distillation(l.data, l.manifest.config, l.manifest.feature_map, l.manifest.mode);
  RunManifest emitted = l.manifest;
  emitted.dataset_path = l.dataset_path.string();
  FeatureMap map(l.manifest.feature_map);
  std::vector<PatchPool> pools;
  for (int c = 0; c < l.data.class_count; ++c)
    pools.push_back(build_pool(l.data, c, map, l.manifest.config.sigma_smooth));
  const auto files = emit_outputs(result.syn, result.diagnostics, emitted, pools, out_dir);
  const auto& d = result.diagnostics;
  out << "mode " << to_string(d.mode) << ", " << d.steps_executed << " steps, mean kappa " << d.mean_kappa()
      << ", probe accuracy " << d.probe_accuracy << '\n'
      << "wrote " << files.size() << " files to " << out_dir << '\n';
  return 0;
}

int cmd_ph(const std::string& csv, int k, double eps_max, const std::string& out_dir, int grid_side,
           double sigma_pi, std::ostream& out) {
  const auto rows = read_numeric_csv(csv);
  if (rows.size() < 2) throw Error(ErrorCode::DegenerateCloud, "point cloud needs at least two rows");
  std::vector<FeatureVec> pts;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw Error(ErrorCode::DimensionMismatch, "rows differ in length");
    pts.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
  }
  const auto graph = build_mutual_knn(PointCloud::from_points(std::move(pts)), k);
  if (eps_max <= 0.0) eps_max = graph.max_weight() > 0.0 ? graph.max_weight() : 1.0;
  const auto dgms = compute_persistence(graph, eps_max);
  const auto curves = betti_curves(dgms, eps_max, kKappaGridSize);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string diagram = render([&](std::ostream& os) { write_diagram_csv(os, dgms); });
  write_file(dir / "diagram.csv", diagram);
  write_file(dir / "betti.csv", render([&](std::ostream& os) { write_betti_csv(os, curves); }));
  write_file(dir / "graph.csv", render([&](std::ostream& os) { write_graph_csv(os, graph); }));
  const PersistenceDiagram* per_degree[2] = {&dgms.h0, &dgms.h1};
  for (int q = 0; q < 2; ++q) {
    const auto pi = rasterize(*per_degree[q], grid_side, sigma_pi, eps_max);
    write_file(dir / ("pi_" + std::to_string(q) + ".csv"), render([&](std::ostream& os) { write_pi_csv(os, pi); }));
    write_file(dir / ("pi_" + std::to_string(q) + ".json"), render([&](std::ostream& os) { write_pi_sidecar(os, pi); }));
  }
  out << diagram;
  return 0;
}

int cmd_retrieve(const std::string& manifest_path, int class_id, int image, std::ostream& out) {
  Loaded l = load_run(manifest_path);
  const auto& cfg = l.manifest.config;
  if (class_id < 0 || class_id >= l.data.class_count)
    throw Error(ErrorCode::IndexOutOfRange, "class out of range");
  if (image < 0 || image >= cfg.ipc) throw Error(ErrorCode::IndexOutOfRange, "image index must be < ipc");
  const SyntheticSet syn = new_synthetic_set(l.data, cfg.ipc, cfg.init_mode, cfg.seed);
  const FeatureMap map(l.manifest.feature_map);
  const PatchPool pool = build_pool(l.data, class_id, map, cfg.sigma_smooth);
  const FeatureVec q = map.embed(syn.images[syn.class_range(class_id).first + image], true);
  out << "index,source_id,distance2,complexity,score\n";
  char buf[160];
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.15g,%.15g,%.15g\n", i, pool.source_ids[i],
                  (q - pool.cached_z[i]).squaredNorm(), pool.cached_c[i], score(pool, i, q, cfg.lambda_fit));
    out << buf;
  }
  const auto best = retrieve(pool, q, cfg.lambda_fit);
  std::snprintf(buf, sizeof buf, "selected,%zu,source_id,%zu,score,%.15g\n", best.index,
                pool.source_ids[best.index], best.score);
  out << buf;
  return 0;
}

BettiCurve curve_column(const std::vector<std::vector<double>>& rows, int column, int degree) {
  BettiCurve c;
  c.degree = degree;
  for (const auto& r : rows) {
    if (r.size() != 3) throw Error(ErrorCode::InvalidArgument, "Betti CSV rows need epsilon,b0,b1");
    c.epsilon.push_back(r[0]);
    c.counts.push_back(static_cast<int>(r[column]));
  }
  c.eps_max = c.epsilon.empty() ? 0.0 : c.epsilon.back();
  return c;
}

int cmd_analyze(const std::string& run_dir, std::ostream& out) {
  const fs::path dir(run_dir);
  const RunManifest m = load_manifest(dir / "manifest.json");
  std::ifstream is(dir / "diagnostics.json");
  if (!is) throw Error(ErrorCode::IoFailure, "missing diagnostics.json in " + run_dir);
  const json diag = json::parse(is);

  json report;
  json kappas = json::array();
  for (int c = 0;; ++c) {
    const auto syn_path = dir / ("betti_" + std::to_string(c) + ".csv");
    const auto real_path = dir / ("betti_real_" + std::to_string(c) + ".csv");
    if (!fs::exists(syn_path) || !fs::exists(real_path)) break;
    const auto syn_rows = read_numeric_csv(syn_path);
    const auto real_rows = read_numeric_csv(real_path);
    const BettiPair syn{curve_column(syn_rows, 1, 0), curve_column(syn_rows, 2, 1)};
    const BettiPair real{curve_column(real_rows, 1, 0), curve_column(real_rows, 2, 1)};
    kappas.push_back(kappa(real, syn, m.config.gamma_loop));
  }
  report["kappa_per_class"] = kappas;

  // Contraction ratios from the per-stage, per-class distance records.
  std::map<int, std::pair<double, double>> per_stage;
  for (const auto& s : diag.at("stages")) {
    auto& acc = per_stage[s.at("stage").get<int>()];
    acc.first += s.at("pre_distance").get<double>();
    acc.second += s.at("post_distance").get<double>();
  }
  json ratios = json::array();
  for (const auto& [stage, acc] : per_stage) ratios.push_back(acc.first > 0.0 ? acc.second / acc.first : 1.0);
  report["contraction_ratio"] = ratios;
  out << report.dump(2) << '\n';
  return 0;
}

int cmd_gen_toy(const std::string& kind, const std::string& out_path, const ToyOptions& opt,
                const std::string& format, const std::string& manifest_path, std::ostream& out) {
  const auto data = make_toy(kind, opt);
  if (format == "csv") {
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    write_dataset_csv(data, out_path);
  } else {
    write_dataset_dir(data, out_path);
  }
  if (!manifest_path.empty()) {
    RunManifest m;
    m.dataset_path = fs::absolute(out_path).string();
    m.feature_map = FeatureMapSpec::pixel_identity(opt.size, opt.size, 1);
    m.config.seed = opt.seed;
    if (fs::path(manifest_path).has_parent_path()) fs::create_directories(fs::path(manifest_path).parent_path());
    save_manifest(m, manifest_path);
  }
  out << "wrote " << data.images.size() << " images (" << data.class_count << " classes) to " << out_path << '\n';
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset distillation with retrieval anchoring and topology alignment", "topodistill"};
  app.require_subcommand(1);

  std::string manifest, out_dir;
  auto* distill = app.add_subcommand("distill", "run a distillation from a manifest");
  distill->add_option("manifest", manifest, "run manifest (JSON)")->required();
  distill->add_option("--out", out_dir, "output directory (default: <manifest dir>/run)");

  std::string cloud_csv, ph_out = "ph_out";
  int k = 10, grid_side = 32;
  double eps_max = 0.0, sigma_pi = 0.05;
  auto* ph = app.add_subcommand("ph", "persistence of a point cloud CSV");
  ph->add_option("pointcloud", cloud_csv, "CSV with one point per row")->required();
  ph->add_option("--k", k, "mutual k-NN parameter")->check(CLI::PositiveNumber);
  ph->add_option("--eps-max", eps_max, "filtration cutoff (default: longest graph edge)");
  ph->add_option("--out", ph_out, "output directory");
  ph->add_option("--grid-side", grid_side, "persistence image side")->check(CLI::PositiveNumber);
  ph->add_option("--sigma-pi", sigma_pi, "persistence image bandwidth")->check(CLI::PositiveNumber);

  int class_id = 0, image = 0;
  auto* retr = app.add_subcommand("retrieve", "one retrieval decision with per-candidate scores");
  retr->add_option("manifest", manifest, "run manifest (JSON)")->required();
  retr->add_option("--class", class_id, "class id")->required();
  retr->add_option("--image", image, "synthetic image index within the class")->required();

  std::string run_dir;
  auto* analyze = app.add_subcommand("analyze", "recompute kappa and contraction ratios of a run");
  analyze->add_option("run_dir", run_dir, "directory written by distill")->required();

  std::string kind, toy_out, format = "dir", toy_manifest;
  ToyOptions toy;
  auto* gen = app.add_subcommand("gen-toy", "write a toy dataset");
  gen->add_option("kind", kind, "two-ring | gaussian-blobs")->required()->check(CLI::IsMember({"two-ring", "gaussian-blobs"}));
  gen->add_option("out", toy_out, "output directory (or CSV file with --format csv)")->required();
  gen->add_option("--seed", toy.seed, "generator seed");
  gen->add_option("--classes", toy.classes, "number of classes")->check(CLI::PositiveNumber);
  gen->add_option("--per-class", toy.per_class, "images per class")->check(CLI::PositiveNumber);
  gen->add_option("--size", toy.size, "image side in pixels")->check(CLI::Range(2, 4096));
  gen->add_option("--noise", toy.noise, "pixel noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("--format", format, "dir | csv")->check(CLI::IsMember({"dir", "csv"}));
  gen->add_option("--manifest", toy_manifest, "also write a default run manifest here");

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "run the oracle suites; exit 0 iff all pass");
  verify->add_flag("--quick", quick, "smaller case counts");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*distill) return cmd_distill(manifest, out_dir, out);
    if (*ph) return cmd_ph(cloud_csv, k, eps_max, ph_out, grid_side, sigma_pi, out);
    if (*retr) return cmd_retrieve(manifest, class_id, image, out);
    if (*analyze) return cmd_analyze(run_dir, out);
    if (*gen) return cmd_gen_toy(kind, toy_out, toy, format, toy_manifest, out);
    if (*verify) {
      bool ok = true;
      for (const auto& r : run_verify_suites(quick, out)) ok = ok && r.passed;
      out << (ok ? "verify: all suites passed\n" : "verify: FAILED\n");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace topodistill
