#include <topodistill/io.hpp>

#include <topodistill/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace topodistill {

using json = nlohmann::ordered_json;

namespace {

std::string_view init_name(InitMode m) { return m == InitMode::RealCopy ? "real-copy" : "noise"; }

std::string_view cadence_name(TopoCadence c) {
  switch (c) {
    case TopoCadence::EveryT: return "every-T";
    case TopoCadence::StageEnd: return "stage-end";
    case TopoCadence::Both: return "both";
  }
  return "both";
}

std::string_view kind_name(FeatureKind k) {
  return k == FeatureKind::PixelIdentity ? "pixel-identity" : "random-projection-tanh";
}

[[noreturn]] void manifest_error(const std::string& what) { throw Error(ErrorCode::ManifestError, what); }

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) manifest_error(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      manifest_error("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    manifest_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["lambda_fit"] = c.lambda_fit;
  j["lambda_topo"] = c.lambda_topo;
  j["gamma_loop"] = c.gamma_loop;
  j["k_nn"] = c.k_nn;
  j["pi_grid"] = c.pi_grid;
  j["budget_B"] = c.budget_B;
  j["residual_blocks_k"] = c.residual_blocks_k;
  j["refresh_T"] = c.refresh_T;
  j["n_c"] = c.n_c;
  j["sigma_smooth"] = c.sigma_smooth;
  j["sigma_pi"] = c.sigma_pi;
  j["beta_align"] = c.beta_align;
  j["learn_rate"] = c.learn_rate;
  j["adam_betas"] = {c.adam_beta1, c.adam_beta2};
  j["adam_eps"] = c.adam_eps;
  j["ridge"] = c.ridge;
  j["ipc"] = c.ipc;
  j["init_mode"] = init_name(c.init_mode);
  j["topo_cadence"] = cadence_name(c.topo_cadence);
  j["seed"] = c.seed;
  return j;
}

RunConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"alpha", "lambda_fit", "lambda_topo", "gamma_loop", "k_nn", "pi_grid", "budget_B",
                  "residual_blocks_k", "refresh_T", "n_c", "sigma_smooth", "sigma_pi", "beta_align",
                  "learn_rate", "adam_betas", "adam_eps", "ridge", "ipc", "init_mode", "topo_cadence", "seed"},
                 "config");
  RunConfig c;
  read_field(j, "alpha", c.alpha);
  read_field(j, "lambda_fit", c.lambda_fit);
  read_field(j, "lambda_topo", c.lambda_topo);
  read_field(j, "gamma_loop", c.gamma_loop);
  read_field(j, "k_nn", c.k_nn);
  read_field(j, "pi_grid", c.pi_grid);
  read_field(j, "budget_B", c.budget_B);
  read_field(j, "residual_blocks_k", c.residual_blocks_k);
  read_field(j, "refresh_T", c.refresh_T);
  read_field(j, "n_c", c.n_c);
  read_field(j, "sigma_smooth", c.sigma_smooth);
  read_field(j, "sigma_pi", c.sigma_pi);
  read_field(j, "beta_align", c.beta_align);
  read_field(j, "learn_rate", c.learn_rate);
  if (j.contains("adam_betas")) {
    std::vector<double> betas;
    read_field(j, "adam_betas", betas);
    if (betas.size() != 2) manifest_error("adam_betas must hold two numbers");
    c.adam_beta1 = betas[0];
    c.adam_beta2 = betas[1];
  }
  read_field(j, "adam_eps", c.adam_eps);
  read_field(j, "ridge", c.ridge);
  read_field(j, "ipc", c.ipc);
  if (j.contains("init_mode")) {
    std::string s;
    read_field(j, "init_mode", s);
    if (s == "real-copy") c.init_mode = InitMode::RealCopy;
    else if (s == "noise") c.init_mode = InitMode::Noise;
    else manifest_error("unknown init_mode '" + s + "'");
  }
  if (j.contains("topo_cadence")) {
    std::string s;
    read_field(j, "topo_cadence", s);
    if (s == "every-T") c.topo_cadence = TopoCadence::EveryT;
    else if (s == "stage-end") c.topo_cadence = TopoCadence::StageEnd;
    else if (s == "both") c.topo_cadence = TopoCadence::Both;
    else manifest_error("unknown topo_cadence '" + s + "'");
  }
  read_field(j, "seed", c.seed);
  return c;
}

json spec_to_json(const FeatureMapSpec& s) {
  json j;
  j["kind"] = kind_name(s.kind);
  j["input_dims"] = {s.height, s.width, s.channels};
  j["output_dim"] = s.output_dim;
  j["seed"] = s.seed;
  return j;
}

FeatureMapSpec spec_from_json(const json& j) {
  reject_unknown(j, {"kind", "input_dims", "output_dim", "seed"}, "feature_map");
  FeatureMapSpec s;
  if (j.contains("kind")) {
    std::string k;
    read_field(j, "kind", k);
    if (k == "pixel-identity") s.kind = FeatureKind::PixelIdentity;
    else if (k == "random-projection-tanh") s.kind = FeatureKind::RandomProjectionTanh;
    else manifest_error("unknown feature map kind '" + k + "'");
  }
  if (j.contains("input_dims")) {
    std::vector<int> dims;
    read_field(j, "input_dims", dims);
    if (dims.size() != 3) manifest_error("input_dims must be [H, W, C]");
    s.height = dims[0];
    s.width = dims[1];
    s.channels = dims[2];
  }
  s.output_dim = s.input_dim();
  read_field(j, "output_dim", s.output_dim);
  read_field(j, "seed", s.seed);
  return s;
}

std::string fmt15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
  os << text;
  if (!os) throw Error(ErrorCode::IoFailure, "write failed for " + p.string());
}

template <typename Fn>
void write_with(const fs::path& p, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(p, os.str());
}

std::string padded(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

}  // namespace

RunManifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    manifest_error(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j, {"artifact_version", "dataset_path", "mode", "feature_map", "config"}, "manifest");
  RunManifest m;
  read_field(j, "artifact_version", m.artifact_version);
  read_field(j, "dataset_path", m.dataset_path);
  if (j.contains("mode")) {
    std::string s;
    read_field(j, "mode", s);
    try {
      m.mode = parse_mode(s);
    } catch (const Error& e) {
      manifest_error(e.what());
    }
  }
  if (j.contains("feature_map")) m.feature_map = spec_from_json(j.at("feature_map"));
  if (j.contains("config")) m.config = config_from_json(j.at("config"));
  try {
    m.config.validate();
    m.feature_map.validate();
  } catch (const Error& e) {
    manifest_error(e.what());
  }
  return m;
}

std::string serialize_manifest(const RunManifest& m) {
  json j;
  j["artifact_version"] = m.artifact_version;
  j["dataset_path"] = m.dataset_path;
  j["mode"] = to_string(m.mode);
  j["feature_map"] = spec_to_json(m.feature_map);
  j["config"] = config_to_json(m.config);
  return j.dump(2) + "\n";
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot read manifest " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest(ss.str());
}

void save_manifest(const RunManifest& m, const fs::path& path) { write_text(path, serialize_manifest(m)); }

fs::path resolve_dataset_path(const RunManifest& m, const fs::path& manifest_path) {
  fs::path p(m.dataset_path);
  if (p.is_relative()) p = manifest_path.parent_path() / p;
  return p;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::floor(clamp_unit(v) * 255.0 + 0.5));
}

Image read_pnm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  auto bad = [&](const std::string& why) -> Error {
    return Error(ErrorCode::MalformedImage, path.string() + ": " + why);
  };
  auto token = [&]() {
    std::string t;
    char ch;
    while (is.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(ch);
    }
    return t;
  };
  const std::string magic = token();
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw bad("expected binary P5 or P6 header");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw bad("unreadable header");
  }
  if (w <= 0 || h <= 0) throw bad("non-positive dimensions");
  if (maxval != 255) throw bad("only 8-bit images (maxval 255) are supported");
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) throw bad("truncated pixel data");
  std::vector<double> px(raw.size());
  std::transform(raw.begin(), raw.end(), px.begin(), [](unsigned char b) { return b / 255.0; });
  return Image(h, w, channels, std::move(px));
}

void write_pnm(const Image& img, const fs::path& path) {
  if (img.channels() != 1 && img.channels() != 3)
    throw Error(ErrorCode::InvalidArgument, "PNM export supports 1 or 3 channels");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  os << (img.channels() == 1 ? "P5" : "P6") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) bytes[i] = static_cast<char>(quantize(img[i]));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::InvalidArgument, path.string() + ": non-numeric row '" + line + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

LabeledDataset ingest_dataset(const fs::path& path, std::optional<std::array<int, 3>> shape) {
  LabeledDataset data;
  if (fs::is_regular_file(path)) {
    const auto rows = read_numeric_csv(path);
    if (rows.empty()) throw Error(ErrorCode::EmptyDataset, path.string() + " has no rows");
    const std::size_t dim = rows.front().size() - 1;
    if (dim == 0) throw Error(ErrorCode::MalformedImage, "flat CSV rows need pixel columns");
    std::array<int, 3> s = {1, static_cast<int>(dim), 1};
    if (shape) {
      if (static_cast<std::size_t>((*shape)[0]) * (*shape)[1] * (*shape)[2] != dim)
        throw Error(ErrorCode::InconsistentDimensions, "flat CSV rows do not match the requested image shape");
      s = *shape;
    }
    int max_label = -1;
    for (const auto& r : rows) {
      if (r.size() != dim + 1) throw Error(ErrorCode::InconsistentDimensions, "flat CSV rows differ in length");
      const double l = r[0];
      if (l < 0 || l != std::floor(l)) throw Error(ErrorCode::MalformedImage, "labels must be non-negative integers");
      for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] < 0.0 || r[i] > 1.0) throw Error(ErrorCode::MalformedImage, "flat CSV pixels must lie in [0,1]");
      data.labels.push_back(static_cast<int>(l));
      data.images.emplace_back(s[0], s[1], s[2], std::vector<double>(r.begin() + 1, r.end()));
      max_label = std::max(max_label, static_cast<int>(l));
    }
    data.class_count = max_label + 1;
    data.validate();
    return data;
  }
  if (!fs::is_directory(path)) throw Error(ErrorCode::IoFailure, "dataset path not found: " + path.string());
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_directory()) classes.push_back(e.path());
  std::sort(classes.begin(), classes.end());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c])) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      data.images.push_back(read_pnm(f));
      data.labels.push_back(static_cast<int>(c));
    }
  }
  data.class_count = static_cast<int>(classes.size());
  if (data.images.empty()) throw Error(ErrorCode::EmptyDataset, "no images under " + path.string());
  data.validate();
  return data;
}

void write_dataset_dir(const LabeledDataset& data, const fs::path& dir) {
  std::vector<std::size_t> seen(data.class_count, 0);
  for (int c = 0; c < data.class_count; ++c) fs::create_directories(dir / ("class_" + padded(c, 3)));
  const char* ext = data.images.front().channels() == 3 ? ".ppm" : ".pgm";
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const int c = data.labels[i];
    write_pnm(data.images[i], dir / ("class_" + padded(c, 3)) / ("img_" + padded(seen[c]++, 4) + ext));
  }
}

void write_dataset_csv(const LabeledDataset& data, const fs::path& file) {
  write_with(file, [&](std::ostream& os) {
    os << "label";
    for (std::size_t i = 0; i < data.images.front().size(); ++i) os << ",p" << i;
    os << '\n';
    for (std::size_t n = 0; n < data.images.size(); ++n) {
      os << data.labels[n];
      for (double v : data.images[n].pixels()) os << ',' << fmt15(v);
      os << '\n';
    }
  });
}

void write_losses_csv(std::ostream& os, const std::vector<ObjectiveTerms>& losses) {
  os << "step,sup,align,topo,total\n";
  for (std::size_t s = 0; s < losses.size(); ++s)
    os << s << ',' << fmt15(losses[s].sup) << ',' << fmt15(losses[s].align) << ',' << fmt15(losses[s].topo)
       << ',' << fmt15(losses[s].total) << '\n';
}

std::string diagnostics_json(const DistillDiagnostics& d) {
  json j;
  j["mode"] = to_string(d.mode);
  j["steps_executed"] = d.steps_executed;
  j["fit_gap_delta"] = d.fit_gap_delta;
  j["contraction_ratio"] = d.contraction_ratio;
  json stages = json::array();
  for (const auto& s : d.stages)
    stages.push_back({{"stage", s.stage},
                      {"class", s.class_id},
                      {"pre_distance", s.pre_distance},
                      {"post_distance", s.post_distance},
                      {"anchor_spread", s.anchor_spread},
                      {"fit_gap", s.fit_gap}});
  j["stages"] = stages;
  j["kappa_per_class"] = d.kappa_per_class;
  j["mean_kappa"] = d.mean_kappa();
  json eps = json::array();
  for (const auto& t : d.topology) eps.push_back(t.eps_max);
  j["eps_max_per_class"] = eps;
  j["head_accuracy_syn"] = d.head_accuracy_syn;
  j["probe_accuracy"] = d.probe_accuracy;
  if (!d.step_losses.empty()) {
    const auto& last = d.step_losses.back();
    j["final_loss"] = {{"sup", last.sup}, {"align", last.align}, {"topo", last.topo}, {"total", last.total}};
  }
  return j.dump(2) + "\n";
}

std::vector<fs::path> emit_outputs(const SyntheticSet& syn, const DistillDiagnostics& diag,
                                   const RunManifest& manifest, const std::vector<PatchPool>& pools,
                                   const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, auto&& fn) {
    write_with(p, fn);
    written.push_back(p);
  };

  const fs::path syn_dir = out_dir / "synthetic";
  for (int c = 0; c < syn.class_count; ++c) {
    const fs::path cdir = syn_dir / ("class_" + padded(c, 3));
    fs::create_directories(cdir);
    const auto [lo, hi] = syn.class_range(c);
    for (auto i = lo; i < hi; ++i) {
      const auto p = cdir / ("img_" + padded(i - lo, 4) + (syn.images[i].channels() == 3 ? ".ppm" : ".pgm"));
      write_pnm(syn.images[i], p);
      written.push_back(p);
    }
  }
  emit(out_dir / "diagnostics.json", [&](std::ostream& os) { os << diagnostics_json(diag); });
  emit(out_dir / "losses.csv", [&](std::ostream& os) { write_losses_csv(os, diag.step_losses); });
  for (const auto& t : diag.topology) {
    const std::string c = std::to_string(t.class_id);
    emit(out_dir / ("diagram_" + c + ".csv"), [&](std::ostream& os) { write_diagram_csv(os, t.syn_diagrams); });
    emit(out_dir / ("diagram_real_" + c + ".csv"), [&](std::ostream& os) { write_diagram_csv(os, t.real_diagrams); });
    emit(out_dir / ("betti_" + c + ".csv"), [&](std::ostream& os) { write_betti_csv(os, t.syn_betti); });
    emit(out_dir / ("betti_real_" + c + ".csv"), [&](std::ostream& os) { write_betti_csv(os, t.real_betti); });
    for (int q = 0; q < 2; ++q) {
      const std::string stem = "pi_" + c + "_" + std::to_string(q);
      emit(out_dir / (stem + ".csv"), [&](std::ostream& os) { write_pi_csv(os, t.syn_pi[q]); });
      emit(out_dir / (stem + ".json"), [&](std::ostream& os) { write_pi_sidecar(os, t.syn_pi[q]); });
    }
  }
  emit(out_dir / "pool_manifest.json", [&](std::ostream& os) { write_pool_manifest(os, pools); });
  emit(out_dir / "manifest.json", [&](std::ostream& os) { os << serialize_manifest(manifest); });
  return written;
}

SyntheticSet read_synthetic_dir(const fs::path& dir) {
  SyntheticSet syn;
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) classes.push_back(e.path());
  std::sort(classes.begin(), classes.end());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c]))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (c == 0) syn.ipc = static_cast<int>(files.size());
    if (static_cast<int>(files.size()) != syn.ipc)
      throw Error(ErrorCode::InconsistentDimensions, "synthetic classes hold different image counts");
    for (const auto& f : files) {
      syn.images.push_back(read_pnm(f));
      syn.labels.push_back(static_cast<int>(c));
    }
  }
  syn.class_count = static_cast<int>(classes.size());
  return syn;
}

}  // namespace topodistill
