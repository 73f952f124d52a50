#pragma once

#include <topodistill/data_model.hpp>
#include <topodistill/distill.hpp>
#include <topodistill/feature_space.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace topodistill {

namespace fs = std::filesystem;

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Everything needed to replay a run.
struct RunManifest {
  RunConfig config;
  FeatureMapSpec feature_map;
  std::string dataset_path;
  DistillMode mode = DistillMode::DrcPta;
  std::string artifact_version = kArtifactVersion;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

/// Strict JSON parsing: unknown keys and malformed values are rejected,
/// absent keys take their defaults.
RunManifest parse_manifest(const std::string& json_text);
std::string serialize_manifest(const RunManifest& m);
RunManifest load_manifest(const fs::path& path);
void save_manifest(const RunManifest& m, const fs::path& path);
/// dataset_path resolved against the manifest's directory when relative.
fs::path resolve_dataset_path(const RunManifest& m, const fs::path& manifest_path);

/// 8-bit binary PGM (P5) or PPM (P6); pixels scaled by 1/255.
Image read_pnm(const fs::path& path);
/// Quantizes with round-half-up: byte = floor(v * 255 + 0.5).
void write_pnm(const Image& img, const fs::path& path);
std::uint8_t quantize(double v);

/// Directory of class subfolders (class ids by sorted folder name) holding
/// .pgm/.ppm files, or a flat CSV `label,p0,p1,...`. Flat rows are shaped
/// by `shape` when given (H, W, C; must multiply to D), else 1 x D x 1.
LabeledDataset ingest_dataset(const fs::path& path,
                              std::optional<std::array<int, 3>> shape = std::nullopt);

/// Writes class_XXX/img_XXXX.pgm|ppm folders.
void write_dataset_dir(const LabeledDataset& data, const fs::path& dir);
void write_dataset_csv(const LabeledDataset& data, const fs::path& file);

/// Synthetic images as `synthetic/class_XXX/img_XXXX.pgm`, diagnostics.json,
/// losses.csv, per-class diagram/Betti/PI files, pool manifest, and the
/// run manifest.
std::vector<fs::path> emit_outputs(const SyntheticSet& syn, const DistillDiagnostics& diag,
                                   const RunManifest& manifest, const std::vector<PatchPool>& pools,
                                   const fs::path& out_dir);

void write_losses_csv(std::ostream& os, const std::vector<ObjectiveTerms>& losses);
std::string diagnostics_json(const DistillDiagnostics& diag);

/// Reads synthetic images written by emit_outputs.
SyntheticSet read_synthetic_dir(const fs::path& dir);

/// Reads a numeric CSV, skipping a non-numeric header line.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path);

}  // namespace topodistill
