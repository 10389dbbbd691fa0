#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshwarp/error.hpp"
#include "meshwarp/metrics.hpp"
#include "meshwarp/transfer.hpp"

namespace meshwarp {

/// One novel-view job. Relative paths in a config file are resolved against
/// the file's directory.
struct JobConfig {
  std::filesystem::path input_frames;  // directory of NNNNNN.png
  std::filesystem::path input_camera;
  std::filesystem::path target_camera;
  std::optional<std::filesystem::path> ground_truth;  // directory of NNNNNN.png
  std::optional<std::filesystem::path> background;    // PNG plate; black when absent
  std::filesystem::path mesh_sequence;                // MSEQ1 file or OBJ directory
  std::filesystem::path template_mesh;
  std::filesystem::path labels;
  std::filesystem::path sym_pairs;
  std::filesystem::path table;  // geodesic neighbor table
  std::optional<std::filesystem::path> euclidean_table;
  std::optional<std::filesystem::path> occluder;  // static OBJ geometry
  TransferMode mode = TransferMode::kFull;
  std::size_t n = 50;
  double zeta = 0.1;
  bool record_neighbor_fills = true;
  /// Step III nearest-pixel search through a uniform grid (same result as
  /// the default brute force).
  bool grid_search = false;
  std::filesystem::path output;
};

JobConfig load_job_config(const std::filesystem::path& path);
void save_job_config(const std::filesystem::path& path, const JobConfig& config);

/// Canonical JSON of every field except the output directory.
std::string canonical_config(const JobConfig& config);
/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);

/// Checks the config contract (paths exist, n within the table's k, metric
/// matches mode, symmetric map covers the labels, matching sizes) without
/// running any stage. Throws Error.
void validate_config(const JobConfig& config);

/// A stage failure; frame is -1 for stage-wide failures.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, int frame, const std::string& what);
  const std::string& stage() const { return stage_; }
  int frame() const { return frame_; }

 private:
  std::string stage_;
  int frame_;
};

struct RunOptions {
  /// Load input/target face buffers from a previous run's raster stage in
  /// the same output directory instead of rasterizing again.
  bool reuse_rasterization = false;
};

struct RunSummary {
  std::size_t frames = 0;
  std::array<std::size_t, kProvenanceClasses> provenance_counts{};
  std::optional<MetricReport> transfer_metrics;   // texture vs ground truth
  std::optional<MetricReport> composite_metrics;  // composited frame vs ground truth
};

/// Runs rasterize -> transfer -> flow -> compose -> metrics and writes the
/// artifacts plus manifest.json into config.output. On failure the manifest
/// is written with "complete": false and a PipelineError is thrown.
RunSummary run_pipeline(const JobConfig& config, const RunOptions& options = {});

struct AblationCell {
  TransferMode mode;
  std::size_t n;
  double masked_ssim;
  double masked_psnr;
  std::size_t sentinel_pixels;
};

/// Every (mode, n) pair on one scene; needs ground truth. Geodesic modes use
/// config.table and the Euclidean mode config.euclidean_table.
std::vector<AblationCell> ablation_report(const JobConfig& config,
                                          std::span<const TransferMode> modes,
                                          std::span<const std::size_t> ns);
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationCell> cells);
void write_ablation_json(const std::filesystem::path& path, std::span<const AblationCell> cells);

/// NNNNNN
std::string frame_stem(std::size_t index);

}  // namespace meshwarp
