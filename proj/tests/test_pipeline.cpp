#include <cmath>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include "json.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/geodesy.hpp"
#include "meshwarp/pipeline.hpp"
#include "meshwarp/synthetic.hpp"
#include "support.hpp"

using namespace meshwarp;
namespace ts = testing_support;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

SceneSpec small_spec() {
  SceneSpec spec;
  spec.width = spec.height = 64;
  spec.frames = 3;
  spec.subdivisions = 2;
  spec.occluder = true;
  spec.noise_sigma = 4.0;
  return spec;
}

fs::path saved_scene(const std::string& name, const SceneSpec& spec, std::size_t k = 64) {
  const fs::path dir = ts::temp_dir(name);
  save_scene(generate_scene(spec), dir, {k, true});
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json manifest_of(const fs::path& out) { return json::parse(slurp(out / "manifest.json")); }

}  // namespace

TEST(Config, RoundTripResolvesRelativePaths) {
  const fs::path dir = saved_scene("cfg_roundtrip", small_spec());
  const JobConfig c = load_job_config(dir / "job.json");
  EXPECT_EQ(c.input_frames, dir / "input");
  EXPECT_EQ(c.mode, TransferMode::kFull);
  EXPECT_EQ(c.n, 50u);
  EXPECT_TRUE(c.ground_truth.has_value());
  EXPECT_NO_THROW(validate_config(c));

  save_job_config(dir / "copy.json", c);
  const JobConfig back = load_job_config(dir / "copy.json");
  EXPECT_EQ(canonical_config(back), canonical_config(c));

  JobConfig moved = c;
  moved.output = dir / "elsewhere";
  EXPECT_EQ(canonical_config(moved), canonical_config(c));
  moved.n = 10;
  EXPECT_NE(canonical_config(moved), canonical_config(c));
}

TEST(Config, ValidationFailsBeforeCompute) {
  const fs::path dir = saved_scene("cfg_validate", small_spec());
  JobConfig c = load_job_config(dir / "job.json");
  c.output = dir / "never";

  JobConfig missing = c;
  missing.table = dir / "nope.fnt";
  EXPECT_THROW(run_pipeline(missing), Error);
  EXPECT_FALSE(fs::exists(c.output));

  JobConfig wide = c;
  wide.n = 65;
  EXPECT_THROW(validate_config(wide), Error);

  JobConfig wrong_metric = c;
  wrong_metric.table = dir / "table_euclidean.fnt";
  EXPECT_THROW(validate_config(wrong_metric), Error);

  JobConfig euc = c;
  euc.mode = TransferMode::kEuclideanII;
  euc.euclidean_table.reset();
  EXPECT_THROW(validate_config(euc), Error);
  EXPECT_FALSE(fs::exists(c.output));
}

TEST(Hash, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a_hex({}), "cbf29ce484222325");
  const std::string a = "a";
  EXPECT_EQ(fnv1a_hex({reinterpret_cast<const std::uint8_t*>(a.data()), a.size()}), "af63dc4c8601ec8c");
  EXPECT_EQ(frame_stem(7), "000007");
}

TEST(Synthetic, SeedIsDeterministic) {
  SceneSpec spec = small_spec();
  spec.seed = 0;
  const fs::path a = ts::temp_dir("synth_a"), b = ts::temp_dir("synth_b");
  save_scene(generate_scene(spec), a, {16, true});
  save_scene(generate_scene(spec), b, {16, true});
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
}

TEST(Synthetic, OppositeYawCamerasDifferByRightAngle) {
  const SyntheticScene s = generate_scene(small_spec());
  const Eigen::Matrix3d rel = s.target_camera.rotation * s.input_camera.rotation.transpose();
  const Eigen::AngleAxisd aa(rel);
  EXPECT_NEAR(aa.angle(), std::numbers::pi / 2.0, 1e-9);
  // Axis is the world vertical as seen from the camera.
  const Eigen::Vector3d up_cam = s.input_camera.rotation * Eigen::Vector3d::UnitY();
  EXPECT_NEAR(std::abs(aa.axis().dot(up_cam)), 1.0, 1e-9);
}

TEST(Synthetic, StaticSceneFramesIdentical) {
  SceneSpec spec = small_spec();
  spec.motion = MotionScript::kStatic;
  spec.frames = 5;
  spec.noise_sigma = 0.0;
  const SyntheticScene s = generate_scene(spec);
  for (int t = 1; t < 5; ++t) {
    EXPECT_EQ(s.input_frames[t], s.input_frames[0]);
    EXPECT_EQ(s.target_frames[t], s.target_frames[0]);
  }
}

TEST(Pipeline, RunWritesCompleteManifest) {
  const fs::path dir = saved_scene("pipe_run", small_spec());
  const JobConfig c = load_job_config(dir / "job.json");
  const RunSummary r = run_pipeline(c);
  EXPECT_EQ(r.frames, 3u);
  ASSERT_TRUE(r.transfer_metrics.has_value());
  const json m = manifest_of(c.output);
  EXPECT_TRUE(m.at("complete").get<bool>());
  EXPECT_TRUE(m.at("error").is_null());
  EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);
  const auto stages = m.at("stages").get<std::vector<std::string>>();
  EXPECT_EQ(stages, (std::vector<std::string>{"load", "rasterize", "transfer", "flow", "compose", "metrics"}));
  std::vector<std::string> paths;
  for (const auto& a : m.at("artifacts")) {
    const std::string p = a.at("path");
    paths.push_back(p);
    const std::string bytes = slurp(c.output / p);
    EXPECT_EQ(a.at("bytes").get<std::size_t>(), bytes.size());
    EXPECT_EQ(a.at("fnv1a64").get<std::string>(),
              fnv1a_hex({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()}));
  }
  EXPECT_TRUE(std::is_sorted(paths.begin(), paths.end()));
  for (const char* p : {"texture/000002.png", "provenance/000000.png", "flow/000001.flo", "compose/000002.png",
                        "mask/000000.png", "depth/000000.png", "segmentation/000000.png", "stats/000001.json",
                        "metrics_transfer.json", "metrics_composite.json"}) {
    EXPECT_NE(std::find(paths.begin(), paths.end(), p), paths.end()) << p;
  }
  std::size_t fg = 0;
  for (std::size_t p = 1; p < kProvenanceClasses; ++p) fg += r.provenance_counts[p];
  EXPECT_GT(fg, 0u);
}

TEST(Pipeline, ReusedRasterizationGivesIdenticalOutputs) {
  const fs::path dir = saved_scene("pipe_reuse", small_spec());
  JobConfig c = load_job_config(dir / "job.json");
  run_pipeline(c);
  const std::string first = slurp(c.output / "manifest.json");
  run_pipeline(c, {.reuse_rasterization = true});
  EXPECT_EQ(slurp(c.output / "manifest.json"), first);

  JobConfig other = c;
  other.n = 10;
  EXPECT_THROW(run_pipeline(other, {.reuse_rasterization = true}), PipelineError);
}

TEST(Pipeline, StageFailureIsRecorded) {
  const fs::path dir = saved_scene("pipe_fail", small_spec());
  const JobConfig c = load_job_config(dir / "job.json");
  fs::remove(dir / "input" / "000001.png");
  try {
    run_pipeline(c);
    FAIL() << "expected a pipeline error";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage(), "load");
    EXPECT_EQ(e.frame(), 1);
  }
  const json m = manifest_of(c.output);
  EXPECT_FALSE(m.at("complete").get<bool>());
  EXPECT_EQ(m.at("error").at("stage"), "load");
  EXPECT_EQ(m.at("error").at("frame"), 1);
}

TEST(Ablation, SingleCellMatchesDirectRun) {
  const fs::path dir = saved_scene("abl_single", small_spec());
  JobConfig c = load_job_config(dir / "job.json");
  c.mode = TransferMode::kIIandIII;
  c.n = 20;
  const std::vector<TransferMode> modes = {c.mode};
  const std::vector<std::size_t> ns = {c.n};
  const auto cells = ablation_report(c, modes, ns);
  ASSERT_EQ(cells.size(), 1u);
  const RunSummary r = run_pipeline(c);
  EXPECT_EQ(cells[0].masked_psnr, r.transfer_metrics->mean_masked_psnr());
  EXPECT_EQ(cells[0].masked_ssim, r.transfer_metrics->mean_masked_ssim());
  EXPECT_EQ(cells[0].sentinel_pixels, r.provenance_counts[static_cast<std::size_t>(Provenance::kSentinel)]);

  write_ablation_csv(dir / "a.csv", cells);
  write_ablation_json(dir / "a.json", cells);
  EXPECT_NE(slurp(dir / "a.csv").find("II+III"), std::string::npos);
  EXPECT_EQ(json::parse(slurp(dir / "a.json")).size(), 1u);
}

TEST(Ablation, CellsConsistentWithIndividualRuns) {
  const fs::path dir = saved_scene("abl_grid", small_spec());
  JobConfig c = load_job_config(dir / "job.json");
  const std::vector<TransferMode> modes = {TransferMode::kEuclideanII, TransferMode::kII, TransferMode::kFull};
  const std::vector<std::size_t> ns = {5, 40};
  const auto cells = ablation_report(c, modes, ns);
  ASSERT_EQ(cells.size(), 6u);
  for (const AblationCell& cell : cells) {
    JobConfig one = c;
    one.mode = cell.mode;
    one.n = cell.n;
    one.output = dir / ("single_" + std::string(to_string(cell.mode)) + "_" + std::to_string(cell.n));
    const RunSummary r = run_pipeline(one);
    EXPECT_EQ(cell.masked_psnr, r.transfer_metrics->mean_masked_psnr());
  }
}

TEST(Ablation, SymmetricStepRemovesSentinelsOfOccludedLimb) {
  // The occluder hides the whole left arm from the input view; only Step III
  // can paint it in the target view.
  SceneSpec spec = small_spec();
  spec.width = spec.height = 96;
  spec.subdivisions = 3;
  const fs::path dir = saved_scene("abl_sentinel", spec, 100);
  const JobConfig c = load_job_config(dir / "job.json");
  const std::vector<TransferMode> modes = {TransferMode::kII, TransferMode::kIIandIII};
  const std::vector<std::size_t> ns = {10};
  const auto cells = ablation_report(c, modes, ns);
  EXPECT_GT(cells[0].sentinel_pixels, 0u);
  EXPECT_LT(cells[1].sentinel_pixels, cells[0].sentinel_pixels);
  EXPECT_GE(cells[1].masked_psnr, cells[0].masked_psnr);
}
