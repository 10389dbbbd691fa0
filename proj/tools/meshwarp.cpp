// meshwarp command line: each subcommand runs one stage on files, `run` does
// the whole job from a JSON config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "meshwarp/camera.hpp"
#include "meshwarp/geodesy.hpp"
#include "meshwarp/metrics.hpp"
#include "meshwarp/motion.hpp"
#include "meshwarp/pipeline.hpp"
#include "meshwarp/png_io.hpp"
#include "meshwarp/raster.hpp"
#include "meshwarp/synthetic.hpp"
#include "meshwarp/transfer.hpp"

namespace fs = std::filesystem;
using namespace meshwarp;

namespace {

// Frames are addressed by index: NNNNNN<ext> from 0 until the first gap.
std::size_t count_frames(const fs::path& dir, const std::string& ext) {
  std::size_t t = 0;
  while (fs::exists(dir / (frame_stem(t) + ext))) ++t;
  if (t == 0) throw Error("no frames " + frame_stem(0) + ext + " in " + dir.string());
  return t;
}

fs::path frame_path(const fs::path& dir, std::size_t t, const std::string& ext) {
  return dir / (frame_stem(t) + ext);
}

std::vector<ImageU8> read_frames(const fs::path& dir, std::size_t count, int channels) {
  std::vector<ImageU8> out;
  for (std::size_t t = 0; t < count; ++t) out.push_back(read_png(frame_path(dir, t, ".png"), channels));
  return out;
}

std::vector<FaceBuffer> read_buffers(const fs::path& dir, std::size_t count) {
  std::vector<FaceBuffer> out;
  for (std::size_t t = 0; t < count; ++t) out.push_back(read_face_buffer(frame_path(dir, t, ".fb1")));
  return out;
}

// Nonzero mask pixels are foreground.
ImageU8 binary_mask(const ImageU8& m) {
  ImageU8 out = m;
  for (auto& v : out.data()) v = v != 0 ? 1 : 0;
  return out;
}

ImageU8 viewable_mask(const ImageU8& m) {
  ImageU8 out = m;
  for (auto& v : out.data()) v = v != 0 ? 255 : 0;
  return out;
}

void cmd_geodesic(const fs::path& mesh_path, std::size_t k, const std::string& metric,
                  const fs::path& out) {
  const ObjGeometry obj = read_obj(mesh_path);
  BodyMesh mesh;
  mesh.vertices = obj.vertices;
  mesh.faces = obj.faces;
  mesh.face_labels.assign(mesh.faces.size(), 1);
  mesh.validate();
  const NeighborTable table = build_neighbor_table(mesh, k, parse_metric(metric));
  save_table(out, table);
  std::printf("%zu faces, k = %zu, %zu short rows -> %s\n", table.face_count(), table.k(),
              table.short_rows(), out.string().c_str());
}

struct RenderArgs {
  fs::path sequence, mesh, labels, camera, occluder, out;
};

void cmd_render(const RenderArgs& a) {
  const BodyMesh mesh = load_mesh(a.mesh, a.labels);
  const MeshSequence seq = load_mesh_sequence(a.sequence);
  seq.validate(mesh.vertices.size());
  const Camera cam = read_camera_json(a.camera);
  ObjGeometry occ;
  if (!a.occluder.empty()) occ = read_obj(a.occluder);
  for (const char* sub : {"fb", "mask", "depth", "segmentation", "shade"}) fs::create_directories(a.out / sub);
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    const FaceBuffer fb = rasterize_with_occluders(mesh, seq.frames[t], occ.vertices, occ.faces, cam);
    write_face_buffer(frame_path(a.out / "fb", t, ".fb1"), fb);
    write_png(frame_path(a.out / "mask", t, ".png"), viewable_mask(mask_of(fb)));
    write_depth_png(frame_path(a.out / "depth", t, ".png"), depth_of(fb));
    write_segmentation_png(frame_path(a.out / "segmentation", t, ".png"), segmentation_of(fb, mesh));
    write_png(frame_path(a.out / "shade", t, ".png"), shade(fb, mesh, seq.frames[t], cam));
  }
  std::printf("rendered %zu frames -> %s\n", seq.frame_count(), a.out.string().c_str());
}

struct TransferArgs {
  fs::path input_frames, input_buffers, target_buffers, mesh, labels, sym, table, out;
  std::string mode = "I+II+III";
  std::size_t n = 50;
  bool direct_only_pools = false;
  bool grid = false;
};

void cmd_transfer(const TransferArgs& a) {
  const BodyMesh mesh = load_mesh(a.mesh, a.labels);
  const SymmetricPartMap sym = read_sym_pairs_csv(a.sym);
  sym.validate_covers(mesh);
  const NeighborTable table = load_table(a.table);
  const std::size_t frames = count_frames(a.input_frames, ".png");
  const auto inputs = read_frames(a.input_frames, frames, 3);
  const auto in_buf = read_buffers(a.input_buffers, frames);
  const auto tgt_buf = read_buffers(a.target_buffers, frames);
  TransferOptions opts;
  opts.mode = parse_transfer_mode(a.mode);
  opts.n = a.n;
  opts.step2.record_neighbor_fills = !a.direct_only_pools;
  opts.search = a.grid ? NearestSearch::kGrid : NearestSearch::kBruteForce;
  const auto results = transfer_sequence(inputs, in_buf, tgt_buf, mesh, table, sym, opts);
  for (const char* sub : {"texture", "provenance", "stats"}) fs::create_directories(a.out / sub);
  for (std::size_t t = 0; t < frames; ++t) {
    write_png(frame_path(a.out / "texture", t, ".png"), results[t].texture);
    write_png(frame_path(a.out / "provenance", t, ".png"), provenance_image(results[t].filled_by));
    std::ofstream stats(frame_path(a.out / "stats", t, ".json"));
    const auto counts = results[t].counts();
    stats << "{";
    for (std::size_t p = 0; p < kProvenanceClasses; ++p) {
      stats << (p ? ", " : "") << '"' << to_string(static_cast<Provenance>(p)) << "\": " << counts[p];
    }
    stats << "}\n";
  }
  std::printf("transferred %zu frames (%s, n = %zu) -> %s\n", frames, a.mode.c_str(), a.n,
              a.out.string().c_str());
}

void cmd_flow(const fs::path& buffers, const fs::path& out) {
  const std::size_t frames = count_frames(buffers, ".fb1");
  const auto bufs = read_buffers(buffers, frames);
  fs::create_directories(out / "viz");
  for (std::size_t t = 0; t < frames; ++t) {
    const FlowField flow =
        t == 0 ? FlowField(bufs[0].width, bufs[0].height) : flow_between(bufs[t - 1], bufs[t]);
    write_flow(frame_path(out, t, ".flo"), flow);
    write_png(frame_path(out / "viz", t, ".png"), flow_to_color(flow));
  }
  std::printf("wrote %zu flow fields -> %s\n", frames, out.string().c_str());
}

struct ComposeArgs {
  fs::path textures, flow, masks, background, out;
  double zeta = 0.1;
};

void cmd_compose(const ComposeArgs& a) {
  const std::size_t frames = count_frames(a.textures, ".png");
  fs::create_directories(a.out);
  ImageF previous;
  for (std::size_t t = 0; t < frames; ++t) {
    const ImageF initial = to_float(read_png(frame_path(a.textures, t, ".png"), 3));
    const ImageU8 mask = binary_mask(read_png(frame_path(a.masks, t, ".png"), 1));
    ImageF current = initial;
    if (t > 0) current = temporal_compose(initial, previous, read_flow(frame_path(a.flow, t, ".flo")), a.zeta);
    const ImageF bg = a.background.empty() ? ImageF(initial.width(), initial.height(), 3, 0.0f)
                                           : to_float(read_png(a.background, 3));
    write_png(frame_path(a.out, t, ".png"), to_u8(composite(current, bg, mask)));
    previous = std::move(current);
  }
  std::printf("composed %zu frames -> %s\n", frames, a.out.string().c_str());
}

void cmd_metrics(const fs::path& pred, const fs::path& gt, const fs::path& masks, const fs::path& out,
                 bool bbox) {
  const std::size_t frames = count_frames(pred, ".png");
  const auto p = read_frames(pred, frames, 3);
  const auto g = read_frames(gt, frames, 3);
  std::vector<ImageU8> m;
  for (std::size_t t = 0; t < frames; ++t) m.push_back(binary_mask(read_png(frame_path(masks, t, ".png"), 1)));
  const MetricReport report =
      evaluate_sequence(p, g, m, bbox ? MaskMode::kBoundingBox : MaskMode::kZeroBackground);
  write_report_json(out, report);
  std::printf("frames %zu  SSIM %.4f  M-SSIM %.4f  PSNR %.2f  M-PSNR %.2f\n", frames,
              report.mean_ssim(), report.mean_masked_ssim(), report.mean_psnr(),
              report.mean_masked_psnr());
}

struct SynthArgs {
  fs::path out;
  SceneSpec spec;
  std::string motion = "walk";
  std::size_t k = 512;
  bool no_tables = false;
};

void cmd_synth(SynthArgs a) {
  if (a.motion == "static") a.spec.motion = MotionScript::kStatic;
  else if (a.motion == "translate") a.spec.motion = MotionScript::kTranslate;
  else if (a.motion == "walk") a.spec.motion = MotionScript::kWalk;
  else throw Error("unknown motion '" + a.motion + "' (static, translate, walk)");
  const SyntheticScene scene = generate_scene(a.spec);
  save_scene(scene, a.out, {a.k, !a.no_tables});
  std::printf("scene with %zu faces, %d frames -> %s\n", scene.mesh.face_count(), a.spec.frames,
              a.out.string().c_str());
}

void print_cells(const std::vector<AblationCell>& cells) {
  std::printf("%-10s %6s %10s %10s %10s\n", "mode", "n", "M-SSIM", "M-PSNR", "sentinel");
  for (const AblationCell& c : cells) {
    std::printf("%-10s %6zu %10.4f %10.2f %10zu\n", std::string(to_string(c.mode)).c_str(), c.n,
                c.masked_ssim, c.masked_psnr, c.sentinel_pixels);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric texture transfer for novel-view human synthesis"};
  app.require_subcommand(1);

  auto* geo = app.add_subcommand("geodesic", "Precompute a nearest-face table");
  fs::path geo_mesh, geo_out;
  std::size_t geo_k = 512;
  std::string geo_metric = "geodesic";
  geo->add_option("--mesh", geo_mesh, "Template OBJ")->required()->check(CLI::ExistingFile);
  geo->add_option("--k", geo_k, "Neighbors per face");
  geo->add_option("--metric", geo_metric, "geodesic or euclidean");
  geo->add_option("-o,--out", geo_out, "Output .fnt")->required();

  auto* render = app.add_subcommand("render", "Rasterize a mesh sequence in one view");
  RenderArgs ra;
  render->add_option("--mesh-sequence", ra.sequence, "MSEQ1 file or OBJ directory")->required();
  render->add_option("--mesh", ra.mesh, "Template OBJ")->required()->check(CLI::ExistingFile);
  render->add_option("--labels", ra.labels, "Face labels CSV")->required()->check(CLI::ExistingFile);
  render->add_option("--camera", ra.camera, "Camera JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--occluder", ra.occluder, "Static occluder OBJ");
  render->add_option("-o,--out", ra.out, "Output directory")->required();

  auto* transfer = app.add_subcommand("transfer", "Transfer texture into the target view");
  TransferArgs ta;
  transfer->add_option("--input-frames", ta.input_frames, "Input-view PNG directory")->required();
  transfer->add_option("--input-buffers", ta.input_buffers, "Input-view FB1 directory")->required();
  transfer->add_option("--target-buffers", ta.target_buffers, "Target-view FB1 directory")->required();
  transfer->add_option("--mesh", ta.mesh, "Template OBJ")->required();
  transfer->add_option("--labels", ta.labels, "Face labels CSV")->required();
  transfer->add_option("--sym-pairs", ta.sym, "Symmetric pairs CSV")->required();
  transfer->add_option("--table", ta.table, "Neighbor table .fnt")->required();
  transfer->add_option("--mode", ta.mode, "euclidean-II, II, II+III, or I+II+III");
  transfer->add_option("--n", ta.n, "Nearest faces searched in Step II");
  transfer->add_flag("--direct-only-pools", ta.direct_only_pools,
                     "Step III searches only directly painted pixels");
  transfer->add_flag("--grid", ta.grid, "Grid-accelerated Step III search");
  transfer->add_option("-o,--out", ta.out, "Output directory")->required();

  auto* flow = app.add_subcommand("flow", "Mesh-derived backward flow between frames");
  fs::path flow_buffers, flow_out;
  flow->add_option("--buffers", flow_buffers, "Target-view FB1 directory")->required();
  flow->add_option("-o,--out", flow_out, "Output directory")->required();

  auto* compose = app.add_subcommand("compose", "Temporal composition and compositing");
  ComposeArgs ca;
  compose->add_option("--textures", ca.textures, "Texture PNG directory")->required();
  compose->add_option("--flow", ca.flow, "FLO1 directory")->required();
  compose->add_option("--masks", ca.masks, "Mask PNG directory")->required();
  compose->add_option("--background", ca.background, "Background plate PNG (default black)");
  compose->add_option("--zeta", ca.zeta, "Weight of the warped previous frame");
  compose->add_option("-o,--out", ca.out, "Output directory")->required();

  auto* metrics = app.add_subcommand("metrics", "SSIM/PSNR and masked variants");
  fs::path m_pred, m_gt, m_mask, m_out;
  bool m_bbox = false;
  metrics->add_option("--pred", m_pred, "Predicted PNG directory")->required();
  metrics->add_option("--gt", m_gt, "Ground-truth PNG directory")->required();
  metrics->add_option("--mask", m_mask, "Mask PNG directory")->required();
  metrics->add_option("--out", m_out, "Report JSON")->required();
  metrics->add_flag("--bbox", m_bbox, "Crop to the mask bounding box instead of zeroing background");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-camera scene");
  SynthArgs sa;
  synth->add_option("-o,--out", sa.out, "Output directory")->required();
  synth->add_option("--width", sa.spec.width);
  synth->add_option("--height", sa.spec.height);
  synth->add_option("--frames", sa.spec.frames);
  synth->add_option("--subdivisions", sa.spec.subdivisions, "Cells per coarse quad side");
  synth->add_option("--input-yaw", sa.spec.input_yaw_deg, "Input camera azimuth in degrees");
  synth->add_option("--target-yaw", sa.spec.target_yaw_deg, "Target camera azimuth in degrees");
  synth->add_option("--distance", sa.spec.camera_distance, "Camera distance in meters");
  synth->add_option("--motion", sa.motion, "static, translate, or walk");
  synth->add_option("--elbow-bend", sa.spec.elbow_bend_deg, "Elbow flexion in degrees");
  synth->add_flag("--occluder", sa.spec.occluder, "Hide the left arm from the input camera");
  synth->add_option("--noise", sa.spec.noise_sigma, "Input-frame noise sigma");
  synth->add_option("--seed", sa.spec.seed);
  synth->add_option("--k", sa.k, "Neighbor table size");
  synth->add_flag("--no-tables", sa.no_tables, "Skip neighbor-table precompute");

  auto* ablate = app.add_subcommand("ablate", "Masked metrics for every (mode, n) pair");
  fs::path ab_config, ab_out;
  std::vector<std::string> ab_modes = {"euclidean-II", "II", "II+III", "I+II+III"};
  std::vector<std::size_t> ab_ns = {50};
  ablate->add_option("--config", ab_config, "Job JSON")->required()->check(CLI::ExistingFile);
  ablate->add_option("--modes", ab_modes, "Transfer modes")->delimiter(',');
  ablate->add_option("--n", ab_ns, "Values of n")->delimiter(',');
  ablate->add_option("-o,--out", ab_out, "Output prefix (.csv and .json are appended)")->required();

  auto* run = app.add_subcommand("run", "Full pipeline from a job config");
  fs::path run_config;
  std::optional<std::string> run_mode;
  std::optional<std::size_t> run_n;
  std::optional<double> run_zeta;
  std::optional<fs::path> run_output, run_table, run_background;
  bool run_reuse = false;
  run->add_option("--config", run_config, "Job JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", run_mode, "Override the transfer mode");
  run->add_option("--n", run_n, "Override n");
  run->add_option("--zeta", run_zeta, "Override zeta");
  run->add_option("--output", run_output, "Override the output directory");
  run->add_option("--table", run_table, "Override the neighbor table");
  run->add_option("--background", run_background, "Background plate PNG");
  run->add_flag("--reuse-raster", run_reuse, "Reuse cached face buffers from a previous run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*geo) cmd_geodesic(geo_mesh, geo_k, geo_metric, geo_out);
    if (*render) cmd_render(ra);
    if (*transfer) cmd_transfer(ta);
    if (*flow) cmd_flow(flow_buffers, flow_out);
    if (*compose) cmd_compose(ca);
    if (*metrics) cmd_metrics(m_pred, m_gt, m_mask, m_out, m_bbox);
    if (*synth) cmd_synth(sa);
    if (*ablate) {
      const JobConfig cfg = load_job_config(ab_config);
      std::vector<TransferMode> modes;
      for (const auto& m : ab_modes) modes.push_back(parse_transfer_mode(m));
      const auto cells = ablation_report(cfg, modes, ab_ns);
      write_ablation_csv(fs::path(ab_out.string() + ".csv"), cells);
      write_ablation_json(fs::path(ab_out.string() + ".json"), cells);
      print_cells(cells);
    }
    if (*run) {
      JobConfig cfg = load_job_config(run_config);
      if (run_mode) cfg.mode = parse_transfer_mode(*run_mode);
      if (run_n) cfg.n = *run_n;
      if (run_zeta) cfg.zeta = *run_zeta;
      if (run_output) cfg.output = *run_output;
      if (run_table) cfg.table = *run_table;
      if (run_background) cfg.background = *run_background;
      const RunSummary s = run_pipeline(cfg, {run_reuse});
      std::printf("%zu frames -> %s\n", s.frames, cfg.output.string().c_str());
      if (s.transfer_metrics) {
        std::printf("transfer  M-SSIM %.4f  M-PSNR %.2f\n", s.transfer_metrics->mean_masked_ssim(),
                    s.transfer_metrics->mean_masked_psnr());
      }
    }
  } catch (const PipelineError& e) {
    std::fprintf(stderr, "error in stage %s (frame %d): %s\n", e.stage().c_str(), e.frame(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
