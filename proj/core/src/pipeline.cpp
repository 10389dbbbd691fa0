#include "meshwarp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>

#include "binary_io.hpp"
#include "json.hpp"
#include "meshwarp/camera.hpp"
#include "meshwarp/geodesy.hpp"
#include "meshwarp/motion.hpp"
#include "meshwarp/parallel.hpp"
#include "meshwarp/png_io.hpp"
#include "meshwarp/raster.hpp"

namespace meshwarp {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string frame_stem(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineError::PipelineError(std::string stage, int frame, const std::string& what)
    : Error(stage + (frame >= 0 ? " (frame " + std::to_string(frame) + ")" : std::string()) +
            ": " + what),
      stage_(std::move(stage)),
      frame_(frame) {}

// ---------------------------------------------------------------------------
// Config

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

const json& require_key(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error("config: missing field " + where + key);
  return j.at(key);
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

json config_to_json(const JobConfig& c, bool with_output) {
  json j;
  j["input"] = {{"frames", path_string(c.input_frames)}, {"camera", path_string(c.input_camera)}};
  j["target"] = {{"camera", path_string(c.target_camera)}};
  if (c.ground_truth) j["target"]["ground_truth"] = path_string(*c.ground_truth);
  if (c.background) j["target"]["background"] = path_string(*c.background);
  j["mesh_sequence"] = path_string(c.mesh_sequence);
  j["template"] = {{"mesh", path_string(c.template_mesh)},
                   {"labels", path_string(c.labels)},
                   {"sym_pairs", path_string(c.sym_pairs)}};
  if (!c.table.empty()) j["table"] = path_string(c.table);
  if (c.euclidean_table) j["euclidean_table"] = path_string(*c.euclidean_table);
  if (c.occluder) j["occluder"] = path_string(*c.occluder);
  j["mode"] = std::string(to_string(c.mode));
  j["n"] = c.n;
  j["zeta"] = c.zeta;
  j["record_neighbor_fills"] = c.record_neighbor_fills;
  j["grid_search"] = c.grid_search;
  if (with_output) j["output"] = path_string(c.output);
  return j;
}

}  // namespace

JobConfig load_job_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  JobConfig c;
  try {
    const json& input = require_key(j, "input", "");
    c.input_frames = resolve(base, require_key(input, "frames", "input.").get<std::string>());
    c.input_camera = resolve(base, require_key(input, "camera", "input.").get<std::string>());
    const json& target = require_key(j, "target", "");
    c.target_camera = resolve(base, require_key(target, "camera", "target.").get<std::string>());
    if (target.contains("ground_truth")) {
      c.ground_truth = resolve(base, target.at("ground_truth").get<std::string>());
    }
    if (target.contains("background")) {
      c.background = resolve(base, target.at("background").get<std::string>());
    }
    c.mesh_sequence = resolve(base, require_key(j, "mesh_sequence", "").get<std::string>());
    const json& tmpl = require_key(j, "template", "");
    c.template_mesh = resolve(base, require_key(tmpl, "mesh", "template.").get<std::string>());
    c.labels = resolve(base, require_key(tmpl, "labels", "template.").get<std::string>());
    c.sym_pairs = resolve(base, require_key(tmpl, "sym_pairs", "template.").get<std::string>());
    if (j.contains("table")) c.table = resolve(base, j.at("table").get<std::string>());
    if (j.contains("euclidean_table")) {
      c.euclidean_table = resolve(base, j.at("euclidean_table").get<std::string>());
    }
    if (j.contains("occluder")) c.occluder = resolve(base, j.at("occluder").get<std::string>());
    if (j.contains("mode")) c.mode = parse_transfer_mode(j.at("mode").get<std::string>());
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("zeta")) c.zeta = j.at("zeta").get<double>();
    if (j.contains("record_neighbor_fills")) {
      c.record_neighbor_fills = j.at("record_neighbor_fills").get<bool>();
    }
    if (j.contains("grid_search")) c.grid_search = j.at("grid_search").get<bool>();
    c.output = resolve(base, j.value("output", std::string("out")));
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return c;
}

void save_job_config(const fs::path& path, const JobConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << config_to_json(config, true).dump(2) << '\n';
}

std::string canonical_config(const JobConfig& config) { return config_to_json(config, false).dump(); }

namespace {

struct TableHeader {
  DistanceMetric metric;
  std::uint32_t face_count;
  std::uint32_t k;
};

TableHeader read_table_header(const fs::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FNT1");
  const std::uint8_t tag = in.u8();
  if (tag > 1) throw Error(path.string() + ": unknown metric tag " + std::to_string(tag));
  TableHeader h{static_cast<DistanceMetric>(tag), in.u32(), in.u32()};
  return h;
}

void require_exists(const char* what, const fs::path& p) {
  if (p.empty()) throw Error(std::string("config: ") + what + " path is not set");
  if (!fs::exists(p)) throw Error(std::string("config: ") + what + " does not exist: " + p.string());
}

void require_directory(const char* what, const fs::path& p) {
  require_exists(what, p);
  if (!fs::is_directory(p)) throw Error(std::string("config: ") + what + " is not a directory: " + p.string());
}

const fs::path& table_for(const JobConfig& c, TransferMode mode) {
  if (required_metric(mode) == DistanceMetric::kEuclidean) {
    if (!c.euclidean_table) throw Error("config: mode " + std::string(to_string(mode)) +
                                        " needs euclidean_table");
    return *c.euclidean_table;
  }
  return c.table;
}

void validate_table(const JobConfig& c, TransferMode mode, std::size_t n, std::size_t face_count) {
  const fs::path& path = table_for(c, mode);
  require_exists("neighbor table", path);
  const TableHeader h = read_table_header(path);
  if (h.metric != required_metric(mode)) {
    throw Error("config: mode " + std::string(to_string(mode)) + " needs a " +
                std::string(to_string(required_metric(mode))) + " table but " + path.string() +
                " is " + std::string(to_string(h.metric)));
  }
  if (h.face_count != face_count) {
    throw Error("config: table " + path.string() + " has " + std::to_string(h.face_count) +
                " faces, template has " + std::to_string(face_count));
  }
  if (n < 1 || n > h.k) {
    throw Error("config: n = " + std::to_string(n) + " must be in [1, k = " + std::to_string(h.k) + "]");
  }
}

}  // namespace

void validate_config(const JobConfig& c) {
  require_directory("input frames", c.input_frames);
  require_exists("input camera", c.input_camera);
  require_exists("target camera", c.target_camera);
  require_exists("mesh sequence", c.mesh_sequence);
  require_exists("template mesh", c.template_mesh);
  require_exists("labels", c.labels);
  require_exists("sym pairs", c.sym_pairs);
  require_exists("neighbor table", table_for(c, c.mode));
  if (c.ground_truth) require_directory("ground truth", *c.ground_truth);
  if (c.background) require_exists("background", *c.background);
  if (c.occluder) require_exists("occluder", *c.occluder);
  if (c.output.empty()) throw Error("config: output path is not set");
  if (!std::isfinite(c.zeta)) throw Error("config: zeta must be finite");

  const BodyMesh mesh = load_mesh(c.template_mesh, c.labels);
  read_sym_pairs_csv(c.sym_pairs).validate_covers(mesh);
  validate_table(c, c.mode, c.n, mesh.face_count());
}

// ---------------------------------------------------------------------------
// Stages

namespace {

struct Scene {
  BodyMesh mesh;
  SymmetricPartMap sym;
  MeshSequence sequence;
  Camera input_camera;
  Camera target_camera;
  ObjGeometry occluder;
  std::vector<ImageU8> input_frames;
  std::vector<ImageU8> ground_truth;
  ImageU8 background;
};

ImageU8 read_frame(const fs::path& dir, std::size_t t, const char* stage, const Camera& cam) {
  const fs::path p = dir / (frame_stem(t) + ".png");
  if (!fs::exists(p)) throw PipelineError(stage, static_cast<int>(t), "missing " + p.string());
  ImageU8 img = read_png(p, 3);
  if (img.width() != cam.width || img.height() != cam.height) {
    throw PipelineError(stage, static_cast<int>(t),
                        p.string() + " does not match the camera resolution");
  }
  return img;
}

Scene load_scene(const JobConfig& c) {
  Scene s;
  try {
    s.mesh = load_mesh(c.template_mesh, c.labels);
    s.sym = read_sym_pairs_csv(c.sym_pairs);
    s.sym.validate_covers(s.mesh);
    s.sequence = load_mesh_sequence(c.mesh_sequence);
    s.sequence.validate(s.mesh.vertices.size());
    if (s.sequence.frame_count() == 0) throw Error("mesh sequence has no frames");
    s.input_camera = read_camera_json(c.input_camera);
    s.target_camera = read_camera_json(c.target_camera);
    if (c.occluder) s.occluder = read_obj(*c.occluder);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("load", -1, e.what());
  }
  const std::size_t frames = s.sequence.frame_count();
  for (std::size_t t = 0; t < frames; ++t) {
    s.input_frames.push_back(read_frame(c.input_frames, t, "load", s.input_camera));
    if (c.ground_truth) s.ground_truth.push_back(read_frame(*c.ground_truth, t, "load", s.target_camera));
  }
  if (c.background) {
    s.background = read_png(*c.background, 3);
    if (s.background.width() != s.target_camera.width || s.background.height() != s.target_camera.height) {
      throw PipelineError("load", -1, "background does not match the target resolution");
    }
  } else {
    s.background = ImageU8(s.target_camera.width, s.target_camera.height, 3, 0);
  }
  return s;
}

struct Buffers {
  std::vector<FaceBuffer> input;
  std::vector<FaceBuffer> target;
};

// Runs fn(t) for every frame in parallel, tagging failures with the frame.
template <typename Fn>
void for_frames(std::size_t frames, const char* stage, Fn&& fn) {
  parallel_for(frames, [&](std::size_t t) {
    try {
      fn(t);
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError(stage, static_cast<int>(t), e.what());
    }
  });
}

Buffers rasterize_views(const Scene& s) {
  const std::size_t frames = s.sequence.frame_count();
  Buffers b;
  b.input.resize(frames);
  b.target.resize(frames);
  for_frames(frames, "rasterize", [&](std::size_t t) {
    const Vertices& posed = s.sequence.frames[t];
    b.input[t] = rasterize_with_occluders(s.mesh, posed, s.occluder.vertices, s.occluder.faces,
                                          s.input_camera);
    b.target[t] = rasterize_with_occluders(s.mesh, posed, s.occluder.vertices, s.occluder.faces,
                                           s.target_camera);
  });
  return b;
}

ImageU8 mask_image(const FaceBuffer& buffer) {
  ImageU8 m = mask_of(buffer);
  for (auto& v : m.data()) v = v ? 255 : 0;
  return m;
}

std::vector<TransferResult> run_transfer(const JobConfig& c, const Scene& s, const Buffers& b,
                                         TransferMode mode, std::size_t n,
                                         const NeighborTable& table) {
  TransferOptions opts;
  opts.mode = mode;
  opts.n = n;
  opts.step2.record_neighbor_fills = c.record_neighbor_fills;
  opts.search = c.grid_search ? NearestSearch::kGrid : NearestSearch::kBruteForce;
  return transfer_sequence(s.input_frames, b.input, b.target, s.mesh, table, s.sym, opts);
}

std::vector<ImageU8> masks_of(const std::vector<FaceBuffer>& buffers) {
  std::vector<ImageU8> masks;
  masks.reserve(buffers.size());
  for (const FaceBuffer& fb : buffers) masks.push_back(mask_of(fb));
  return masks;
}

std::vector<ImageU8> textures_of(const std::vector<TransferResult>& results) {
  std::vector<ImageU8> out;
  out.reserve(results.size());
  for (const TransferResult& r : results) out.push_back(r.texture);
  return out;
}

json counts_json(const std::array<std::size_t, kProvenanceClasses>& counts) {
  json j;
  for (std::size_t p = 0; p < kProvenanceClasses; ++p) {
    j[std::string(to_string(static_cast<Provenance>(p)))] = counts[p];
  }
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tracks written artifacts and the completed stages; serialized as the
// manifest. Nothing time- or thread-dependent goes in.
class Manifest {
 public:
  Manifest(fs::path root, std::string config_hash, std::size_t frames)
      : root_(std::move(root)), config_hash_(std::move(config_hash)), frames_(frames) {}

  fs::path path(const std::string& relative) {
    const fs::path p = root_ / relative;
    fs::create_directories(p.parent_path());
    std::lock_guard lock(mutex_);
    artifacts_.push_back(relative);
    return p;
  }
  void stage_done(const char* stage) { stages_.emplace_back(stage); }

  void write(const PipelineError* error) const {
    std::vector<std::string> sorted = artifacts_;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    json artifacts = json::array();
    for (const std::string& rel : sorted) {
      const fs::path p = root_ / rel;
      if (!fs::exists(p)) continue;
      const auto bytes = read_bytes(p);
      artifacts.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a_hex(bytes)}});
    }
    json j;
    j["config_hash"] = config_hash_;
    j["frames"] = frames_;
    j["stages"] = stages_;
    j["complete"] = error == nullptr;
    j["error"] = error ? json{{"stage", error->stage()}, {"frame", error->frame()}, {"message", error->what()}}
                       : json(nullptr);
    j["artifacts"] = artifacts;
    write_json(root_ / "manifest.json", j);
  }

 private:
  fs::path root_;
  std::string config_hash_;
  std::size_t frames_;
  std::mutex mutex_;
  std::vector<std::string> artifacts_;
  std::vector<std::string> stages_;
};

std::string config_hash(const JobConfig& c) {
  const std::string text = canonical_config(c);
  return fnv1a_hex({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Buffers load_cached_buffers(const JobConfig& c, std::size_t frames, const std::string& hash) {
  const fs::path manifest_path = c.output / "manifest.json";
  if (!fs::exists(manifest_path)) throw PipelineError("rasterize", -1, "no cached manifest in " + c.output.string());
  std::ifstream in(manifest_path);
  const json m = json::parse(in);
  const auto stages = m.at("stages").get<std::vector<std::string>>();
  if (m.at("config_hash").get<std::string>() != hash ||
      std::find(stages.begin(), stages.end(), "rasterize") == stages.end()) {
    throw PipelineError("rasterize", -1, "cached rasterization does not belong to this config");
  }
  Buffers b;
  for (std::size_t t = 0; t < frames; ++t) {
    b.input.push_back(read_face_buffer(c.output / "raster" / "input" / (frame_stem(t) + ".fb1")));
    b.target.push_back(read_face_buffer(c.output / "raster" / "target" / (frame_stem(t) + ".fb1")));
  }
  return b;
}

}  // namespace

RunSummary run_pipeline(const JobConfig& c, const RunOptions& options) {
  validate_config(c);
  const std::string hash = config_hash(c);
  fs::create_directories(c.output);

  // Written before any stage so a failure during loading is still recorded.
  std::optional<Manifest> manifest;
  manifest.emplace(c.output, hash, 0);
  try {
    const Scene s = load_scene(c);
    const std::size_t frames = s.sequence.frame_count();
    manifest.emplace(c.output, hash, frames);
    Manifest& man = *manifest;
    man.stage_done("load");

    Buffers b;
    if (options.reuse_rasterization) {
      b = load_cached_buffers(c, frames, hash);
    } else {
      b = rasterize_views(s);
    }
    for_frames(frames, "rasterize", [&](std::size_t t) {
      const std::string stem = frame_stem(t);
      const Vertices& posed = s.sequence.frames[t];
      if (!options.reuse_rasterization) {
        write_face_buffer(man.path("raster/input/" + stem + ".fb1"), b.input[t]);
        write_face_buffer(man.path("raster/target/" + stem + ".fb1"), b.target[t]);
      } else {
        man.path("raster/input/" + stem + ".fb1");
        man.path("raster/target/" + stem + ".fb1");
      }
      write_png(man.path("mask/" + stem + ".png"), mask_image(b.target[t]));
      write_depth_png(man.path("depth/" + stem + ".png"), depth_of(b.target[t]));
      write_segmentation_png(man.path("segmentation/" + stem + ".png"), segmentation_of(b.target[t], s.mesh));
      write_png(man.path("shade/" + stem + ".png"), shade(b.target[t], s.mesh, posed, s.target_camera));
    });
    man.stage_done("rasterize");

    std::vector<TransferResult> results;
    try {
      const NeighborTable table = load_table(table_for(c, c.mode));
      results = run_transfer(c, s, b, c.mode, c.n, table);
    } catch (const std::exception& e) {
      throw PipelineError("transfer", -1, e.what());
    }
    RunSummary summary;
    summary.frames = frames;
    for (const TransferResult& r : results) {
      const auto counts = r.counts();
      for (std::size_t p = 0; p < kProvenanceClasses; ++p) summary.provenance_counts[p] += counts[p];
    }
    for_frames(frames, "transfer", [&](std::size_t t) {
      const std::string stem = frame_stem(t);
      write_png(man.path("texture/" + stem + ".png"), results[t].texture);
      write_png(man.path("provenance/" + stem + ".png"), provenance_image(results[t].filled_by));
      write_json(man.path("stats/" + stem + ".json"),
                 {{"frame", t}, {"mode", std::string(to_string(c.mode))}, {"n", c.n},
                  {"counts", counts_json(results[t].counts())}});
    });
    man.stage_done("transfer");

    // Flow for frame t maps it back to frame t - 1; frame 0 has no
    // predecessor and gets an all-invalid field.
    std::vector<FlowField> flows(frames);
    for_frames(frames, "flow", [&](std::size_t t) {
      flows[t] = t == 0 ? FlowField(b.target[0].width, b.target[0].height)
                        : flow_between(b.target[t - 1], b.target[t]);
      const std::string stem = frame_stem(t);
      write_flow(man.path("flow/" + stem + ".flo"), flows[t]);
      write_png(man.path("flow_viz/" + stem + ".png"), flow_to_color(flows[t]));
    });
    man.stage_done("flow");

    std::vector<ImageU8> composed(frames);
    {
      const ImageF background = to_float(s.background);
      ImageF previous;
      for (std::size_t t = 0; t < frames; ++t) {
        try {
          const ImageF initial = to_float(results[t].texture);
          const ImageF current = t == 0 ? initial : temporal_compose(initial, previous, flows[t], c.zeta);
          composed[t] = to_u8(composite(current, background, mask_of(b.target[t])));
          write_png(man.path("compose/" + frame_stem(t) + ".png"), composed[t]);
          previous = current;
        } catch (const std::exception& e) {
          throw PipelineError("compose", static_cast<int>(t), e.what());
        }
      }
    }
    man.stage_done("compose");

    if (!s.ground_truth.empty()) {
      try {
        const auto masks = masks_of(b.target);
        const auto textures = textures_of(results);
        summary.transfer_metrics = evaluate_sequence(textures, s.ground_truth, masks);
        summary.composite_metrics = evaluate_sequence(composed, s.ground_truth, masks);
        write_report_json(man.path("metrics_transfer.json"), *summary.transfer_metrics);
        write_report_json(man.path("metrics_composite.json"), *summary.composite_metrics);
      } catch (const std::exception& e) {
        throw PipelineError("metrics", -1, e.what());
      }
      man.stage_done("metrics");
    }
    man.write(nullptr);
    return summary;
  } catch (const PipelineError& e) {
    manifest->write(&e);
    throw;
  }
}

std::vector<AblationCell> ablation_report(const JobConfig& c, std::span<const TransferMode> modes,
                                          std::span<const std::size_t> ns) {
  if (!c.ground_truth) throw Error("ablation: config has no ground truth");
  if (modes.empty() || ns.empty()) throw Error("ablation: empty mode or n list");
  {
    JobConfig check = c;
    check.mode = modes.front();
    check.n = ns.front();
    validate_config(check);
  }
  const Scene s = load_scene(c);
  for (TransferMode mode : modes) {
    for (std::size_t n : ns) validate_table(c, mode, n, s.mesh.face_count());
  }
  const Buffers b = rasterize_views(s);
  const auto masks = masks_of(b.target);

  std::optional<NeighborTable> geodesic, euclidean;
  std::vector<AblationCell> cells;
  for (TransferMode mode : modes) {
    std::optional<NeighborTable>& slot =
        required_metric(mode) == DistanceMetric::kEuclidean ? euclidean : geodesic;
    if (!slot) slot = load_table(table_for(c, mode));
    for (std::size_t n : ns) {
      const auto results = run_transfer(c, s, b, mode, n, *slot);
      const MetricReport report = evaluate_sequence(textures_of(results), s.ground_truth, masks);
      std::size_t sentinel = 0;
      for (const TransferResult& r : results) sentinel += r.count(Provenance::kSentinel);
      cells.push_back({mode, n, report.mean_masked_ssim(), report.mean_masked_psnr(), sentinel});
    }
  }
  return cells;
}

void write_ablation_csv(const fs::path& path, std::span<const AblationCell> cells) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "mode,n,masked_ssim,masked_psnr,sentinel_pixels\n";
  char buf[128];
  for (const AblationCell& cell : cells) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.4f", cell.masked_ssim, cell.masked_psnr);
    out << to_string(cell.mode) << ',' << cell.n << ',' << buf << ',' << cell.sentinel_pixels << '\n';
  }
}

void write_ablation_json(const fs::path& path, std::span<const AblationCell> cells) {
  json rows = json::array();
  for (const AblationCell& cell : cells) {
    rows.push_back({{"mode", std::string(to_string(cell.mode))},
                    {"n", cell.n},
                    {"masked_ssim", cell.masked_ssim},
                    {"masked_psnr", std::isinf(cell.masked_psnr) ? json("inf") : json(cell.masked_psnr)},
                    {"sentinel_pixels", cell.sentinel_pixels}});
  }
  write_json(path, {{"cells", rows}});
}

}  // namespace meshwarp
