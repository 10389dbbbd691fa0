#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "meshwarp/error.hpp"
#include "meshwarp/humanoid.hpp"
#include "meshwarp/mesh.hpp"
#include "support.hpp"

using namespace meshwarp;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kTetraObj =
    "# tetrahedron\n"
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
    "f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";

}  // namespace

TEST(Mesh, LoadsTetrahedronWithLabels) {
  const fs::path dir = ts::temp_dir("mesh_tetra");
  write_text(dir / "t.obj", kTetraObj);
  write_text(dir / "t.csv", "face_index,label_id\n0,1\n1,1\n2,2\n3,2\n");
  const BodyMesh m = load_mesh(dir / "t.obj", dir / "t.csv");
  EXPECT_EQ(m.face_count(), 4u);
  EXPECT_EQ(m.face_to_label(0), 1);
  EXPECT_EQ(m.face_to_label(3), 2);
  EXPECT_THROW(m.face_to_label(4), Error);
}

TEST(Mesh, LabelCountMismatchIsAnError) {
  const fs::path dir = ts::temp_dir("mesh_mismatch");
  write_text(dir / "t.obj", kTetraObj);
  write_text(dir / "t.csv", "0,1\n1,1\n2,1\n");
  try {
    load_mesh(dir / "t.obj", dir / "t.csv");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("label count mismatch"), std::string::npos) << e.what();
  }
}

TEST(Mesh, ObjTokensAndNegativeIndices) {
  const fs::path dir = ts::temp_dir("mesh_tokens");
  write_text(dir / "a.obj",
             "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\n"
             "f 1/1/1 2/1/1 3/1/1\nf -3 -2 -1\n");
  const ObjGeometry g = read_obj(dir / "a.obj");
  ASSERT_EQ(g.faces.size(), 2u);
  EXPECT_EQ(g.faces[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(g.faces[1], (Triangle{0, 1, 2}));

  write_text(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_THROW(read_obj(dir / "quad.obj"), Error);
  write_text(dir / "range.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 9\n");
  EXPECT_THROW(read_obj(dir / "range.obj"), Error);
}

TEST(Mesh, TemplateRejectsDegenerateFaces) {
  BodyMesh m = ts::labeled({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}});
  EXPECT_THROW(m.validate(), Error);
  EXPECT_NO_THROW(m.validate(false));
}

TEST(Mesh, BackgroundLabelIsNotAPartLabel) {
  BodyMesh m = ts::tetrahedron();
  m.face_labels[2] = kBackgroundLabel;
  EXPECT_THROW(m.validate(), Error);
}

TEST(Mesh, SingleLabelMeshIsConstant) {
  const BodyMesh m = ts::strip(6);
  for (FaceId f = 0; f < m.face_count(); ++f) EXPECT_EQ(m.face_to_label(f), 1);
}

TEST(Symmetry, MirrorExamplesAndInvolution) {
  const SymmetricPartMap sym = default_symmetry();
  EXPECT_EQ(sym.mirror(part::kLeftForearm), part::kRightForearm);
  EXPECT_EQ(sym.mirror(part::kTorso), part::kTorso);
  EXPECT_EQ(sym.mirror(sym.mirror(part::kLeftFoot)), part::kLeftFoot);
  for (const auto& [label, mirrored] : sym.entries()) EXPECT_EQ(sym.mirror(mirrored), label);
  EXPECT_EQ(sym.entries().size(), static_cast<std::size_t>(part::kCount));
  EXPECT_THROW(sym.mirror(99), Error);
}

TEST(Symmetry, InconsistentPairsRejected) {
  const std::vector<std::pair<PartLabel, PartLabel>> bad = {{1, 2}, {1, 3}};
  EXPECT_THROW(SymmetricPartMap::from_pairs(bad), Error);
}

TEST(Symmetry, ShippedDataMatchesBuiltIn) {
  const fs::path data = MESHWARP_TEST_DATA_DIR;
  const SymmetricPartMap sym = read_sym_pairs_csv(data / "sym_pairs.csv");
  EXPECT_EQ(sym.entries(), default_symmetry().entries());
  const auto names = read_part_names_csv(data / "part_names.csv");
  ASSERT_EQ(names.size(), static_cast<std::size_t>(part::kCount));
  for (const auto& [label, name] : names) EXPECT_EQ(name, part_name(label));
}

TEST(Mesh, SmplScaleTemplateRoundTrip) {
  const BodyMesh m = smpl_scale_template();
  EXPECT_EQ(m.face_count(), kSmplFaceCount);
  EXPECT_EQ(m.vertices.size(), 6890u);
  const fs::path dir = ts::temp_dir("mesh_smpl");
  write_obj(dir / "smpl.obj", m.vertices, m.faces);
  write_labels_csv(dir / "smpl_labels.csv", m);
  const BodyMesh loaded = load_mesh(dir / "smpl.obj", dir / "smpl_labels.csv");
  EXPECT_EQ(loaded.face_count(), 13776u);
  EXPECT_EQ(loaded.faces, m.faces);
  EXPECT_EQ(loaded.face_labels, m.face_labels);
  default_symmetry().validate_covers(loaded);
}

TEST(Mesh, SequenceContainerRoundTrip) {
  MeshSequence seq;
  const BodyMesh m = ts::tetrahedron();
  for (int t = 0; t < 3; ++t) {
    Vertices v = m.vertices;
    for (auto& p : v) p.x() += 0.25 * t;
    seq.frames.push_back(v);
  }
  const fs::path dir = ts::temp_dir("mesh_seq");
  write_mesh_sequence(dir / "s.mseq", seq);
  const MeshSequence back = load_mesh_sequence(dir / "s.mseq");
  ASSERT_EQ(back.frame_count(), 3u);
  for (int t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR((back.frames[t][i] - seq.frames[t][i]).norm(), 0.0, 1e-6);
  }
  EXPECT_THROW(back.validate(5), Error);

  // Directory of per-frame OBJs addressed by index.
  fs::create_directories(dir / "objs");
  for (int t = 0; t < 3; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.obj", t);
    write_obj(dir / "objs" / name, seq.frames[t], m.faces);
  }
  const MeshSequence from_dir = load_mesh_sequence(dir / "objs");
  ASSERT_EQ(from_dir.frame_count(), 3u);
  EXPECT_NEAR(from_dir.frames[2][1].x(), seq.frames[2][1].x(), 1e-9);
}

TEST(Humanoid, ClosedGenusZeroSurface) {
  for (int m : {1, 3}) {
    const Humanoid body(m);
    const BodyMesh& mesh = body.mesh();
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
    for (const Triangle& t : mesh.faces) {
      for (int i = 0; i < 3; ++i) {
        const auto a = t[i], b = t[(i + 1) % 3];
        ++edges[{std::min(a, b), std::max(a, b)}];
      }
    }
    for (const auto& [e, count] : edges) ASSERT_EQ(count, 2) << "open or non-manifold edge";
    const long euler = static_cast<long>(mesh.vertices.size()) - static_cast<long>(edges.size()) +
                       static_cast<long>(mesh.face_count());
    EXPECT_EQ(euler, 2);
    default_symmetry().validate_covers(mesh);
  }
}

TEST(Humanoid, RestPoseReproducesTemplate) {
  const Humanoid body(2);
  const Vertices posed = body.pose(BodyPose{});
  ASSERT_EQ(posed.size(), body.mesh().vertices.size());
  for (std::size_t i = 0; i < posed.size(); ++i) {
    EXPECT_NEAR((posed[i] - body.mesh().vertices[i]).norm(), 0.0, 1e-12);
  }
}

TEST(Humanoid, ElbowBendMovesOnlyTheForearmChain) {
  const Humanoid body(2);
  BodyPose pose;
  pose[Bone::kLeftForearm] = Eigen::Vector3d(-1.2, 0, 0);
  const Vertices posed = body.pose(pose);
  const auto& mesh = body.mesh();
  std::set<std::uint32_t> moved;
  for (std::size_t i = 0; i < posed.size(); ++i) {
    if ((posed[i] - mesh.vertices[i]).norm() > 1e-9) moved.insert(static_cast<std::uint32_t>(i));
  }
  ASSERT_FALSE(moved.empty());
  for (FaceId f = 0; f < mesh.face_count(); ++f) {
    const PartLabel l = mesh.face_labels[f];
    if (l == part::kLeftForearm || l == part::kLeftHand) continue;
    for (std::uint32_t v : mesh.faces[f]) {
      // Vertices shared with the upper-arm ring stay put.
      if (l != part::kLeftUpperArm) EXPECT_FALSE(moved.contains(v)) << "face " << f;
    }
  }
}
