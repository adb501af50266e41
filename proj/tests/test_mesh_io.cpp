#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsgcn/mesh/io.hpp"
#include "tsgcn/synth/arch.hpp"

using namespace tsgcn;
using namespace tsgcn::mesh;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() /
             ("tsgcn_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
              ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Off, MinimalFile) {
  auto m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2");
  EXPECT_EQ(m.vertices.size(), 3u);
  ASSERT_EQ(m.faces.size(), 1u);
  EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
  EXPECT_FALSE(m.labels.has_value());
}

TEST(Off, CommentsAndCountsOnHeaderLine) {
  auto m = parse_off("# comment\nOFF 3 1 0\n0 0 0 # origin\n1 0 0\n\n0 1 0\n3 2 0 1\n");
  EXPECT_EQ(m.faces[0], (Face{2, 0, 1}));
}

TEST(Off, IndexOutOfRangeIsAnError) {
  try {
    parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(Off, QuadsAreRejected) {
  EXPECT_THROW(parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"), ParseError);
}

TEST(Off, MalformedInputReportsLine) {
  try {
    parse_off("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_off("PLY\n"), ParseError);
  EXPECT_THROW(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"), ParseError);
}

TEST(Off, DegenerateFacesAreRejected) {
  EXPECT_THROW(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n"), DegenerateGeometryError);
  EXPECT_THROW(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 1\n"), DegenerateGeometryError);
}

TEST(Obj, OneBasedIndices) {
  auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  ASSERT_EQ(m.faces.size(), 1u);
  EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
}

TEST(Obj, SlashedFaceRecordsAndIgnoredRecords) {
  auto m = parse_obj("o tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 3/2\n");
  EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
}

TEST(Obj, Errors) {
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"), ParseError);
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"), ParseError);
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"), ParseError);
}

TEST(MeshFiles, RoundTripIsIdempotent) {
  synth::ArchSpec spec;
  spec.cells = 300;
  const Mesh arch = synth::generate_arch(spec);
  const auto dir = temp_dir();
  for (auto fmt : {MeshFormat::off, MeshFormat::obj}) {
    const auto path = dir / (fmt == MeshFormat::off ? "a.off" : "a.obj");
    save_mesh(path, arch, fmt);
    const Mesh once = load_mesh(path);
    save_mesh(path, once, fmt);
    const Mesh twice = load_mesh(path);
    ASSERT_EQ(once.faces, arch.faces);
    ASSERT_EQ(twice.vertices.size(), arch.vertices.size());
    for (std::size_t v = 0; v < arch.vertices.size(); ++v)
      for (int a = 0; a < 3; ++a) {
        EXPECT_NEAR(once.vertices[v][a], arch.vertices[v][a], 1e-9);
        EXPECT_EQ(twice.vertices[v][a], once.vertices[v][a]);
      }
  }
  fs::remove_all(dir);
}

TEST(MeshFiles, UnknownExtension) {
  EXPECT_THROW(format_from_path("mesh.ply"), Error);
  EXPECT_EQ(format_from_path("MESH.OFF"), MeshFormat::off);
}

TEST(Labels, RoundTrip) {
  const auto dir = temp_dir();
  write_labels(dir / "l.txt", {0, 3, 7});
  EXPECT_EQ(slurp(dir / "l.txt"), "0\n3\n7\n");
  EXPECT_EQ(read_labels(dir / "l.txt"), (std::vector<int>{0, 3, 7}));
  fs::remove_all(dir);
}

TEST(Labels, EmptyFileForNonEmptyMeshIsAnError) {
  const auto dir = temp_dir();
  { std::ofstream(dir / "empty.txt"); }
  EXPECT_THROW(read_labels(dir / "empty.txt", 4), ContractError);
  EXPECT_TRUE(read_labels(dir / "empty.txt").empty());
  fs::remove_all(dir);
}

TEST(Labels, LargeRoundTripIsExact) {
  std::vector<int> labels(16000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>((i * 7919) % 8);
  const auto dir = temp_dir();
  write_labels(dir / "big.txt", labels);
  EXPECT_EQ(read_labels(dir / "big.txt", labels.size()), labels);
  EXPECT_THROW(read_labels(dir / "big.txt", labels.size() + 1), ContractError);
  fs::remove_all(dir);
}

TEST(Labels, MalformedTokens) {
  EXPECT_THROW(parse_labels("0\n1.5\n"), ParseError);
  EXPECT_THROW(parse_labels("0\nx\n"), ParseError);
}

TEST(ColoredObj, OneVertexTriplePerFace) {
  const Mesh m = parse_off("OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n3 1 3 2\n");
  const auto dir = temp_dir();
  save_colored_obj(dir / "c.obj", m, {0, 1});
  const Mesh back = load_mesh(dir / "c.obj");
  EXPECT_EQ(back.vertices.size(), 6u);
  EXPECT_EQ(back.faces.size(), 2u);
  EXPECT_THROW(save_colored_obj(dir / "c.obj", m, {0}), ContractError);
  fs::remove_all(dir);
}
