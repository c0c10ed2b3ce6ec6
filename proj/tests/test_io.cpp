#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "phenosim/core/io.hpp"
#include "phenosim/core/rng.hpp"

using namespace phenosim;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("PLY round trip preserves points to float precision") {
  Rng rng(1);
  PointCloud cloud;
  for (int i = 0; i < 200; ++i)
    cloud.points.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(-1, 1)));
  std::string path = tmp_path("roundtrip.ply");
  write_ply(path, cloud);
  PointCloud back = read_ply(path);
  REQUIRE(back.size() == cloud.size());
  CHECK_FALSE(back.has_normals());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    CHECK((back.points[i] - cloud.points[i]).norm() < 1e-6);
  std::remove(path.c_str());
}

TEST_CASE("PLY round trip with normals") {
  PointCloud cloud;
  cloud.points = {Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, -0.6)};
  cloud.normals = {Vec3(0, 0, 1), Vec3(1, 0, 0)};
  std::string path = tmp_path("normals.ply");
  write_ply(path, cloud);
  PointCloud back = read_ply(path);
  REQUIRE(back.has_normals());
  REQUIRE(back.size() == 2);
  CHECK((back.normals[1] - Vec3(1, 0, 0)).norm() < 1e-6);
  std::remove(path.c_str());
}

TEST_CASE("PLY reader rejects junk") {
  CHECK_THROWS(read_ply(tmp_path("missing_file.ply")));
  std::string path = tmp_path("bad.ply");
  {
    std::ofstream out(path);
    out << "not a ply\n";
  }
  CHECK_THROWS(read_ply(path));
  {
    std::ofstream out(path);
    out << "ply\nformat ascii 1.0\nelement vertex 5\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "end_header\n0 0 0\n";  // truncated
  }
  CHECK_THROWS(read_ply(path));
  std::remove(path.c_str());
}

TEST_CASE("OBJ round trip preserves mesh") {
  TriangleMesh mesh;
  Rng rng(2);
  for (int i = 0; i < 30; ++i)
    mesh.vertices.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                 rng.uniform(-1, 1)));
  for (std::uint32_t i = 0; i + 2 < 30; i += 3)
    mesh.triangles.push_back({i, i + 1, i + 2});
  std::string path = tmp_path("roundtrip.obj");
  write_obj(path, mesh);
  TriangleMesh back = read_obj(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() < 1e-9);
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    CHECK(back.triangles[i] == mesh.triangles[i]);
  std::remove(path.c_str());
}

TEST_CASE("OBJ reader handles comments, v/vt/vn faces, negative indices") {
  std::string path = tmp_path("variants.obj");
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        << "f 1/1/1 2/2/2 3/3/3\n"
        << "f -3 -2 -1\n";
  }
  TriangleMesh mesh = read_obj(path);
  REQUIRE(mesh.vertices.size() == 3);
  REQUIRE(mesh.triangles.size() == 2);
  CHECK(mesh.triangles[0] == mesh.triangles[1]);
  std::remove(path.c_str());
}

TEST_CASE("OBJ reader rejects out-of-range faces") {
  std::string path = tmp_path("bad.obj");
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nf 1 2 9\n";
  }
  CHECK_THROWS(read_obj(path));
  std::remove(path.c_str());
  CHECK_THROWS(read_obj(tmp_path("missing_file.obj")));
}
