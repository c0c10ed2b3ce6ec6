#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "phenosim/core/mesh.hpp"
#include "phenosim/core/pointcloud.hpp"

namespace phenosim {

// ASCII PLY, vertex element with x,y,z (float32) and optional nx,ny,nz.
inline void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals())
    out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";
  char line[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(line, sizeof line, "%.9g %.9g %.9g %.9g %.9g %.9g\n",
                    float(p.x()), float(p.y()), float(p.z()), float(n.x()),
                    float(n.y()), float(n.z()));
    } else {
      std::snprintf(line, sizeof line, "%.9g %.9g %.9g\n", float(p.x()),
                    float(p.y()), float(p.z()));
    }
    out << line;
  }
}

inline PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw std::runtime_error(path + ": not a PLY file");
  std::size_t n_vertices = 0;
  int n_props = 0;
  bool has_normals = false;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw std::runtime_error(path + ": not ASCII PLY");
    } else if (tok == "element") {
      std::string name;
      ss >> name >> n_vertices;
      in_vertex_element = (name == "vertex");
      if (!in_vertex_element)
        throw std::runtime_error(path + ": unsupported element " + name);
    } else if (tok == "property" && in_vertex_element) {
      ++n_props;
    } else if (tok == "end_header") {
      break;
    }
  }
  if (n_props == 6) has_normals = true;
  else if (n_props != 3)
    throw std::runtime_error(path + ": expected 3 or 6 vertex properties");

  PointCloud cloud;
  cloud.points.reserve(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated vertex list");
    std::istringstream ss(line);
    double x, y, z;
    ss >> x >> y >> z;
    cloud.points.emplace_back(x, y, z);
    if (has_normals) {
      double nx, ny, nz;
      ss >> nx >> ny >> nz;
      cloud.normals.emplace_back(nx, ny, nz);
    }
    if (!ss) throw std::runtime_error(path + ": malformed vertex line");
  }
  return cloud;
}

// OBJ with v/f records only. Faces must be triangles.
inline void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char line[256];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << line;
  }
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

inline TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      ss >> x >> y >> z;
      if (!ss) throw std::runtime_error(path + ": malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      long idx[3];
      for (int i = 0; i < 3; ++i) {
        std::string f;
        ss >> f;
        if (f.empty()) throw std::runtime_error(path + ": malformed face");
        idx[i] = std::stol(f.substr(0, f.find('/')));
        if (idx[i] < 0) idx[i] = long(mesh.vertices.size()) + idx[i] + 1;
      }
      mesh.triangles.push_back({std::uint32_t(idx[0] - 1),
                                std::uint32_t(idx[1] - 1),
                                std::uint32_t(idx[2] - 1)});
    }
  }
  mesh.validate();
  return mesh;
}

}  // namespace phenosim
