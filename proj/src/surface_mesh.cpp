#include "gfwm/surface_mesh.hpp"

#include "gfwm/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gfwm::surface {

namespace {

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

// Line-oriented token reader tracking the 1-based line number for errors.
class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : in_(text) {}

  int line() const { return line_; }

  std::string next(const char* what) {
    std::string tok;
    while (true) {
      if (!(line_stream_ >> tok)) {
        if (!advance_line()) {
          throw ParseError(std::string("unexpected end of mesh text, expected ") + what,
                           line_);
        }
        continue;
      }
      return tok;
    }
  }

  double next_double(const char* what) {
    std::string tok = next(what);
    try {
      size_t pos = 0;
      double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'",
                       line_);
    }
  }

  int next_int(const char* what) {
    std::string tok = next(what);
    try {
      size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'",
                       line_);
    }
  }

  void expect(const char* keyword) {
    std::string tok = next(keyword);
    if (tok != keyword) {
      throw ParseError(std::string("expected '") + keyword + "', got '" + tok + "'",
                       line_);
    }
  }

 private:
  bool advance_line() {
    std::string l;
    if (!std::getline(in_, l)) return false;
    ++line_;
    line_stream_ = std::istringstream(l);
    return true;
  }

  std::istringstream in_;
  std::istringstream line_stream_;
  int line_ = 0;
};

constexpr char kMagic[] = "gfwm-surface-mesh";
constexpr int kVersion = 1;

}  // namespace

void validate_mesh(const SurfaceMesh& mesh) {
  const int n_cells = static_cast<int>(mesh.cells.size());
  const int n_faces = static_cast<int>(mesh.wall_faces.size());

  for (int i = 0; i < n_cells; ++i) {
    const Cell& c = mesh.cells[i];
    if (c.id != i) fail("cell ids must be dense and ordered");
    if (!(c.volume > 0.0) || !std::isfinite(c.volume)) {
      fail("cell " + std::to_string(i) + " has non-positive volume");
    }
    if (c.faces.empty()) fail("cell " + std::to_string(i) + " has no faces");
    Vec3 sum{};
    double total_area = 0.0;
    for (const CellFaceGeom& f : c.faces) {
      for (int k = 0; k < 3; ++k) sum[k] += f.area_vector[k];
      total_area += norm(f.area_vector);
      if (f.boundary != (f.neighbor < 0)) {
        fail("cell " + std::to_string(i) + " boundary flag and neighbor id disagree");
      }
      if (!f.boundary && f.neighbor >= n_cells) {
        fail("cell " + std::to_string(i) + " references a missing neighbor");
      }
      // Outward orientation relative to the cell centroid; holds for the
      // convex cells this sandbox builds.
      Vec3 offset{f.centroid[0] - c.centroid[0], f.centroid[1] - c.centroid[1],
                  f.centroid[2] - c.centroid[2]};
      if (dot(offset, f.area_vector) <= 0.0) {
        fail("cell " + std::to_string(i) + " has an inward-facing area vector");
      }
    }
    if (norm(sum) > 1e-12 * total_area) {
      fail("cell " + std::to_string(i) + " is not closed");
    }
  }

  for (int i = 0; i < n_faces; ++i) {
    const WallFace& f = mesh.wall_faces[i];
    if (f.id != i) fail("wall face ids must be dense and ordered");
    if (!(f.area > 0.0)) fail("wall face " + std::to_string(i) + " has no area");
    if (std::abs(norm(f.unit_normal) - 1.0) > 1e-12 ||
        std::abs(norm(f.local_x) - 1.0) > 1e-12 ||
        std::abs(norm(f.local_z) - 1.0) > 1e-12) {
      fail("wall face " + std::to_string(i) + " frame is not unit length");
    }
    if (std::abs(dot(f.local_x, f.local_z)) > 1e-12) {
      fail("wall face " + std::to_string(i) + " tangent axes are not orthogonal");
    }
    Vec3 n = cross(f.local_x, f.local_z);
    for (int k = 0; k < 3; ++k) {
      if (std::abs(n[k] - f.unit_normal[k]) > 1e-12) {
        fail("wall face " + std::to_string(i) + " frame is not right-handed");
      }
    }
  }

  if (!mesh.wall_face_neighbors.empty()) {
    if (static_cast<int>(mesh.wall_face_neighbors.size()) != n_faces) {
      fail("wall face adjacency size mismatch");
    }
    for (int i = 0; i < n_faces; ++i) {
      for (int nb : mesh.wall_face_neighbors[i]) {
        if (nb < 0 || nb >= n_faces || nb == i) {
          fail("wall face " + std::to_string(i) + " has an invalid neighbor");
        }
      }
    }
  }

  if (!(mesh.matching_height > 0.0)) fail("matching height must be positive");
}

std::string write_text_mesh(const SurfaceMesh& mesh) {
  std::string out;
  out += kMagic;
  out += ' ';
  out += std::to_string(kVersion);
  out += '\n';

  out += "matching_height ";
  append_num(out, mesh.matching_height);
  out += '\n';

  out += "wall_faces " + std::to_string(mesh.wall_faces.size()) + '\n';
  for (const WallFace& f : mesh.wall_faces) {
    out += std::to_string(f.id);
    for (const Vec3* v : {&f.centroid, &f.unit_normal, &f.local_x, &f.local_z}) {
      for (double x : *v) {
        out += ' ';
        append_num(out, x);
      }
    }
    out += ' ';
    append_num(out, f.area);
    out += '\n';
  }

  out += "adjacency " + std::to_string(mesh.wall_face_neighbors.size()) + '\n';
  for (size_t i = 0; i < mesh.wall_face_neighbors.size(); ++i) {
    out += std::to_string(i) + ' ' +
           std::to_string(mesh.wall_face_neighbors[i].size());
    for (int nb : mesh.wall_face_neighbors[i]) out += ' ' + std::to_string(nb);
    out += '\n';
  }

  out += "cells " + std::to_string(mesh.cells.size()) + '\n';
  for (const Cell& c : mesh.cells) {
    out += std::to_string(c.id);
    for (double x : c.centroid) {
      out += ' ';
      append_num(out, x);
    }
    out += ' ';
    append_num(out, c.volume);
    out += ' ' + std::to_string(c.faces.size()) + '\n';
    for (const CellFaceGeom& f : c.faces) {
      out += ' ';
      for (double x : f.area_vector) {
        out += ' ';
        append_num(out, x);
      }
      for (double x : f.centroid) {
        out += ' ';
        append_num(out, x);
      }
      out += ' ' + std::to_string(f.neighbor) + '\n';
    }
  }
  return out;
}

SurfaceMesh parse_text_mesh(const std::string& text) {
  TokenReader r(text);
  r.expect(kMagic);
  int version = r.next_int("format version");
  if (version != kVersion) {
    throw ParseError("unsupported mesh format version " + std::to_string(version),
                     r.line());
  }

  SurfaceMesh mesh;
  r.expect("matching_height");
  mesh.matching_height = r.next_double("matching height");

  r.expect("wall_faces");
  int n_faces = r.next_int("wall face count");
  if (n_faces < 0) throw ParseError("negative wall face count", r.line());
  mesh.wall_faces.resize(n_faces);
  for (int i = 0; i < n_faces; ++i) {
    WallFace& f = mesh.wall_faces[i];
    f.id = r.next_int("wall face id");
    if (f.id != i) throw ParseError("wall face ids must be dense and ordered", r.line());
    for (Vec3* v : {&f.centroid, &f.unit_normal, &f.local_x, &f.local_z}) {
      for (double& x : *v) x = r.next_double("wall face frame entry");
    }
    f.area = r.next_double("wall face area");
  }

  r.expect("adjacency");
  int n_adj = r.next_int("adjacency count");
  if (n_adj < 0) throw ParseError("negative adjacency count", r.line());
  mesh.wall_face_neighbors.resize(n_adj);
  for (int i = 0; i < n_adj; ++i) {
    int id = r.next_int("adjacency face id");
    if (id != i) throw ParseError("adjacency rows must be dense and ordered", r.line());
    int count = r.next_int("neighbor count");
    if (count < 0) throw ParseError("negative neighbor count", r.line());
    mesh.wall_face_neighbors[i].resize(count);
    for (int& nb : mesh.wall_face_neighbors[i]) nb = r.next_int("neighbor id");
  }

  r.expect("cells");
  int n_cells = r.next_int("cell count");
  if (n_cells < 0) throw ParseError("negative cell count", r.line());
  mesh.cells.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    Cell& c = mesh.cells[i];
    c.id = r.next_int("cell id");
    if (c.id != i) throw ParseError("cell ids must be dense and ordered", r.line());
    for (double& x : c.centroid) x = r.next_double("cell centroid entry");
    c.volume = r.next_double("cell volume");
    int nf = r.next_int("cell face count");
    if (nf < 0) throw ParseError("negative cell face count", r.line());
    c.faces.resize(nf);
    for (CellFaceGeom& f : c.faces) {
      for (double& x : f.area_vector) x = r.next_double("face area vector entry");
      for (double& x : f.centroid) x = r.next_double("face centroid entry");
      f.neighbor = r.next_int("face neighbor id");
      f.boundary = f.neighbor < 0;
    }
  }

  try {
    validate_mesh(mesh);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("mesh fails validation: ") + e.what(), r.line());
  }
  return mesh;
}

}  // namespace gfwm::surface
