// Minimal unstructured-mesh carrier for the wall-gradient sandbox: polygon
// cells with outward area vectors, wall faces with a local tangent frame, and
// a whitespace text format for round-tripping the generated scenarios.
#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace gfwm::surface {

using Vec3 = std::array<double, 3>;

// Wall-model face. unit_normal points out of the fluid (into the wall);
// local_x cross local_z equals unit_normal (right-handed tangent frame).
struct WallFace {
  int id = -1;
  Vec3 centroid{};
  Vec3 unit_normal{};
  Vec3 local_x{};
  Vec3 local_z{};
  double area = 0.0;
};

struct CellFaceGeom {
  Vec3 area_vector{};  // outward, magnitude = face area
  Vec3 centroid{};
  int neighbor = -1;   // adjacent cell id; -1 on the domain boundary
  bool boundary = false;
};

struct Cell {
  int id = -1;
  Vec3 centroid{};
  double volume = 0.0;
  std::vector<CellFaceGeom> faces;
};

struct SurfaceMesh {
  std::vector<Cell> cells;
  std::vector<WallFace> wall_faces;
  // Edge adjacency between wall faces, used by the spatial filter.
  std::vector<std::vector<int>> wall_face_neighbors;
  // Height above each wall face at which the gradient pipeline samples the
  // cell fields.
  double matching_height = 0.0;
};

// Checks closed cells (face area vectors sum to zero within 1e-12 of the
// total face area), positive volumes, orthonormal right-handed face frames,
// and consistent neighbor links. Throws std::invalid_argument.
void validate_mesh(const SurfaceMesh& mesh);

// Plain-text serialization; format version checked on parse. parse errors
// throw ParseError carrying the 1-based line number.
std::string write_text_mesh(const SurfaceMesh& mesh);
SurfaceMesh parse_text_mesh(const std::string& text);

}  // namespace gfwm::surface
