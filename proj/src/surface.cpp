#include "gfwm/surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gfwm::surface {

namespace {

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// ---------------------------------------------------------------------------
// Cell construction from polygon vertex loops. Area vectors come from a
// triangle fan, get flipped outward against the cell vertex mean, and the
// cell volume follows from the divergence of the position field.

Cell build_cell(int id, const std::vector<std::vector<Vec3>>& loops) {
  Cell cell;
  cell.id = id;

  Vec3 vertex_mean{};
  int n_vertices = 0;
  for (const auto& loop : loops) {
    for (const Vec3& v : loop) {
      for (int k = 0; k < 3; ++k) vertex_mean[k] += v[k];
      ++n_vertices;
    }
  }
  for (int k = 0; k < 3; ++k) vertex_mean[k] /= n_vertices;
  cell.centroid = vertex_mean;

  for (const auto& loop : loops) {
    if (loop.size() < 3) fail("cell face needs at least three vertices");
    Vec3 area{};
    Vec3 weighted_centroid{};
    double total = 0.0;
    for (size_t i = 1; i + 1 < loop.size(); ++i) {
      Vec3 a = sub(loop[i], loop[0]);
      Vec3 b = sub(loop[i + 1], loop[0]);
      Vec3 tri = cross(a, b);
      for (int k = 0; k < 3; ++k) tri[k] *= 0.5;
      double tri_area = norm(tri);
      Vec3 tri_centroid{(loop[0][0] + loop[i][0] + loop[i + 1][0]) / 3.0,
                        (loop[0][1] + loop[i][1] + loop[i + 1][1]) / 3.0,
                        (loop[0][2] + loop[i][2] + loop[i + 1][2]) / 3.0};
      for (int k = 0; k < 3; ++k) {
        area[k] += tri[k];
        weighted_centroid[k] += tri_area * tri_centroid[k];
      }
      total += tri_area;
    }
    CellFaceGeom face;
    face.area_vector = area;
    for (int k = 0; k < 3; ++k) face.centroid[k] = weighted_centroid[k] / total;
    if (dot(face.area_vector, sub(face.centroid, vertex_mean)) < 0.0) {
      for (int k = 0; k < 3; ++k) face.area_vector[k] = -face.area_vector[k];
    }
    face.neighbor = -1;
    face.boundary = true;
    cell.faces.push_back(face);
  }

  double volume = 0.0;
  for (const CellFaceGeom& f : cell.faces) {
    volume += dot(f.area_vector, f.centroid);
  }
  cell.volume = volume / 3.0;
  return cell;
}

// Pairs cell faces that share a centroid and assigns neighbor ids; unpaired
// faces stay flagged as boundary.
void wire_neighbors(SurfaceMesh& mesh) {
  using Key = std::array<long long, 3>;
  std::map<Key, std::pair<int, int>> open;
  const double quantum = 1e-9;
  for (Cell& cell : mesh.cells) {
    for (size_t fi = 0; fi < cell.faces.size(); ++fi) {
      CellFaceGeom& face = cell.faces[fi];
      Key key{};
      for (int k = 0; k < 3; ++k) {
        key[k] = std::llround(face.centroid[k] / quantum);
      }
      auto it = open.find(key);
      if (it == open.end()) {
        open[key] = {cell.id, static_cast<int>(fi)};
        continue;
      }
      auto [other_cell, other_face] = it->second;
      CellFaceGeom& mate = mesh.cells[other_cell].faces[other_face];
      Vec3 residual{face.area_vector[0] + mate.area_vector[0],
                    face.area_vector[1] + mate.area_vector[1],
                    face.area_vector[2] + mate.area_vector[2]};
      if (norm(residual) > 1e-9 * norm(face.area_vector)) {
        fail("shared cell face area vectors are not opposed");
      }
      face.neighbor = other_cell;
      face.boundary = false;
      mate.neighbor = cell.id;
      mate.boundary = false;
      open.erase(it);
    }
  }
}

std::vector<std::vector<Vec3>> hex_loops(double x0, double x1, double y0,
                                         double y1, double z0, double z1) {
  auto v = [&](double x, double y, double z) { return Vec3{x, y, z}; };
  return {
      {v(x0, y0, z0), v(x1, y0, z0), v(x1, y1, z0), v(x0, y1, z0)},
      {v(x0, y0, z1), v(x1, y0, z1), v(x1, y1, z1), v(x0, y1, z1)},
      {v(x0, y0, z0), v(x1, y0, z0), v(x1, y0, z1), v(x0, y0, z1)},
      {v(x0, y1, z0), v(x1, y1, z0), v(x1, y1, z1), v(x0, y1, z1)},
      {v(x0, y0, z0), v(x0, y1, z0), v(x0, y1, z1), v(x0, y0, z1)},
      {v(x1, y0, z0), v(x1, y1, z0), v(x1, y1, z1), v(x1, y0, z1)},
  };
}

// Triangular prism between z0 and z1 from an x-y cross-section triangle.
std::vector<std::vector<Vec3>> prism_loops(const std::array<std::array<double, 2>, 3>& tri,
                                           double z0, double z1) {
  auto v = [&](int i, double z) { return Vec3{tri[i][0], tri[i][1], z}; };
  std::vector<std::vector<Vec3>> loops;
  loops.push_back({v(0, z0), v(1, z0), v(2, z0)});
  loops.push_back({v(0, z1), v(1, z1), v(2, z1)});
  for (int e = 0; e < 3; ++e) {
    int a = e, b = (e + 1) % 3;
    loops.push_back({v(a, z0), v(b, z0), v(b, z1), v(a, z1)});
  }
  return loops;
}

WallFace make_bottom_face(int id, double cx, double cz, double area,
                          const Vec3& local_x, const Vec3& local_z) {
  WallFace f;
  f.id = id;
  f.centroid = {cx, 0.0, cz};
  f.unit_normal = cross(local_x, local_z);
  f.local_x = local_x;
  f.local_z = local_z;
  f.area = area;
  return f;
}

// Two-layer brick patch over a flat wall at y = 0; one wall face per column,
// id = i + k * nx.
SurfaceMesh build_brick_patch(int nx, int nz, double d) {
  SurfaceMesh mesh;
  const int layers = 2;
  mesh.cells.reserve(static_cast<size_t>(nx) * nz * layers);
  for (int j = 0; j < layers; ++j) {
    for (int k = 0; k < nz; ++k) {
      for (int i = 0; i < nx; ++i) {
        int id = i + k * nx + j * nx * nz;
        mesh.cells.push_back(build_cell(
            id, hex_loops(i * d, (i + 1) * d, j * d, (j + 1) * d, k * d,
                          (k + 1) * d)));
      }
    }
  }
  wire_neighbors(mesh);
  mesh.matching_height = d / 2;
  return mesh;
}

void brick_adjacency(SurfaceMesh& mesh, int nx, int nz) {
  mesh.wall_face_neighbors.assign(static_cast<size_t>(nx) * nz, {});
  auto id = [&](int i, int k) { return i + k * nx; };
  for (int k = 0; k < nz; ++k) {
    for (int i = 0; i < nx; ++i) {
      auto& nbrs = mesh.wall_face_neighbors[id(i, k)];
      if (i > 0) nbrs.push_back(id(i - 1, k));
      if (i + 1 < nx) nbrs.push_back(id(i + 1, k));
      if (k > 0) nbrs.push_back(id(i, k - 1));
      if (k + 1 < nz) nbrs.push_back(id(i, k + 1));
    }
  }
}

// Linear wall fields shared by the brick scenarios; slopes are the analytic
// references the tests compare against.
struct LinearField {
  double sx, sz, c;
  double operator()(double x, double z) const { return sx * x + sz * z + c; }
};

constexpr LinearField kVx{2.0, 0.75, 1.0};
constexpr LinearField kVz{-1.25, 0.5, -0.5};
constexpr LinearField kTxx{3.0, -1.0, 2.0};
constexpr LinearField kTzz{1.0, 4.0, -1.0};
constexpr LinearField kTxz{-2.0, 2.5, 0.5};

iwm::IntegralGradients aligned_reference() {
  iwm::IntegralGradients g;
  g.dlx_dx = kVx.sx;
  g.dlx_dz = kVx.sz;
  g.dlz_dx = kVz.sx;
  g.dlz_dz = kVz.sz;
  g.dlxx_dx = kTxx.sx;
  g.dlxx_dz = kTxx.sz;
  g.dlzz_dx = kTzz.sx;
  g.dlzz_dz = kTzz.sz;
  g.dlxz_dx = kTxz.sx;
  g.dlxz_dz = kTxz.sz;
  return g;
}

// Same global fields seen through a tangent frame rotated 90 degrees about
// the wall normal: local_x = +Z, local_z = -X.
iwm::IntegralGradients rotated_reference() {
  iwm::IntegralGradients g;
  g.dlx_dx = kVz.sz;
  g.dlx_dz = -kVz.sx;
  g.dlz_dx = -kVx.sz;
  g.dlz_dz = kVx.sx;
  g.dlxx_dx = kTzz.sz;
  g.dlxx_dz = -kTzz.sx;
  g.dlzz_dx = kTxx.sz;
  g.dlzz_dz = -kTxx.sx;
  g.dlxz_dx = -kTxz.sz;
  g.dlxz_dz = kTxz.sx;
  return g;
}

Scenario make_uniform_hex(const ScenarioParams& p) {
  Scenario s;
  s.mesh = build_brick_patch(p.nx, p.nz, p.spacing);
  const double d = p.spacing;
  std::vector<double> lx, lz, lxx, lzz, lxz;
  for (int k = 0; k < p.nz; ++k) {
    for (int i = 0; i < p.nx; ++i) {
      double cx = (i + 0.5) * d, cz = (k + 0.5) * d;
      s.mesh.wall_faces.push_back(make_bottom_face(
          i + k * p.nx, cx, cz, d * d, {1, 0, 0}, {0, 0, 1}));
      lx.push_back(kVx(cx, cz));
      lz.push_back(kVz(cx, cz));
      lxx.push_back(kTxx(cx, cz));
      lzz.push_back(kTzz(cx, cz));
      lxz.push_back(kTxz(cx, cz));
      bool interior = i >= 1 && i + 1 < p.nx && k >= 1 && k + 1 < p.nz;
      if (interior) s.exact_faces.push_back(i + k * p.nx);
    }
  }
  brick_adjacency(s.mesh, p.nx, p.nz);
  s.fields = {WallScalarField(lx, FrameTag::LocalX),
              WallScalarField(lz, FrameTag::LocalZ),
              WallScalarField(lxx, FrameTag::FrameFree),
              WallScalarField(lzz, FrameTag::FrameFree),
              WallScalarField(lxz, FrameTag::FrameFree)};
  s.analytic.assign(s.mesh.wall_faces.size(), aligned_reference());
  return s;
}

Scenario make_rotated_juncture(const ScenarioParams& p) {
  if (p.nx < 4 || p.nx % 2 != 0) {
    fail("juncture scenario needs an even face count of at least 4 along x");
  }
  if (p.nz < 3) fail("juncture scenario needs at least 3 faces along z");

  Scenario s;
  s.mesh = build_brick_patch(p.nx, p.nz, p.spacing);
  const double d = p.spacing;
  const int split = p.nx / 2;
  std::vector<double> lx, lz, lxx, lzz, lxz;
  for (int k = 0; k < p.nz; ++k) {
    for (int i = 0; i < p.nx; ++i) {
      double cx = (i + 0.5) * d, cz = (k + 0.5) * d;
      bool rotated = i >= split;
      Vec3 ex = rotated ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
      Vec3 ez = rotated ? Vec3{-1, 0, 0} : Vec3{0, 0, 1};
      s.mesh.wall_faces.push_back(
          make_bottom_face(i + k * p.nx, cx, cz, d * d, ex, ez));
      // Face-local components of the one continuous global field.
      if (rotated) {
        lx.push_back(kVz(cx, cz));
        lz.push_back(-kVx(cx, cz));
        lxx.push_back(kTzz(cx, cz));
        lzz.push_back(kTxx(cx, cz));
        lxz.push_back(-kTxz(cx, cz));
      } else {
        lx.push_back(kVx(cx, cz));
        lz.push_back(kVz(cx, cz));
        lxx.push_back(kTxx(cx, cz));
        lzz.push_back(kTzz(cx, cz));
        lxz.push_back(kTxz(cx, cz));
      }
      s.analytic.push_back(rotated ? rotated_reference() : aligned_reference());
      bool interior = i >= 1 && i + 1 < p.nx && k >= 1 && k + 1 < p.nz;
      if (interior) {
        s.exact_faces.push_back(i + k * p.nx);
        if (i == split - 1 || i == split) {
          s.juncture_faces.push_back(i + k * p.nx);
        }
      }
    }
  }
  brick_adjacency(s.mesh, p.nx, p.nz);
  s.fields = {WallScalarField(lx, FrameTag::LocalX),
              WallScalarField(lz, FrameTag::LocalZ),
              WallScalarField(lxx, FrameTag::FrameFree),
              WallScalarField(lzz, FrameTag::FrameFree),
              WallScalarField(lxz, FrameTag::FrameFree)};
  return s;
}

// Triangle-prism strip: 9 columns of alternating wall-touching and apex-down
// prisms per z-row, 3 rows of depth 2*spacing. The middle row carries one
// wall face spanning five columns, so the stencils above its center hold a
// single broadcast value and their tangential gradient collapses to zero.
// Distance ties in the face-cell map need bitwise-equal distances, hence the
// power-of-two spacing requirement; the row depth keeps cross-row distances
// out of the tie set.
Scenario make_tet_fan(const ScenarioParams& p) {
  int exponent = 0;
  if (std::frexp(p.spacing, &exponent) != 0.5) {
    fail("tet fan scenario needs a power-of-two spacing");
  }
  const double d = p.spacing;
  const double depth = 2 * d;  // z-extent of each prism row
  const int cols = 9;          // wall-touching prisms per row
  const int rows = 3;
  const int wide_lo = 2;       // columns covered by the wide face
  const int wide_hi = 6;

  Scenario s;
  SurfaceMesh& mesh = s.mesh;

  // Cells: per row, 9 wall prisms then 8 apex-down prisms.
  for (int r = 0; r < rows; ++r) {
    double z0 = r * depth, z1 = (r + 1) * depth;
    for (int k = 0; k < cols; ++k) {
      std::array<std::array<double, 2>, 3> tri{
          {{k * d, 0.0}, {(k + 1) * d, 0.0}, {(k + 0.5) * d, d}}};
      mesh.cells.push_back(
          build_cell(r * 17 + k, prism_loops(tri, z0, z1)));
    }
    for (int k = 0; k + 1 < cols; ++k) {
      std::array<std::array<double, 2>, 3> tri{
          {{(k + 0.5) * d, d}, {(k + 1.5) * d, d}, {(k + 1) * d, 0.0}}};
      mesh.cells.push_back(
          build_cell(r * 17 + 9 + k, prism_loops(tri, z0, z1)));
    }
  }
  wire_neighbors(mesh);
  mesh.matching_height = d / 3;

  const LinearField f_lx{1.5, 0.0, 0.25};
  const LinearField f_lz{0.75, 0.0, -0.3};
  const LinearField f_lxx{-2.0, 0.0, 1.0};
  const LinearField f_lzz{0.5, 0.0, 2.0};
  const LinearField f_lxz{1.25, 0.0, -0.75};

  std::vector<double> lx, lz, lxx, lzz, lxz;
  auto push_face = [&](int id, double cx, double cz, double area) {
    mesh.wall_faces.push_back(
        make_bottom_face(id, cx, cz, area, {1, 0, 0}, {0, 0, 1}));
    lx.push_back(f_lx(cx, cz));
    lz.push_back(f_lz(cx, cz));
    lxx.push_back(f_lxx(cx, cz));
    lzz.push_back(f_lzz(cx, cz));
    lxz.push_back(f_lxz(cx, cz));
  };

  // Row 0: ids 0..8. Row 1: 9, 10 narrow, 11 wide, 12, 13 narrow.
  // Row 2: ids 14..22.
  for (int k = 0; k < cols; ++k) {
    push_face(k, (k + 0.5) * d, 0.5 * depth, d * depth);
  }
  for (int k = 0; k < wide_lo; ++k) {
    push_face(9 + k, (k + 0.5) * d, 1.5 * depth, d * depth);
  }
  push_face(11, 4.5 * d, 1.5 * depth, 5 * d * depth);
  for (int k = wide_hi + 1; k < cols; ++k) {
    push_face(12 + (k - 7), (k + 0.5) * d, 1.5 * depth, d * depth);
  }
  for (int k = 0; k < cols; ++k) {
    push_face(14 + k, (k + 0.5) * d, 2.5 * depth, d * depth);
  }

  mesh.wall_face_neighbors.assign(mesh.wall_faces.size(), {});
  auto add_edge = [&](int a, int b) {
    mesh.wall_face_neighbors[a].push_back(b);
    mesh.wall_face_neighbors[b].push_back(a);
  };
  for (int k = 0; k + 1 < cols; ++k) add_edge(k, k + 1);
  for (int k = 0; k + 1 < cols; ++k) add_edge(14 + k, 14 + k + 1);
  for (int id = 9; id < 13; ++id) add_edge(id, id + 1);
  auto row1_over = [&](int k) {
    if (k < wide_lo) return 9 + k;
    if (k <= wide_hi) return 11;
    return 12 + (k - 7);
  };
  for (int k = 0; k < cols; ++k) {
    add_edge(k, row1_over(k));
    add_edge(row1_over(k), 14 + k);
  }

  iwm::IntegralGradients ref;
  ref.dlx_dx = f_lx.sx;
  ref.dlz_dx = f_lz.sx;
  ref.dlxx_dx = f_lxx.sx;
  ref.dlzz_dx = f_lzz.sx;
  ref.dlxz_dx = f_lxz.sx;
  s.analytic.assign(mesh.wall_faces.size(), ref);

  s.fields = {WallScalarField(lx, FrameTag::LocalX),
              WallScalarField(lz, FrameTag::LocalZ),
              WallScalarField(lxx, FrameTag::FrameFree),
              WallScalarField(lzz, FrameTag::FrameFree),
              WallScalarField(lxz, FrameTag::FrameFree)};

  // Apex-down prisms above the wide face center; both of their in-plane
  // neighbors broadcast the wide face value.
  s.defect_cells = {1 * 17 + 9 + 3, 1 * 17 + 9 + 4};
  s.defect_face = 11;

  // Faces whose sampled column reproduces the slope exactly in both tangent
  // directions. Left-edge columns degrade against the boundary closure;
  // columns flanking the wide face either lose their distinct apex value to
  // the lowest-id tie rule or sit over a cross-row assignment mismatch.
  s.exact_faces = {1, 4, 7, 8, 10, 13, 15, 18, 21, 22};
  return s;
}

Vec3 matching_point(const WallFace& face, double h) {
  return {face.centroid[0] - h * face.unit_normal[0],
          face.centroid[1] - h * face.unit_normal[1],
          face.centroid[2] - h * face.unit_normal[2]};
}

// Inverse-distance sample of a per-cell vector field; an exact centroid hit
// short-circuits to that cell's value.
Vec3 sample_cell_vectors(const std::vector<Vec3>& cell_values,
                         const SurfaceMesh& mesh, const Vec3& point,
                         int neighbors) {
  const size_t n = mesh.cells.size();
  std::vector<std::pair<double, int>> by_distance;
  by_distance.reserve(n);
  for (size_t c = 0; c < n; ++c) {
    Vec3 r = sub(mesh.cells[c].centroid, point);
    by_distance.emplace_back(dot(r, r), static_cast<int>(c));
  }
  size_t take = std::min<size_t>(neighbors, n);
  std::partial_sort(by_distance.begin(), by_distance.begin() + take,
                    by_distance.end());
  const double hit = 1e-9 * mesh.matching_height;
  if (by_distance[0].first <= hit * hit) {
    return cell_values[by_distance[0].second];
  }
  Vec3 acc{};
  double wsum = 0.0;
  for (size_t i = 0; i < take; ++i) {
    double w = 1.0 / std::sqrt(by_distance[i].first);
    wsum += w;
    const Vec3& v = cell_values[by_distance[i].second];
    for (int k = 0; k < 3; ++k) acc[k] += w * v[k];
  }
  for (int k = 0; k < 3; ++k) acc[k] /= wsum;
  return acc;
}

// Broadcast + Green-Gauss + matching-point sample for one carrier scalar.
std::vector<Vec3> carrier_gradients(const std::vector<double>& face_values,
                                    const SurfaceMesh& mesh,
                                    const FaceCellMap& map, int neighbors) {
  std::vector<double> cell_values(mesh.cells.size());
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    cell_values[c] = face_values[map.cell_to_face[c]];
  }
  std::vector<Vec3> cell_grads = green_gauss_gradient(cell_values, mesh);
  std::vector<Vec3> out(mesh.wall_faces.size());
  for (size_t f = 0; f < mesh.wall_faces.size(); ++f) {
    Vec3 p = matching_point(mesh.wall_faces[f], mesh.matching_height);
    out[f] = sample_cell_vectors(cell_grads, mesh, p, neighbors);
  }
  return out;
}

double quad_form(const std::array<Vec3, 3>& m, const Vec3& a, const Vec3& b) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r += a[i] * m[i][j] * b[j];
  }
  return r;
}

void check_bundle(const WallFieldBundle& fields, size_t n_faces) {
  const WallScalarField* all[] = {&fields.l_x, &fields.l_z, &fields.l_xx,
                                  &fields.l_zz, &fields.l_xz};
  for (const WallScalarField* f : all) {
    if (f->values().size() != n_faces) {
      fail("wall field length does not match the wall face count");
    }
  }
  if (fields.l_x.frame() != FrameTag::LocalX ||
      fields.l_z.frame() != FrameTag::LocalZ) {
    fail("first-moment fields must be tagged with their tangent axis");
  }
}

}  // namespace

void ScenarioParams::validate() const {
  if (nx < 2 || nz < 2) fail("scenario needs at least 2 faces per direction");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    fail("scenario spacing must be positive");
  }
  if (spacing < 1e-6 || spacing > 1e6) {
    fail("scenario spacing out of range");
  }
  if (static_cast<long long>(nx) * nz * 2 > 1000) {
    fail("scenario exceeds the cell budget");
  }
}

FaceCellMap build_face_cell_map(const SurfaceMesh& mesh) {
  if (mesh.wall_faces.empty()) {
    fail("face-cell map needs at least one wall face");
  }
  FaceCellMap map;
  map.cell_to_face.resize(mesh.cells.size());
  map.distance.resize(mesh.cells.size());
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    int best_face = -1;
    for (const WallFace& f : mesh.wall_faces) {
      Vec3 r = sub(mesh.cells[c].centroid, f.centroid);
      double d2 = dot(r, r);
      // Strict comparison: equal distances keep the lowest face id.
      if (d2 < best) {
        best = d2;
        best_face = f.id;
      }
    }
    map.cell_to_face[c] = best_face;
    map.distance[c] = std::sqrt(best);
  }
  return map;
}

std::vector<double> broadcast_wall_scalars(const WallScalarField& field,
                                           const FaceCellMap& map,
                                           const SurfaceMesh& mesh) {
  if (field.values().size() != mesh.wall_faces.size()) {
    fail("wall field length does not match the wall face count");
  }
  if (map.cell_to_face.size() != mesh.cells.size()) {
    fail("face-cell map does not cover the mesh");
  }
  std::vector<double> out(mesh.cells.size());
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    int f = map.cell_to_face[c];
    if (f < 0 || static_cast<size_t>(f) >= field.values().size()) {
      fail("face-cell map references a missing wall face");
    }
    out[c] = field.values()[f];
  }
  return out;
}

std::vector<Vec3> green_gauss_gradient(const std::vector<double>& cell_values,
                                       const SurfaceMesh& mesh) {
  if (cell_values.size() != mesh.cells.size()) {
    fail("cell value vector does not match the mesh");
  }
  std::vector<Vec3> out(mesh.cells.size(), Vec3{});
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    const Cell& cell = mesh.cells[c];
    if (!(cell.volume > 0.0)) {
      fail("cell " + std::to_string(c) + " has non-positive volume");
    }
    Vec3 acc{};
    for (const CellFaceGeom& face : cell.faces) {
      double phi;
      if (face.boundary) {
        phi = cell_values[c];
      } else {
        if (face.neighbor < 0 ||
            static_cast<size_t>(face.neighbor) >= cell_values.size()) {
          fail("cell face references a missing neighbor");
        }
        phi = 0.5 * (cell_values[c] + cell_values[face.neighbor]);
      }
      for (int k = 0; k < 3; ++k) acc[k] += phi * face.area_vector[k];
    }
    for (int k = 0; k < 3; ++k) out[c][k] = acc[k] / cell.volume;
  }
  return out;
}

double project_to_local(const Vec3& gradient, const WallFace& face,
                        FrameTag axis) {
  switch (axis) {
    case FrameTag::LocalX:
      return dot(gradient, face.local_x);
    case FrameTag::LocalZ:
      return dot(gradient, face.local_z);
    default:
      fail("projection axis must be a tangent direction");
  }
  return 0.0;
}

std::vector<iwm::IntegralGradients> surface_gradients(
    const WallFieldBundle& fields, const SurfaceMesh& mesh,
    const FaceCellMap& map, const GradientOptions& options) {
  const size_t n_faces = mesh.wall_faces.size();
  check_bundle(fields, n_faces);
  if (map.cell_to_face.size() != mesh.cells.size()) {
    fail("face-cell map does not cover the mesh");
  }
  if (options.interpolation_neighbors < 1) {
    fail("interpolation needs at least one neighbor");
  }

  std::vector<iwm::IntegralGradients> out(n_faces);

  if (!options.global_vector) {
    const WallScalarField* scalars[] = {&fields.l_x, &fields.l_z, &fields.l_xx,
                                        &fields.l_zz, &fields.l_xz};
    // Slot layout mirrors IntegralGradients: x-derivative, z-derivative.
    double iwm::IntegralGradients::* slots[][2] = {
        {&iwm::IntegralGradients::dlx_dx, &iwm::IntegralGradients::dlx_dz},
        {&iwm::IntegralGradients::dlz_dx, &iwm::IntegralGradients::dlz_dz},
        {&iwm::IntegralGradients::dlxx_dx, &iwm::IntegralGradients::dlxx_dz},
        {&iwm::IntegralGradients::dlzz_dx, &iwm::IntegralGradients::dlzz_dz},
        {&iwm::IntegralGradients::dlxz_dx, &iwm::IntegralGradients::dlxz_dz}};
    for (int s = 0; s < 5; ++s) {
      std::vector<Vec3> grads = carrier_gradients(
          scalars[s]->values(), mesh, map, options.interpolation_neighbors);
      for (size_t f = 0; f < n_faces; ++f) {
        const WallFace& face = mesh.wall_faces[f];
        out[f].*slots[s][0] = dot(grads[f], face.local_x);
        out[f].*slots[s][1] = dot(grads[f], face.local_z);
      }
    }
    return out;
  }

  // Frame-free carriers: the tangential vector (3 components) and the
  // symmetric second-moment tensor (6 components), assembled per face from
  // its own tangent frame.
  std::array<std::vector<double>, 9> carriers;
  for (auto& c : carriers) c.resize(n_faces);
  for (size_t f = 0; f < n_faces; ++f) {
    const WallFace& face = mesh.wall_faces[f];
    const Vec3& ex = face.local_x;
    const Vec3& ez = face.local_z;
    double vx = fields.l_x.values()[f];
    double vz = fields.l_z.values()[f];
    double txx = fields.l_xx.values()[f];
    double tzz = fields.l_zz.values()[f];
    double txz = fields.l_xz.values()[f];
    for (int i = 0; i < 3; ++i) carriers[i][f] = vx * ex[i] + vz * ez[i];
    int slot = 3;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        carriers[slot][f] = txx * ex[i] * ex[j] + tzz * ez[i] * ez[j] +
                            txz * (ex[i] * ez[j] + ez[i] * ex[j]);
        ++slot;
      }
    }
  }

  std::array<std::vector<Vec3>, 9> carrier_grads;
  for (int s = 0; s < 9; ++s) {
    carrier_grads[s] = carrier_gradients(carriers[s], mesh, map,
                                         options.interpolation_neighbors);
  }

  for (size_t f = 0; f < n_faces; ++f) {
    const WallFace& face = mesh.wall_faces[f];
    const Vec3& ex = face.local_x;
    const Vec3& ez = face.local_z;

    // dv[i][j] = derivative of global vector component i along axis j.
    std::array<Vec3, 3> dv{carrier_grads[0][f], carrier_grads[1][f],
                           carrier_grads[2][f]};
    out[f].dlx_dx = quad_form(dv, ex, ex);
    // quad_form contracts the component index first, the direction second.
    out[f].dlx_dz = quad_form(dv, ex, ez);
    out[f].dlz_dx = quad_form(dv, ez, ex);
    out[f].dlz_dz = quad_form(dv, ez, ez);

    // dt[j] = derivative of the symmetric tensor along global axis j.
    std::array<std::array<Vec3, 3>, 3> dt{};
    const int sym_slot[3][3] = {{3, 4, 5}, {4, 6, 7}, {5, 7, 8}};
    for (int j = 0; j < 3; ++j) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          dt[j][a][b] = carrier_grads[sym_slot[a][b]][f][j];
        }
      }
    }
    auto tensor_derivative = [&](const Vec3& left, const Vec3& right,
                                 const Vec3& along) {
      double r = 0.0;
      for (int j = 0; j < 3; ++j) {
        r += along[j] * quad_form(dt[j], left, right);
      }
      return r;
    };
    out[f].dlxx_dx = tensor_derivative(ex, ex, ex);
    out[f].dlxx_dz = tensor_derivative(ex, ex, ez);
    out[f].dlzz_dx = tensor_derivative(ez, ez, ex);
    out[f].dlzz_dz = tensor_derivative(ez, ez, ez);
    out[f].dlxz_dx = tensor_derivative(ex, ez, ex);
    out[f].dlxz_dz = tensor_derivative(ex, ez, ez);
  }
  return out;
}

std::vector<iwm::IntegralGradients> spatial_filter(
    const std::vector<iwm::IntegralGradients>& bundle, const SurfaceMesh& mesh,
    int passes) {
  if (bundle.size() != mesh.wall_faces.size()) {
    fail("gradient bundle does not match the wall face count");
  }
  if (passes < 0) fail("filter pass count must be non-negative");
  if (mesh.wall_face_neighbors.size() != mesh.wall_faces.size()) {
    fail("mesh carries no wall face adjacency");
  }

  size_t max_degree = 0;
  for (const auto& nbrs : mesh.wall_face_neighbors) {
    max_degree = std::max(max_degree, nbrs.size());
  }
  const double lambda = 1.0 / (1.0 + static_cast<double>(max_degree));

  constexpr double iwm::IntegralGradients::* kFields[] = {
      &iwm::IntegralGradients::dlx_dx,  &iwm::IntegralGradients::dlz_dx,
      &iwm::IntegralGradients::dlxx_dx, &iwm::IntegralGradients::dlzz_dx,
      &iwm::IntegralGradients::dlxz_dx, &iwm::IntegralGradients::dlx_dz,
      &iwm::IntegralGradients::dlz_dz,  &iwm::IntegralGradients::dlxx_dz,
      &iwm::IntegralGradients::dlzz_dz, &iwm::IntegralGradients::dlxz_dz};

  std::vector<iwm::IntegralGradients> current = bundle;
  std::vector<iwm::IntegralGradients> next(bundle.size());
  for (int pass = 0; pass < passes; ++pass) {
    for (size_t f = 0; f < current.size(); ++f) {
      iwm::IntegralGradients g = current[f];
      for (int nb : mesh.wall_face_neighbors[f]) {
        for (auto field : kFields) {
          g.*field += lambda * (current[nb].*field - current[f].*field);
        }
      }
      next[f] = g;
    }
    std::swap(current, next);
  }
  return current;
}

Scenario generate_scenario(ScenarioKind kind, const ScenarioParams& params) {
  params.validate();
  Scenario s;
  switch (kind) {
    case ScenarioKind::UniformHex:
      s = make_uniform_hex(params);
      break;
    case ScenarioKind::RotatedJuncture:
      s = make_rotated_juncture(params);
      break;
    case ScenarioKind::TetFan:
      s = make_tet_fan(params);
      break;
    default:
      fail("unknown scenario kind");
  }
  validate_mesh(s.mesh);
  return s;
}

}  // namespace gfwm::surface
