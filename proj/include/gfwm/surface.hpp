// Wall-gradient pipeline: per-face scalars are broadcast into the
// wall-adjacent cells, differentiated with a Green-Gauss loop, sampled back
// at the matching height above each face, and projected onto the face
// tangent frame. Carries the face-local scalars either naively or as global
// vector/tensor components that survive tangent-frame changes between
// neighboring faces.
#pragma once

#include "gfwm/iwm.hpp"
#include "gfwm/surface_mesh.hpp"

#include <vector>

namespace gfwm::surface {

enum class FrameTag { LocalX, LocalZ, FrameFree };

// Per-wall-face scalar samples plus the tangent axis they are tied to.
// The frame tag is fixed at construction.
class WallScalarField {
 public:
  WallScalarField() = default;
  WallScalarField(std::vector<double> values, FrameTag frame)
      : values_(std::move(values)), frame_(frame) {}

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  FrameTag frame() const { return frame_; }

 private:
  std::vector<double> values_;
  FrameTag frame_ = FrameTag::FrameFree;
};

// Nearest-wall-face assignment for every cell. Distance ties resolve to the
// lowest face id, so rebuilding the map is deterministic.
struct FaceCellMap {
  std::vector<int> cell_to_face;
  std::vector<double> distance;
};

FaceCellMap build_face_cell_map(const SurfaceMesh& mesh);

// Copies each face value into every cell assigned to that face.
std::vector<double> broadcast_wall_scalars(const WallScalarField& field,
                                           const FaceCellMap& map,
                                           const SurfaceMesh& mesh);

// Cell-centered Green-Gauss gradient: (1/V) sum of face-value times outward
// area vector, arithmetic mean across interior faces, cell value on boundary
// faces. Throws on non-positive cell volume.
std::vector<Vec3> green_gauss_gradient(const std::vector<double>& cell_values,
                                       const SurfaceMesh& mesh);

double project_to_local(const Vec3& gradient, const WallFace& face,
                        FrameTag axis);

// The five vertically-integrated momentum scalars carried per wall face.
struct WallFieldBundle {
  WallScalarField l_x, l_z, l_xx, l_zz, l_xz;
};

struct GradientOptions {
  // Carry the bundle through the cells as global vector/tensor components
  // instead of raw face-local scalars. Required when the tangent frame
  // rotates between neighboring faces.
  bool global_vector = false;
  // Inverse-distance sample size at the matching point; an exact centroid
  // hit short-circuits to that cell.
  int interpolation_neighbors = 4;
};

// Full pipeline: broadcast, Green-Gauss, matching-point sampling, projection
// onto each face's tangent axes. Returns one gradient bundle per wall face.
std::vector<iwm::IntegralGradients> surface_gradients(
    const WallFieldBundle& fields, const SurfaceMesh& mesh,
    const FaceCellMap& map, const GradientOptions& options = {});

// Graph-diffusion smoothing of the per-face gradient bundle over the wall
// face adjacency: b += lambda * sum_nbr (b_nbr - b), lambda = 1/(1 + max
// degree). Symmetric in face pairs, so the patch mean of every component is
// conserved exactly. passes = 0 returns the input unchanged.
std::vector<iwm::IntegralGradients> spatial_filter(
    const std::vector<iwm::IntegralGradients>& bundle, const SurfaceMesh& mesh,
    int passes);

enum class ScenarioKind {
  UniformHex,       // aligned brick patch, tangent frame identical everywhere
  RotatedJuncture,  // flat patch whose tangent frame rotates 90 deg mid-patch
  TetFan            // triangle-prism strip with one wall face spanning five
                    // cell columns, collapsing the Green-Gauss stencil
};

struct ScenarioParams {
  int nx = 8;       // wall faces along x (UniformHex only)
  int nz = 4;       // wall faces along z (UniformHex only)
  double spacing = 0.25;

  void validate() const;
};

struct Scenario {
  SurfaceMesh mesh;
  WallFieldBundle fields;  // input scalars sampled at the face centroids
  // Reference tangent-frame derivatives per face for the exact carrier mode.
  std::vector<iwm::IntegralGradients> analytic;
  // Faces where the pipeline reproduces `analytic` to round-off in the mode
  // appropriate to the scenario (includes global_vector for the juncture).
  std::vector<int> exact_faces;
  // RotatedJuncture: faces whose sampled stencil straddles the frame change.
  std::vector<int> juncture_faces;
  // TetFan: cells whose slope-carrying neighbors all broadcast one wall
  // value, so their tangential gradient collapses to zero.
  std::vector<int> defect_cells;
  // TetFan: the wide face whose matching sample lands in a defective cell.
  int defect_face = -1;
};

Scenario generate_scenario(ScenarioKind kind, const ScenarioParams& params = {});

}  // namespace gfwm::surface
