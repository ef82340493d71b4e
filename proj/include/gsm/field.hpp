#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsm/distance.hpp"
#include "gsm/probability.hpp"
#include "gsm/surface_model.hpp"

namespace gsm::field {

/// 2D slice through 3D space: cell (i, j) is centered at
///   origin + axis_u * (-extent_u/2 + (i + 0.5) * extent_u / res_u)
///          + axis_v * (-extent_v/2 + (j + 0.5) * extent_v / res_v).
struct SliceSpec {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d axis_v = Eigen::Vector3d::UnitY();
  double extent_u = 1.0;
  double extent_v = 1.0;
  int res_u = 200;
  int res_v = 200;
};

/// Normalizes axis_u and orthonormalizes axis_v against it.
SliceSpec make_slice(const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& u_dir,
                     const Eigen::Vector3d& v_dir, double extent_u,
                     double extent_v, int res_u, int res_v);

/// Per-cell results over a slice. Cells are stored row-major with the u
/// index fastest. A cell's valid flag is cleared when the robot collides
/// (distance fields) or the estimate is degraded (probability fields).
struct FieldGrid {
  SliceSpec slice;
  std::vector<double> distance;
  std::vector<Eigen::Vector3d> gradient;
  std::vector<double> probability;
  std::vector<std::uint8_t> valid;

  int cells() const { return slice.res_u * slice.res_v; }
  int index(int i, int j) const { return j * slice.res_u + i; }
  Eigen::Vector3d cell_center(int i, int j) const;
};

/// Distance and gradient of the robot (fixed shape, translated to each cell
/// center) against the model.
FieldGrid distance_field(const Ellipsoid& robot, const SurfaceModel& model,
                         const SliceSpec& slice, int prune_k = 0);

/// Collision-probability bound per cell with spherical center covariance
/// sigma_sq * I; blended over the K nearest components or unblended
/// (closest component only).
FieldGrid probability_field(const Ellipsoid& robot, const SurfaceModel& model,
                            const SliceSpec& slice, double sigma_sq, int k,
                            bool blend);

/// CSV emission (header row, comma separated, '.' decimal, LF):
///   PREFIX.dist.csv: i,j,x,y,z,dist,valid
///   PREFIX.grad.csv: i,j,gx,gy,gz,valid
///   PREFIX.prob.csv: i,j,x,y,z,prob,valid
void write_distance_csv(const FieldGrid& grid, const std::string& path);
void write_gradient_csv(const FieldGrid& grid, const std::string& path);
void write_probability_csv(const FieldGrid& grid, const std::string& path);

/// Reads PREFIX.dist.csv and PREFIX.grad.csv back into a grid (geometry
/// metadata is not recovered; cell validity is the AND of the two files).
FieldGrid read_field_csv(const std::string& prefix);

/// Binary P6 heatmaps, one pixel per cell, row 0 at the top (v decreasing).
/// Distance colormap: linear blue (0,0,255) at 0 to red (255,0,0) at the
/// field maximum. Probability colormap: black (0,0,0) at 0 through red
/// (255,0,0) at 1, with exactly-1 cells white (255,255,255).
void write_distance_ppm(const FieldGrid& grid, const std::string& path);
void write_probability_ppm(const FieldGrid& grid, const std::string& path);

/// Marching-squares isocontour of the probability field at `level`;
/// rows "x1,y1,z1,x2,y2,z2" of world-space segment endpoints.
void write_probability_isocontour_csv(const FieldGrid& grid, double level,
                                      const std::string& path);

}  // namespace gsm::field
