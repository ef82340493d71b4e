#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsm/ellipsoid.hpp"

namespace gsm {

/// ASCII XYZ point cloud: one "x y z" per line, '#' comments.
Eigen::MatrixXd load_xyz(const std::string& path);
void save_xyz(const Eigen::MatrixXd& points, const std::string& path);

/// ASCII PLY, vertex element only; x/y/z located by the property list.
Eigen::MatrixXd load_ply(const std::string& path);

/// Dispatches on the "ply" magic, otherwise parses as XYZ.
Eigen::MatrixXd load_point_cloud(const std::string& path);

/// Ellipsoid records, one per line:
///   center... upper-triangular shape (row-major)
/// e.g. 3D: "cx cy cz s11 s12 s13 s22 s23 s33". '#' comments.
std::vector<Ellipsoid> read_ellipsoids(const std::string& path);
void write_ellipsoids(const std::vector<Ellipsoid>& ellipsoids,
                      const std::string& path);

}  // namespace gsm
