#pragma once

#include <Eigen/Core>

#include "gsm/ellipsoid.hpp"
#include "gsm/rng.hpp"

namespace gsm {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Rotation matrix drawn from the Haar (uniform) measure on SO(dim):
/// QR of a Gaussian matrix with the sign convention of Stewart, then a
/// column flip to land in the det = +1 component.
Eigen::MatrixXd haar_rotation(int dim, Rng& rng);

/// Ellipsoid with Haar-random orientation, semi-axis lengths uniform in
/// `axis_range` and center coordinates uniform in `pos_range`.
Ellipsoid random_ellipsoid(Rng& rng, Interval axis_range = {0.1, 0.5},
                           Interval pos_range = {-10.0, 10.0}, int dim = 3);

}  // namespace gsm
