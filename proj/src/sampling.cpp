#include "gsm/sampling.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

namespace gsm {

Eigen::MatrixXd haar_rotation(int dim, Rng& rng) {
  if (dim != 2 && dim != 3) {
    throw DimensionMismatch("only dimensions 2 and 3 are supported");
  }
  Eigen::MatrixXd gauss(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) gauss(r, c) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

Ellipsoid random_ellipsoid(Rng& rng, Interval axis_range, Interval pos_range,
                           int dim) {
  if (!(axis_range.lo > 0.0) || !(axis_range.lo <= axis_range.hi)) {
    throw InvalidRange("axis range must satisfy 0 < lo <= hi");
  }
  if (!(pos_range.lo <= pos_range.hi)) {
    throw InvalidRange("position range must satisfy lo <= hi");
  }
  Eigen::VectorXd inv_sq_axes(dim);
  for (int i = 0; i < dim; ++i) {
    const double a = rng.uniform(axis_range.lo, axis_range.hi);
    inv_sq_axes[i] = 1.0 / (a * a);
  }
  const Eigen::MatrixXd rot = haar_rotation(dim, rng);
  Eigen::VectorXd center(dim);
  for (int i = 0; i < dim; ++i) {
    center[i] = rng.uniform(pos_range.lo, pos_range.hi);
  }
  const Eigen::MatrixXd shape =
      rot * inv_sq_axes.asDiagonal() * rot.transpose();
  return Ellipsoid(center, shape);
}

}  // namespace gsm
