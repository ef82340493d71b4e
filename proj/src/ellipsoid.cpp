#include "gsm/ellipsoid.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

namespace gsm {

namespace {

// Fix the per-column sign so the largest-magnitude component is positive.
// Keeps caches deterministic across runs and platforms.
void fix_eigenvector_signs(Eigen::MatrixXd& vectors) {
  for (int c = 0; c < vectors.cols(); ++c) {
    int idx = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&idx);
    if (vectors(idx, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

SpectralCache build_cache(const Eigen::MatrixXd& symmetric_shape) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric_shape);
  if (solver.info() != Eigen::Success) {
    throw NotPositiveDefinite("eigendecomposition of shape matrix failed");
  }
  SpectralCache cache;
  cache.eigenvalues = solver.eigenvalues();  // ascending
  cache.rotation = solver.eigenvectors();
  if (cache.eigenvalues[0] <= kSpdEigenvalueFloor) {
    throw NotPositiveDefinite("shape eigenvalue " +
                              std::to_string(cache.eigenvalues[0]) +
                              " at or below floor");
  }
  fix_eigenvector_signs(cache.rotation);
  const Eigen::VectorXd half = cache.eigenvalues.cwiseSqrt();
  const Eigen::VectorXd minus_half = half.cwiseInverse();
  const Eigen::VectorXd minus_one = cache.eigenvalues.cwiseInverse();
  const Eigen::MatrixXd& r = cache.rotation;
  cache.pow_half = r * half.asDiagonal() * r.transpose();
  cache.pow_minus_half = r * minus_half.asDiagonal() * r.transpose();
  cache.pow_minus_one = r * minus_one.asDiagonal() * r.transpose();
  return cache;
}

void check_square_match(const Eigen::VectorXd& center,
                        const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch(std::string(what) + " matrix must be square");
  }
  if (center.size() != m.rows()) {
    throw DimensionMismatch(std::string(what) +
                            " dimension does not match center");
  }
  if (center.size() != 2 && center.size() != 3) {
    throw DimensionMismatch("only dimensions 2 and 3 are supported");
  }
}

}  // namespace

Ellipsoid::Ellipsoid(Eigen::VectorXd center, const Eigen::MatrixXd& shape)
    : center_(std::move(center)) {
  check_square_match(center_, shape, "shape");
  shape_ = 0.5 * (shape + shape.transpose());
  cache_ = build_cache(shape_);
}

Eigen::VectorXd Ellipsoid::semi_axes() const {
  return cache_.eigenvalues.cwiseSqrt().cwiseInverse();
}

double Ellipsoid::quadratic_form(const Eigen::VectorXd& x) const {
  if (x.size() != center_.size()) {
    throw DimensionMismatch("query point dimension does not match ellipsoid");
  }
  const Eigen::VectorXd d = x - center_;
  return d.dot(shape_ * d);
}

Ellipsoid Ellipsoid::translated(Eigen::VectorXd new_center) const {
  if (new_center.size() != center_.size()) {
    throw DimensionMismatch("translated center has wrong dimension");
  }
  Ellipsoid out(*this);
  out.center_ = std::move(new_center);
  return out;
}

Ellipsoid make_ellipsoid(const Eigen::VectorXd& center,
                         const Eigen::MatrixXd& shape) {
  return Ellipsoid(center, shape);
}

Ellipsoid isocontour_ellipsoid(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& covariance,
                               const IsocontourParams& params) {
  if (params.level <= 0.0) {
    throw InvalidRange("isocontour level must be positive");
  }
  check_square_match(mean, covariance, "covariance");
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success ||
      solver.eigenvalues()[0] <= kSpdEigenvalueFloor) {
    throw NotPositiveDefinite("degenerate covariance below eigenvalue floor");
  }
  const double inv_l2 = 1.0 / (params.level * params.level);
  const Eigen::VectorXd gamma =
      solver.eigenvalues().cwiseInverse() * inv_l2;  // eigenvalues of shape
  const Eigen::MatrixXd shape = solver.eigenvectors() * gamma.asDiagonal() *
                                solver.eigenvectors().transpose();
  return Ellipsoid(mean, shape);
}

Eigen::MatrixXd regularize_spd(const Eigen::MatrixXd& m, double floor) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("regularize_spd requires a square matrix");
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  Eigen::VectorXd values = solver.eigenvalues().cwiseMax(floor);
  return solver.eigenvectors() * values.asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace gsm
