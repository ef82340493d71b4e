#pragma once

#include <Eigen/Core>

#include "gsm/errors.hpp"

namespace gsm {

/// Eigenvalues of an SPD shape matrix at or below this floor (1/m^2) are
/// rejected rather than clamped; use regularize_spd to clamp explicitly.
inline constexpr double kSpdEigenvalueFloor = 1e-8;

/// Spectral factorization of an SPD shape matrix together with its
/// fractional powers. Powers are formed entrywise on the eigenvalue
/// diagonal and applied through the eigenbasis; no full matrix inverse or
/// square root is ever taken.
struct SpectralCache {
  Eigen::MatrixXd rotation;        ///< eigenvectors as columns
  Eigen::VectorXd eigenvalues;     ///< ascending, all positive
  Eigen::MatrixXd pow_half;        ///< S^{1/2}
  Eigen::MatrixXd pow_minus_half;  ///< S^{-1/2}
  Eigen::MatrixXd pow_minus_one;   ///< S^{-1}
};

/// Solid ellipsoid {x : (x - center)^T shape (x - center) <= 1} with the
/// spectral factors of `shape` cached at construction. Immutable.
class Ellipsoid {
 public:
  Ellipsoid() = default;

  /// Validates, symmetrizes the shape as (S + S^T)/2, and builds the cache.
  /// Throws DimensionMismatch or NotPositiveDefinite.
  Ellipsoid(Eigen::VectorXd center, const Eigen::MatrixXd& shape);

  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }
  const SpectralCache& cache() const { return cache_; }

  /// Semi-axis lengths, descending (inverse square roots of the ascending
  /// shape eigenvalues).
  Eigen::VectorXd semi_axes() const;

  /// (x - center)^T shape (x - center).
  double quadratic_form(const Eigen::VectorXd& x) const;

  /// Membership including the boundary.
  bool contains(const Eigen::VectorXd& x) const {
    return quadratic_form(x) <= 1.0;
  }

  /// Same shape (cache reused) at a different center.
  Ellipsoid translated(Eigen::VectorXd new_center) const;

  /// Unit direction of the shortest semi-axis: for a flat surface component
  /// this is the surface normal (sign unspecified).
  Eigen::VectorXd shortest_axis_direction() const {
    return cache_.rotation.col(dim() - 1);
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  SpectralCache cache_;
};

/// Constructs an ellipsoid from a center and an SPD quadratic-form matrix.
Ellipsoid make_ellipsoid(const Eigen::VectorXd& center,
                         const Eigen::MatrixXd& shape);

struct IsocontourParams {
  double level = 3.0;  ///< isocontour level l > 0
};

/// Ellipsoid enclosing the l-level isocontour of a Gaussian: centered at the
/// mean with shape Sigma^{-1}/l^2, realized through Sigma's eigenbasis.
/// Semi-axes are l times the square roots of Sigma's eigenvalues.
Ellipsoid isocontour_ellipsoid(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& covariance,
                               const IsocontourParams& params = {});

/// Symmetrizes and clamps eigenvalues below `floor` up to it.
Eigen::MatrixXd regularize_spd(const Eigen::MatrixXd& m, double floor);

}  // namespace gsm
