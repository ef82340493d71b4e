#pragma once

#include <vector>

#include <Eigen/Core>

#include "gsm/distance.hpp"
#include "gsm/ellipsoid.hpp"
#include "gsm/surface_model.hpp"

namespace gsm {

/// Gaussian uncertainty on an ellipsoid center. The covariance may be
/// positive semi-definite; zero is the deterministic limit.
struct UncertainCenter {
  Eigen::VectorXd mean;        ///< meters
  Eigen::MatrixXd covariance;  ///< m^2, symmetric PSD
};

/// Throws on asymmetry beyond 1e-10 or a negative eigenvalue.
void validate_center(const UncertainCenter& center);

struct Moments {
  double expectation = 0.0;
  double variance = 0.0;
};

/// Exact first and second moments of the quadratic form v = y^T A y for
/// y = c - b with b ~ N(mean, covariance):
///   E[v] = tr[A S] + m^T A m,  V[v] = 2 tr[(A S)^2] + 4 m^T A S A m,
/// where m = c - mean and S is the covariance.
Moments quadratic_form_moments(const Eigen::MatrixXd& a_bar,
                               const Eigen::VectorXd& c,
                               const UncertainCenter& center);

struct ProbabilityResult {
  double bound = 0.0;          ///< upper bound on collision probability, [0,1]
  double expectation = 0.0;    ///< E[v]
  double variance = 0.0;       ///< V[v]
  double eta = 0.25;           ///< 0.25 + 0.5 * escalations
  double lambda_sq_inv = 0.0;  ///< 1 / lambda^2
  int escalations = 0;
  /// Set when the escalation cap (50 increments) was reached and the bound
  /// was conservatively forced to 1.
  bool degraded = false;
};

/// Upper bound on the collision probability of the robot ellipsoid (shape
/// from `robot`, center distributed per `center`) against a deterministic
/// obstacle. lambda and the quadratic form matrix are evaluated at the mean
/// center; eta starts at 0.25 and grows by 0.5 until the bound's denominator
/// is positive. If the mean configuration already collides the bound is 1.
ProbabilityResult pair_collision_probability(const Ellipsoid& robot,
                                             const UncertainCenter& center,
                                             const Ellipsoid& obstacle);

/// Blending weight of one surface component: the clamped dot product of the
/// distance gradient with the component's robot-facing shortest-axis
/// direction. Zero when the component faces away.
double blend_weight(const Eigen::VectorXd& robot_center,
                    const Ellipsoid& component,
                    const Eigen::VectorXd& gradient);

std::vector<double> blend_weights(
    const Eigen::VectorXd& robot_center,
    const std::vector<Ellipsoid>& components,
    const std::vector<Eigen::VectorXd>& gradients);

struct BlendedProbability {
  struct Contribution {
    int component = -1;
    double weight = 0.0;
    double probability = 0.0;
    Eigen::VectorXd gradient;  ///< zero if the mean configuration collides
    Eigen::VectorXd normal;    ///< robot-facing shortest-axis direction
  };

  double value = 0.0;
  std::vector<Contribution> contributions;
  /// Set when every blending weight vanished (occluded region); the value
  /// falls back to the closest component's unblended bound.
  bool degraded = false;
};

/// Weighted blend of the collision probability bounds of the K nearest
/// surface components (by Euclidean distance between the mean center and the
/// component means). K > M clamps to M; default K is 9.
BlendedProbability surface_collision_probability(const Ellipsoid& robot,
                                                 const UncertainCenter& center,
                                                 const SurfaceModel& model,
                                                 int k = 9);

/// Bound against the single component closest in the pair-distance sense;
/// the non-blended baseline.
ProbabilityResult unblended_collision_probability(const Ellipsoid& robot,
                                                  const UncertainCenter& center,
                                                  const SurfaceModel& model);

}  // namespace gsm
