#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsm/ellipsoid.hpp"
#include "gsm/surface_model.hpp"

namespace gsm {

/// Output of the pair distance solver. When `colliding` is true the
/// distance is reported as 0 and `d_star` is invalid (zero); otherwise
/// distance equals ||d_star|| and d_star points from the closest point on
/// the second ellipsoid toward the closest point on the first.
struct DistanceSolution {
  double lambda = 0.0;     ///< minimal eigenvalue of the first 2q x 2q pencil
  double mu = 0.0;         ///< minimal eigenvalue of the second pencil
  Eigen::VectorXd alpha;   ///< solution of the lambda-shifted linear system
  Eigen::VectorXd d_star;  ///< separation vector, meters
  double distance = 0.0;   ///< ||d_star||, meters
  bool colliding = false;
};

/// Closest distance between two ellipsoids. Runs the inversion-free
/// eigenvalue pipeline (which also yields the collision verdict), then
/// polishes the closest pair by alternating boundary projections so the
/// reported distance is exact to solver tolerance. Throws SingularSystem on
/// degenerate (touching-grade) configurations.
DistanceSolution pair_distance(const Ellipsoid& first,
                               const Ellipsoid& second);

/// Deterministic collision verdict without computing the distance: the
/// quadratic form of the lambda-shifted system against the threshold
/// 1/lambda^2, evaluated via Cholesky solves. Touching counts as colliding.
struct CollisionCheck {
  bool colliding = false;
  double quadratic = 0.0;  ///< y^T B^{1/2} A^{-1} B^{1/2} y
  double threshold = 0.0;  ///< 1 / lambda^2
  double lambda = 0.0;
  bool center_inside = false;  ///< decided by the membership shortcut
};

CollisionCheck collision_check(const Ellipsoid& first,
                               const Ellipsoid& second);

inline bool pair_collides(const Ellipsoid& first, const Ellipsoid& second) {
  return collision_check(first, second).colliding;
}

struct SurfaceQueryOptions {
  /// Restrict the component scan to this many nearest means (0 = all,
  /// which is exact; pruning with k = M is also exact).
  int prune_k = 0;
  /// Collect the per-component distance list (disables early exit).
  bool per_component = false;
};

struct SurfaceQueryResult {
  double distance = 0.0;
  Eigen::VectorXd gradient;    ///< unit vector; zero when colliding
  int closest_component = -1;
  bool colliding = false;
  std::vector<std::pair<int, double>> per_component;
};

/// Minimum pair distance between the robot and all component ellipsoids of
/// the model, ties broken by the lowest component index.
SurfaceQueryResult surface_distance(const Ellipsoid& robot,
                                    const SurfaceModel& model,
                                    const SurfaceQueryOptions& options = {});

/// Normalized separation vector of the minimizing component, oriented from
/// the surface toward the robot (direction of increasing clearance).
/// Throws UndefinedGradient when colliding or the distance is below 1e-9.
Eigen::VectorXd surface_gradient(const Ellipsoid& robot,
                                 const SurfaceModel& model);

/// Real part of the eigenvalue with the lowest real part, via real Schur.
double min_real_eigenvalue(const Eigen::MatrixXd& m);

/// Euclidean projection of an exterior point onto the ellipsoid boundary
/// (Newton on the Lagrange multiplier in the shape eigenbasis). Returns the
/// point itself if it is not strictly outside.
Eigen::VectorXd project_to_boundary(const Ellipsoid& e,
                                    const Eigen::VectorXd& point);

}  // namespace gsm
