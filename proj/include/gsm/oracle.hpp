#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Core>

#include "gsm/ellipsoid.hpp"
#include "gsm/kdtree.hpp"
#include "gsm/probability.hpp"
#include "gsm/rng.hpp"

namespace gsm::oracle {

/// Points on an ellipsoid boundary: x = center + P^{-1/2} u for u uniform on
/// the unit sphere. Not area-uniform on the ellipsoid; adequate for
/// minimum-distance estimation at the sample counts used here.
struct SampledSurface {
  Eigen::MatrixXd points;  ///< n x dim
  Ellipsoid source;
  int count = 0;
};

SampledSurface sample_surface(const Ellipsoid& e, int n, std::uint64_t seed);

struct PairProbe {
  double distance = 0.0;          ///< 0 when penetrating
  bool penetrating = false;
  double penetration_depth = 0.0; ///< radial depth proxy of the deepest sample
};

/// Brute-force pair distance: minimum distance between two sampled
/// boundaries (k-d tree accelerated), 0 if any sample of one ellipsoid lies
/// inside the other.
PairProbe oracle_pair_probe(const Ellipsoid& e1, const Ellipsoid& e2, int n,
                            std::uint64_t seed);

double oracle_pair_distance(const Ellipsoid& e1, const Ellipsoid& e2, int n,
                            std::uint64_t seed);

/// Reusable index over a surface point cloud (rows of an N x dim matrix).
class CloudIndex {
 public:
  explicit CloudIndex(Eigen::MatrixXd points);
  const Eigen::MatrixXd& points() const { return points_; }
  const KdTree& tree() const { return tree_; }

 private:
  Eigen::MatrixXd points_;
  KdTree tree_;
};

struct CloudDistanceNormal {
  double distance = 0.0;
  Eigen::VectorXd normal;  ///< unit, oriented toward the robot center
};

/// Nearest-pair distance between robot surface samples and the cloud, with
/// the surface normal estimated from the 30 nearest neighbors of the closest
/// cloud point (smallest-eigenvector of their covariance), oriented toward
/// the robot center. Requires at least 30 cloud points.
CloudDistanceNormal oracle_cloud_distance_and_normal(
    const SampledSurface& robot_samples, const CloudIndex& cloud);

struct CollisionFrequency {
  double frequency = 0.0;
  double std_error = 0.0;  ///< binomial standard error
};

/// Empirical collision frequency over center draws from N(mean, covariance),
/// each checked with the deterministic membership / quadratic-form verdict.
CollisionFrequency monte_carlo_collision(const Ellipsoid& robot,
                                         const UncertainCenter& center,
                                         const Ellipsoid& obstacle,
                                         int draws, std::uint64_t seed);

/// Draws one sample from N(mean, covariance); Cholesky when SPD, eigenvalue
/// square root for the rank-deficient case.
class GaussianSampler {
 public:
  explicit GaussianSampler(const UncertainCenter& center);
  Eigen::VectorXd draw(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

}  // namespace gsm::oracle
