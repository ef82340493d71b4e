#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsm/ellipsoid.hpp"
#include "gsm/kdtree.hpp"

namespace gsm {

struct GaussianComponent {
  double weight = 0.0;        ///< mixture weight in (0, 1]
  Eigen::VectorXd mean;       ///< meters
  Eigen::MatrixXd covariance; ///< m^2, SPD after flooring
};

/// Covariance eigenvalue floor applied when fitting (1 mm axis).
inline constexpr double kCovarianceFloor = 1e-6;

/// Gaussian surface model: a weighted mixture whose components are realized
/// as isocontour ellipsoids at a fixed level, with an exact nearest-neighbor
/// index over component means. Immutable after construction.
class SurfaceModel {
 public:
  SurfaceModel(std::vector<GaussianComponent> components,
               double isocontour_level = 3.0);

  int size() const { return static_cast<int>(components_.size()); }
  int dim() const { return static_cast<int>(components_[0].mean.size()); }
  double level() const { return level_; }

  const std::vector<GaussianComponent>& components() const {
    return components_;
  }
  const GaussianComponent& component(int m) const { return components_[m]; }
  const Ellipsoid& ellipsoid(int m) const { return ellipsoids_[m]; }

  /// Exact k nearest component means by Euclidean distance, ascending;
  /// ties broken by the lower index. k > size() clamps to size().
  std::vector<int> knn(const Eigen::VectorXd& point, int k) const;

  /// Mixture probability density at a point.
  double density(const Eigen::VectorXd& point) const;

 private:
  std::vector<GaussianComponent> components_;
  double level_;
  std::vector<Ellipsoid> ellipsoids_;
  KdTree index_;
};

struct FitReport {
  int iterations = 0;
  double log_likelihood = 0.0;
  int dropped_components = 0;
};

/// Fits a GMM to a point cloud (rows of an N x dim matrix) with k-means++
/// initialization and EM; covariance eigenvalues are floored at
/// kCovarianceFloor and components whose weight falls below 1e-8 are dropped
/// with renormalization. Deterministic for a given seed.
SurfaceModel fit_gmm(const Eigen::MatrixXd& points, int num_components,
                     std::uint64_t seed, int max_iters = 200,
                     double tol = 1e-5, double isocontour_level = 3.0,
                     FitReport* report = nullptr);

/// Model file round trip. Format: header "GSM q M l" followed by M lines
/// "weight mean... upper-triangular covariance...", '#' comments allowed.
SurfaceModel load_model(const std::string& path);
void save_model(const SurfaceModel& model, const std::string& path);

}  // namespace gsm
