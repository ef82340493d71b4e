#include "gsm/probability.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gsm {

namespace {

constexpr int kMaxEscalations = 50;

// lambda and A = (lambda I - C~)^2 for the mean configuration; shared with
// the distance module's pipeline but computed locally to keep this module's
// entry point self-contained.
struct MeanConfig {
  double lambda = 0.0;
  Eigen::MatrixXd a_bar;  // B^{1/2} A^{-1} B^{1/2}
};

MeanConfig mean_config(const Ellipsoid& robot_at_mean,
                       const Ellipsoid& obstacle) {
  const int q = robot_at_mean.dim();
  const SpectralCache& cb = robot_at_mean.cache();
  const CollisionCheck check = collision_check(robot_at_mean, obstacle);

  MeanConfig cfg;
  cfg.lambda = check.lambda;
  const Eigen::MatrixXd c_shape =
      cb.pow_half * obstacle.cache().pow_minus_one * cb.pow_half;
  const Eigen::MatrixXd shifted =
      cfg.lambda * Eigen::MatrixXd::Identity(q, q) -
      0.5 * (c_shape + c_shape.transpose());
  Eigen::MatrixXd a = shifted * shifted;
  a = 0.5 * (a + a.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw CholeskyFailure("shifted system is not positive definite");
  }
  Eigen::MatrixXd a_bar = cb.pow_half * llt.solve(cb.pow_half);
  cfg.a_bar = 0.5 * (a_bar + a_bar.transpose());
  return cfg;
}

}  // namespace

void validate_center(const UncertainCenter& center) {
  const Eigen::Index q = center.mean.size();
  if (center.covariance.rows() != q || center.covariance.cols() != q) {
    throw DimensionMismatch("center covariance dimension mismatch");
  }
  const double asym =
      (center.covariance - center.covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw Error("center covariance asymmetry exceeds tolerance");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(center.covariance);
  const double scale = std::max(1.0, center.covariance.cwiseAbs().maxCoeff());
  if (es.eigenvalues()[0] < -1e-12 * scale) {
    throw NotPositiveDefinite("center covariance has a negative eigenvalue");
  }
}

Moments quadratic_form_moments(const Eigen::MatrixXd& a_bar,
                               const Eigen::VectorXd& c,
                               const UncertainCenter& center) {
  const Eigen::Index q = center.mean.size();
  if (a_bar.rows() != q || a_bar.cols() != q || c.size() != q) {
    throw DimensionMismatch("moment inputs have inconsistent dimensions");
  }
  const Eigen::VectorXd m = c - center.mean;
  const Eigen::MatrixXd as = a_bar * center.covariance;
  Moments out;
  out.expectation = as.trace() + m.dot(a_bar * m);
  out.variance =
      2.0 * (as * as).trace() + 4.0 * m.dot(as * (a_bar * m));
  return out;
}

ProbabilityResult pair_collision_probability(const Ellipsoid& robot,
                                             const UncertainCenter& center,
                                             const Ellipsoid& obstacle) {
  validate_center(center);
  if (robot.dim() != obstacle.dim() ||
      robot.dim() != static_cast<int>(center.mean.size())) {
    throw DimensionMismatch("probability inputs have inconsistent dimensions");
  }
  const Ellipsoid robot_at_mean = robot.translated(center.mean);

  ProbabilityResult result;
  if (pair_collides(robot_at_mean, obstacle)) {
    result.bound = 1.0;  // conservative: the mean configuration collides
    return result;
  }

  const MeanConfig cfg = mean_config(robot_at_mean, obstacle);
  const Moments moments =
      quadratic_form_moments(cfg.a_bar, obstacle.center(), center);
  result.expectation = moments.expectation;
  result.variance = std::max(0.0, moments.variance);
  result.lambda_sq_inv = 1.0 / (cfg.lambda * cfg.lambda);

  const double sigma = std::sqrt(result.variance);
  double eta = 0.25;
  int escalations = 0;
  while (result.expectation + eta * sigma - result.lambda_sq_inv <= 0.0 &&
         escalations < kMaxEscalations) {
    eta += 0.5;
    ++escalations;
  }
  result.eta = eta;
  result.escalations = escalations;
  const double denominator =
      result.expectation + eta * sigma - result.lambda_sq_inv;
  if (denominator <= 0.0) {
    result.bound = 1.0;
    result.degraded = true;
    return result;
  }
  result.bound = std::clamp(eta * sigma / denominator, 0.0, 1.0);
  return result;
}

double blend_weight(const Eigen::VectorXd& robot_center,
                    const Ellipsoid& component,
                    const Eigen::VectorXd& gradient) {
  Eigen::VectorXd normal = component.shortest_axis_direction();
  if (normal.dot(robot_center - component.center()) < 0.0) normal = -normal;
  return std::max(0.0, gradient.dot(normal));
}

std::vector<double> blend_weights(
    const Eigen::VectorXd& robot_center,
    const std::vector<Ellipsoid>& components,
    const std::vector<Eigen::VectorXd>& gradients) {
  if (components.size() != gradients.size()) {
    throw DimensionMismatch("one gradient per component required");
  }
  std::vector<double> weights(components.size());
  for (std::size_t i = 0; i < components.size(); ++i) {
    weights[i] = blend_weight(robot_center, components[i], gradients[i]);
  }
  return weights;
}

BlendedProbability surface_collision_probability(const Ellipsoid& robot,
                                                 const UncertainCenter& center,
                                                 const SurfaceModel& model,
                                                 int k) {
  if (model.size() == 0) throw EmptyModel("surface model is empty");
  if (k < 1) throw InvalidK("K must be at least 1");
  validate_center(center);
  k = std::min(k, model.size());

  const std::vector<int> nearest = model.knn(center.mean, k);
  const Ellipsoid robot_at_mean = robot.translated(center.mean);

  BlendedProbability blended;
  blended.contributions.reserve(nearest.size());
  double weight_sum = 0.0;
  double weighted_prob = 0.0;

  for (const int idx : nearest) {
    const Ellipsoid& comp = model.ellipsoid(idx);
    BlendedProbability::Contribution contrib;
    contrib.component = idx;
    Eigen::VectorXd normal = comp.shortest_axis_direction();
    if (normal.dot(center.mean - comp.center()) < 0.0) normal = -normal;
    contrib.normal = normal;

    const DistanceSolution sol = pair_distance(robot_at_mean, comp);
    if (sol.colliding) {
      // Mean-colliding component: certain collision, direction undefined.
      contrib.probability = 1.0;
      contrib.weight = 1.0;
      contrib.gradient = Eigen::VectorXd::Zero(robot.dim());
    } else {
      contrib.probability =
          pair_collision_probability(robot, center, comp).bound;
      contrib.gradient = sol.d_star / sol.distance;
      contrib.weight = blend_weight(center.mean, comp, contrib.gradient);
    }
    weight_sum += contrib.weight;
    weighted_prob += contrib.weight * contrib.probability;
    blended.contributions.push_back(std::move(contrib));
  }

  if (weight_sum > 0.0) {
    blended.value = weighted_prob / weight_sum;
  } else {
    // Occluded region: every component faces away. Fall back to the closest
    // component's unblended bound and flag the estimate.
    blended.degraded = true;
    blended.value = blended.contributions.front().probability;
  }
  return blended;
}

ProbabilityResult unblended_collision_probability(const Ellipsoid& robot,
                                                  const UncertainCenter& center,
                                                  const SurfaceModel& model) {
  validate_center(center);
  const Ellipsoid robot_at_mean = robot.translated(center.mean);
  const SurfaceQueryResult query = surface_distance(robot_at_mean, model);
  return pair_collision_probability(robot, center,
                                    model.ellipsoid(query.closest_component));
}

}  // namespace gsm
