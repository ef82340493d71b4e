#include "gsm/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gsm/distance.hpp"
#include "gsm/rng.hpp"

namespace gsm::oracle {

SampledSurface sample_surface(const Ellipsoid& e, int n, std::uint64_t seed) {
  if (n < 1) throw TooFewPoints("surface sampling requires n >= 1");
  const int q = e.dim();
  Rng rng(seed);
  SampledSurface out;
  out.source = e;
  out.count = n;
  out.points.resize(n, q);
  const Eigen::MatrixXd& to_surface = e.cache().pow_minus_half;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = rng.unit_vector(q);
    out.points.row(i) = (e.center() + to_surface * u).transpose();
  }
  return out;
}

namespace {

// Radial distance from an interior point to the boundary along the ray from
// the center; a depth proxy for near-touching classification.
double radial_depth(const Ellipsoid& e, const Eigen::VectorXd& x) {
  const double quad = e.quadratic_form(x);
  if (quad >= 1.0) return 0.0;
  const double r = (x - e.center()).norm();
  if (quad <= 0.0) return e.semi_axes().minCoeff();
  return r * (1.0 / std::sqrt(quad) - 1.0);
}

}  // namespace

PairProbe oracle_pair_probe(const Ellipsoid& e1, const Ellipsoid& e2, int n,
                            std::uint64_t seed) {
  if (n < 1000) throw TooFewPoints("pair oracle requires n >= 1000");
  const Rng base(seed);
  const SampledSurface s1 = sample_surface(e1, n, base.substream(1).seed());
  const SampledSurface s2 = sample_surface(e2, n, base.substream(2).seed());

  PairProbe probe;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p1 = s1.points.row(i).transpose();
    if (e2.contains(p1)) {
      probe.penetrating = true;
      probe.penetration_depth =
          std::max(probe.penetration_depth, radial_depth(e2, p1));
    }
    const Eigen::VectorXd p2 = s2.points.row(i).transpose();
    if (e1.contains(p2)) {
      probe.penetrating = true;
      probe.penetration_depth =
          std::max(probe.penetration_depth, radial_depth(e1, p2));
    }
  }
  if (probe.penetrating) return probe;

  const KdTree tree(s2.points);
  // Carrying the running minimum into each query lets the tree discard
  // whole subtrees that cannot improve it.
  double best = (s1.points.row(0) - s2.points.row(0)).norm();
  for (int i = 0; i < n; ++i) {
    const auto [idx, dist] =
        tree.nearest_within(s1.points.row(i).transpose(), best);
    if (idx >= 0) best = std::min(best, dist);
  }
  probe.distance = best;
  return probe;
}

double oracle_pair_distance(const Ellipsoid& e1, const Ellipsoid& e2, int n,
                            std::uint64_t seed) {
  return oracle_pair_probe(e1, e2, n, seed).distance;
}

CloudIndex::CloudIndex(Eigen::MatrixXd points)
    : points_(std::move(points)), tree_(points_) {}

CloudDistanceNormal oracle_cloud_distance_and_normal(
    const SampledSurface& robot_samples, const CloudIndex& cloud) {
  constexpr int kNormalNeighborhood = 30;
  const int cloud_size = static_cast<int>(cloud.points().rows());
  if (cloud_size < kNormalNeighborhood) {
    throw TooFewPoints("normal estimation requires at least 30 cloud points");
  }
  auto [best_cloud_idx, best] =
      cloud.tree().nearest(robot_samples.points.row(0).transpose());
  for (int i = 1; i < robot_samples.count; ++i) {
    const auto [idx, dist] = cloud.tree().nearest_within(
        robot_samples.points.row(i).transpose(), best);
    if (idx >= 0 && dist < best) {
      best = dist;
      best_cloud_idx = idx;
    }
  }

  const Eigen::VectorXd closest =
      cloud.points().row(best_cloud_idx).transpose();
  const std::vector<int> hood =
      cloud.tree().knn(closest, kNormalNeighborhood);
  const int q = static_cast<int>(cloud.points().cols());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
  for (const int idx : hood) mean += cloud.points().row(idx).transpose();
  mean /= static_cast<double>(hood.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
  for (const int idx : hood) {
    const Eigen::VectorXd d = cloud.points().row(idx).transpose() - mean;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd normal = es.eigenvectors().col(0);
  if (normal.dot(robot_samples.source.center() - closest) < 0.0) {
    normal = -normal;
  }
  return {best, normal};
}

GaussianSampler::GaussianSampler(const UncertainCenter& center)
    : mean_(center.mean) {
  const Eigen::LLT<Eigen::MatrixXd> llt(center.covariance);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  // Rank-deficient (or zero) covariance: eigenvalue square root.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(center.covariance);
  factor_ = es.eigenvectors() *
            es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::VectorXd GaussianSampler::draw(Rng& rng) const {
  return mean_ + factor_ * rng.normal_vector(static_cast<int>(mean_.size()));
}

CollisionFrequency monte_carlo_collision(const Ellipsoid& robot,
                                         const UncertainCenter& center,
                                         const Ellipsoid& obstacle,
                                         int draws, std::uint64_t seed) {
  if (draws < 1000) throw TooFewPoints("collision frequency requires >= 1000 draws");
  validate_center(center);
  const GaussianSampler sampler(center);
  Rng rng(seed);
  long hits = 0;
  for (int i = 0; i < draws; ++i) {
    const Ellipsoid moved = robot.translated(sampler.draw(rng));
    if (pair_collides(moved, obstacle)) ++hits;
  }
  CollisionFrequency out;
  out.frequency = static_cast<double>(hits) / draws;
  out.std_error =
      std::sqrt(out.frequency * (1.0 - out.frequency) / draws);
  return out;
}

}  // namespace gsm::oracle
