#include "gsm/distance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace gsm {

namespace {

constexpr double kSingularityTol = 1e-12;
constexpr double kGradientFloor = 1e-9;
constexpr int kMaxPolishCycles = 500;

// Column-pivoted QR solve with a rank check relative to the matrix max-norm.
Eigen::VectorXd solve_checked(const Eigen::MatrixXd& m,
                              const Eigen::VectorXd& rhs) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kSingularityTol * m.cwiseAbs().maxCoeff());
  if (qr.rank() < m.cols()) {
    throw SingularSystem("rank-deficient linear system (degenerate or "
                         "touching configuration)");
  }
  return qr.solve(rhs);
}

void check_pair(const Ellipsoid& a, const Ellipsoid& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("ellipsoid dimensions do not match");
  }
}

// Quantities shared by the collision check and the distance solver:
// the transformed shape C~ = B^{1/2} C^{-1} B^{1/2}, the whitened center
// offset c~, and the minimal eigenvalue lambda of the first pencil.
struct StageOne {
  Eigen::MatrixXd c_shape;  // C~
  double lambda = 0.0;
};

StageOne stage_one(const Ellipsoid& first, const Ellipsoid& second) {
  const int q = first.dim();
  const SpectralCache& cb = first.cache();
  const SpectralCache& cc = second.cache();
  const Eigen::VectorXd offset = second.center() - first.center();

  Eigen::MatrixXd ball_frame =
      cb.pow_minus_half * second.shape() * cb.pow_minus_half;
  ball_frame = 0.5 * (ball_frame + ball_frame.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ball_frame);
  if (es.info() != Eigen::Success || es.eigenvalues()[0] <= 0.0) {
    throw NotPositiveDefinite("transformed shape is not positive definite");
  }
  const Eigen::MatrixXd sqrt_ball =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();
  const Eigen::VectorXd c_tilde =
      solve_checked(cb.pow_minus_half * sqrt_ball, offset);

  StageOne s;
  s.c_shape = cb.pow_half * cc.pow_minus_one * cb.pow_half;
  s.c_shape = 0.5 * (s.c_shape + s.c_shape.transpose());

  Eigen::MatrixXd pencil = Eigen::MatrixXd::Zero(2 * q, 2 * q);
  pencil.topLeftCorner(q, q) = s.c_shape;
  pencil.topRightCorner(q, q) = -Eigen::MatrixXd::Identity(q, q);
  pencil.bottomLeftCorner(q, q) = -(c_tilde * c_tilde.transpose());
  pencil.bottomRightCorner(q, q) = s.c_shape;
  s.lambda = min_real_eigenvalue(pencil);
  return s;
}

}  // namespace

namespace {

// Osborne balancing with radix-2 factors: a diagonal similarity transform
// that equalizes row and column norms. Eigenvalues are unchanged; the Schur
// iteration becomes reliable for pencils whose blocks differ in scale.
void balance_in_place(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  bool converged = false;
  while (!converged) {
    converged = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double f = 1.0;
      const double s = c + r;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if (c + r < 0.95 * s) {
        converged = false;
        a.col(i) *= f;
        a.row(i) /= f;
      }
    }
  }
}

}  // namespace

double min_real_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd balanced = m;
  balance_in_place(balanced);
  Eigen::RealSchur<Eigen::MatrixXd> schur;
  schur.compute(balanced, /*computeU=*/false);
  if (schur.info() != Eigen::Success) {
    schur.setMaxIterations(200 * static_cast<int>(m.rows()));
    schur.compute(balanced, /*computeU=*/false);
    if (schur.info() != Eigen::Success) {
      throw Error("Schur iteration failed to converge");
    }
  }
  const Eigen::MatrixXd& t = schur.matrixT();
  const int n = static_cast<int>(t.rows());
  double lowest = std::numeric_limits<double>::infinity();
  int i = 0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      lowest = std::min(lowest, 0.5 * (t(i, i) + t(i + 1, i + 1)));
      i += 2;  // complex conjugate pair, shared real part
    } else {
      lowest = std::min(lowest, t(i, i));
      i += 1;
    }
  }
  return lowest;
}

namespace {

// Collision verdict given precomputed stage-one quantities (the membership
// shortcut must already have returned false).
CollisionCheck check_from_stage_one(const Ellipsoid& first,
                                    const Ellipsoid& second,
                                    const StageOne& s) {
  const int q = first.dim();
  CollisionCheck out;
  out.lambda = s.lambda;
  const Eigen::MatrixXd shifted =
      s.lambda * Eigen::MatrixXd::Identity(q, q) - s.c_shape;
  Eigen::MatrixXd a = shifted * shifted;
  a = 0.5 * (a + a.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw CholeskyFailure("shifted system is not positive definite");
  }
  const Eigen::VectorXd z =
      first.cache().pow_half * (second.center() - first.center());
  out.quadratic = z.dot(llt.solve(z));
  out.threshold = 1.0 / (s.lambda * s.lambda);
  out.colliding = out.quadratic <= out.threshold;  // touching collides
  return out;
}

}  // namespace

CollisionCheck collision_check(const Ellipsoid& first,
                               const Ellipsoid& second) {
  check_pair(first, second);
  // A center inside the other ellipsoid means a definite intersection.
  if (second.contains(first.center()) || first.contains(second.center())) {
    CollisionCheck out;
    out.colliding = true;
    out.center_inside = true;
    return out;
  }
  return check_from_stage_one(first, second, stage_one(first, second));
}

Eigen::VectorXd project_to_boundary(const Ellipsoid& e,
                                    const Eigen::VectorXd& point) {
  const SpectralCache& cache = e.cache();
  const int q = e.dim();
  const Eigen::VectorXd w = cache.rotation.transpose() * (point - e.center());
  const Eigen::VectorXd& gamma = cache.eigenvalues;
  double g0 = 0.0;
  for (int i = 0; i < q; ++i) g0 += gamma[i] * w[i] * w[i];
  if (g0 <= 1.0) return point;
  // g(t) = sum gamma_i w_i^2 / (1 + t gamma_i)^2 is convex decreasing for
  // t >= 0, so Newton from 0 converges monotonically to the root g = 1.
  double t = 0.0;
  for (int iter = 0; iter < 128; ++iter) {
    double g = 0.0, dg = 0.0;
    for (int i = 0; i < q; ++i) {
      const double denom = 1.0 + t * gamma[i];
      const double term = gamma[i] * w[i] * w[i] / (denom * denom);
      g += term;
      dg += -2.0 * term * gamma[i] / denom;
    }
    const double residual = g - 1.0;
    if (std::abs(residual) < 1e-15) break;
    t -= residual / dg;
  }
  Eigen::VectorXd u(q);
  for (int i = 0; i < q; ++i) u[i] = w[i] / (1.0 + t * gamma[i]);
  return e.center() + cache.rotation * u;
}

DistanceSolution pair_distance(const Ellipsoid& first,
                               const Ellipsoid& second) {
  check_pair(first, second);
  const int q = first.dim();
  DistanceSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(q);
  sol.d_star = Eigen::VectorXd::Zero(q);

  if (second.contains(first.center()) || first.contains(second.center())) {
    sol.colliding = true;
    return sol;
  }
  const StageOne s = stage_one(first, second);
  sol.lambda = s.lambda;
  if (check_from_stage_one(first, second, s).colliding) {
    sol.colliding = true;
    return sol;
  }

  const SpectralCache& cb = first.cache();
  const Eigen::VectorXd offset = second.center() - first.center();

  const Eigen::MatrixXd shifted =
      s.lambda * Eigen::MatrixXd::Identity(q, q) - s.c_shape;
  sol.alpha =
      solve_checked(cb.pow_minus_half * shifted * cb.pow_half, offset);
  const Eigen::VectorXd b_tilde = -s.lambda * (cb.pow_minus_half * sol.alpha);

  Eigen::MatrixXd pencil = Eigen::MatrixXd::Zero(2 * q, 2 * q);
  pencil.topLeftCorner(q, q) = cb.pow_minus_one;
  pencil.topRightCorner(q, q) = -Eigen::MatrixXd::Identity(q, q);
  pencil.bottomLeftCorner(q, q) = -(b_tilde * b_tilde.transpose());
  pencil.bottomRightCorner(q, q) = cb.pow_minus_one;
  sol.mu = min_real_eigenvalue(pencil);

  const Eigen::VectorXd d_first = solve_checked(
      sol.mu * Eigen::MatrixXd::Identity(q, q) - cb.pow_minus_one,
      -sol.mu * s.lambda * sol.alpha);

  // The pipeline above yields a closest-pair estimate: a point on the second
  // ellipsoid picked in the metric of the first, projected back. Polish it
  // by alternating Euclidean projections, which converge to the true pair
  // for disjoint convex bodies. Warm-started, this typically takes a few
  // cycles.
  Eigen::VectorXd on_second = first.center() + s.lambda * sol.alpha;
  Eigen::VectorXd on_first = on_second + d_first;
  double dist = (on_first - on_second).norm();
  for (int cycle = 0; cycle < kMaxPolishCycles; ++cycle) {
    on_second = project_to_boundary(second, on_first);
    on_first = project_to_boundary(first, on_second);
    const double next = (on_first - on_second).norm();
    const bool settled = dist - next < 1e-12;
    dist = next;
    if (settled) break;
  }

  sol.d_star = on_first - on_second;
  sol.distance = dist;
  return sol;
}

SurfaceQueryResult surface_distance(const Ellipsoid& robot,
                                    const SurfaceModel& model,
                                    const SurfaceQueryOptions& options) {
  if (model.size() == 0) throw EmptyModel("surface model is empty");
  if (robot.dim() != model.dim()) {
    throw DimensionMismatch("robot dimension does not match model");
  }

  std::vector<int> scan;
  if (options.prune_k > 0 && options.prune_k < model.size()) {
    scan = model.knn(robot.center(), options.prune_k);
    std::sort(scan.begin(), scan.end());  // lowest-index tie break
  } else {
    scan.resize(model.size());
    for (int i = 0; i < model.size(); ++i) scan[i] = i;
  }

  SurfaceQueryResult result;
  result.gradient = Eigen::VectorXd::Zero(robot.dim());
  Eigen::VectorXd best_d_star;
  bool have_best = false;

  for (const int idx : scan) {
    const DistanceSolution sol = pair_distance(robot, model.ellipsoid(idx));
    const double d = sol.colliding ? 0.0 : sol.distance;
    if (options.per_component) result.per_component.emplace_back(idx, d);
    if (!have_best || d < result.distance) {
      have_best = true;
      result.distance = d;
      result.closest_component = idx;
      result.colliding = sol.colliding;
      best_d_star = sol.d_star;
    }
    if (result.colliding && !options.per_component) break;
  }

  if (!result.colliding && result.distance >= kGradientFloor) {
    result.gradient = best_d_star / best_d_star.norm();
  }
  return result;
}

Eigen::VectorXd surface_gradient(const Ellipsoid& robot,
                                 const SurfaceModel& model) {
  const SurfaceQueryResult result = surface_distance(robot, model);
  if (result.colliding || result.distance < kGradientFloor) {
    throw UndefinedGradient("gradient undefined at or inside the surface");
  }
  return result.gradient;
}

}  // namespace gsm
