#include "gsm/surface_model.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "gsm/rng.hpp"

namespace gsm {

namespace {

Eigen::MatrixXd means_matrix(const std::vector<GaussianComponent>& comps) {
  const int q = static_cast<int>(comps[0].mean.size());
  Eigen::MatrixXd m(static_cast<int>(comps.size()), q);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    m.row(static_cast<int>(i)) = comps[i].mean.transpose();
  }
  return m;
}

}  // namespace

SurfaceModel::SurfaceModel(std::vector<GaussianComponent> components,
                           double isocontour_level)
    : components_(std::move(components)), level_(isocontour_level) {
  if (components_.empty()) {
    throw EmptyModel("surface model requires at least one component");
  }
  if (level_ <= 0.0) throw InvalidRange("isocontour level must be positive");
  const Eigen::Index q = components_[0].mean.size();
  double weight_sum = 0.0;
  for (const GaussianComponent& c : components_) {
    if (c.mean.size() != q || c.covariance.rows() != q ||
        c.covariance.cols() != q) {
      throw DimensionMismatch("inconsistent component dimensions");
    }
    if (c.weight <= 0.0) {
      throw Error("component weights must be positive");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-6) {
    throw Error("component weights must sum to 1 (got " +
                std::to_string(weight_sum) + ")");
  }
  ellipsoids_.reserve(components_.size());
  for (const GaussianComponent& c : components_) {
    ellipsoids_.push_back(
        isocontour_ellipsoid(c.mean, c.covariance, {level_}));
  }
  index_ = KdTree(means_matrix(components_));
}

std::vector<int> SurfaceModel::knn(const Eigen::VectorXd& point, int k) const {
  if (k < 1) throw InvalidK("k must be at least 1");
  return index_.knn(point, std::min(k, size()));
}

double SurfaceModel::density(const Eigen::VectorXd& point) const {
  const int q = dim();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (const GaussianComponent& c : components_) {
    const Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("component covariance is not SPD");
    }
    const Eigen::VectorXd diff = point - c.mean;
    const Eigen::VectorXd w = llt.matrixL().solve(diff);
    double log_det = 0.0;
    for (int i = 0; i < q; ++i) log_det += std::log(llt.matrixL()(i, i));
    const double log_pdf =
        -0.5 * (q * log_2pi + w.squaredNorm()) - log_det;
    total += c.weight * std::exp(log_pdf);
  }
  return total;
}

namespace {

// k-means++ seeding: first center uniform, then proportional to squared
// distance from the nearest chosen center.
std::vector<int> kmeanspp_centers(const Eigen::MatrixXd& points, int k,
                                  Rng& rng) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> centers;
  centers.reserve(k);
  centers.push_back(static_cast<int>(rng.uniform_index(n)));
  Eigen::VectorXd dist_sq(n);
  for (int i = 0; i < n; ++i) {
    dist_sq[i] = (points.row(i) - points.row(centers[0])).squaredNorm();
  }
  while (static_cast<int>(centers.size()) < k) {
    const double total = dist_sq.sum();
    int chosen;
    if (total <= 0.0) {
      chosen = static_cast<int>(rng.uniform_index(n));
    } else {
      double u = rng.uniform() * total;
      chosen = n - 1;
      for (int i = 0; i < n; ++i) {
        u -= dist_sq[i];
        if (u <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(chosen);
    for (int i = 0; i < n; ++i) {
      dist_sq[i] = std::min(
          dist_sq[i], (points.row(i) - points.row(chosen)).squaredNorm());
    }
  }
  return centers;
}

struct LogGaussian {
  Eigen::MatrixXd cov_llt_l;  // lower Cholesky factor
  Eigen::VectorXd mean;
  double log_norm = 0.0;

  void set(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
    mean = mu;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    assert(llt.info() == Eigen::Success);
    cov_llt_l = llt.matrixL();
    double log_det = 0.0;
    for (int i = 0; i < cov.rows(); ++i) log_det += std::log(cov_llt_l(i, i));
    log_norm = -0.5 * cov.rows() * std::log(2.0 * std::numbers::pi) - log_det;
  }

  double log_pdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd w =
        cov_llt_l.triangularView<Eigen::Lower>().solve(x - mean);
    return log_norm - 0.5 * w.squaredNorm();
  }
};

}  // namespace

SurfaceModel fit_gmm(const Eigen::MatrixXd& points, int num_components,
                     std::uint64_t seed, int max_iters, double tol,
                     double isocontour_level, FitReport* report) {
  const int n = static_cast<int>(points.rows());
  const int q = static_cast<int>(points.cols());
  if (num_components < 1) throw TooFewPoints("need at least one component");
  if (n < num_components) {
    throw TooFewPoints("point count " + std::to_string(n) +
                       " below component count " +
                       std::to_string(num_components));
  }
  if (!points.allFinite()) throw Error("point cloud contains non-finite values");

  Rng rng(seed);
  const std::vector<int> seeds = kmeanspp_centers(points, num_components, rng);

  // Initial parameters: seeded means, shared (regularized) global covariance.
  const Eigen::RowVectorXd global_mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - global_mean;
  Eigen::MatrixXd global_cov =
      (centered.transpose() * centered) / std::max(1, n - 1);
  global_cov = regularize_spd(global_cov, kCovarianceFloor);

  int m = num_components;
  std::vector<double> weights(m, 1.0 / m);
  std::vector<Eigen::VectorXd> means(m);
  std::vector<Eigen::MatrixXd> covs(m, global_cov);
  for (int k = 0; k < m; ++k) means[k] = points.row(seeds[k]).transpose();

  Eigen::MatrixXd resp(n, m);
  double prev_ll = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  int dropped = 0;
  double ll = prev_ll;

  for (int iter = 0; iter < max_iters; ++iter) {
    iterations = iter + 1;
    // E step with log-sum-exp.
    std::vector<LogGaussian> pdfs(m);
    for (int k = 0; k < m; ++k) pdfs[k].set(means[k], covs[k]);
    ll = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = points.row(i).transpose();
      double max_log = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        resp(i, k) = std::log(weights[k]) + pdfs[k].log_pdf(x);
        max_log = std::max(max_log, resp(i, k));
      }
      double sum = 0.0;
      for (int k = 0; k < m; ++k) sum += std::exp(resp(i, k) - max_log);
      const double log_sum = max_log + std::log(sum);
      ll += log_sum;
      for (int k = 0; k < m; ++k) resp(i, k) = std::exp(resp(i, k) - log_sum);
    }

    // M step.
    std::vector<double> new_weights;
    std::vector<Eigen::VectorXd> new_means;
    std::vector<Eigen::MatrixXd> new_covs;
    for (int k = 0; k < m; ++k) {
      const double nk = resp.col(k).sum();
      const double w = nk / n;
      if (w < 1e-8) {
        ++dropped;  // degenerate component: drop and renormalize below
        continue;
      }
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(q);
      for (int i = 0; i < n; ++i) mu += resp(i, k) * points.row(i).transpose();
      mu /= nk;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd d = points.row(i).transpose() - mu;
        cov += resp(i, k) * (d * d.transpose());
      }
      cov /= nk;
      new_weights.push_back(w);
      new_means.push_back(std::move(mu));
      new_covs.push_back(regularize_spd(cov, kCovarianceFloor));
    }
    if (new_weights.empty()) throw Error("all components degenerated");
    double wsum = 0.0;
    for (double w : new_weights) wsum += w;
    for (double& w : new_weights) w /= wsum;
    const bool shrunk = static_cast<int>(new_weights.size()) != m;
    m = static_cast<int>(new_weights.size());
    weights = std::move(new_weights);
    means = std::move(new_means);
    covs = std::move(new_covs);
    if (shrunk) resp.resize(n, m);

    if (std::abs(ll - prev_ll) < tol * std::max(1.0, std::abs(ll)) &&
        !shrunk) {
      break;
    }
    prev_ll = ll;
  }

  std::vector<GaussianComponent> comps(m);
  for (int k = 0; k < m; ++k) {
    comps[k] = {weights[k], means[k], covs[k]};
  }
  if (report) *report = {iterations, ll, dropped};
  return SurfaceModel(std::move(comps), isocontour_level);
}

namespace {

// Strips '#' comments; returns false for blank lines.
bool content_of_line(const std::string& raw, std::string& out) {
  const std::size_t hash = raw.find('#');
  out = hash == std::string::npos ? raw : raw.substr(0, hash);
  for (char ch : out) {
    if (!std::isspace(static_cast<unsigned char>(ch))) return true;
  }
  return false;
}

}  // namespace

SurfaceModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string raw, line;
  long line_no = 0;

  auto next_content_line = [&](const char* what) {
    while (std::getline(in, raw)) {
      ++line_no;
      if (content_of_line(raw, line)) return;
    }
    throw ParseError(std::string("unexpected end of file, expected ") + what,
                     line_no);
  };

  next_content_line("header");
  std::istringstream header(line);
  std::string magic;
  int q = 0, m = 0;
  double level = 0.0;
  if (!(header >> magic >> q >> m >> level) || magic != "GSM") {
    throw ParseError("malformed header, expected 'GSM q M l'", line_no);
  }
  if (q != 2 && q != 3) throw ParseError("dimension must be 2 or 3", line_no);
  if (m < 1) throw EmptyModel("model file declares no components");

  std::vector<GaussianComponent> comps;
  comps.reserve(m);
  const int upper = q * (q + 1) / 2;
  for (int k = 0; k < m; ++k) {
    next_content_line("component record");
    std::istringstream rec(line);
    GaussianComponent c;
    c.mean.resize(q);
    c.covariance.resize(q, q);
    if (!(rec >> c.weight)) throw ParseError("bad component weight", line_no);
    for (int i = 0; i < q; ++i) {
      if (!(rec >> c.mean[i])) throw ParseError("bad component mean", line_no);
    }
    std::vector<double> tri(upper);
    for (int i = 0; i < upper; ++i) {
      if (!(rec >> tri[i])) {
        throw ParseError("bad component covariance", line_no);
      }
    }
    int t = 0;
    for (int r = 0; r < q; ++r) {
      for (int cidx = r; cidx < q; ++cidx) {
        c.covariance(r, cidx) = tri[t];
        c.covariance(cidx, r) = tri[t];
        ++t;
      }
    }
    comps.push_back(std::move(c));
  }
  try {
    return SurfaceModel(std::move(comps), level);
  } catch (const Error& e) {
    throw ParseError(std::string("invalid model: ") + e.what(), line_no);
  }
}

void save_model(const SurfaceModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path);
  const int q = model.dim();
  char buf[64];
  out << "GSM " << q << ' ' << model.size() << ' ';
  std::snprintf(buf, sizeof(buf), "%.17g", model.level());
  out << buf << '\n';
  for (const GaussianComponent& c : model.components()) {
    std::snprintf(buf, sizeof(buf), "%.17g", c.weight);
    out << buf;
    for (int i = 0; i < q; ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", c.mean[i]);
      out << buf;
    }
    for (int r = 0; r < q; ++r) {
      for (int cidx = r; cidx < q; ++cidx) {
        std::snprintf(buf, sizeof(buf), " %.17g", c.covariance(r, cidx));
        out << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gsm
