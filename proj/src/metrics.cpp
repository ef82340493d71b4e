#include "gsm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gsm::field {

MetricsReport compute_metrics(const FieldGrid& predicted,
                              const FieldGrid& truth) {
  if (predicted.slice.res_u != truth.slice.res_u ||
      predicted.slice.res_v != truth.slice.res_v) {
    throw ShapeMismatch("field grids differ in shape");
  }
  MetricsReport report;
  double dist_acc = 0.0;
  double cos_acc = 0.0;
  for (int idx = 0; idx < predicted.cells(); ++idx) {
    if (!predicted.valid[idx] || !truth.valid[idx]) continue;
    const double dd = predicted.distance[idx] - truth.distance[idx];
    dist_acc += dd * dd;

    Eigen::Vector3d gp = predicted.gradient[idx];
    Eigen::Vector3d gt = truth.gradient[idx];
    const double np = gp.norm(), nt = gt.norm();
    double cosine = 1.0;  // both-zero gradients count as aligned
    if (np > 0.0 && nt > 0.0) {
      cosine = std::clamp(gp.dot(gt) / (np * nt), -1.0, 1.0);
    } else if (np > 0.0 || nt > 0.0) {
      cosine = 0.0;
    }
    const double err = 1.0 - cosine;
    cos_acc += err * err;
    ++report.cells;
  }
  if (report.cells > 0) {
    report.rmse = std::sqrt(dist_acc / report.cells);
    report.ces = std::sqrt(cos_acc / report.cells);
  }
  return report;
}

}  // namespace gsm::field
