#pragma once

#include "gsm/field.hpp"

namespace gsm::field {

/// Field comparison over cells valid in both grids. rmse is over distances
/// (meters). ces is the cosine error score over gradients,
/// sqrt(mean (1 - cos theta)^2): 0 for identical fields, 1 for orthogonal
/// gradients.
struct MetricsReport {
  double rmse = 0.0;
  double ces = 0.0;
  long cells = 0;
};

MetricsReport compute_metrics(const FieldGrid& predicted,
                              const FieldGrid& truth);

}  // namespace gsm::field
