#pragma once

#include <cstdint>
#include <string>

namespace gsm::bench {

struct PhaseStats {
  double mean_us = 0.0;
  double stddev_us = 0.0;
};

struct BenchResult {
  PhaseStats init;       ///< spectral cache construction for both ellipsoids
  PhaseStats dist_grad;  ///< pair distance + gradient direction
  PhaseStats coll_prob;  ///< collision probability bound
  PhaseStats total;
  int pairs = 0;
};

/// Times the three phases over random ellipsoid pairs, single threaded.
/// Generation is excluded from timing; the first 100 pairs are warm-up and
/// are discarded from the statistics.
BenchResult run_bench(int pairs, std::uint64_t seed);

/// Header and one CSV row: device,init,init_sd,dist_grad,dist_grad_sd,
/// coll_prob,coll_prob_sd,total,total_sd,pairs (microseconds).
std::string bench_csv_header();
std::string bench_csv_row(const std::string& device_label,
                          const BenchResult& result);

}  // namespace gsm::bench
