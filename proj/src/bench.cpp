#include "gsm/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "gsm/distance.hpp"
#include "gsm/probability.hpp"
#include "gsm/sampling.hpp"

namespace gsm::bench {

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

PhaseStats stats_of(const std::vector<double>& samples) {
  PhaseStats s;
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_us = sum / samples.size();
  double acc = 0.0;
  for (double v : samples) {
    const double d = v - s.mean_us;
    acc += d * d;
  }
  s.stddev_us = std::sqrt(acc / samples.size());
  return s;
}

// Keeps results observable so the optimizer cannot drop the timed work.
volatile double g_sink = 0.0;

}  // namespace

BenchResult run_bench(int pairs, std::uint64_t seed) {
  if (pairs < 1) throw InvalidRange("pair count must be at least 1");
  constexpr int kWarmup = 100;
  const int total_pairs = pairs + kWarmup;

  struct RawPair {
    Eigen::VectorXd b, c;
    Eigen::MatrixXd shape_b, shape_c;
  };
  std::vector<RawPair> raw(total_pairs);
  Rng rng(seed);
  for (RawPair& p : raw) {
    const Ellipsoid e1 = random_ellipsoid(rng);
    const Ellipsoid e2 = random_ellipsoid(rng);
    p = {e1.center(), e2.center(), e1.shape(), e2.shape()};
  }

  const Eigen::MatrixXd sigma = 0.01 * Eigen::MatrixXd::Identity(3, 3);
  std::vector<double> t_init, t_dist, t_prob, t_total;
  t_init.reserve(pairs);
  t_dist.reserve(pairs);
  t_prob.reserve(pairs);
  t_total.reserve(pairs);

  for (int n = 0; n < total_pairs; ++n) {
    const RawPair& p = raw[n];
    const auto t0 = Clock::now();
    const Ellipsoid e1(p.b, p.shape_b);
    const Ellipsoid e2(p.c, p.shape_c);
    const auto t1 = Clock::now();
    const DistanceSolution sol = pair_distance(e1, e2);
    double grad_head = 0.0;
    if (!sol.colliding && sol.distance > 0.0) {
      grad_head = sol.d_star[0] / sol.distance;
    }
    const auto t2 = Clock::now();
    const ProbabilityResult prob =
        pair_collision_probability(e1, {p.b, sigma}, e2);
    const auto t3 = Clock::now();

    g_sink = g_sink + sol.distance + grad_head + prob.bound;
    if (n < kWarmup) continue;
    t_init.push_back(micros(t0, t1));
    t_dist.push_back(micros(t1, t2));
    t_prob.push_back(micros(t2, t3));
    t_total.push_back(micros(t0, t3));
  }

  BenchResult result;
  result.init = stats_of(t_init);
  result.dist_grad = stats_of(t_dist);
  result.coll_prob = stats_of(t_prob);
  result.total = stats_of(t_total);
  result.pairs = pairs;
  return result;
}

std::string bench_csv_header() {
  return "device,init_us,init_sd,dist_grad_us,dist_grad_sd,coll_prob_us,"
         "coll_prob_sd,total_us,total_sd,pairs";
}

std::string bench_csv_row(const std::string& device_label,
                          const BenchResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%d",
                device_label.c_str(), r.init.mean_us, r.init.stddev_us,
                r.dist_grad.mean_us, r.dist_grad.stddev_us,
                r.coll_prob.mean_us, r.coll_prob.stddev_us, r.total.mean_us,
                r.total.stddev_us, r.pairs);
  return buf;
}

}  // namespace gsm::bench
