#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsm/errors.hpp"

namespace gsm {

/// Exact k-d tree over a fixed point set (rows of an N x dim matrix).
/// Per-node bounding boxes keep pruning effective even when queries are far
/// from the set. Queries backtrack fully, so results are identical to a
/// linear scan; ties on distance are broken by the lower point index.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const Eigen::MatrixXd& points);

  int size() const { return count_; }
  int dim() const { return dim_; }

  /// Indices of the k nearest points, ascending by (distance, index).
  std::vector<int> knn(const Eigen::VectorXd& query, int k) const;

  /// Index and distance of the single nearest point.
  std::pair<int, double> nearest(const Eigen::VectorXd& query) const;

  /// Nearest point strictly closer than `upper_bound`; index -1 when no
  /// point beats the bound. Subtrees that cannot beat the bound are skipped,
  /// which makes scans that carry a running global minimum cheap.
  std::pair<int, double> nearest_within(const Eigen::VectorXd& query,
                                        double upper_bound) const;

  Eigen::VectorXd point(int index) const;

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
    double box_lo[3] = {0, 0, 0};
    double box_hi[3] = {0, 0, 0};
  };

  struct Candidate {  // max-heap entry, worst on top
    double dist_sq;
    int index;
    bool operator<(const Candidate& o) const {
      return dist_sq < o.dist_sq || (dist_sq == o.dist_sq && index < o.index);
    }
  };

  int build(int begin, int end, int depth);
  void search(int node, const double* query, int k,
              std::vector<Candidate>& heap) const;
  void search_single(int node, const double* query, double& best_sq,
                     int& best_idx) const;
  double dist_sq(const double* query, int index) const;
  double box_dist_sq(const Node& node, const double* query) const;

  int dim_ = 0;
  int count_ = 0;
  std::vector<double> coords_;  // count_ * dim_, point-major
  std::vector<int> order_;      // permutation produced by building
  std::vector<Node> nodes_;
  int root_ = -1;

  static constexpr int kLeafSize = 16;
};

}  // namespace gsm
