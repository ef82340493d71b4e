#include "gsm/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gsm {

KdTree::KdTree(const Eigen::MatrixXd& points)
    : dim_(static_cast<int>(points.cols())),
      count_(static_cast<int>(points.rows())) {
  if (count_ == 0) throw EmptyModel("k-d tree over an empty point set");
  if (dim_ < 1 || dim_ > 3) {
    throw DimensionMismatch("k-d tree supports 1 to 3 dimensions");
  }
  coords_.resize(static_cast<std::size_t>(count_) * dim_);
  for (int i = 0; i < count_; ++i) {
    for (int d = 0; d < dim_; ++d) {
      coords_[static_cast<std::size_t>(i) * dim_ + d] = points(i, d);
    }
  }
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * (count_ / kLeafSize + 2));
  root_ = build(0, count_, 0);
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  {
    Node& node = nodes_[id];
    for (int d = 0; d < dim_; ++d) {
      node.box_lo[d] = std::numeric_limits<double>::infinity();
      node.box_hi[d] = -std::numeric_limits<double>::infinity();
    }
    for (int i = begin; i < end; ++i) {
      const double* p = coords_.data() + std::size_t(order_[i]) * dim_;
      for (int d = 0; d < dim_; ++d) {
        node.box_lo[d] = std::min(node.box_lo[d], p[d]);
        node.box_hi[d] = std::max(node.box_hi[d], p[d]);
      }
    }
  }
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  // split along the widest box side
  int axis = 0;
  double widest = -1.0;
  for (int d = 0; d < dim_; ++d) {
    const double width = nodes_[id].box_hi[d] - nodes_[id].box_lo[d];
    if (width > widest) {
      widest = width;
      axis = d;
    }
  }
  if (widest <= 0.0) axis = depth % dim_;  // all points coincide
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     const double ca = coords_[std::size_t(a) * dim_ + axis];
                     const double cb = coords_[std::size_t(b) * dim_ + axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = coords_[std::size_t(order_[mid]) * dim_ + axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

double KdTree::dist_sq(const double* query, int index) const {
  const double* p = coords_.data() + static_cast<std::size_t>(index) * dim_;
  double acc = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double diff = query[d] - p[d];
    acc += diff * diff;
  }
  return acc;
}

double KdTree::box_dist_sq(const Node& node, const double* query) const {
  double acc = 0.0;
  for (int d = 0; d < dim_; ++d) {
    double diff = 0.0;
    if (query[d] < node.box_lo[d]) diff = node.box_lo[d] - query[d];
    else if (query[d] > node.box_hi[d]) diff = query[d] - node.box_hi[d];
    acc += diff * diff;
  }
  return acc;
}

void KdTree::search(int node_id, const double* query, int k,
                    std::vector<Candidate>& heap) const {
  const Node& node = nodes_[node_id];
  if (static_cast<int>(heap.size()) == k &&
      box_dist_sq(node, query) > heap.front().dist_sq) {
    return;
  }
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const Candidate cand{dist_sq(query, idx), idx};
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double delta = query[node.axis] - node.split;
  const int near = delta <= 0.0 ? node.left : node.right;
  const int far = delta <= 0.0 ? node.right : node.left;
  search(near, query, k, heap);
  search(far, query, k, heap);
}

void KdTree::search_single(int node_id, const double* query, double& best_sq,
                           int& best_idx) const {
  const Node& node = nodes_[node_id];
  if (box_dist_sq(node, query) >= best_sq) return;
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const double d = dist_sq(query, idx);
      if (d < best_sq || (d == best_sq && idx < best_idx)) {
        best_sq = d;
        best_idx = idx;
      }
    }
    return;
  }
  const double delta = query[node.axis] - node.split;
  const int near = delta <= 0.0 ? node.left : node.right;
  const int far = delta <= 0.0 ? node.right : node.left;
  search_single(near, query, best_sq, best_idx);
  search_single(far, query, best_sq, best_idx);
}

std::vector<int> KdTree::knn(const Eigen::VectorXd& query, int k) const {
  if (query.size() != dim_) {
    throw DimensionMismatch("query dimension does not match k-d tree");
  }
  if (k < 1) throw InvalidK("k must be at least 1");
  k = std::min(k, count_);
  std::vector<Candidate> heap;
  heap.reserve(k + 1);
  search(root_, query.data(), k, heap);
  std::sort(heap.begin(), heap.end());
  std::vector<int> out(heap.size());
  for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].index;
  return out;
}

std::pair<int, double> KdTree::nearest(const Eigen::VectorXd& query) const {
  return nearest_within(query, std::numeric_limits<double>::infinity());
}

std::pair<int, double> KdTree::nearest_within(const Eigen::VectorXd& query,
                                              double upper_bound) const {
  if (query.size() != dim_) {
    throw DimensionMismatch("query dimension does not match k-d tree");
  }
  double best_sq = upper_bound * upper_bound;
  if (upper_bound == std::numeric_limits<double>::infinity()) {
    best_sq = std::numeric_limits<double>::infinity();
  }
  int best_idx = -1;
  search_single(root_, query.data(), best_sq, best_idx);
  if (best_idx < 0) return {-1, upper_bound};
  return {best_idx, std::sqrt(best_sq)};
}

Eigen::VectorXd KdTree::point(int index) const {
  Eigen::VectorXd p(dim_);
  for (int d = 0; d < dim_; ++d) {
    p[d] = coords_[static_cast<std::size_t>(index) * dim_ + d];
  }
  return p;
}

}  // namespace gsm
