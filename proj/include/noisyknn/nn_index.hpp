#pragma once

#include <cstdint>
#include <vector>

#include "noisyknn/types.hpp"

namespace noisyknn {

// Result of a k-nearest-neighbour query, sorted by ascending distance; ties
// in distance are ordered by ascending dataset index.
struct NeighborList {
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
};

enum class IndexBackend {
  kAuto,        // k-d tree when the metric is Euclidean, else brute force
  kBruteForce,  // linear scan; works for any metric
  kKdTree,      // Euclidean only
};

// Immutable exact kNN index over a point set.
//
// Both backends compare candidates by (distance, dataset index), computing
// Euclidean distances through squared_euclidean(), so they return identical
// NeighborLists for every query, including tie cases. Queries are safe to
// run concurrently once the index is built.
class NnIndex {
 public:
  NnIndex(std::vector<Point> points, Metric metric,
          IndexBackend backend = IndexBackend::kAuto);

  // The k nearest points to `q`, 1 <= k <= size().
  NeighborList query(const Point& q, std::size_t k) const;

  // Distance from `q` to its k-th nearest point; equals
  // query(q, k).distances.back().
  double kth_distance(const Point& q, std::size_t k) const;

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }
  const Metric& metric() const { return metric_; }
  bool uses_kdtree() const { return !nodes_.empty(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;  // leaf covers order_[begin, end)
    std::uint32_t axis = 0;
    double split = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    bool is_leaf() const { return left < 0; }
  };

  // Bounded best-k candidate set, worst (largest key, then largest index)
  // on top of a binary max-heap.
  struct TopK;

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end,
                          std::uint32_t depth);
  void search_node(std::int32_t node_id, const Point& q, TopK& top) const;
  void check_query(const Point& q, std::size_t k) const;

  std::vector<Point> points_;
  Metric metric_;
  std::size_t dim_ = 0;
  std::vector<std::uint32_t> order_;  // k-d tree permutation of point ids
  std::vector<Node> nodes_;           // empty => brute force
  std::int32_t root_ = -1;
};

}  // namespace noisyknn
