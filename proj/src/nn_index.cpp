#include "noisyknn/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace noisyknn {
namespace {

constexpr std::uint32_t kLeafSize = 16;

struct Candidate {
  double key;  // squared distance (Euclidean) or raw distance (custom)
  std::uint32_t index;
};

// Lexicographic (key, index) order; "less" means a strictly better neighbour.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.key != b.key) return a.key < b.key;
  return a.index < b.index;
}

}  // namespace

struct NnIndex::TopK {
  explicit TopK(std::size_t k) : k(k) { heap.reserve(k); }

  std::size_t k;
  std::vector<Candidate> heap;  // max-heap, worst candidate on top

  static bool heap_less(const Candidate& a, const Candidate& b) {
    return better(a, b);  // std::push_heap keeps the "largest" on top
  }

  bool full() const { return heap.size() == k; }

  // Upper bound on the key of any candidate that could still be accepted.
  double bound() const {
    return full() ? heap.front().key : std::numeric_limits<double>::infinity();
  }

  void offer(double key, std::uint32_t index) {
    const Candidate c{key, index};
    if (!full()) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(), heap_less);
    } else if (better(c, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(), heap_less);
    }
  }

  std::vector<Candidate> sorted() && {
    std::sort(heap.begin(), heap.end(), better);
    return std::move(heap);
  }
};

NnIndex::NnIndex(std::vector<Point> points, Metric metric, IndexBackend backend)
    : points_(std::move(points)), metric_(std::move(metric)) {
  if (points_.empty()) {
    throw std::invalid_argument("NnIndex: point set must be non-empty");
  }
  dim_ = points_.front().size();
  if (dim_ == 0) {
    throw std::invalid_argument("NnIndex: points must have dimension >= 1");
  }
  for (const Point& p : points_) {
    if (p.size() != dim_) {
      throw std::invalid_argument("NnIndex: mixed dimensions in point set");
    }
    for (double c : p) {
      if (!std::isfinite(c)) {
        throw std::invalid_argument("NnIndex: non-finite coordinate");
      }
    }
  }
  if (backend == IndexBackend::kKdTree && !metric_.is_euclidean()) {
    throw std::invalid_argument(
        "NnIndex: k-d tree backend requires the Euclidean metric");
  }

  const bool use_tree =
      metric_.is_euclidean() && backend != IndexBackend::kBruteForce;
  if (use_tree) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build_node(0, static_cast<std::uint32_t>(points_.size()), 0);
  }
}

std::int32_t NnIndex::build_node(std::uint32_t begin, std::uint32_t end,
                                 std::uint32_t depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end, 0, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return id;

  const auto axis = static_cast<std::uint32_t>(depth % dim_);
  const std::uint32_t mid = begin + (end - begin) / 2;
  // (coordinate, id) comparator makes the split deterministic under
  // duplicate coordinates: left half <= split <= right half.
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });
  const double split = points_[order_[mid]][axis];

  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const std::int32_t left = build_node(begin, mid, depth + 1);
  const std::int32_t right = build_node(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NnIndex::search_node(std::int32_t node_id, const Point& q,
                          TopK& top) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.is_leaf()) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t id = order_[i];
      top.offer(squared_euclidean(q, points_[id]), id);
    }
    return;
  }

  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search_node(near, q, top);
  // Prune only on a strict excess: an equal-key candidate with a smaller
  // dataset index on the far side could still displace the current worst.
  if (diff * diff <= top.bound()) {
    search_node(far, q, top);
  }
}

void NnIndex::check_query(const Point& q, std::size_t k) const {
  if (q.size() != dim_) {
    throw std::invalid_argument("NnIndex: query dimension mismatch");
  }
  if (k < 1 || k > points_.size()) {
    throw std::invalid_argument("NnIndex: k out of range [1, n]");
  }
}

NeighborList NnIndex::query(const Point& q, std::size_t k) const {
  check_query(q, k);

  TopK top(k);
  if (!nodes_.empty()) {
    search_node(root_, q, top);
  } else if (metric_.is_euclidean()) {
    for (std::uint32_t i = 0; i < points_.size(); ++i) {
      top.offer(squared_euclidean(q, points_[i]), i);
    }
  } else {
    for (std::uint32_t i = 0; i < points_.size(); ++i) {
      top.offer(metric_(q, points_[i]), i);
    }
  }

  const std::vector<Candidate> best = std::move(top).sorted();
  NeighborList out;
  out.indices.reserve(k);
  out.distances.reserve(k);
  const bool euclid = metric_.is_euclidean();
  for (const Candidate& c : best) {
    out.indices.push_back(c.index);
    out.distances.push_back(euclid ? std::sqrt(c.key) : c.key);
  }
  return out;
}

double NnIndex::kth_distance(const Point& q, std::size_t k) const {
  return query(q, k).distances.back();
}

}  // namespace noisyknn
