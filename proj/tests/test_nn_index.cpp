#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noisyknn/nn_index.hpp"
#include "noisyknn/rng.hpp"
#include "oracles.hpp"

using namespace noisyknn;

namespace {

std::vector<Point> random_points(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts) {
    for (double& c : p) c = rng.uniform();
  }
  return pts;
}

// Small integer lattice coordinates force plenty of exact distance ties.
std::vector<Point> lattice_points(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts) {
    for (double& c : p) c = static_cast<double>(rng.uniform_index(3));
  }
  return pts;
}

void check_equal(const NeighborList& a, const NeighborList& b) {
  REQUIRE(a.indices == b.indices);
  REQUIRE(a.distances == b.distances);
}

}  // namespace

TEST_CASE("index construction") {
  SUBCASE("three points in R2") {
    NnIndex idx({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, Metric::euclidean());
    CHECK(idx.size() == 3);
    CHECK(idx.dim() == 2);
  }
  SUBCASE("singleton returns its only point for any query") {
    NnIndex idx({{2.0, 3.0}}, Metric::euclidean());
    CHECK(idx.size() == 1);
    const NeighborList nn = idx.query({0.0, 0.0}, 1);
    CHECK(nn.indices == std::vector<std::size_t>{0});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(NnIndex({}, Metric::euclidean()), std::invalid_argument);
    CHECK_THROWS_AS(NnIndex({{0.0}, {0.0, 1.0}}, Metric::euclidean()),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        NnIndex({{std::numeric_limits<double>::quiet_NaN()}},
                Metric::euclidean()),
        std::invalid_argument);
    NnIndex idx({{0.0}, {1.0}}, Metric::euclidean());
    CHECK_THROWS_AS(idx.query({0.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(idx.query({0.0}, 3), std::invalid_argument);
    CHECK_THROWS_AS(idx.query({0.0, 0.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(
        NnIndex({{0.0}}, Metric::custom([](const Point&, const Point&) {
                  return 0.0;
                }),
                IndexBackend::kKdTree),
        std::invalid_argument);
  }
}

TEST_CASE("hand-checked queries on the line") {
  NnIndex idx({{0.0}, {0.5}, {1.0}}, Metric::euclidean());

  SUBCASE("query 0.4, k=2") {
    const NeighborList nn = idx.query({0.4}, 2);
    CHECK(nn.indices == std::vector<std::size_t>{1, 0});
    CHECK(nn.distances[0] == doctest::Approx(0.1));
    CHECK(nn.distances[1] == doctest::Approx(0.4));
    CHECK(idx.kth_distance({0.4}, 2) == nn.distances[1]);
  }
  SUBCASE("query equal to a dataset point") {
    const NeighborList nn = idx.query({0.5}, 1);
    CHECK(nn.indices == std::vector<std::size_t>{1});
    CHECK(nn.distances[0] == 0.0);
  }
  SUBCASE("k = n gives the max distance last") {
    const NeighborList nn = idx.query({0.4}, 3);
    CHECK(idx.kth_distance({0.4}, 3) == nn.distances[2]);
    CHECK(nn.distances[2] ==
          *std::max_element(nn.distances.begin(), nn.distances.end()));
  }
}

TEST_CASE("distance ties break by ascending dataset index") {
  NnIndex idx({{0.0}, {0.0}, {1.0}}, Metric::euclidean());
  const NeighborList nn = idx.query({0.0}, 2);
  CHECK(nn.indices == std::vector<std::size_t>{0, 1});
  CHECK(nn.distances == std::vector<double>{0.0, 0.0});

  // Query equidistant from all three points.
  const NeighborList mid = idx.query({0.5}, 2);
  CHECK(mid.indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("backend equivalence: k-d tree matches brute force exactly") {
  Rng rng(314159);

  SUBCASE("1000 uniform points in R5, 100 queries") {
    const auto pts = random_points(1000, 5, rng);
    NnIndex tree(pts, Metric::euclidean(), IndexBackend::kKdTree);
    NnIndex brute(pts, Metric::euclidean(), IndexBackend::kBruteForce);
    CHECK(tree.uses_kdtree());
    CHECK(!brute.uses_kdtree());
    for (int q = 0; q < 100; ++q) {
      const Point query{rng.uniform(), rng.uniform(), rng.uniform(),
                        rng.uniform(), rng.uniform()};
      const std::size_t k = 1 + rng.uniform_index(1000);
      const NeighborList a = tree.query(query, k);
      const NeighborList b = brute.query(query, k);
      check_equal(a, b);
      check_equal(a, oracles::knn(pts, Metric::euclidean(), query, k));
    }
  }

  SUBCASE("tie-rich lattice data") {
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t d = 1 + rng.uniform_index(3);
      const auto pts = lattice_points(60, d, rng);
      NnIndex tree(pts, Metric::euclidean(), IndexBackend::kKdTree);
      NnIndex brute(pts, Metric::euclidean(), IndexBackend::kBruteForce);
      for (int q = 0; q < 30; ++q) {
        Point query(d);
        for (double& c : query) c = static_cast<double>(rng.uniform_index(3));
        const std::size_t k = 1 + rng.uniform_index(60);
        check_equal(tree.query(query, k), brute.query(query, k));
      }
    }
  }
}

TEST_CASE("prefix consistency and determinism") {
  Rng rng(7);
  const auto pts = random_points(200, 3, rng);
  NnIndex idx(pts, Metric::euclidean());
  for (int rep = 0; rep < 20; ++rep) {
    const Point q{rng.uniform(), rng.uniform(), rng.uniform()};
    const std::size_t k = 1 + rng.uniform_index(199);
    const NeighborList small = idx.query(q, k);
    const NeighborList big = idx.query(q, k + 1);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(small.indices[i] == big.indices[i]);
      CHECK(small.distances[i] == big.distances[i]);
    }
    check_equal(small, idx.query(q, k));
  }
}

TEST_CASE("permutation property under distinct distances") {
  Rng rng(99);
  const auto pts = random_points(50, 2, rng);
  const Point q{rng.uniform(), rng.uniform()};

  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  }
  std::vector<Point> shuffled(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) shuffled[perm[i]] = pts[i];

  NnIndex original(pts, Metric::euclidean());
  NnIndex relabeled(shuffled, Metric::euclidean());
  const NeighborList a = original.query(q, 10);
  NeighborList b = relabeled.query(q, 10);
  for (std::size_t& i : b.indices) {
    // Map shuffled indices back through the inverse relabeling.
    const auto it = std::find(perm.begin(), perm.end(), i);
    i = static_cast<std::size_t>(it - perm.begin());
  }
  check_equal(a, b);
}

TEST_CASE("custom metric uses brute force and matches its oracle") {
  const Metric l1 = Metric::custom([](const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
  });
  Rng rng(11);
  const auto pts = random_points(80, 3, rng);
  NnIndex idx(pts, l1);
  CHECK(!idx.uses_kdtree());

  for (int q = 0; q < 20; ++q) {
    const Point query{rng.uniform(), rng.uniform(), rng.uniform()};
    const std::size_t k = 1 + rng.uniform_index(80);
    check_equal(idx.query(query, k), oracles::knn(pts, l1, query, k));
  }

  // Sampled metric-axiom checks for the built-in and the callback.
  for (int rep = 0; rep < 50; ++rep) {
    const Point a{rng.uniform(), rng.uniform(), rng.uniform()};
    const Point b{rng.uniform(), rng.uniform(), rng.uniform()};
    for (const Metric& m : {Metric::euclidean(), l1}) {
      CHECK(m(a, b) == m(b, a));
      CHECK(m(a, a) == 0.0);
      CHECK(m(a, b) >= 0.0);
    }
  }
}
