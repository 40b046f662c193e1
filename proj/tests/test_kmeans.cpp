#include <doctest.h>

#include <algorithm>

#include "hierpool/kmeans.hpp"
#include "hierpool/rng.hpp"

using namespace hierpool;

namespace {

Matrix column(std::initializer_list<Scalar> values) {
  Matrix m(static_cast<int>(values.size()), 1);
  int i = 0;
  for (Scalar v : values) m(i++, 0) = v;
  return m;
}

std::vector<Scalar> sorted_centroids(const ClusterModel& m) {
  std::vector<Scalar> c(m.centroids.data(), m.centroids.data() + m.centroids.size());
  std::sort(c.begin(), c.end());
  return c;
}

/// Exhaustive best 2-clustering of 1-D points by sum of squared errors.
std::vector<Scalar> best_two_partition(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  Scalar best = 1e300;
  std::vector<Scalar> best_centroids;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    Scalar sum[2] = {0, 0};
    int count[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const int side = (mask >> i) & 1;
      sum[side] += points(i, 0);
      ++count[side];
    }
    const Scalar c0 = sum[0] / count[0];
    const Scalar c1 = sum[1] / count[1];
    Scalar sse = 0;
    for (int i = 0; i < n; ++i) {
      const Scalar c = ((mask >> i) & 1) ? c1 : c0;
      sse += (points(i, 0) - c) * (points(i, 0) - c);
    }
    if (sse < best) {
      best = sse;
      best_centroids = {std::min(c0, c1), std::max(c0, c1)};
    }
  }
  return best_centroids;
}

}  // namespace

TEST_CASE("kmeans_fit basics") {
  const Matrix pts = column({1.0, 2.0, 6.0});
  const ClusterModel one = kmeans_fit(pts, 1, 1);
  CHECK(one.size() == 1);
  CHECK(one.centroids(0, 0) == doctest::Approx(3.0));

  const ClusterModel all = kmeans_fit(pts, 3, 1);
  CHECK(all.size() == 3);
  CHECK(all.inertia == doctest::Approx(0.0));

  // k larger than the number of distinct points collapses to that count.
  const ClusterModel dup = kmeans_fit(column({2.0, 2.0, 5.0}), 3, 1);
  CHECK(dup.size() == 2);

  CHECK_THROWS_AS(kmeans_fit(Matrix(0, 1), 1, 1), std::invalid_argument);
}

TEST_CASE("kmeans_fit finds the optimal 2-clustering of well-separated points") {
  const Matrix pts = column({0.0, 0.1, 10.0, 10.1});
  const auto expected = best_two_partition(pts);
  CHECK(expected[0] == doctest::Approx(0.05));
  CHECK(expected[1] == doctest::Approx(10.05));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ClusterModel m = kmeans_fit(pts, 2, seed);
    const auto got = sorted_centroids(m);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == doctest::Approx(expected[0]));
    CHECK(got[1] == doctest::Approx(expected[1]));
  }
}

TEST_CASE("Lloyd inertia is non-increasing") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix pts(40, 3);
    for (int i = 0; i < pts.size(); ++i) pts(i / 3, i % 3) = rng.normal();
    std::vector<Scalar> trace;
    kmeans_fit(pts, 5, trial, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i] <= trace[i - 1] + 1e-9);
  }
}

TEST_CASE("merge_centroids") {
  ClusterModel m;
  m.centroids = column({0.0, 0.05, 1.0});
  m.counts = {10, 10, 10};

  SUBCASE("zero fraction merges nothing here") {
    const ClusterModel merged = merge_centroids(m, 0.0);
    CHECK(merged.size() == 3);
  }

  SUBCASE("close pair collapses to its weighted mean") {
    const ClusterModel merged = merge_centroids(m, 0.1);  // tau = 0.1
    REQUIRE(merged.size() == 2);
    const auto c = sorted_centroids(merged);
    CHECK(c[0] == doctest::Approx(0.025));
    CHECK(c[1] == doctest::Approx(1.0));
  }

  SUBCASE("whole chains merge even when the endpoints are far apart") {
    ClusterModel chain;
    chain.centroids = column({0.0, 0.08, 0.16, 1.0});
    chain.counts = {1, 1, 1, 1};
    const ClusterModel merged = merge_centroids(chain, 0.1);  // tau = 0.1
    REQUIRE(merged.size() == 2);
    const auto c = sorted_centroids(merged);
    CHECK(c[0] == doctest::Approx(0.08));
    CHECK(c[1] == doctest::Approx(1.0));
  }

  SUBCASE("weighting follows the counts") {
    ClusterModel pair;
    pair.centroids = column({0.0, 0.1, 5.0});
    pair.counts = {30, 10, 1};
    const ClusterModel merged = merge_centroids(pair, 0.05);  // tau = 0.25
    REQUIRE(merged.size() == 2);
    CHECK(sorted_centroids(merged)[0] == doctest::Approx(0.025));
  }
}

TEST_CASE("merge decisions and assignments are scale equivariant") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix pts(30, 2);
    for (int i = 0; i < 30; ++i) {
      pts(i, 0) = rng.normal();
      pts(i, 1) = rng.normal();
    }
    const ClusterModel fit = kmeans_fit(pts, 6, trial);
    const ClusterModel merged = merge_centroids(fit, 0.25);

    const Scalar s = 0.5 + 3.0 * rng.uniform();
    ClusterModel scaled_fit = fit;
    scaled_fit.centroids *= s;
    const ClusterModel scaled_merged = merge_centroids(scaled_fit, 0.25);

    REQUIRE(scaled_merged.size() == merged.size());
    REQUIRE(assign(Matrix(pts * s), scaled_merged) == assign(pts, merged));
  }
}

TEST_CASE("assign") {
  ClusterModel m;
  m.centroids = column({0.0, 1.0});
  m.counts = {1, 1};
  CHECK(assign(column({1.0}), m) == std::vector<int>{1});
  CHECK(assign(column({0.5}), m) == std::vector<int>{0});  // tie -> lower index

  Matrix wrong(1, 2);
  CHECK_THROWS_AS(assign(wrong, m), std::invalid_argument);
}

TEST_CASE("assign reproduces the fit partition") {
  Rng rng(17);
  Matrix pts(50, 2);
  for (int i = 0; i < 50; ++i) {
    pts(i, 0) = rng.normal() + (i < 25 ? 0.0 : 8.0);
    pts(i, 1) = rng.normal();
  }
  const ClusterModel m = kmeans_fit(pts, 2, 3);
  const auto labels = assign(pts, m);
  std::vector<long> counts(m.size(), 0);
  for (int l : labels) ++counts[l];
  CHECK(counts == m.counts);
}
