#include "hierpool/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "hierpool/graph.hpp"
#include "hierpool/rng.hpp"

namespace hierpool {

namespace {

Scalar sq_dist(const Matrix& a, int i, const Matrix& b, int j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

/// Nearest centroid per point, ties to the lower index. Distances are
/// evaluated column-wise (vectorized over points) with the same per-pair
/// arithmetic as sq_dist, so results are deterministic.
void nearest_all(const Matrix& points, const Matrix& centroids, std::vector<int>& labels) {
  const int n = static_cast<int>(points.rows());
  const int k = static_cast<int>(centroids.rows());
  labels.assign(n, 0);
  Vector best = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  Vector column(n);
  for (int c = 1; c < k; ++c) {
    column = (points.rowwise() - centroids.row(c)).rowwise().squaredNorm();
    for (int i = 0; i < n; ++i)
      if (column(i) < best(i)) {  // strict: ties keep the lower index
        best(i) = column(i);
        labels[i] = c;
      }
  }
}

int count_distinct_rows(const Matrix& points) {
  std::set<std::vector<Scalar>> seen;
  for (int i = 0; i < points.rows(); ++i) {
    std::vector<Scalar> row(points.row(i).begin(), points.row(i).end());
    seen.insert(std::move(row));
  }
  return static_cast<int>(seen.size());
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                        std::vector<Scalar>* inertia_trace) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw std::invalid_argument("kmeans_fit: no points");
  if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  k = std::min(k, count_distinct_rows(points));

  Rng rng(seed);

  // k-means++ seeding
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(rng.uniform_int(n));
  Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const Scalar total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(n);
    } else {
      Scalar target = rng.uniform() * total;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= d2(i);
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(n, -1);
  std::vector<int> fresh;
  ClusterModel model;
  const int max_iters = 300;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    bool changed = false;
    nearest_all(points, centroids, fresh);
    for (int i = 0; i < n; ++i)
      if (fresh[i] != labels[i]) {
        labels[i] = fresh[i];
        changed = true;
      }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<long> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<Scalar>(counts[c]);
      } else {
        // Re-seed an empty cluster to the point farthest from its centroid.
        int far = 0;
        Scalar far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const Scalar d = sq_dist(points, i, centroids, labels[i]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = points.row(far);
        labels[far] = c;
      }
    }
    if (inertia_trace) {
      nearest_all(points, centroids, fresh);
      Scalar inertia = 0.0;
      for (int i = 0; i < n; ++i) inertia += sq_dist(points, i, centroids, fresh[i]);
      inertia_trace->push_back(inertia);
    }
  }

  model.centroids = std::move(centroids);
  model.counts.assign(k, 0);
  model.inertia = 0.0;
  nearest_all(points, model.centroids, fresh);
  for (int i = 0; i < n; ++i) {
    ++model.counts[fresh[i]];
    model.inertia += sq_dist(points, i, model.centroids, fresh[i]);
  }
  model.iterations = iter;
  return model;
}

ClusterModel merge_centroids(const ClusterModel& model, Scalar merge_fraction) {
  if (merge_fraction < 0.0 || merge_fraction >= 1.0)
    throw std::invalid_argument("merge_centroids: fraction must lie in [0, 1)");
  ClusterModel current = model;
  if (current.size() <= 1) return current;

  Scalar max_d = 0.0;
  for (int i = 0; i < model.size(); ++i)
    for (int j = i + 1; j < model.size(); ++j)
      max_d = std::max(max_d, (model.centroids.row(i) - model.centroids.row(j)).norm());
  const Scalar tau = merge_fraction * max_d;

  // The threshold stays fixed at its original value while chains collapse;
  // a weighted mean can land closer to another chain than any of its
  // members were, so iterate until no pair is below tau.
  while (current.size() > 1) {
    const int k = current.size();
    std::vector<std::pair<int, int>> close;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        if ((current.centroids.row(i) - current.centroids.row(j)).norm() < tau ||
            (current.centroids.row(i) - current.centroids.row(j)).norm() == 0.0)
          close.emplace_back(i, j);
    if (close.empty()) break;
    const ComponentMap cm = connected_components(k, close);
    Matrix merged = Matrix::Zero(cm.num_components, current.centroids.cols());
    std::vector<long> counts(cm.num_components, 0);
    for (int i = 0; i < k; ++i) {
      const int g = cm.assignment[i] - 1;
      const Scalar w = static_cast<Scalar>(std::max<long>(current.counts[i], 1));
      merged.row(g) += w * current.centroids.row(i);
      counts[g] += current.counts[i];
    }
    for (int g = 0; g < cm.num_components; ++g) {
      long w = 0;
      for (int i = 0; i < k; ++i)
        if (cm.assignment[i] - 1 == g) w += std::max<long>(current.counts[i], 1);
      merged.row(g) /= static_cast<Scalar>(w);
    }
    current.centroids = std::move(merged);
    current.counts = std::move(counts);
  }
  current.inertia = model.inertia;
  current.iterations = model.iterations;
  return current;
}

std::vector<int> assign(const Matrix& points, const ClusterModel& model) {
  if (points.cols() != model.centroids.cols())
    throw std::invalid_argument("assign: dimension mismatch");
  std::vector<int> out;
  nearest_all(points, model.centroids, out);
  return out;
}

}  // namespace hierpool
