#pragma once

#include <cstdint>
#include <vector>

#include "hierpool/common.hpp"

namespace hierpool {

/// Fitted centroids with per-centroid assignment counts.
struct ClusterModel {
  Matrix centroids;           // k' x d
  std::vector<long> counts;   // points assigned per centroid at fit time
  Scalar inertia = 0.0;
  int iterations = 0;

  int size() const { return static_cast<int>(centroids.rows()); }
};

/// Lloyd iterations from a k-means++ start, run to assignment fixpoint or
/// 300 iterations. Empty clusters are re-seeded to the point farthest from
/// its centroid. k is reduced when there are fewer distinct points.
/// inertia_trace, when given, receives the inertia after every update.
ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                        std::vector<Scalar>* inertia_trace = nullptr);

/// Collapses centroid chains closer than merge_fraction times the maximum
/// pairwise centroid distance. Whole connected chains merge into their
/// count-weighted mean; repeated until no pair is below the original
/// threshold.
ClusterModel merge_centroids(const ClusterModel& model, Scalar merge_fraction);

/// Nearest centroid per point, ties broken toward the lowest index.
std::vector<int> assign(const Matrix& points, const ClusterModel& model);

}  // namespace hierpool
