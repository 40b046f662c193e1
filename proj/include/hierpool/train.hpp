#pragma once

#include <cstdint>
#include <vector>

#include "hierpool/adam.hpp"
#include "hierpool/data.hpp"
#include "hierpool/hyperplane.hpp"
#include "hierpool/pool.hpp"

namespace hierpool {

enum class ClusterMode { Batch, Global };
enum class GradMode { StraightThrough, Hyperplane };

struct TrainOptions {
  int epochs = 100;
  int batch_size = 64;
  Scalar lr = 1e-3;
  Scalar weight_decay = 5e-4;
  ClusterMode cluster_mode = ClusterMode::Batch;
  GradMode grad_mode = GradMode::StraightThrough;
  HyperplaneConfig hyperplane;
  std::uint64_t seed = 1;
  int eval_every = 1;
  /// > 0: stop once validation accuracy stayed at 1.0 for this many
  /// consecutive evaluations.
  int early_stop_patience = 0;
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
  long forward_passes = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int epochs_run = 0;
  long total_forward_passes = 0;
  double seconds = 0.0;
};

struct DivergenceError : std::runtime_error {
  int epoch;
  explicit DivergenceError(int at)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(at)),
        epoch(at) {}
};

/// Trains in the requested clustering/gradient mode, then fits and persists
/// the full-training-set centroids used at inference time.
TrainResult train(HelpModel& model, const std::vector<Graph>& data, const Split& split,
                  const TrainOptions& opts);

/// Layered pass over the index set: per block, collect the embeddings that
/// enter its clustering (pooling earlier blocks with the already-fitted
/// centroids), then k-means fit and merge.
std::vector<ClusterModel> fit_centroids(const HelpModel& model, const std::vector<Graph>& data,
                                        const std::vector<int>& indices, int batch_size,
                                        std::uint64_t seed);

/// Embeddings entering pool block `block` for one batch, pooling earlier
/// blocks with the given centroids. models needs >= block entries.
Matrix block_embeddings(const HelpModel& model, const BatchView& batch,
                        const std::vector<ClusterModel>& models, int block);

/// Accuracy under fixed centroids (persisted ones when fixed == nullptr);
/// falls back to per-batch clustering when neither exists.
double evaluate_accuracy(const HelpModel& model, const std::vector<Graph>& data,
                         const std::vector<int>& indices,
                         const std::vector<ClusterModel>* fixed = nullptr, int batch_size = 256,
                         std::uint64_t seed = 0);

TrainResult train_baseline(GcnBaseline& model, const std::vector<Graph>& data,
                           const Split& split, const TrainOptions& opts);

double evaluate_baseline_accuracy(const GcnBaseline& model, const std::vector<Graph>& data,
                                  const std::vector<int>& indices, int batch_size = 256);

}  // namespace hierpool
