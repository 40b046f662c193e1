#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hierpool/gnn.hpp"
#include "hierpool/kmeans.hpp"

namespace hierpool {

struct PoolBlockConfig {
  int num_clusters = 10;        // target cluster count for the block
  Scalar merge_fraction = 0.1;  // threshold as fraction of max centroid distance
};

/// Interpretability record for one graph at one pool block.
struct PoolGraphTrace {
  std::vector<int> cluster_ids;           // c per input node
  ComponentMap components;                // q per input node, ids 1-based
  Graph pooled;                           // structure + mean-feature snapshot
  std::vector<std::vector<int>> members;  // input nodes per pooled node
  std::vector<int> pooled_concept;        // cluster id per pooled node
};

struct PoolTrace {
  std::vector<std::vector<PoolGraphTrace>> blocks;  // [block][graph]
};

struct HelpModel {
  int in_dim = 0;
  int num_classes = 0;
  std::vector<GnnStack> block_stacks;  // one per pool block
  GnnStack final_stack;
  Head head;
  std::vector<PoolBlockConfig> blocks;
  std::vector<ClusterModel> cluster_models;  // persisted for inference
  Scalar act_slope = 0.01;
  bool keep_self_loops = false;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  bool has_centroids() const { return cluster_models.size() == blocks.size(); }
};

/// Layer widths per pool block plus the final stack, e.g. the default
/// "32 32 [Pool] 32 32 [Pool] 32 4" splits into {{32,32},{32,32}} / {32,4}.
struct Architecture {
  std::vector<std::vector<int>> block_widths;
  std::vector<int> final_widths;

  int last_width(int in_dim) const;
};

Architecture parse_architecture(const std::string& dims);
std::string format_architecture(const Architecture& arch);

HelpModel make_help_model(const Architecture& arch, const std::vector<PoolBlockConfig>& blocks,
                          int in_dim, int num_classes, std::uint64_t seed);

std::vector<Matrix*> parameters(HelpModel& model);

enum class ClusterSource {
  FitPerBatch,  // k-means fit on the batch embeddings, then merged
  Fixed,        // use supplied centroids (epoch-global or persisted)
};

struct PoolForwardOptions {
  ClusterSource source = ClusterSource::Fixed;
  /// Centroids per block when source == Fixed; null selects
  /// model.cluster_models.
  const std::vector<ClusterModel>* fixed = nullptr;
  std::uint64_t kmeans_seed = 0;
  bool want_trace = true;
  /// Per block, the cluster id of every node at that level (batch node
  /// order). Overrides clustering entirely; used to differentiate at fixed
  /// c and q.
  const std::vector<std::vector<int>>* frozen_assignments = nullptr;
};

/// Per-block global-order cluster assignments recorded by a forward pass,
/// in the shape frozen_assignments expects.
std::vector<std::vector<int>> assignments_from_trace(const PoolTrace& trace);

struct PoolStepResult {
  BatchView pooled;
  ad::Var pooled_x;
  std::vector<PoolGraphTrace> traces;
};

/// Merges connected components of same-cluster nodes per graph. Pooled
/// features are the differentiable mean of member embeddings; pooled edges
/// are the deduplicated cross-component edges.
PoolStepResult pool_step(ad::Tape& tape, const BatchView& batch, ad::Var x,
                         const std::vector<int>& cluster_ids, bool keep_self_loops,
                         bool want_trace = true);

struct HelpForward {
  ad::Var logits;
  ad::Var graph_repr;                  // global-pooled representation per graph
  std::vector<ad::Var> block_inputs;   // embeddings entering each pool block
  std::vector<BatchView> level_views;  // [0]=input batch .. [n_blocks]=final-stack input
  std::vector<ClusterModel> used_models;
  PoolTrace trace;
  std::vector<ad::Var> param_vars;  // aligned with parameters(model)
};

HelpForward help_forward(ad::Tape& tape, const BatchView& batch, const HelpModel& model,
                         const PoolForwardOptions& opts);

/// Value-only continuation: cluster the given block embeddings with the
/// supplied centroids, pool, run the remaining blocks and the final stack,
/// return the global-pooled representation. Used by the hyperplane sampler.
Matrix resume_from_block(const HelpModel& model, const std::vector<ClusterModel>& models,
                         const BatchView& view_at_block, const Matrix& block_embeddings,
                         int block_index);

struct Prediction {
  int label = -1;
  Matrix logits;  // 1 x num_classes
  PoolTrace trace;
};

/// Inference with persisted centroids. Throws when the model was never
/// fitted.
Prediction predict(const HelpModel& model, const Graph& g);

}  // namespace hierpool
