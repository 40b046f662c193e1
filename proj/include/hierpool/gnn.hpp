#pragma once

#include <cstdint>
#include <vector>

#include "hierpool/graph.hpp"
#include "hierpool/tape.hpp"

namespace hierpool {

struct GcnLayer {
  Matrix weight;  // d_in x d_out
  Matrix bias;    // 1 x d_out
};

struct GnnStack {
  std::vector<GcnLayer> layers;
};

struct Head {
  Matrix weight;  // d_last x num_classes
  Matrix bias;    // 1 x num_classes
};

/// A batch of graphs concatenated into one node index space.
struct BatchView {
  std::vector<Graph> graphs;
  std::vector<int> offsets;     // node offset per graph
  std::vector<int> node_graph;  // graph index per node
  std::vector<int> labels;      // -1 where absent
  int total_nodes = 0;

  Matrix stacked_features() const;
};

BatchView make_batch(const std::vector<Graph>& graphs);
BatchView make_batch(const std::vector<Graph>& dataset, const std::vector<int>& indices);

/// Symmetric-normalized adjacency with self-loops in coordinate form:
/// entry e contributes coef[e] * x[src[e]] to row dst[e].
struct NormAdjacency {
  std::vector<int> src;
  std::vector<int> dst;
  Vector coef;
  int num_nodes = 0;
};

NormAdjacency normalized_adjacency(const BatchView& batch);

/// One GCN layer: act( A_hat X W + b ) with LeakyReLU activation.
ad::Var gcn_forward(ad::Tape& tape, const NormAdjacency& adj, ad::Var x, ad::Var weight,
                    ad::Var bias, Scalar slope);

/// Stack parameters lifted onto a tape for one forward pass.
struct StackVars {
  std::vector<std::pair<ad::Var, ad::Var>> layers;  // (weight, bias)
};

StackVars lift(ad::Tape& tape, const GnnStack& stack);

ad::Var stack_forward(ad::Tape& tape, const NormAdjacency& adj, ad::Var x,
                      const StackVars& vars, Scalar slope);

/// Per-graph sums of node rows; every graph id must occur.
ad::Var global_sum_pool(ad::Var x, const std::vector<int>& node_graph, int num_graphs);

ad::Var head_forward(ad::Tape& tape, ad::Var pooled, ad::Var weight, ad::Var bias);

/// Plain GCN graph classifier: stack, sum pooling, linear head.
struct GcnBaseline {
  GnnStack stack;
  Head head;
  Scalar act_slope = 0.01;
  int in_dim = 0;
  int num_classes = 0;
};

GcnBaseline make_baseline(const std::vector<int>& dims, int in_dim, int num_classes,
                          std::uint64_t seed);

std::vector<Matrix*> parameters(GcnBaseline& model);

struct BaselineForward {
  ad::Var logits;
  ad::Var node_embeddings;       // final stack output, used by concept baselines
  std::vector<ad::Var> param_vars;  // leaf per entry of parameters(model)
};

BaselineForward baseline_forward(ad::Tape& tape, const BatchView& batch,
                                 const GcnBaseline& model);

/// Glorot-uniform initialized layer chain over the given widths.
GnnStack make_stack(int in_dim, const std::vector<int>& widths, std::uint64_t seed);

}  // namespace hierpool
