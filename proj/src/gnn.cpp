#include "hierpool/gnn.hpp"

#include <cmath>

#include "hierpool/rng.hpp"

namespace hierpool {

Matrix BatchView::stacked_features() const {
  const int d = graphs.empty() ? 0 : static_cast<int>(graphs.front().features.cols());
  Matrix x(total_nodes, d);
  for (std::size_t g = 0; g < graphs.size(); ++g)
    x.middleRows(offsets[g], graphs[g].num_nodes) = graphs[g].features;
  return x;
}

BatchView make_batch(const std::vector<Graph>& graphs) {
  BatchView b;
  b.graphs = graphs;
  b.offsets.reserve(graphs.size());
  int off = 0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    b.offsets.push_back(off);
    for (int v = 0; v < graphs[g].num_nodes; ++v) b.node_graph.push_back(static_cast<int>(g));
    b.labels.push_back(graphs[g].label.value_or(-1));
    off += graphs[g].num_nodes;
  }
  b.total_nodes = off;
  return b;
}

BatchView make_batch(const std::vector<Graph>& dataset, const std::vector<int>& indices) {
  std::vector<Graph> sel;
  sel.reserve(indices.size());
  for (int i : indices) sel.push_back(dataset.at(i));
  return make_batch(sel);
}

NormAdjacency normalized_adjacency(const BatchView& batch) {
  NormAdjacency adj;
  adj.num_nodes = batch.total_nodes;
  std::vector<Scalar> degree(batch.total_nodes, 1.0);  // added self-loop
  for (std::size_t g = 0; g < batch.graphs.size(); ++g)
    for (const auto& [u, v] : batch.graphs[g].edges) {
      degree[batch.offsets[g] + u] += 1.0;
      if (u != v) degree[batch.offsets[g] + v] += 1.0;
    }
  std::vector<Scalar> coef;
  for (int v = 0; v < batch.total_nodes; ++v) {
    adj.src.push_back(v);
    adj.dst.push_back(v);
    coef.push_back(1.0 / degree[v]);
  }
  for (std::size_t g = 0; g < batch.graphs.size(); ++g)
    for (const auto& [u, v] : batch.graphs[g].edges) {
      const int gu = batch.offsets[g] + u;
      const int gv = batch.offsets[g] + v;
      if (gu == gv) {
        // Explicit self-edge (kept pooled loops): one extra diagonal entry.
        adj.src.push_back(gu);
        adj.dst.push_back(gu);
        coef.push_back(1.0 / degree[gu]);
        continue;
      }
      const Scalar w = 1.0 / std::sqrt(degree[gu] * degree[gv]);
      adj.src.push_back(gu);
      adj.dst.push_back(gv);
      coef.push_back(w);
      adj.src.push_back(gv);
      adj.dst.push_back(gu);
      coef.push_back(w);
    }
  adj.coef = Eigen::Map<Vector>(coef.data(), static_cast<int>(coef.size()));
  return adj;
}

namespace {

/// A_hat X as gather -> coefficient product -> segment sum.
ad::Var propagate(ad::Tape& tape, const NormAdjacency& adj, ad::Var x) {
  ad::Var gathered = ad::row_gather(x, adj.src);
  const int d = static_cast<int>(tape.value(x).cols());
  Matrix coef_rows = adj.coef.replicate(1, d);
  ad::Var weighted = ad::cmul(gathered, tape.constant(std::move(coef_rows)));
  return ad::segment_sum(weighted, adj.dst, adj.num_nodes);
}

}  // namespace

ad::Var gcn_forward(ad::Tape& tape, const NormAdjacency& adj, ad::Var x, ad::Var weight,
                    ad::Var bias, Scalar slope) {
  if (tape.value(x).rows() != adj.num_nodes)
    throw std::invalid_argument("gcn_forward: feature rows != node count");
  ad::Var h = ad::matmul(propagate(tape, adj, x), weight);
  h = ad::add(h, bias);
  return ad::leaky_relu(h, slope);
}

StackVars lift(ad::Tape& tape, const GnnStack& stack) {
  StackVars vars;
  vars.layers.reserve(stack.layers.size());
  for (const GcnLayer& layer : stack.layers)
    vars.layers.emplace_back(tape.input(layer.weight), tape.input(layer.bias));
  return vars;
}

ad::Var stack_forward(ad::Tape& tape, const NormAdjacency& adj, ad::Var x,
                      const StackVars& vars, Scalar slope) {
  for (const auto& [w, b] : vars.layers) x = gcn_forward(tape, adj, x, w, b, slope);
  return x;
}

ad::Var global_sum_pool(ad::Var x, const std::vector<int>& node_graph, int num_graphs) {
  ad::Tape& tape = *x.tape;
  if (tape.value(x).cols() == 0)
    throw std::invalid_argument("global_sum_pool: empty feature dimension");
  std::vector<long> seen(num_graphs, 0);
  for (int g : node_graph) {
    if (g < 0 || g >= num_graphs) throw std::invalid_argument("global_sum_pool: id out of range");
    ++seen[g];
  }
  for (int g = 0; g < num_graphs; ++g)
    if (seen[g] == 0) throw std::invalid_argument("global_sum_pool: gap in graph ids");
  return ad::segment_sum(x, node_graph, num_graphs);
}

ad::Var head_forward(ad::Tape& tape, ad::Var pooled, ad::Var weight, ad::Var bias) {
  (void)tape;
  return ad::add(ad::matmul(pooled, weight), bias);
}

namespace {

Matrix glorot(int rows, int cols, Rng& rng) {
  const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

}  // namespace

GnnStack make_stack(int in_dim, const std::vector<int>& widths, std::uint64_t seed) {
  Rng rng(seed);
  GnnStack stack;
  int d = in_dim;
  for (int w : widths) {
    GcnLayer layer;
    layer.weight = glorot(d, w, rng);
    layer.bias = Matrix::Zero(1, w);
    stack.layers.push_back(std::move(layer));
    d = w;
  }
  return stack;
}

GcnBaseline make_baseline(const std::vector<int>& dims, int in_dim, int num_classes,
                          std::uint64_t seed) {
  GcnBaseline m;
  m.in_dim = in_dim;
  m.num_classes = num_classes;
  m.stack = make_stack(in_dim, dims, Rng::mix({seed, 0xBA5E11}));
  const int d_last = dims.empty() ? in_dim : dims.back();
  Rng rng(Rng::mix({seed, 0x4EAD}));
  m.head.weight = glorot(d_last, num_classes, rng);
  m.head.bias = Matrix::Zero(1, num_classes);
  return m;
}

std::vector<Matrix*> parameters(GcnBaseline& model) {
  std::vector<Matrix*> out;
  for (GcnLayer& l : model.stack.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&model.head.weight);
  out.push_back(&model.head.bias);
  return out;
}

BaselineForward baseline_forward(ad::Tape& tape, const BatchView& batch,
                                 const GcnBaseline& model) {
  const NormAdjacency adj = normalized_adjacency(batch);
  ad::Var x = tape.constant(batch.stacked_features());
  StackVars vars = lift(tape, model.stack);
  ad::Var emb = stack_forward(tape, adj, x, vars, model.act_slope);
  ad::Var pooled = global_sum_pool(emb, batch.node_graph, static_cast<int>(batch.graphs.size()));
  ad::Var hw = tape.input(model.head.weight);
  ad::Var hb = tape.input(model.head.bias);
  ad::Var logits = head_forward(tape, pooled, hw, hb);

  BaselineForward out{logits, emb, {}};
  for (const auto& [w, b] : vars.layers) {
    out.param_vars.push_back(w);
    out.param_vars.push_back(b);
  }
  out.param_vars.push_back(hw);
  out.param_vars.push_back(hb);
  return out;
}

}  // namespace hierpool
