#include "hierpool/pool.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hierpool/rng.hpp"

namespace hierpool {

int Architecture::last_width(int in_dim) const {
  if (!final_widths.empty()) return final_widths.back();
  for (auto it = block_widths.rbegin(); it != block_widths.rend(); ++it)
    if (!it->empty()) return it->back();
  return in_dim;
}

Architecture parse_architecture(const std::string& dims) {
  Architecture arch;
  std::vector<int> current;
  std::istringstream in(dims);
  std::string tok;
  while (in >> tok) {
    if (tok == "[Pool]" || tok == "[pool]") {
      arch.block_widths.push_back(current);
      current.clear();
      continue;
    }
    try {
      const int w = std::stoi(tok);
      if (w <= 0) throw std::invalid_argument("");
      current.push_back(w);
    } catch (...) {
      throw std::invalid_argument("parse_architecture: bad token '" + tok + "'");
    }
  }
  arch.final_widths = current;
  return arch;
}

std::string format_architecture(const Architecture& arch) {
  std::ostringstream out;
  bool first = true;
  auto emit = [&](const std::vector<int>& widths) {
    for (int w : widths) {
      if (!first) out << ' ';
      out << w;
      first = false;
    }
  };
  for (const auto& widths : arch.block_widths) {
    emit(widths);
    if (!first) out << ' ';
    out << "[Pool]";
    first = false;
  }
  emit(arch.final_widths);
  return out.str();
}

HelpModel make_help_model(const Architecture& arch, const std::vector<PoolBlockConfig>& blocks,
                          int in_dim, int num_classes, std::uint64_t seed) {
  if (arch.block_widths.size() != blocks.size())
    throw std::invalid_argument("make_help_model: block count mismatch between dims and configs");
  HelpModel m;
  m.in_dim = in_dim;
  m.num_classes = num_classes;
  m.blocks = blocks;
  int d = in_dim;
  for (std::size_t s = 0; s < arch.block_widths.size(); ++s) {
    m.block_stacks.push_back(make_stack(d, arch.block_widths[s], Rng::mix({seed, 0xB10C, s})));
    if (!arch.block_widths[s].empty()) d = arch.block_widths[s].back();
  }
  m.final_stack = make_stack(d, arch.final_widths, Rng::mix({seed, 0xF17A1}));
  if (!arch.final_widths.empty()) d = arch.final_widths.back();
  Rng rng(Rng::mix({seed, 0x4EAD}));
  m.head.weight.resize(d, num_classes);
  {
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(d + num_classes));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < num_classes; ++j)
        m.head.weight(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
  }
  m.head.bias = Matrix::Zero(1, num_classes);
  return m;
}

std::vector<Matrix*> parameters(HelpModel& model) {
  std::vector<Matrix*> out;
  for (GnnStack& stack : model.block_stacks)
    for (GcnLayer& l : stack.layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  for (GcnLayer& l : model.final_stack.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&model.head.weight);
  out.push_back(&model.head.bias);
  return out;
}

PoolStepResult pool_step(ad::Tape& tape, const BatchView& batch, ad::Var x,
                         const std::vector<int>& cluster_ids, bool keep_self_loops,
                         bool want_trace) {
  if (static_cast<int>(cluster_ids.size()) != batch.total_nodes)
    throw std::invalid_argument("pool_step: cluster id per node required");

  PoolStepResult out;
  std::vector<int> segment(batch.total_nodes);
  int comp_offset = 0;

  for (std::size_t g = 0; g < batch.graphs.size(); ++g) {
    const Graph& graph = batch.graphs[g];
    const int off = batch.offsets[g];

    std::vector<std::pair<int, int>> same_cluster;
    for (const auto& [u, v] : graph.edges)
      if (cluster_ids[off + u] == cluster_ids[off + v]) same_cluster.emplace_back(u, v);
    ComponentMap q = connected_components(graph.num_nodes, same_cluster);

    std::vector<std::vector<int>> members(q.num_components);
    for (int v = 0; v < graph.num_nodes; ++v) {
      segment[off + v] = comp_offset + q.assignment[v] - 1;
      members[q.assignment[v] - 1].push_back(v);
    }

    std::set<std::pair<int, int>> pooled_edges;
    for (const auto& [u, v] : graph.edges) {
      const int qu = q.assignment[u] - 1;
      const int qv = q.assignment[v] - 1;
      if (qu == qv) {
        if (keep_self_loops) pooled_edges.emplace(qu, qv);
        continue;
      }
      pooled_edges.emplace(std::min(qu, qv), std::max(qu, qv));
    }

    Graph pooled;
    pooled.num_nodes = q.num_components;
    pooled.edges.assign(pooled_edges.begin(), pooled_edges.end());
    pooled.label = graph.label;
    std::vector<int> concepts(q.num_components);
    for (int comp = 0; comp < q.num_components; ++comp)
      concepts[comp] = cluster_ids[off + members[comp].front()];
    pooled.node_tags = concepts;

    out.pooled.graphs.push_back(std::move(pooled));
    out.pooled.offsets.push_back(comp_offset);
    out.pooled.labels.push_back(batch.labels[g]);
    for (int comp = 0; comp < q.num_components; ++comp)
      out.pooled.node_graph.push_back(static_cast<int>(g));

    if (want_trace) {
      PoolGraphTrace trace;
      trace.cluster_ids.assign(cluster_ids.begin() + off,
                               cluster_ids.begin() + off + graph.num_nodes);
      trace.components = q;
      trace.members = members;
      trace.pooled_concept = concepts;
      out.traces.push_back(std::move(trace));
    }

    comp_offset += q.num_components;
  }
  out.pooled.total_nodes = comp_offset;

  out.pooled_x = ad::segment_mean(x, segment, comp_offset);

  // Snapshot the mean features into the pooled graphs (and the trace).
  const Matrix& PX = tape.value(out.pooled_x);
  for (std::size_t g = 0; g < out.pooled.graphs.size(); ++g) {
    Graph& pooled = out.pooled.graphs[g];
    pooled.features = PX.middleRows(out.pooled.offsets[g], pooled.num_nodes);
    if (want_trace) out.traces[g].pooled = pooled;
  }
  return out;
}

namespace {

/// Runs pool blocks first_block..n-1 plus the final stack and global pool.
/// Collectors may be null; param_vars receives the lifted stack leaves in
/// parameters() order for the covered stacks.
ad::Var pool_chain(ad::Tape& tape, BatchView view, ad::Var x, const HelpModel& model,
                   int first_block, ClusterSource source,
                   const std::vector<ClusterModel>* fixed, std::uint64_t kmeans_seed,
                   bool want_trace, bool enter_with_embeddings,
                   const std::vector<std::vector<int>>* frozen_assignments,
                   std::vector<ad::Var>* block_inputs, std::vector<BatchView>* level_views,
                   std::vector<ClusterModel>* used_models, PoolTrace* trace,
                   std::vector<ad::Var>* param_vars) {
  const int n_blocks = model.num_blocks();
  for (int s = first_block; s < n_blocks; ++s) {
    if (!enter_with_embeddings || s > first_block) {
      const NormAdjacency adj = normalized_adjacency(view);
      StackVars vars = lift(tape, model.block_stacks[s]);
      if (param_vars)
        for (const auto& [w, b] : vars.layers) {
          param_vars->push_back(w);
          param_vars->push_back(b);
        }
      x = stack_forward(tape, adj, x, vars, model.act_slope);
    }
    if (block_inputs) block_inputs->push_back(x);

    std::vector<int> c;
    ClusterModel cluster;
    if (frozen_assignments) {
      c = frozen_assignments->at(s);
      if (static_cast<int>(c.size()) != view.total_nodes)
        throw std::invalid_argument("help_forward: frozen assignment size mismatch");
    } else if (source == ClusterSource::FitPerBatch) {
      const ClusterModel raw =
          kmeans_fit(tape.value(x), model.blocks[s].num_clusters,
                     Rng::mix({kmeans_seed, static_cast<std::uint64_t>(s)}));
      cluster = merge_centroids(raw, model.blocks[s].merge_fraction);
      c = assign(tape.value(x), cluster);
    } else {
      const std::vector<ClusterModel>& models = fixed ? *fixed : model.cluster_models;
      if (static_cast<int>(models.size()) <= s)
        throw std::logic_error("help_forward: no centroids for block " + std::to_string(s));
      cluster = models[s];
      c = assign(tape.value(x), cluster);
    }
    if (used_models) used_models->push_back(cluster);

    PoolStepResult step = pool_step(tape, view, x, c, model.keep_self_loops, want_trace);
    if (trace) trace->blocks.push_back(std::move(step.traces));
    view = std::move(step.pooled);
    x = step.pooled_x;
    if (level_views) level_views->push_back(view);
  }

  const NormAdjacency adj = normalized_adjacency(view);
  StackVars vars = lift(tape, model.final_stack);
  if (param_vars)
    for (const auto& [w, b] : vars.layers) {
      param_vars->push_back(w);
      param_vars->push_back(b);
    }
  x = stack_forward(tape, adj, x, vars, model.act_slope);
  return global_sum_pool(x, view.node_graph, static_cast<int>(view.graphs.size()));
}

}  // namespace

HelpForward help_forward(ad::Tape& tape, const BatchView& batch, const HelpModel& model,
                         const PoolForwardOptions& opts) {
  if (batch.graphs.empty()) throw std::invalid_argument("help_forward: empty batch");
  if (static_cast<int>(batch.graphs.front().features.cols()) != model.in_dim)
    throw std::invalid_argument("help_forward: feature dimension mismatch");

  HelpForward out;
  out.level_views.push_back(batch);
  ad::Var x = tape.constant(batch.stacked_features());

  out.graph_repr =
      pool_chain(tape, batch, x, model, 0, opts.source, opts.fixed, opts.kmeans_seed,
                 opts.want_trace, false, opts.frozen_assignments, &out.block_inputs,
                 &out.level_views, &out.used_models, &out.trace, &out.param_vars);

  ad::Var hw = tape.input(model.head.weight);
  ad::Var hb = tape.input(model.head.bias);
  out.logits = head_forward(tape, out.graph_repr, hw, hb);
  out.param_vars.push_back(hw);
  out.param_vars.push_back(hb);
  return out;
}

std::vector<std::vector<int>> assignments_from_trace(const PoolTrace& trace) {
  std::vector<std::vector<int>> out;
  out.reserve(trace.blocks.size());
  for (const auto& block : trace.blocks) {
    std::vector<int> c;
    for (const PoolGraphTrace& g : block) c.insert(c.end(), g.cluster_ids.begin(), g.cluster_ids.end());
    out.push_back(std::move(c));
  }
  return out;
}

Matrix resume_from_block(const HelpModel& model, const std::vector<ClusterModel>& models,
                         const BatchView& view_at_block, const Matrix& block_embeddings,
                         int block_index) {
  ad::Tape tape(false);
  ad::Var x = tape.constant(block_embeddings);
  ad::Var repr =
      pool_chain(tape, view_at_block, x, model, block_index, ClusterSource::Fixed, &models, 0,
                 false, true, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr);
  return tape.value(repr);
}

Prediction predict(const HelpModel& model, const Graph& g) {
  if (!model.has_centroids())
    throw std::logic_error("predict: model has no fitted centroids");
  ad::Tape tape(false);
  const BatchView batch = make_batch(std::vector<Graph>{g});
  PoolForwardOptions opts;
  opts.source = ClusterSource::Fixed;
  HelpForward fwd = help_forward(tape, batch, model, opts);
  Prediction pred;
  pred.logits = tape.value(fwd.logits);
  pred.trace = std::move(fwd.trace);
  int best = 0;
  for (int c = 1; c < pred.logits.cols(); ++c)
    if (pred.logits(0, c) > pred.logits(0, best)) best = c;
  pred.label = best;
  return pred;
}

}  // namespace hierpool
