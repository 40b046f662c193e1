#include "hierpool/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>

#include "hierpool/rng.hpp"
#include "hierpool/tape.hpp"

namespace hierpool {

namespace {

/// Rank of each distinct feature row across the corpus; injective and
/// independent of graph order (rows are compared by value).
std::vector<std::vector<int>> feature_row_classes(const std::vector<Graph>& graphs) {
  std::map<std::vector<Scalar>, int> vocab;
  for (const Graph& g : graphs)
    for (int v = 0; v < g.num_nodes; ++v) {
      std::vector<Scalar> row(g.features.row(v).begin(), g.features.row(v).end());
      vocab.emplace(std::move(row), 0);
    }
  int next = 0;
  for (auto& [row, id] : vocab) id = next++;
  std::vector<std::vector<int>> classes;
  classes.reserve(graphs.size());
  for (const Graph& g : graphs) {
    std::vector<int> tags(g.num_nodes);
    for (int v = 0; v < g.num_nodes; ++v) {
      std::vector<Scalar> row(g.features.row(v).begin(), g.features.row(v).end());
      tags[v] = vocab.at(row);
    }
    classes.push_back(std::move(tags));
  }
  return classes;
}

std::vector<std::vector<int>> chunked(int count, int size) {
  std::vector<std::vector<int>> out;
  for (int at = 0; at < count; at += size) {
    std::vector<int> chunk;
    for (int i = at; i < std::min(count, at + size); ++i) chunk.push_back(i);
    out.push_back(std::move(chunk));
  }
  return out;
}

}  // namespace

ConceptExtraction extract_concepts(const HelpModel& model, const std::vector<Graph>& graphs,
                                   int level) {
  if (!model.has_centroids())
    throw std::logic_error("extract_concepts: model has no fitted centroids");
  if (level < 1 || level > model.num_blocks())
    throw std::invalid_argument("extract_concepts: level out of range");

  ConceptExtraction out;
  out.level = level;
  out.num_concepts = model.cluster_models[level - 1].size();
  const auto row_classes = feature_row_classes(graphs);

  for (const auto& chunk : chunked(static_cast<int>(graphs.size()), 128)) {
    const BatchView batch = make_batch(graphs, chunk);
    ad::Tape tape(false);
    PoolForwardOptions opts;
    opts.source = ClusterSource::Fixed;
    const HelpForward fwd = help_forward(tape, batch, model, opts);

    for (std::size_t gi = 0; gi < chunk.size(); ++gi) {
      const int source = chunk[gi];
      Graph level_input;
      if (level == 1) {
        level_input = graphs[source];
        level_input.node_tags = row_classes[source];
      } else {
        level_input = fwd.trace.blocks[level - 2][gi].pooled;
      }
      const PoolGraphTrace& trace = fwd.trace.blocks[level - 1][gi];
      for (std::size_t p = 0; p < trace.members.size(); ++p) {
        ConceptInstance inst;
        inst.level = level;
        inst.concept_id = trace.pooled_concept[p];
        inst.subgraph = induced_subgraph(level_input, trace.members[p]);
        inst.source_graph = source;
        inst.member_nodes = trace.members[p];
        out.instances.push_back(std::move(inst));
      }
      out.level_inputs.push_back(std::move(level_input));
    }
  }
  return out;
}

std::vector<ConceptInstance> lhop_instances(const ConceptExtraction& extraction, int hops) {
  std::vector<ConceptInstance> out;
  for (const ConceptInstance& inst : extraction.instances) {
    const Graph& level_input = extraction.level_inputs[inst.source_graph];
    for (int v : inst.member_nodes) {
      ConceptInstance hood;
      hood.level = extraction.level;
      hood.concept_id = inst.concept_id;
      hood.subgraph = k_hop_neighborhood(level_input, v, hops).graph;
      hood.source_graph = inst.source_graph;
      hood.member_nodes = {v};
      out.push_back(std::move(hood));
    }
  }
  return out;
}

ConceptTable bucket_instances(const std::vector<ConceptInstance>& instances, int num_concepts,
                              int level, int iso_cap) {
  ConceptTable table;
  table.level = level;
  table.num_concepts = num_concepts;
  for (const ConceptInstance& inst : instances) {
    const IsoKey key = wl_hash(inst.subgraph);
    auto& buckets = table.buckets[inst.concept_id];
    ConceptBucket* home = nullptr;
    for (ConceptBucket& bucket : buckets) {
      if (!(bucket.key == key)) continue;
      if (inst.subgraph.num_nodes > iso_cap || bucket.representative.num_nodes > iso_cap) {
        bucket.hash_only = true;
        home = &bucket;
        break;
      }
      if (is_isomorphic(bucket.representative, inst.subgraph, true, iso_cap)) {
        home = &bucket;
        break;
      }
    }
    if (home == nullptr) {
      ConceptBucket fresh;
      fresh.key = key;
      fresh.representative = inst.subgraph;
      fresh.example_graph = inst.source_graph;
      fresh.example_members = inst.member_nodes;
      buckets.push_back(std::move(fresh));
      home = &buckets.back();
    }
    home->count += 1;
    table.totals[inst.concept_id] += 1;
  }
  return table;
}

ConformityReport conformity(const ConceptTable& table, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw std::invalid_argument("conformity: threshold must lie in (0, 1)");
  ConformityReport report;
  report.threshold = threshold;
  double sum = 0.0;
  int non_empty = 0;
  for (int c = 0; c < table.num_concepts; ++c) {
    const auto total_it = table.totals.find(c);
    const long total = total_it == table.totals.end() ? 0 : total_it->second;
    if (total == 0) {
      report.per_concept[c] = 1.0;  // empty concepts are perfectly conforming
      continue;
    }
    long kept = 0;
    for (const ConceptBucket& bucket : table.buckets.at(c))
      if (static_cast<double>(bucket.count) >= threshold * static_cast<double>(total))
        kept += bucket.count;
    const double conf = static_cast<double>(kept) / static_cast<double>(total);
    report.per_concept[c] = conf;
    sum += conf;
    ++non_empty;
  }
  report.layer_average = non_empty == 0 ? 1.0 : sum / static_cast<double>(non_empty);
  return report;
}

ConformityReport conformity_lhop(const HelpModel& model, const std::vector<Graph>& graphs,
                                 int level, int hops, double threshold) {
  const ConceptExtraction ex = extract_concepts(model, graphs, level);
  return conformity(bucket_instances(lhop_instances(ex, hops), ex.num_concepts, level),
                    threshold);
}

Matrix concept_multiset(const HelpModel& model, const std::vector<Graph>& graphs, int level) {
  if (!model.has_centroids())
    throw std::logic_error("concept_multiset: model has no fitted centroids");
  if (level < 1 || level > model.num_blocks())
    throw std::invalid_argument("concept_multiset: level out of range");
  const int k = model.cluster_models[level - 1].size();
  Matrix counts = Matrix::Zero(static_cast<int>(graphs.size()), k);
  for (const auto& chunk : chunked(static_cast<int>(graphs.size()), 128)) {
    const BatchView batch = make_batch(graphs, chunk);
    ad::Tape tape(false);
    PoolForwardOptions opts;
    opts.source = ClusterSource::Fixed;
    const HelpForward fwd = help_forward(tape, batch, model, opts);
    for (std::size_t gi = 0; gi < chunk.size(); ++gi)
      for (int cid : fwd.trace.blocks[level - 1][gi].pooled_concept)
        counts(chunk[gi], cid) += 1.0;
  }
  return counts;
}

CompletenessResult completeness(const Matrix& train_x, const std::vector<int>& train_y,
                                const Matrix& test_x, const std::vector<int>& test_y,
                                std::uint64_t seed) {
  CompletenessResult result;
  for (int run = 0; run < 3; ++run) {
    const DecisionTree tree =
        decision_tree_fit(train_x, train_y, Rng::mix({seed, static_cast<std::uint64_t>(run)}));
    const std::vector<int> pred = decision_tree_predict(tree, test_x);
    long hit = 0;
    for (std::size_t i = 0; i < test_y.size(); ++i)
      if (pred[i] == test_y[i]) ++hit;
    result.runs[run] = static_cast<double>(hit) / static_cast<double>(test_y.size());
  }
  result.mean = (result.runs[0] + result.runs[1] + result.runs[2]) / 3.0;
  double var = 0.0;
  for (double r : result.runs) var += (r - result.mean) * (r - result.mean);
  result.stdev = std::sqrt(var / 3.0);
  return result;
}

CompletenessResult feature_completeness(const std::vector<Graph>& train_graphs,
                                        const std::vector<int>& train_y,
                                        const std::vector<Graph>& test_graphs,
                                        const std::vector<int>& test_y, std::uint64_t seed) {
  std::map<std::vector<Scalar>, int> vocab;
  auto row_of = [](const Graph& g, int v) {
    return std::vector<Scalar>(g.features.row(v).begin(), g.features.row(v).end());
  };
  for (const auto* graphs : {&train_graphs, &test_graphs})
    for (const Graph& g : *graphs)
      for (int v = 0; v < g.num_nodes; ++v) vocab.emplace(row_of(g, v), 0);
  int next = 0;
  for (auto& [row, id] : vocab) id = next++;

  auto vectors = [&](const std::vector<Graph>& graphs) {
    Matrix counts = Matrix::Zero(static_cast<int>(graphs.size()),
                                 static_cast<int>(vocab.size()));
    for (std::size_t gi = 0; gi < graphs.size(); ++gi)
      for (int v = 0; v < graphs[gi].num_nodes; ++v)
        counts(static_cast<int>(gi), vocab.at(row_of(graphs[gi], v))) += 1.0;
    return counts;
  };
  return completeness(vectors(train_graphs), train_y, vectors(test_graphs), test_y, seed);
}

GcExplainerResult gcexplainer_concepts(const GcnBaseline& model,
                                       const std::vector<Graph>& graphs, int k, int hops,
                                       std::uint64_t seed) {
  GcExplainerResult result;
  const auto row_classes = feature_row_classes(graphs);

  std::vector<Matrix> per_graph_emb(graphs.size());
  long total_nodes = 0;
  for (const auto& chunk : chunked(static_cast<int>(graphs.size()), 128)) {
    const BatchView batch = make_batch(graphs, chunk);
    ad::Tape tape(false);
    const BaselineForward fwd = baseline_forward(tape, batch, model);
    const Matrix& emb = tape.value(fwd.node_embeddings);
    for (std::size_t gi = 0; gi < chunk.size(); ++gi) {
      per_graph_emb[chunk[gi]] =
          emb.middleRows(batch.offsets[gi], batch.graphs[gi].num_nodes);
      total_nodes += batch.graphs[gi].num_nodes;
    }
  }
  Matrix all(total_nodes, per_graph_emb.front().cols());
  long at = 0;
  for (const Matrix& m : per_graph_emb) {
    all.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  result.clusters = kmeans_fit(all, k, Rng::mix({seed, 0x6CE8}));
  const int k_eff = result.clusters.size();

  std::vector<ConceptInstance> instances;
  result.multisets = Matrix::Zero(static_cast<int>(graphs.size()), k_eff);
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    Graph tagged = graphs[gi];
    tagged.node_tags = row_classes[gi];
    const std::vector<int> concepts = assign(per_graph_emb[gi], result.clusters);
    result.node_concepts.push_back(concepts);
    for (int v = 0; v < graphs[gi].num_nodes; ++v) {
      ConceptInstance inst;
      inst.level = 1;
      inst.concept_id = concepts[v];
      inst.subgraph = k_hop_neighborhood(tagged, v, hops).graph;
      inst.source_graph = static_cast<int>(gi);
      inst.member_nodes = {v};
      instances.push_back(std::move(inst));
      result.multisets(static_cast<int>(gi), concepts[v]) += 1.0;
    }
  }
  result.table = bucket_instances(instances, k_eff, 1);
  return result;
}

namespace {

/// Distances from the member set; -1 where unreachable.
std::vector<int> multi_source_distances(const Graph& g, const std::vector<int>& sources) {
  std::vector<std::vector<int>> adj(g.num_nodes);
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<int> dist(g.num_nodes, -1);
  std::deque<int> queue;
  for (int s : sources) {
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int w : adj[u])
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

}  // namespace

void export_concept_dot(const ConceptTable& table, const ConceptExtraction& extraction,
                        int hops, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [cid, buckets] : table.buckets) {
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      const ConceptBucket& bucket = buckets[b];
      if (bucket.example_graph < 0) continue;
      const Graph& host = extraction.level_inputs[bucket.example_graph];
      const auto dist = multi_source_distances(host, bucket.example_members);
      std::vector<int> keep;
      for (int v = 0; v < host.num_nodes; ++v)
        if (dist[v] >= 0 && dist[v] <= hops) keep.push_back(v);

      std::ofstream out(dir / ("level" + std::to_string(table.level) + "_concept" +
                               std::to_string(cid) + "_bucket" + std::to_string(b) +
                               ".dot"));
      out << "graph concept_" << cid << "_bucket_" << b << " {\n";
      out << "  // count=" << bucket.count << " wl=" << bucket.key.hash
          << (bucket.hash_only ? " hash_only" : "") << "\n";
      std::set<int> members(bucket.example_members.begin(), bucket.example_members.end());
      for (int v : keep) {
        out << "  n" << v << " [label=\""
            << (host.node_tags ? std::to_string((*host.node_tags)[v]) : "") << "\""
            << (members.count(v) ? " style=filled fillcolor=lightblue"
                                 : " style=dashed color=gray")
            << "];\n";
      }
      for (const auto& [u, v] : host.edges) {
        if (dist[u] < 0 || dist[u] > hops || dist[v] < 0 || dist[v] > hops) continue;
        const bool solid = members.count(u) && members.count(v);
        out << "  n" << u << " -- n" << v << (solid ? "" : " [style=dashed color=gray]")
            << ";\n";
      }
      out << "}\n";
    }
  }
}

}  // namespace hierpool
