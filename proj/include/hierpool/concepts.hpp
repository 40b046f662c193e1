#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "hierpool/pool.hpp"
#include "hierpool/tree.hpp"
#include "hierpool/wl.hpp"

namespace hierpool {

/// One pooled subgraph assigned to a concept. At level 1 nodes are tagged by
/// their distinct feature row; at deeper levels by the previous level's
/// concept id.
struct ConceptInstance {
  int level = 1;  // 1-based pool level
  int concept_id = 0;
  Graph subgraph;
  int source_graph = 0;
  std::vector<int> member_nodes;  // node ids in the level-input graph
};

struct ConceptExtraction {
  std::vector<ConceptInstance> instances;
  std::vector<Graph> level_inputs;  // per source graph, with level tags applied
  int num_concepts = 0;
  int level = 1;
};

ConceptExtraction extract_concepts(const HelpModel& model, const std::vector<Graph>& graphs,
                                   int level);

/// Re-represents every instance as one neighborhood per member node, hops
/// steps wide in the level-input graph (hops = 0 keeps just the tagged node).
std::vector<ConceptInstance> lhop_instances(const ConceptExtraction& extraction, int hops);

/// One isomorphism class inside a concept.
struct ConceptBucket {
  IsoKey key;
  Graph representative;
  long count = 0;
  int example_graph = -1;
  std::vector<int> example_members;
  bool hash_only = false;  // exact check skipped beyond the node cap
};

struct ConceptTable {
  int level = 1;
  int num_concepts = 0;
  std::map<int, std::vector<ConceptBucket>> buckets;
  std::map<int, long> totals;
};

ConceptTable bucket_instances(const std::vector<ConceptInstance>& instances, int num_concepts,
                              int level, int iso_cap = 64);

struct ConformityReport {
  std::map<int, double> per_concept;  // empty concepts score 1.0
  double layer_average = 1.0;         // over non-empty concepts
  double threshold = 0.1;
};

/// Fraction of a concept's instances lying in buckets that each cover at
/// least `threshold` of the concept's instances.
ConformityReport conformity(const ConceptTable& table, double threshold);

/// Conformity with instances re-represented as per-member-node hops-wide
/// neighborhoods.
ConformityReport conformity_lhop(const HelpModel& model, const std::vector<Graph>& graphs,
                                 int level, int hops, double threshold);

/// Per-graph concept count vectors at a level.
Matrix concept_multiset(const HelpModel& model, const std::vector<Graph>& graphs, int level);

struct CompletenessResult {
  double mean = 0.0;
  double stdev = 0.0;
  std::array<double, 3> runs{};
};

/// Decision tree fitted on train vectors, scored on test vectors; repeated
/// with three tree seeds.
CompletenessResult completeness(const Matrix& train_x, const std::vector<int>& train_y,
                                const Matrix& test_x, const std::vector<int>& test_y,
                                std::uint64_t seed);

/// Same protocol on bags of raw node-feature rows (no graph structure).
CompletenessResult feature_completeness(const std::vector<Graph>& train_graphs,
                                        const std::vector<int>& train_y,
                                        const std::vector<Graph>& test_graphs,
                                        const std::vector<int>& test_y, std::uint64_t seed);

/// Post-hoc concepts on a plain GCN: k-means over final-layer node
/// embeddings; instances are per-node L-hop neighborhoods.
struct GcExplainerResult {
  ClusterModel clusters;
  std::vector<std::vector<int>> node_concepts;  // [graph][node]
  ConceptTable table;
  Matrix multisets;  // per-graph concept counts
};

GcExplainerResult gcexplainer_concepts(const GcnBaseline& model,
                                       const std::vector<Graph>& graphs, int k, int hops,
                                       std::uint64_t seed);

/// DOT files per bucket: member nodes solid, hops-wide context dashed.
void export_concept_dot(const ConceptTable& table, const ConceptExtraction& extraction,
                        int hops, const std::filesystem::path& dir);

}  // namespace hierpool
