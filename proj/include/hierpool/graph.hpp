#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hierpool/common.hpp"

namespace hierpool {

/// Undirected simple graph with dense node features. Edges are stored
/// normalized: each pair once, endpoints ordered, list sorted.
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Matrix features;  // num_nodes x d
  std::optional<int> label;
  std::optional<std::vector<int>> node_tags;

  int num_edges() const { return static_cast<int>(edges.size()); }
};

/// Validates indices, rejects self-loops, normalizes and deduplicates edges.
/// num_nodes is taken from the feature row count.
Graph build_graph(std::vector<std::pair<int, int>> edges, Matrix features,
                  std::optional<int> label = std::nullopt,
                  std::optional<std::vector<int>> node_tags = std::nullopt);

/// Node -> component assignment with component ids 1..num_components,
/// numbered by smallest contained node id in ascending order.
struct ComponentMap {
  std::vector<int> assignment;
  int num_components = 0;
};

ComponentMap connected_components(int num_nodes,
                                  const std::vector<std::pair<int, int>>& edges);

/// Subgraph induced by `nodes` (need not be sorted); nodes are reindexed
/// 0..|nodes|-1 in ascending original order, keeping feature rows and tags.
Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes);

struct KHopNeighborhood {
  Graph graph;
  int center = 0;  // index of v in the extracted graph
};

/// Induced subgraph on all nodes at distance <= k from v.
KHopNeighborhood k_hop_neighborhood(const Graph& g, int v, int k);

}  // namespace hierpool
