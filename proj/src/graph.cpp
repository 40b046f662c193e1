#include "hierpool/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

namespace hierpool {

Graph build_graph(std::vector<std::pair<int, int>> edges, Matrix features,
                  std::optional<int> label, std::optional<std::vector<int>> node_tags) {
  Graph g;
  g.num_nodes = static_cast<int>(features.rows());
  if (node_tags && static_cast<int>(node_tags->size()) != g.num_nodes)
    throw std::invalid_argument("build_graph: tag count != num_nodes");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes)
      throw std::invalid_argument("build_graph: edge endpoint out of range: (" +
                                  std::to_string(u) + "," + std::to_string(v) + ")");
    if (u == v)
      throw std::invalid_argument("build_graph: self-loop at node " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges = std::move(edges);
  g.features = std::move(features);
  g.label = label;
  g.node_tags = std::move(node_tags);
  return g;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    int root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      int next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // smaller id stays root; keeps numbering canonical
    parent[b] = a;
  }
};

}  // namespace

ComponentMap connected_components(int num_nodes,
                                  const std::vector<std::pair<int, int>>& edges) {
  UnionFind uf(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw std::invalid_argument("connected_components: edge endpoint out of range");
    uf.unite(u, v);
  }
  ComponentMap cm;
  cm.assignment.assign(num_nodes, 0);
  // Roots are the smallest node in their component, so scanning in node
  // order yields ids sorted by smallest member.
  for (int v = 0; v < num_nodes; ++v) {
    const int root = uf.find(v);
    if (cm.assignment[root] == 0) cm.assignment[root] = ++cm.num_components;
    cm.assignment[v] = cm.assignment[root];
  }
  return cm;
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  std::vector<int> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<int> remap(g.num_nodes, -1);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int v = sorted[i];
    if (v < 0 || v >= g.num_nodes)
      throw std::invalid_argument("induced_subgraph: node outside graph");
    remap[v] = static_cast<int>(i);
  }

  Graph sub;
  sub.num_nodes = static_cast<int>(sorted.size());
  sub.features.resize(sub.num_nodes, g.features.cols());
  for (int i = 0; i < sub.num_nodes; ++i) sub.features.row(i) = g.features.row(sorted[i]);
  if (g.node_tags) {
    std::vector<int> tags(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) tags[i] = (*g.node_tags)[sorted[i]];
    sub.node_tags = std::move(tags);
  }
  for (const auto& [u, v] : g.edges)
    if (remap[u] >= 0 && remap[v] >= 0)
      sub.edges.emplace_back(std::min(remap[u], remap[v]), std::max(remap[u], remap[v]));
  std::sort(sub.edges.begin(), sub.edges.end());
  sub.label = g.label;
  return sub;
}

KHopNeighborhood k_hop_neighborhood(const Graph& g, int v, int k) {
  if (v < 0 || v >= g.num_nodes)
    throw std::invalid_argument("k_hop_neighborhood: center outside graph");
  if (k < 0) throw std::invalid_argument("k_hop_neighborhood: negative k");

  std::vector<std::vector<int>> adj(g.num_nodes);
  for (const auto& [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> dist(g.num_nodes, -1);
  std::deque<int> queue{v};
  dist[v] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (dist[u] == k) continue;
    for (int w : adj[u])
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
  }
  std::vector<int> keep;
  for (int u = 0; u < g.num_nodes; ++u)
    if (dist[u] >= 0) keep.push_back(u);

  KHopNeighborhood out;
  out.graph = induced_subgraph(g, keep);
  out.center = static_cast<int>(std::lower_bound(keep.begin(), keep.end(), v) - keep.begin());
  return out;
}

}  // namespace hierpool
