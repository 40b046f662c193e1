#include <doctest.h>

#include "hierpool/graph.hpp"
#include "oracles.hpp"

using namespace hierpool;

namespace {

Graph house() {
  return build_graph({{0, 1}, {1, 2}, {2, 3}, {0, 3}, {2, 4}, {3, 4}}, Matrix::Ones(5, 1));
}

}  // namespace

TEST_CASE("build_graph normalizes and validates") {
  const Graph g = build_graph({{0, 1}, {1, 2}}, Matrix::Ones(3, 1));
  CHECK(g.num_nodes == 3);
  CHECK(g.num_edges() == 2);

  CHECK_THROWS_AS(build_graph({{0, 5}}, Matrix::Ones(3, 1)), std::invalid_argument);
  CHECK_THROWS_AS(build_graph({{1, 1}}, Matrix::Ones(3, 1)), std::invalid_argument);

  const Graph mirrored = build_graph({{1, 0}, {0, 1}}, Matrix::Ones(2, 1));
  REQUIRE(mirrored.num_edges() == 1);
  CHECK(mirrored.edges[0] == std::pair<int, int>{0, 1});

  CHECK_THROWS_AS(build_graph({}, Matrix::Ones(2, 1), std::nullopt, std::vector<int>{1}),
                  std::invalid_argument);
}

TEST_CASE("connected_components basics") {
  const ComponentMap none = connected_components(4, {});
  CHECK(none.num_components == 4);

  const ComponentMap path = connected_components(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(path.num_components == 1);

  const ComponentMap tri2 =
      connected_components(6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}});
  CHECK(tri2.num_components == 2);
  CHECK(tri2.assignment[0] == 1);
  CHECK(tri2.assignment[3] == 2);
}

TEST_CASE("component numbering follows smallest member node") {
  const ComponentMap cm = connected_components(5, {{2, 4}});
  CHECK(cm.assignment == std::vector<int>{1, 2, 3, 4, 3});
}

TEST_CASE("connected_components agrees with BFS oracle on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Graph g = oracle::random_graph(rng, 20, 0.15, 0);
    const ComponentMap cm = connected_components(g.num_nodes, g.edges);
    const auto ref = oracle::bfs_components(g.num_nodes, g.edges);
    REQUIRE(cm.assignment == ref);
  }
}

TEST_CASE("induced_subgraph") {
  const Graph h = house();

  std::vector<int> all{0, 1, 2, 3, 4};
  const Graph copy = induced_subgraph(h, all);
  CHECK(copy.edges == h.edges);

  const Graph single = induced_subgraph(h, {2});
  CHECK(single.num_nodes == 1);
  CHECK(single.num_edges() == 0);

  const Graph roof = induced_subgraph(h, {2, 3, 4});
  CHECK(roof.num_nodes == 3);
  CHECK(roof.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});

  CHECK_THROWS_AS(induced_subgraph(h, {7}), std::invalid_argument);
}

TEST_CASE("induced_subgraph preserves internal degrees") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = oracle::random_graph(rng, 12, 0.3, 0);
    std::vector<int> keep;
    for (int v = 0; v < g.num_nodes; ++v)
      if (rng.uniform() < 0.6) keep.push_back(v);
    if (keep.empty()) continue;
    const Graph sub = induced_subgraph(g, keep);
    std::vector<int> expected(keep.size(), 0);
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t j = i + 1; j < keep.size(); ++j) {
        const auto e = std::pair{std::min(keep[i], keep[j]), std::max(keep[i], keep[j])};
        if (std::find(g.edges.begin(), g.edges.end(), e) != g.edges.end()) {
          ++expected[i];
          ++expected[j];
        }
      }
    std::vector<int> got(sub.num_nodes, 0);
    for (auto [u, v] : sub.edges) {
      ++got[u];
      ++got[v];
    }
    REQUIRE(got == expected);
  }
}

TEST_CASE("k_hop_neighborhood") {
  const Graph h = house();

  const auto zero = k_hop_neighborhood(h, 1, 0);
  CHECK(zero.graph.num_nodes == 1);
  CHECK(zero.center == 0);

  const auto whole = k_hop_neighborhood(h, 0, 10);
  CHECK(whole.graph.num_nodes == 5);

  // Roof apex: apex plus its two roof neighbors with their mutual edge.
  const auto apex = k_hop_neighborhood(h, 4, 1);
  CHECK(apex.graph.num_nodes == 3);
  CHECK(apex.graph.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});

  // Disconnected part is never reached.
  const Graph two = build_graph({{0, 1}, {2, 3}}, Matrix::Ones(4, 1));
  CHECK(k_hop_neighborhood(two, 0, 5).graph.num_nodes == 2);
}
