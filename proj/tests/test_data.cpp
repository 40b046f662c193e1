#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "hierpool/data.hpp"
#include "hierpool/wl.hpp"
#include "oracles.hpp"

using namespace hierpool;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("hierpool_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool graphs_equal(const Graph& a, const Graph& b) {
  return a.num_nodes == b.num_nodes && a.edges == b.edges && a.features == b.features &&
         a.label == b.label && a.node_tags == b.node_tags;
}

}  // namespace

TEST_CASE("hierarchical generator decodes structurally and reproduces") {
  const auto graphs = gen_hierarchical(200, 11);
  REQUIRE(graphs.size() == 200);
  for (const Graph& g : graphs) {
    REQUIRE(g.label.has_value());
    REQUIRE(oracle::decode_hierarchical_label(g) == *g.label);
  }
  const auto again = gen_hierarchical(200, 11);
  for (std::size_t i = 0; i < graphs.size(); ++i) REQUIRE(graphs_equal(graphs[i], again[i]));
  CHECK_FALSE(graphs_equal(gen_hierarchical(1, 1)[0], gen_hierarchical(1, 2)[0]));
}

TEST_CASE("hierarchical intermediates match the high-level edge count") {
  for (const Graph& g : gen_hierarchical(100, 3)) {
    int intermediates = 0;
    for (int t : *g.node_tags) intermediates += t;
    const int high = *g.label / 7;
    CHECK(intermediates == (high == 0 ? 3 : 6));

    // Dropping intermediates leaves exactly one component per motif slot.
    std::vector<int> motif_nodes;
    for (int v = 0; v < g.num_nodes; ++v)
      if ((*g.node_tags)[v] == 0) motif_nodes.push_back(v);
    const Graph stripped = induced_subgraph(g, motif_nodes);
    const ComponentMap cm = connected_components(stripped.num_nodes, stripped.edges);
    CHECK(cm.num_components == (high == 0 ? 3 : 5));
  }
}

TEST_CASE("hierarchical classes cover all 14 combinations") {
  std::vector<int> counts(14, 0);
  for (const Graph& g : gen_hierarchical(1400, 5)) ++counts[*g.label];
  for (int c = 0; c < 14; ++c) CHECK(counts[c] > 40);  // near-uniform sampling
}

TEST_CASE("expressivity generator") {
  const auto graphs = gen_expressivity(120, 9);
  int class1 = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i];
    REQUIRE(g.num_nodes >= 6);
    REQUIRE(g.num_nodes <= 40);
    REQUIRE(g.num_nodes % 2 == 0);
    std::vector<int> degree(g.num_nodes, 0);
    for (auto [u, v] : g.edges) {
      ++degree[u];
      ++degree[v];
    }
    for (int d : degree) REQUIRE(d == 2);  // disjoint cycles only
    const ComponentMap cm = connected_components(g.num_nodes, g.edges);
    REQUIRE(*g.label == (cm.num_components == 2 ? 1 : 0));
    class1 += *g.label;
  }
  CHECK(class1 == 60);  // balanced

  // A six-node class-1 graph is exactly two triangles.
  Graph six;
  for (const Graph& g : graphs)
    if (g.num_nodes == 6 && *g.label == 1) six = g;
  if (six.num_nodes == 6) {
    const Graph two_triangles = build_graph(
        {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}}, Matrix::Ones(6, 1));
    CHECK(is_isomorphic(six, two_triangles, false));
  }
}

TEST_CASE("expressivity classes tie under color refinement at equal size") {
  const auto graphs = gen_expressivity(2, 2);
  for (int m = 6; m <= 40; m += 2) {
    auto cycle = [](int offset, int len, std::vector<std::pair<int, int>>& edges) {
      for (int v = 0; v < len; ++v) edges.emplace_back(offset + v, offset + (v + 1) % len);
    };
    std::vector<std::pair<int, int>> one, two;
    cycle(0, m, one);
    cycle(0, m / 2, two);
    cycle(m / 2, m / 2, two);
    const Graph a = build_graph(std::move(one), Matrix::Ones(m, 1));
    const Graph b = build_graph(std::move(two), Matrix::Ones(m, 1));
    const IsoKey ka = wl_hash(a);
    const IsoKey kb = wl_hash(b);
    REQUIRE(ka.hash == kb.hash);  // node-color refinement cannot separate
    REQUIRE(ka.cert.num_components != kb.cert.num_components);
  }
  (void)graphs;
}

TEST_CASE("tu parser on a hand-written fixture") {
  TempDir tmp;
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(tmp.path / name) << body;
  };
  // Graph 1: triangle with node labels 7,7,9. Graph 2: one edge, labels 9,13.
  write("fix_A.txt", "1, 2\n2, 1\n1, 3\n3, 1\n2, 3\n3, 2\n4, 5\n5, 4\n");
  write("fix_graph_indicator.txt", "1\n1\n1\n2\n2\n");
  write("fix_graph_labels.txt", "1\n-1\n");
  write("fix_node_labels.txt", "7\n7\n9\n9\n13\n");

  const auto graphs = parse_tu_dataset(tmp.path, "fix");
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].num_nodes == 3);
  CHECK(graphs[0].num_edges() == 3);
  CHECK(graphs[0].features.cols() == 3);  // three distinct label values
  CHECK(graphs[1].num_nodes == 2);
  CHECK(graphs[1].num_edges() == 1);
  CHECK(*graphs[0].label == 1);  // classes remapped to {-1,1} -> {0,1}
  CHECK(*graphs[1].label == 0);
  CHECK((*graphs[0].node_tags) == std::vector<int>{0, 0, 1});
  CHECK((*graphs[1].node_tags) == std::vector<int>{1, 2});
}

TEST_CASE("tu parser error reporting") {
  TempDir tmp;
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(tmp.path / name) << body;
  };
  CHECK_THROWS_WITH_AS(parse_tu_dataset(tmp.path, "gone"),
                       doctest::Contains("missing file"), std::runtime_error);

  write("bad_A.txt", "1, 2\n2, x\n");
  write("bad_graph_indicator.txt", "1\n1\n");
  write("bad_graph_labels.txt", "0\n");
  CHECK_THROWS_WITH_AS(parse_tu_dataset(tmp.path, "bad"), doctest::Contains("bad_A.txt:2"),
                       std::runtime_error);

  write("gap_A.txt", "1, 2\n");
  write("gap_graph_indicator.txt", "1\n3\n");
  write("gap_graph_labels.txt", "0\n1\n");
  CHECK_THROWS_WITH_AS(parse_tu_dataset(tmp.path, "gap"), doctest::Contains("non-contiguous"),
                       std::runtime_error);
}

TEST_CASE("tu round trip is the identity for both generators") {
  TempDir tmp;
  const auto hier = gen_hierarchical(40, 21);
  write_tu_dataset(tmp.path / "h", "hier", hier);
  const auto hier2 = parse_tu_dataset(tmp.path / "h", "hier");
  REQUIRE(hier2.size() == hier.size());
  for (std::size_t i = 0; i < hier.size(); ++i) REQUIRE(graphs_equal(hier[i], hier2[i]));

  const auto expr = gen_expressivity(40, 22);
  write_tu_dataset(tmp.path / "e", "expr", expr);
  const auto expr2 = parse_tu_dataset(tmp.path / "e", "expr");
  REQUIRE(expr2.size() == expr.size());
  for (std::size_t i = 0; i < expr.size(); ++i) {
    REQUIRE(expr2[i].num_nodes == expr[i].num_nodes);
    REQUIRE(expr2[i].edges == expr[i].edges);
    REQUIRE(expr2[i].features == expr[i].features);
    REQUIRE(expr2[i].label == expr[i].label);
  }
}

TEST_CASE("split_dataset") {
  const Split s = split_dataset(10, {0.8, 0.1, 0.1}, 4);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 1);

  const Split again = split_dataset(10, {0.8, 0.1, 0.1}, 4);
  CHECK(s.train == again.train);
  CHECK(s.test == again.test);

  std::vector<char> seen(10, 0);
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (int i : *part) {
      REQUIRE(seen[i] == 0);
      seen[i] = 1;
    }
  for (char c : seen) CHECK(c == 1);

  CHECK_THROWS_AS(split_dataset(3, {0.9, 0.05, 0.05}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(10, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
}

TEST_CASE("make_batches") {
  std::vector<int> indices(130);
  std::iota(indices.begin(), indices.end(), 0);
  const auto batches = make_batches(indices, 64, 5, 0);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 64);
  CHECK(batches[1].size() == 64);
  CHECK(batches[2].size() == 2);

  CHECK(make_batches(indices, 64, 5, 1) != batches);  // epoch reshuffle

  std::vector<int> all;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  CHECK(all == indices);
}
