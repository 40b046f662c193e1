#include "hierpool/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hierpool/rng.hpp"

namespace hierpool {

namespace {

struct Motif {
  int size;
  std::vector<std::pair<int, int>> edges;
  const char* name;
};

const Motif kTriangle{3, {{0, 1}, {0, 2}, {1, 2}}, "triangle"};
const Motif kHouse{5, {{0, 1}, {0, 3}, {1, 2}, {2, 3}, {2, 4}, {3, 4}}, "house"};
const Motif kPentagon{5,
                      {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4},
                       {2, 3}, {2, 4}, {3, 4}},
                      "pentagon"};

const Motif* kLowLevel[3] = {&kTriangle, &kHouse, &kPentagon};
const Motif* kHighLevel[2] = {&kTriangle, &kHouse};

}  // namespace

std::string hierarchical_class_name(int label) {
  if (label < 0 || label >= 14) return "?";
  const int high = label / 7;
  const int mask = label % 7 + 1;
  std::string out = std::string(kHighLevel[high]->name) + "+{";
  bool first = true;
  for (int m = 0; m < 3; ++m)
    if (mask & (1 << m)) {
      if (!first) out += ',';
      out += kLowLevel[m]->name;
      first = false;
    }
  return out + "}";
}

std::vector<Graph> gen_hierarchical(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_hierarchical: n must be >= 1");
  Rng rng(seed);
  std::vector<Graph> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int high_idx = rng.uniform_int(2);
    const Motif& high = *kHighLevel[high_idx];
    const int mask = 1 + rng.uniform_int(7);
    std::vector<int> allowed;
    for (int m = 0; m < 3; ++m)
      if (mask & (1 << m)) allowed.push_back(m);

    // Uniform over assignments whose distinct-motif set matches the mask.
    std::vector<int> slots(high.size);
    while (true) {
      int used = 0;
      for (int& s : slots) {
        s = allowed[rng.uniform_int(static_cast<int>(allowed.size()))];
        used |= 1 << s;
      }
      if (used == mask) break;
    }

    std::vector<std::pair<int, int>> edges;
    std::vector<int> tags;
    std::vector<int> port(high.size);
    int offset = 0;
    for (int slot = 0; slot < high.size; ++slot) {
      const Motif& low = *kLowLevel[slots[slot]];
      port[slot] = offset;  // intermediates attach to the motif's first node
      for (const auto& [u, v] : low.edges) edges.emplace_back(offset + u, offset + v);
      for (int v = 0; v < low.size; ++v) tags.push_back(0);
      offset += low.size;
    }
    for (const auto& [a, b] : high.edges) {
      const int inter = offset++;
      tags.push_back(1);
      edges.emplace_back(port[a], inter);
      edges.emplace_back(inter, port[b]);
    }

    Matrix features = Matrix::Zero(offset, 2);
    for (int v = 0; v < offset; ++v) features(v, tags[v]) = 1.0;
    const int label = high_idx * 7 + (mask - 1);
    out.push_back(build_graph(std::move(edges), std::move(features), label, tags));
  }
  return out;
}

std::vector<Graph> gen_expressivity(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_expressivity: n must be >= 1");
  Rng rng(seed);
  std::vector<Graph> out;
  out.reserve(n);
  auto cycle = [](int offset, int len, std::vector<std::pair<int, int>>& edges) {
    for (int v = 0; v < len; ++v) edges.emplace_back(offset + v, offset + (v + 1) % len);
  };
  for (int i = 0; i < n; ++i) {
    const int m = 6 + 2 * rng.uniform_int(18);  // even in [6, 40]
    const int label = i % 2;                    // balanced by construction
    std::vector<std::pair<int, int>> edges;
    if (label == 0) {
      cycle(0, m, edges);
    } else {
      cycle(0, m / 2, edges);
      cycle(m / 2, m / 2, edges);
    }
    out.push_back(build_graph(std::move(edges), Matrix::Ones(m, 1), label));
  }
  return out;
}

namespace {

std::vector<std::vector<long>> read_int_lines(const std::filesystem::path& file,
                                              int expected_fields) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing file: " + file.string());
  std::vector<std::vector<long>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<long> fields;
    std::string tok;
    std::istringstream ls(line);
    while (std::getline(ls, tok, ',')) {
      try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument("");
        fields.push_back(v);
      } catch (...) {
        throw std::runtime_error(file.filename().string() + ":" + std::to_string(line_no) +
                                 ": malformed line '" + line + "'");
      }
    }
    if (expected_fields > 0 && static_cast<int>(fields.size()) != expected_fields)
      throw std::runtime_error(file.filename().string() + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(expected_fields) + " fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

std::vector<Graph> parse_tu_dataset(const std::filesystem::path& dir, const std::string& name) {
  const auto indicator = read_int_lines(dir / (name + "_graph_indicator.txt"), 1);
  const auto adjacency = read_int_lines(dir / (name + "_A.txt"), 2);
  const auto graph_labels = read_int_lines(dir / (name + "_graph_labels.txt"), 1);

  const int total_nodes = static_cast<int>(indicator.size());
  const int num_graphs = static_cast<int>(graph_labels.size());
  std::vector<int> node_graph(total_nodes);
  int max_seen = 0;
  for (int v = 0; v < total_nodes; ++v) {
    const long gid = indicator[v][0];
    if (gid < 1 || gid > num_graphs || gid < max_seen)
      throw std::runtime_error(name + "_graph_indicator.txt: non-contiguous indicator at node " +
                               std::to_string(v + 1));
    max_seen = static_cast<int>(gid);
    node_graph[v] = static_cast<int>(gid) - 1;
  }
  if (max_seen != num_graphs)
    throw std::runtime_error(name + ": indicator covers " + std::to_string(max_seen) +
                             " graphs, labels list " + std::to_string(num_graphs));

  // Optional one-hot node labels.
  std::vector<int> node_label(total_nodes, 0);
  bool have_node_labels = false;
  std::map<long, int> label_index;
  {
    const auto path = dir / (name + "_node_labels.txt");
    if (std::filesystem::exists(path)) {
      const auto raw = read_int_lines(path, 1);
      if (static_cast<int>(raw.size()) != total_nodes)
        throw std::runtime_error(name + "_node_labels.txt: row count != node count");
      std::set<long> distinct;
      for (const auto& r : raw) distinct.insert(r[0]);
      int next = 0;
      for (long v : distinct) label_index[v] = next++;
      for (int v = 0; v < total_nodes; ++v) node_label[v] = label_index[raw[v][0]];
      have_node_labels = true;
    }
  }
  const int feat_dim = have_node_labels ? static_cast<int>(label_index.size()) : 1;

  std::vector<int> local_index(total_nodes);
  std::vector<int> graph_size(num_graphs, 0);
  for (int v = 0; v < total_nodes; ++v) local_index[v] = graph_size[node_graph[v]]++;

  std::vector<std::set<std::pair<int, int>>> edges(num_graphs);
  for (std::size_t e = 0; e < adjacency.size(); ++e) {
    const long a = adjacency[e][0];
    const long b = adjacency[e][1];
    if (a < 1 || b < 1 || a > total_nodes || b > total_nodes)
      throw std::runtime_error(name + "_A.txt: node id out of range in entry " +
                               std::to_string(e + 1));
    const int u = static_cast<int>(a) - 1;
    const int v = static_cast<int>(b) - 1;
    if (node_graph[u] != node_graph[v])
      throw std::runtime_error(name + "_A.txt: edge crosses graphs in entry " +
                               std::to_string(e + 1));
    if (u == v) continue;  // simple graphs only
    const int lu = local_index[u];
    const int lv = local_index[v];
    edges[node_graph[u]].emplace(std::min(lu, lv), std::max(lu, lv));
  }

  std::map<long, int> class_index;
  {
    std::set<long> distinct;
    for (const auto& r : graph_labels) distinct.insert(r[0]);
    int next = 0;
    for (long v : distinct) class_index[v] = next++;
  }

  std::vector<Graph> out;
  out.reserve(num_graphs);
  std::vector<std::vector<int>> node_tags(num_graphs);
  for (int v = 0; v < total_nodes; ++v) node_tags[node_graph[v]].push_back(node_label[v]);
  for (int g = 0; g < num_graphs; ++g) {
    Matrix features;
    if (have_node_labels) {
      features = Matrix::Zero(graph_size[g], feat_dim);
      for (int v = 0; v < graph_size[g]; ++v) features(v, node_tags[g][v]) = 1.0;
    } else {
      features = Matrix::Ones(graph_size[g], 1);
    }
    std::vector<std::pair<int, int>> edge_list(edges[g].begin(), edges[g].end());
    out.push_back(build_graph(std::move(edge_list), std::move(features),
                              class_index.at(graph_labels[g][0]),
                              have_node_labels ? std::optional(node_tags[g]) : std::nullopt));
  }
  return out;
}

void write_tu_dataset(const std::filesystem::path& dir, const std::string& name,
                      const std::vector<Graph>& graphs) {
  std::filesystem::create_directories(dir);
  std::ofstream a(dir / (name + "_A.txt"));
  std::ofstream ind(dir / (name + "_graph_indicator.txt"));
  std::ofstream lab(dir / (name + "_graph_labels.txt"));
  bool any_tags = false;
  for (const Graph& g : graphs) any_tags = any_tags || g.node_tags.has_value();
  std::ofstream nodelab;
  if (any_tags) nodelab.open(dir / (name + "_node_labels.txt"));

  int offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    for (const auto& [u, v] : g.edges) {
      a << (offset + u + 1) << ", " << (offset + v + 1) << "\n";
      a << (offset + v + 1) << ", " << (offset + u + 1) << "\n";
    }
    for (int v = 0; v < g.num_nodes; ++v) {
      ind << (gi + 1) << "\n";
      if (any_tags) nodelab << (g.node_tags ? (*g.node_tags)[v] : 0) << "\n";
    }
    lab << g.label.value_or(0) << "\n";
    offset += g.num_nodes;
  }
}

Split split_dataset(int count, const std::array<double, 3>& ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  std::vector<int> order(count);
  for (int i = 0; i < count; ++i) order[i] = i;
  Rng rng(Rng::mix({seed, 0x5B117}));
  for (int i = count - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

  const int n_train = static_cast<int>(std::llround(ratios[0] * count));
  const int n_val = static_cast<int>(std::llround(ratios[1] * count));
  Split split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw std::invalid_argument("split_dataset: a split part is empty");
  return split;
}

std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<int> order = indices;
  Rng rng(Rng::mix({seed, static_cast<std::uint64_t>(epoch), 0xBA7C4}));
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);
  std::vector<std::vector<int>> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size)
    batches.emplace_back(order.begin() + at,
                         order.begin() + std::min(order.size(), at + batch_size));
  return batches;
}

}  // namespace hierpool
