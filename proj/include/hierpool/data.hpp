#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hierpool/graph.hpp"

namespace hierpool {

/// Two-level synthetic benchmark: low-level motifs (triangle, house,
/// complete pentagon) arranged as the nodes of a high-level motif (triangle
/// or house) and joined through intermediate nodes, one per high-level edge.
/// Features are a 2-dim one-hot for motif node vs intermediate node. The
/// label encodes (high-level motif, set of distinct low-level motifs):
/// 2 x 7 = 14 classes, sampled uniformly.
std::vector<Graph> gen_hierarchical(int n, std::uint64_t seed);

/// Name of hierarchical class 0..13, e.g. "house+{triangle,pentagon}".
std::string hierarchical_class_name(int label);

/// One cycle (class 0) or two half-size cycles (class 1) on an even total
/// node count in [6, 40]; constant scalar feature. Classes are balanced and
/// indistinguishable for 1-WL-bounded models.
std::vector<Graph> gen_expressivity(int n, std::uint64_t seed);

/// TU-format directory loader: <dir>/<name>_A.txt, _graph_indicator.txt,
/// _graph_labels.txt, optional _node_labels.txt. Edge entries are 1-based
/// and directed; they are deduplicated to undirected simple edges and
/// self-loops are dropped. Node labels become one-hot features; without
/// them every node gets the constant feature 1. Graph labels are remapped
/// to contiguous 0-based classes. Edge labels/attributes are ignored.
std::vector<Graph> parse_tu_dataset(const std::filesystem::path& dir, const std::string& name);

/// Writes graphs in the same TU layout (node labels emitted when tags are
/// present). parse_tu_dataset(write_tu_dataset(...)) is an identity.
void write_tu_dataset(const std::filesystem::path& dir, const std::string& name,
                      const std::vector<Graph>& graphs);

struct Split {
  std::vector<int> train, val, test;
};

/// Seeded shuffle followed by a contiguous cut; throws when a part is empty.
Split split_dataset(int count, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Per-epoch reshuffled batches; the last partial batch is kept.
std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           std::uint64_t seed, int epoch);

}  // namespace hierpool
