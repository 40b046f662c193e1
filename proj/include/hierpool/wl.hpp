#pragma once

#include <cstdint>
#include <vector>

#include "hierpool/graph.hpp"

namespace hierpool {

/// Structural counts kept next to the refinement hash. Color refinement
/// alone cannot separate e.g. two triangles from a hexagon; the component
/// count in the certificate can.
struct IsoCertificate {
  int num_nodes = 0;
  int num_edges = 0;
  int num_components = 0;

  bool operator==(const IsoCertificate&) const = default;
};

struct IsoKey {
  std::uint64_t hash = 0;  // color-refinement hash only
  IsoCertificate cert;

  bool operator==(const IsoKey&) const = default;
  bool operator<(const IsoKey& o) const {
    if (hash != o.hash) return hash < o.hash;
    if (cert.num_nodes != o.cert.num_nodes) return cert.num_nodes < o.cert.num_nodes;
    if (cert.num_edges != o.cert.num_edges) return cert.num_edges < o.cert.num_edges;
    return cert.num_components < o.cert.num_components;
  }
};

/// Color-refinement hash, permutation invariant, linear-time per iteration.
/// tags may be null (untagged). iterations < 0 selects the default of
/// num_nodes, by which refinement has provably stabilized.
IsoKey wl_hash(const Graph& g, const std::vector<int>* tags = nullptr, int iterations = -1);

/// Thrown when an exact isomorphism decision would exceed the node cap.
struct GraphTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact isomorphism test: refinement-based pruning plus backtracking.
/// Throws GraphTooLargeError above node_cap.
bool is_isomorphic(const Graph& a, const Graph& b, bool respect_tags = true,
                   int node_cap = 64);

}  // namespace hierpool
