#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace dynaweight {

/// Undirected communication topology over n servers. Adjacency lists are
/// sorted, free of self-loops and symmetric; every built-in constructor
/// yields a connected graph. Immutable after construction.
struct Graph {
  int n = 0;
  std::vector<std::vector<int>> adjacency;

  int degree(int i) const;
  bool has_edge(int i, int j) const;

  /// Each undirected edge once, src < dst, lexicographically sorted.
  std::vector<std::pair<int, int>> edges() const;
  std::size_t edge_count() const;

  bool is_symmetric() const;
  bool is_connected() const;  // BFS from node 0
};

// Node i connects to (i-1 mod n) and (i+1 mod n). Requires n >= 3.
Graph build_ring(int n);

// Path 0-1-...-(n-1). Requires n >= 2.
Graph build_line(int n);

// Ring plus chords (i, i+2 mod n), so every ring 4-cycle is chorded.
// Requires n >= 4; n = 4 gives K4.
Graph build_chordal(int n);

// Undirected edges (i, (i+2^k) mod n) for k = 0..floor(log2(n-1)),
// mirrored duplicates merged. Requires n >= 2.
Graph build_static_exponential(int n);

// Topology by config name: ring | line | chordal | exp.
Graph build_topology(const std::string& name, int n);

// Edge list as CSV ("src,dst" header, one undirected edge per line).
std::string graph_edges_csv(const Graph& g);

}  // namespace dynaweight
