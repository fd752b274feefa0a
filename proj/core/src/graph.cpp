#include "dynaweight/graph.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace dynaweight {

int Graph::degree(int i) const {
  if (i < 0 || i >= n) {
    throw std::out_of_range("degree: node " + std::to_string(i) + " outside [0, " +
                            std::to_string(n) + ")");
  }
  return static_cast<int>(adjacency[i].size());
}

bool Graph::has_edge(int i, int j) const {
  if (i < 0 || i >= n || j < 0 || j >= n) return false;
  return std::binary_search(adjacency[i].begin(), adjacency[i].end(), j);
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j : adjacency[i]) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;  // already sorted: i ascending, adjacency sorted
}

std::size_t Graph::edge_count() const { return edges().size(); }

bool Graph::is_symmetric() const {
  for (int i = 0; i < n; ++i) {
    for (int j : adjacency[i]) {
      if (j == i) return false;  // self-loop
      if (!has_edge(j, i)) return false;
    }
  }
  return true;
}

bool Graph::is_connected() const {
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++visited;
        q.push(v);
      }
    }
  }
  return visited == n;
}

namespace {

Graph from_edge_sets(int n, std::vector<std::vector<int>> adj) {
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return Graph{n, std::move(adj)};
}

void add_edge(std::vector<std::vector<int>>& adj, int a, int b) {
  if (a == b) return;
  adj[a].push_back(b);
  adj[b].push_back(a);
}

}  // namespace

Graph build_ring(int n) {
  if (n < 3) {
    throw std::invalid_argument("build_ring: need n >= 3, got " + std::to_string(n));
  }
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) add_edge(adj, i, (i + 1) % n);
  return from_edge_sets(n, std::move(adj));
}

Graph build_line(int n) {
  if (n < 2) {
    throw std::invalid_argument("build_line: need n >= 2, got " + std::to_string(n));
  }
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i + 1 < n; ++i) add_edge(adj, i, i + 1);
  return from_edge_sets(n, std::move(adj));
}

Graph build_chordal(int n) {
  if (n < 4) {
    throw std::invalid_argument("build_chordal: need n >= 4, got " + std::to_string(n));
  }
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    add_edge(adj, i, (i + 1) % n);
    add_edge(adj, i, (i + 2) % n);
  }
  return from_edge_sets(n, std::move(adj));
}

Graph build_static_exponential(int n) {
  if (n < 2) {
    throw std::invalid_argument("build_static_exponential: need n >= 2, got " +
                                std::to_string(n));
  }
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int offset = 1; offset <= n - 1; offset *= 2) {
      add_edge(adj, i, (i + offset) % n);
    }
  }
  return from_edge_sets(n, std::move(adj));
}

Graph build_topology(const std::string& name, int n) {
  if (name == "ring") return build_ring(n);
  if (name == "line") return build_line(n);
  if (name == "chordal") return build_chordal(n);
  if (name == "exp") return build_static_exponential(n);
  throw std::invalid_argument("build_topology: unknown topology \"" + name +
                              "\" (valid: ring, line, chordal, exp)");
}

std::string graph_edges_csv(const Graph& g) {
  std::ostringstream out;
  out << "src,dst\n";
  for (const auto& [a, b] : g.edges()) out << a << ',' << b << '\n';
  return out.str();
}

}  // namespace dynaweight
