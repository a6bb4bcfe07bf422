#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "dcsynth/linalg.h"

namespace dcsynth {

using Edge = std::pair<int, int>;

/// Directed graph on nodes 0..n-1. An edge (j, i) means node j influences
/// node i. Self-loops are not stored.
class DirectedGraph {
 public:
  DirectedGraph() = default;
  DirectedGraph(int num_nodes, const std::vector<Edge>& edges);

  int num_nodes() const { return num_nodes_; }
  /// Sorted (source, target) pairs.
  const std::vector<Edge>& edges() const { return edges_; }
  bool HasEdge(int from, int to) const;

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
};

class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int num_nodes) : adj_(num_nodes) {}
  UndirectedGraph(int num_nodes, const std::vector<Edge>& edges);

  int num_nodes() const { return static_cast<int>(adj_.size()); }
  void AddEdge(int a, int b);
  bool HasEdge(int a, int b) const;
  const std::set<int>& Neighbors(int v) const { return adj_.at(v); }
  /// Each edge once, as (min, max), sorted.
  std::vector<Edge> Edges() const;
  int NumEdges() const;

  friend bool operator==(const UndirectedGraph& a, const UndirectedGraph& b) {
    return a.adj_ == b.adj_;
  }

 private:
  void CheckNode(int v) const;
  std::vector<std::set<int>> adj_;
};

UndirectedGraph UndirectedClosure(const DirectedGraph& g);

/// Maximum cardinality search with lowest-index tie-breaking. Returns the
/// elimination order (reverse visit order).
std::vector<int> MaximumCardinalitySearch(const UndirectedGraph& g);

bool IsPerfectEliminationOrder(const UndirectedGraph& g,
                               const std::vector<int>& order);

/// True iff g is chordal. When true and `order` is non-null, stores a
/// perfect elimination ordering.
bool IsChordal(const UndirectedGraph& g, std::vector<int>* order = nullptr);

/// Greedy minimum-degree elimination; fill edges are added between the
/// neighbours of each eliminated vertex. Ties go to the lowest index.
UndirectedGraph ChordalExtension(const UndirectedGraph& g);

struct ChordalStructure {
  UndirectedGraph graph;
  std::vector<int> elimination_order;
  /// Each clique ascending; cliques ordered by smallest member, then
  /// lexicographically.
  std::vector<std::vector<int>> cliques;
  std::vector<int> overlap_nodes;    // N_0, ascending
  std::vector<Edge> overlap_edges;   // E_0, (min, max), sorted
  std::vector<std::vector<int>> node_cliques;  // N_i
  std::map<Edge, std::vector<int>> edge_cliques;  // E_ij, keyed (min, max)

  bool IsOverlapNode(int i) const { return node_cliques.at(i).size() >= 2; }
  bool IsOverlapEdge(int i, int j) const;
  const std::vector<int>& EdgeCliques(int i, int j) const;
};

/// Throws DomainError when g is not chordal.
ChordalStructure MaximalCliques(const UndirectedGraph& g);

/// Kahn's algorithm, always taking the smallest ready node. nullopt when the
/// graph has a directed cycle.
std::optional<std::vector<int>> TopologicalOrder(const DirectedGraph& g);
bool IsAcyclic(const DirectedGraph& g);

/// Block offsets for a list of block sizes (prefix sums, length n+1).
std::vector<int> BlockOffsets(const std::vector<int>& sizes);

/// Principal submatrix over the blocks listed in `clique`.
Mat Extract(const Mat& x, const std::vector<int>& clique,
            const std::vector<int>& block_sizes);

/// Places `xk` at the clique's block positions of a zero matrix.
Mat Inflate(const Mat& xk, const std::vector<int>& clique,
            const std::vector<int>& block_sizes);

}  // namespace dcsynth
