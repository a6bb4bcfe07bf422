#include "dcsynth/graph.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include "dcsynth/errors.h"

namespace dcsynth {

DirectedGraph::DirectedGraph(int num_nodes, const std::vector<Edge>& edges)
    : num_nodes_(num_nodes) {
  if (num_nodes < 0) throw ValidationError("negative node count");
  std::set<Edge> seen;
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= num_nodes || to < 0 || to >= num_nodes) {
      throw ValidationError("edge endpoint out of range");
    }
    if (from == to) throw ValidationError("self-loop in directed graph");
    if (!seen.insert({from, to}).second) {
      throw ValidationError("duplicate directed edge");
    }
  }
  edges_.assign(seen.begin(), seen.end());
}

bool DirectedGraph::HasEdge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

UndirectedGraph::UndirectedGraph(int num_nodes, const std::vector<Edge>& edges)
    : adj_(num_nodes) {
  for (const auto& [a, b] : edges) AddEdge(a, b);
}

void UndirectedGraph::CheckNode(int v) const {
  if (v < 0 || v >= num_nodes()) {
    throw ValidationError("node index out of range: " + std::to_string(v));
  }
}

void UndirectedGraph::AddEdge(int a, int b) {
  CheckNode(a);
  CheckNode(b);
  if (a == b) throw ValidationError("self-loop in undirected graph");
  adj_[a].insert(b);
  adj_[b].insert(a);
}

bool UndirectedGraph::HasEdge(int a, int b) const {
  CheckNode(a);
  CheckNode(b);
  return adj_[a].count(b) > 0;
}

std::vector<Edge> UndirectedGraph::Edges() const {
  std::vector<Edge> out;
  for (int a = 0; a < num_nodes(); ++a) {
    for (int b : adj_[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

int UndirectedGraph::NumEdges() const {
  int count = 0;
  for (const auto& s : adj_) count += static_cast<int>(s.size());
  return count / 2;
}

UndirectedGraph UndirectedClosure(const DirectedGraph& g) {
  UndirectedGraph u(g.num_nodes());
  for (const auto& [from, to] : g.edges()) u.AddEdge(from, to);
  return u;
}

std::vector<int> MaximumCardinalitySearch(const UndirectedGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> weight(n, 0);
  std::vector<bool> visited(n, false);
  std::vector<int> visit;
  visit.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (!visited[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    visited[best] = true;
    visit.push_back(best);
    for (int w : g.Neighbors(best)) {
      if (!visited[w]) ++weight[w];
    }
  }
  std::reverse(visit.begin(), visit.end());
  return visit;
}

bool IsPerfectEliminationOrder(const UndirectedGraph& g,
                               const std::vector<int>& order) {
  const int n = g.num_nodes();
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<int> pos(n, -1);
  for (int k = 0; k < n; ++k) {
    if (order[k] < 0 || order[k] >= n || pos[order[k]] >= 0) return false;
    pos[order[k]] = k;
  }
  for (int v : order) {
    // Later neighbours of v must form a clique; it suffices that they are
    // adjacent to the earliest of them.
    int parent = -1;
    for (int w : g.Neighbors(v)) {
      if (pos[w] > pos[v] && (parent < 0 || pos[w] < pos[parent])) parent = w;
    }
    if (parent < 0) continue;
    for (int w : g.Neighbors(v)) {
      if (pos[w] > pos[v] && w != parent && !g.HasEdge(parent, w)) {
        return false;
      }
    }
  }
  return true;
}

bool IsChordal(const UndirectedGraph& g, std::vector<int>* order) {
  std::vector<int> peo = MaximumCardinalitySearch(g);
  if (!IsPerfectEliminationOrder(g, peo)) return false;
  if (order) *order = std::move(peo);
  return true;
}

UndirectedGraph ChordalExtension(const UndirectedGraph& g) {
  const int n = g.num_nodes();
  UndirectedGraph out = g;
  std::vector<std::set<int>> work(n);
  for (int v = 0; v < n; ++v) work[v] = g.Neighbors(v);
  std::vector<bool> eliminated(n, false);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (eliminated[v]) continue;
      if (best < 0 || work[v].size() < work[best].size()) best = v;
    }
    const std::vector<int> nbrs(work[best].begin(), work[best].end());
    for (size_t a = 0; a < nbrs.size(); ++a) {
      for (size_t b = a + 1; b < nbrs.size(); ++b) {
        if (!work[nbrs[a]].count(nbrs[b])) {
          work[nbrs[a]].insert(nbrs[b]);
          work[nbrs[b]].insert(nbrs[a]);
          out.AddEdge(nbrs[a], nbrs[b]);
        }
      }
    }
    for (int w : nbrs) work[w].erase(best);
    work[best].clear();
    eliminated[best] = true;
  }
  return out;
}

bool ChordalStructure::IsOverlapEdge(int i, int j) const {
  return EdgeCliques(i, j).size() >= 2;
}

const std::vector<int>& ChordalStructure::EdgeCliques(int i, int j) const {
  auto it = edge_cliques.find({std::min(i, j), std::max(i, j)});
  if (it == edge_cliques.end()) {
    throw ValidationError("edge not present in chordal structure");
  }
  return it->second;
}

ChordalStructure MaximalCliques(const UndirectedGraph& g) {
  ChordalStructure cs;
  if (!IsChordal(g, &cs.elimination_order)) {
    throw DomainError("MaximalCliques requires a chordal graph");
  }
  cs.graph = g;
  const int n = g.num_nodes();
  std::vector<int> pos(n);
  for (int k = 0; k < n; ++k) pos[cs.elimination_order[k]] = k;

  std::vector<std::vector<int>> candidates;
  for (int v : cs.elimination_order) {
    std::vector<int> c{v};
    for (int w : g.Neighbors(v)) {
      if (pos[w] > pos[v]) c.push_back(w);
    }
    std::sort(c.begin(), c.end());
    candidates.push_back(std::move(c));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  for (size_t a = 0; a < candidates.size(); ++a) {
    bool dominated = false;
    for (size_t b = 0; b < candidates.size() && !dominated; ++b) {
      if (a == b || candidates[b].size() <= candidates[a].size()) continue;
      dominated = std::includes(candidates[b].begin(), candidates[b].end(),
                                candidates[a].begin(), candidates[a].end());
    }
    if (!dominated) cs.cliques.push_back(candidates[a]);
  }
  // Sorted ascending lists compare by smallest member first, then
  // lexicographically.
  std::sort(cs.cliques.begin(), cs.cliques.end());

  cs.node_cliques.assign(n, {});
  for (int k = 0; k < static_cast<int>(cs.cliques.size()); ++k) {
    const auto& c = cs.cliques[k];
    for (size_t a = 0; a < c.size(); ++a) {
      cs.node_cliques[c[a]].push_back(k);
      for (size_t b = a + 1; b < c.size(); ++b) {
        cs.edge_cliques[{c[a], c[b]}].push_back(k);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (cs.node_cliques[i].size() >= 2) cs.overlap_nodes.push_back(i);
  }
  for (const auto& [e, ks] : cs.edge_cliques) {
    if (ks.size() >= 2) cs.overlap_edges.push_back(e);
  }
  return cs;
}

std::optional<std::vector<int>> TopologicalOrder(const DirectedGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& [from, to] : g.edges()) {
    out[from].push_back(to);
    ++indegree[to];
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

bool IsAcyclic(const DirectedGraph& g) { return TopologicalOrder(g).has_value(); }

std::vector<int> BlockOffsets(const std::vector<int>& sizes) {
  std::vector<int> offsets(sizes.size() + 1, 0);
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 0) throw ValidationError("negative block size");
    offsets[i + 1] = offsets[i] + sizes[i];
  }
  return offsets;
}

namespace {

void CheckClique(const std::vector<int>& clique, int num_blocks) {
  for (int v : clique) {
    if (v < 0 || v >= num_blocks) {
      throw ValidationError("clique index out of range: " + std::to_string(v));
    }
  }
}

}  // namespace

Mat Extract(const Mat& x, const std::vector<int>& clique,
            const std::vector<int>& block_sizes) {
  const std::vector<int> off = BlockOffsets(block_sizes);
  CheckClique(clique, static_cast<int>(block_sizes.size()));
  if (x.rows() != off.back() || x.cols() != off.back()) {
    throw ValidationError("Extract: matrix does not match partition");
  }
  int dim = 0;
  for (int v : clique) dim += block_sizes[v];
  Mat out(dim, dim);
  int r = 0;
  for (int a : clique) {
    int c = 0;
    for (int b : clique) {
      out.block(r, c, block_sizes[a], block_sizes[b]) =
          x.block(off[a], off[b], block_sizes[a], block_sizes[b]);
      c += block_sizes[b];
    }
    r += block_sizes[a];
  }
  return out;
}

Mat Inflate(const Mat& xk, const std::vector<int>& clique,
            const std::vector<int>& block_sizes) {
  const std::vector<int> off = BlockOffsets(block_sizes);
  CheckClique(clique, static_cast<int>(block_sizes.size()));
  int dim = 0;
  for (int v : clique) dim += block_sizes[v];
  if (xk.rows() != dim || xk.cols() != dim) {
    throw ValidationError("Inflate: clique matrix has wrong dimension");
  }
  Mat out = Mat::Zero(off.back(), off.back());
  int r = 0;
  for (int a : clique) {
    int c = 0;
    for (int b : clique) {
      out.block(off[a], off[b], block_sizes[a], block_sizes[b]) =
          xk.block(r, c, block_sizes[a], block_sizes[b]);
      c += block_sizes[b];
    }
    r += block_sizes[a];
  }
  return out;
}

}  // namespace dcsynth
