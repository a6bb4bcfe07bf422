#include "dcsynth/graph.h"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "dcsynth/errors.h"

namespace dcsynth {
namespace {

using Cliques = std::vector<std::vector<int>>;

UndirectedGraph Cycle(int n) {
  UndirectedGraph g(n);
  for (int i = 0; i < n; ++i) g.AddEdge(i, (i + 1) % n);
  return g;
}

// Directed pattern of the four-subsystem example matrix.
DirectedGraph FourNode() {
  return DirectedGraph(4, {{0, 1}, {1, 2}, {3, 2}, {0, 3}, {1, 3}});
}

TEST(GraphTest, DirectedGraphValidation) {
  EXPECT_THROW(DirectedGraph(2, {{0, 2}}), ValidationError);
  EXPECT_THROW(DirectedGraph(2, {{0, 1}, {0, 1}}), ValidationError);
  const DirectedGraph g(3, {{1, 2}, {0, 1}});
  EXPECT_TRUE(g.HasEdge(0, 1));
  EXPECT_FALSE(g.HasEdge(1, 0));
  EXPECT_EQ(g.edges().front(), Edge(0, 1));
}

TEST(GraphTest, UndirectedClosure) {
  const UndirectedGraph line = UndirectedClosure(DirectedGraph(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(line.Edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));

  const UndirectedGraph sym =
      UndirectedClosure(DirectedGraph(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
  EXPECT_EQ(sym, line);

  EXPECT_EQ(UndirectedClosure(FourNode()).Edges(),
            (std::vector<Edge>{{0, 1}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
}

TEST(GraphTest, IsChordalExamples) {
  EXPECT_FALSE(IsChordal(Cycle(4)));

  UndirectedGraph star(5);
  for (int i = 1; i < 5; ++i) star.AddEdge(0, i);
  std::vector<int> order;
  EXPECT_TRUE(IsChordal(star, &order));
  EXPECT_TRUE(IsPerfectEliminationOrder(star, order));

  UndirectedGraph tri = Cycle(4);
  tri.AddEdge(1, 3);
  EXPECT_TRUE(IsChordal(tri));
}

TEST(GraphTest, ExtensionOfChordalGraphIsIdentity) {
  UndirectedGraph tri = Cycle(4);
  tri.AddEdge(0, 2);
  EXPECT_EQ(ChordalExtension(tri), tri);
}

TEST(GraphTest, ExtensionOfFourCycle) {
  // All degrees tie; node 1 (0-based 0) goes first and joins its
  // neighbours 2 and 4.
  const UndirectedGraph ext = ChordalExtension(Cycle(4));
  EXPECT_EQ(ext.NumEdges(), 5);
  EXPECT_TRUE(ext.HasEdge(1, 3));
  EXPECT_TRUE(IsChordal(ext));
}

TEST(GraphTest, ExtensionOfFiveCycle) {
  const UndirectedGraph ext = ChordalExtension(Cycle(5));
  EXPECT_EQ(ext.NumEdges(), 7);
  EXPECT_TRUE(IsChordal(ext));
}

TEST(GraphTest, CliquesOfLine) {
  const ChordalStructure cs = MaximalCliques(UndirectedGraph(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(cs.cliques, (Cliques{{0, 1}, {1, 2}}));
  EXPECT_EQ(cs.overlap_nodes, std::vector<int>{1});
  EXPECT_TRUE(cs.overlap_edges.empty());
}

TEST(GraphTest, CliquesOfFourNode) {
  const ChordalStructure cs = MaximalCliques(UndirectedClosure(FourNode()));
  EXPECT_EQ(cs.cliques, (Cliques{{0, 1, 3}, {1, 2, 3}}));
  EXPECT_EQ(cs.overlap_nodes, (std::vector<int>{1, 3}));
  EXPECT_EQ(cs.overlap_edges, (std::vector<Edge>{{1, 3}}));
  EXPECT_TRUE(cs.IsOverlapEdge(3, 1));
  EXPECT_EQ(cs.EdgeCliques(3, 1), (std::vector<int>{0, 1}));
}

TEST(GraphTest, CliquesOfChain) {
  UndirectedGraph g(5);
  for (int i = 0; i + 1 < 5; ++i) g.AddEdge(i, i + 1);
  const ChordalStructure cs = MaximalCliques(g);
  EXPECT_EQ(cs.cliques, (Cliques{{0, 1}, {1, 2}, {2, 3}, {3, 4}}));
  EXPECT_EQ(cs.overlap_nodes, (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(cs.overlap_edges.empty());
}

TEST(GraphTest, CliquesOfDisconnectedGraph) {
  const ChordalStructure cs = MaximalCliques(UndirectedGraph(5, {{0, 1}, {2, 3}}));
  EXPECT_EQ(cs.cliques, (Cliques{{0, 1}, {2, 3}, {4}}));
  EXPECT_TRUE(cs.overlap_nodes.empty());
}

TEST(GraphTest, MaximalCliquesRejectsNonChordal) {
  EXPECT_THROW(MaximalCliques(Cycle(4)), DomainError);
}

TEST(GraphTest, TopologicalOrder) {
  const DirectedGraph dag(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_TRUE(IsAcyclic(dag));
  EXPECT_EQ(*TopologicalOrder(dag), (std::vector<int>{0, 1, 2}));
  EXPECT_FALSE(IsAcyclic(DirectedGraph(2, {{0, 1}, {1, 0}})));
  EXPECT_EQ(*TopologicalOrder(FourNode()), (std::vector<int>{0, 1, 3, 2}));
}

TEST(GraphTest, ExtractAndInflate) {
  Mat x(3, 3);
  x << 2, 1, 0, 1, 1, 1, 0, 1, 2;
  const std::vector<int> unit{1, 1, 1};
  EXPECT_EQ(Extract(x, {0, 1, 2}, unit), x);
  Mat second(2, 2);
  second << 1, 1, 1, 2;
  EXPECT_EQ(Extract(x, {1, 2}, unit), second);

  Mat xk(2, 2);
  xk << 0.5, 1, 1, 2;
  Mat expected = Mat::Zero(3, 3);
  expected.bottomRightCorner(2, 2) = xk;
  EXPECT_EQ(Inflate(xk, {1, 2}, unit), expected);
  EXPECT_EQ(Extract(Inflate(xk, {1, 2}, unit), {1, 2}, unit), xk);
  EXPECT_THROW(Extract(x, {3}, unit), std::exception);
}

TEST(GraphTest, BlockSemanticsOfExtract) {
  const std::vector<int> sizes{2, 1, 2};
  EXPECT_EQ(BlockOffsets(sizes), (std::vector<int>{0, 2, 3, 5}));
  Mat x = Mat::NullaryExpr(5, 5, [](Eigen::Index r, Eigen::Index c) {
    return static_cast<double>(10 * r + c);
  });
  const Mat sub = Extract(x, {0, 2}, sizes);
  ASSERT_EQ(sub.rows(), 4);
  EXPECT_EQ(sub(0, 2), x(0, 3));
  EXPECT_EQ(sub(3, 1), x(4, 1));
}

// Random chordal graph: random elimination order, random edges, then fill.
UndirectedGraph RandomChordal(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  UndirectedGraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) g.AddEdge(i, j);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> gone(n, false);
  for (int v : order) {
    std::vector<int> nbrs;
    for (int u : g.Neighbors(v))
      if (!gone[u]) nbrs.push_back(u);
    for (size_t a = 0; a < nbrs.size(); ++a)
      for (size_t b = a + 1; b < nbrs.size(); ++b) g.AddEdge(nbrs[a], nbrs[b]);
    gone[v] = true;
  }
  return g;
}

void ExpectValidStructure(const UndirectedGraph& g, const ChordalStructure& cs) {
  const int n = g.num_nodes();
  for (const auto& c : cs.cliques) {
    ASSERT_TRUE(std::is_sorted(c.begin(), c.end()));
    for (size_t a = 0; a < c.size(); ++a)
      for (size_t b = a + 1; b < c.size(); ++b) EXPECT_TRUE(g.HasEdge(c[a], c[b]));
  }
  for (size_t a = 0; a < cs.cliques.size(); ++a)
    for (size_t b = 0; b < cs.cliques.size(); ++b) {
      if (a == b) continue;
      EXPECT_FALSE(std::includes(cs.cliques[b].begin(), cs.cliques[b].end(),
                                 cs.cliques[a].begin(), cs.cliques[a].end()));
    }
  for (const Edge& e : g.Edges()) {
    bool covered = false;
    for (const auto& c : cs.cliques)
      covered |= std::binary_search(c.begin(), c.end(), e.first) &&
                 std::binary_search(c.begin(), c.end(), e.second);
    EXPECT_TRUE(covered);
    EXPECT_EQ(cs.IsOverlapEdge(e.first, e.second), cs.EdgeCliques(e.first, e.second).size() >= 2);
  }
  for (int i = 0; i < n; ++i) {
    EXPECT_GE(cs.node_cliques[i].size(), 1u);
    const bool in_n0 = std::binary_search(cs.overlap_nodes.begin(), cs.overlap_nodes.end(), i);
    EXPECT_EQ(in_n0, cs.node_cliques[i].size() >= 2);
  }
  for (const Edge& e : cs.overlap_edges) {
    EXPECT_EQ(cs.EdgeCliques(e.first, e.second).size() >= 2, true);
    EXPECT_TRUE(cs.IsOverlapNode(e.first));
    EXPECT_TRUE(cs.IsOverlapNode(e.second));
  }
}

TEST(GraphPropertyTest, RandomChordalGraphs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_real_distribution<double> density(0.05, 0.5);
  for (int trial = 0; trial < 150; ++trial) {
    const UndirectedGraph g = RandomChordal(size(rng), density(rng), rng);
    std::vector<int> order;
    ASSERT_TRUE(IsChordal(g, &order));
    EXPECT_TRUE(IsPerfectEliminationOrder(g, order));
    EXPECT_EQ(ChordalExtension(g), g);
    ExpectValidStructure(g, MaximalCliques(g));
  }
}

TEST(GraphPropertyTest, ExtensionOfRandomGraphs) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_real_distribution<double> density(0.05, 0.5);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = size(rng);
    std::bernoulli_distribution coin(density(rng));
    UndirectedGraph g(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng)) g.AddEdge(i, j);
    const UndirectedGraph ext = ChordalExtension(g);
    ASSERT_TRUE(IsChordal(ext));
    for (const Edge& e : g.Edges()) EXPECT_TRUE(ext.HasEdge(e.first, e.second));
    EXPECT_EQ(ChordalExtension(g), ext);
    ExpectValidStructure(ext, MaximalCliques(ext));
  }
}

}  // namespace
}  // namespace dcsynth
