#include <gtest/gtest.h>

#include <fstream>

#include "genet/data.hpp"
#include "genet/graph.hpp"

using namespace genet;

TEST(BuildCsr, SingleEdge) {
  const CsrGraph g = build_csr({{0, 1}}, 2, false);
  EXPECT_EQ(g.offsets(), (std::vector<EdgeId>{0, 1, 2}));
  EXPECT_EQ(g.targets(), (std::vector<NodeId>{1, 0}));
  EXPECT_EQ(g.num_edges(), 1);
}

TEST(BuildCsr, DuplicateAndReversedInputsMerge) {
  const CsrGraph a = build_csr({{0, 1}}, 2, false);
  const CsrGraph b = build_csr({{0, 1}, {1, 0}, {0, 1}}, 2, false);
  EXPECT_EQ(a.offsets(), b.offsets());
  EXPECT_EQ(a.targets(), b.targets());
}

TEST(BuildCsr, ChainWithSelfLoopsSortsNeighbors) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 5, 0, 0, 0, true);
  std::vector<NodeId> nbrs;
  for (EdgeId e = g.row_begin(2); e < g.row_end(2); ++e)
    nbrs.push_back(g.target(e));
  EXPECT_EQ(nbrs, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_TRUE(g.has_self_loops());
  EXPECT_EQ(g.num_edges(), 4);
}

TEST(BuildCsr, OutOfRangeNamesOffendingEntry) {
  try {
    build_csr({{0, 1}, {1, 7}}, 3, false);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("edge 2"), std::string::npos) << e.what();
  }
}

TEST(BuildCsr, ReverseSlotsAreInvolution) {
  const CsrGraph g = make_synthetic(SyntheticKind::ErdosRenyi, 30, 0, 0.15, 3, true);
  for (EdgeId e = 0; e < g.num_slots(); ++e) {
    EXPECT_EQ(g.reverse_slot(g.reverse_slot(e)), e);
    EXPECT_EQ(g.source(g.reverse_slot(e)), g.target(e));
    EXPECT_EQ(g.target(g.reverse_slot(e)), g.source(e));
  }
}

TEST(GcnCoefficients, SingleNodeWithSelfLoop) {
  const CsrGraph g = build_csr({}, 1, true);
  const EdgeCoefficients c = gcn_coefficients(g);
  EXPECT_DOUBLE_EQ(c.self[0], 1.0);
}

TEST(GcnCoefficients, TwoDegreeOneNodes) {
  const CsrGraph g = build_csr({{0, 1}}, 2, false);
  const EdgeCoefficients c = gcn_coefficients(g);
  EXPECT_DOUBLE_EQ(c.edge[0], 1.0);
  EXPECT_DOUBLE_EQ(c.edge[1], 1.0);
}

TEST(GcnCoefficients, ChainOfThreeWithLoops) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 3, 0, 0, 0, true);
  const EdgeCoefficients c = gcn_coefficients(g);
  // node 0 has degree 2, node 1 degree 3
  EdgeId e01 = -1;
  for (EdgeId e = g.row_begin(0); e < g.row_end(0); ++e)
    if (g.target(e) == 1) e01 = e;
  EXPECT_NEAR(c.edge[static_cast<size_t>(e01)], 1.0 / std::sqrt(6.0), 1e-15);
}

TEST(GcnCoefficients, IsolatedNodeWithoutLoopRejected) {
  const CsrGraph g = build_csr({{0, 1}}, 3, false);  // node 2 isolated
  EXPECT_THROW(gcn_coefficients(g), InputError);
}

TEST(KHopSets, ChainShells) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 5, 0, 0, 0, true);
  const auto shells = k_hop_sets(g, 2, 4);
  EXPECT_EQ(shells[0], (std::vector<NodeId>{2}));
  EXPECT_EQ(shells[1], (std::vector<NodeId>{1, 3}));
  EXPECT_EQ(shells[2], (std::vector<NodeId>{0, 4}));
  EXPECT_TRUE(shells[3].empty());
  EXPECT_TRUE(shells[4].empty());
}

TEST(KHopSets, CompleteGraphCollapsesAtOne) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < 4; ++u)
    for (NodeId v = u + 1; v < 4; ++v) edges.emplace_back(u, v);
  const CsrGraph g = build_csr(edges, 4, false);
  const auto shells = k_hop_sets(g, 0, 3);
  EXPECT_EQ(shells[1], (std::vector<NodeId>{1, 2, 3}));
  EXPECT_TRUE(shells[2].empty());
}

TEST(KHopSets, DisconnectedStaysEmpty) {
  const CsrGraph g = build_csr({}, 2, false);
  const auto shells = k_hop_sets(g, 0, 3);
  EXPECT_EQ(shells[0], (std::vector<NodeId>{0}));
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(shells[static_cast<size_t>(k)].empty());
}

TEST(KHopSets, ShellsPartitionComponent) {
  const CsrGraph g = make_synthetic(SyntheticKind::ErdosRenyi, 40, 0, 0.08, 5, false);
  const auto shells = k_hop_sets(g, 0, 40);
  const auto dist = hop_distances(g, 0);
  std::vector<int> seen(40, 0);
  for (const auto& shell : shells)
    for (NodeId v : shell) seen[static_cast<size_t>(v)] += 1;
  for (NodeId v = 0; v < 40; ++v)
    EXPECT_EQ(seen[static_cast<size_t>(v)], dist[static_cast<size_t>(v)] >= 0 ? 1 : 0);
}

TEST(Acyclicity, TreesYesCyclesNo) {
  EXPECT_TRUE(is_acyclic(random_tree(20, 4)));
  EXPECT_TRUE(is_acyclic(make_synthetic(SyntheticKind::Chain, 6)));
  EXPECT_FALSE(is_acyclic(make_synthetic(SyntheticKind::Cycle, 3)));
  // self-loops do not count as cycles
  EXPECT_TRUE(is_acyclic(random_tree(20, 4, true)));
}

TEST(EdgeList, ParseSkipsCommentsAndBlankLines) {
  std::istringstream in("# header\n0\t1\n\n1\t2  # trailing\n");
  const auto edges = parse_edge_list(in, "test");
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0], (std::pair<NodeId, NodeId>{0, 1}));
  EXPECT_EQ(edges[1], (std::pair<NodeId, NodeId>{1, 2}));
}

TEST(EdgeList, MalformedLineNamesPosition) {
  std::istringstream in("0\t1\nbogus\n");
  try {
    parse_edge_list(in, "edges.tsv");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("edges.tsv:2"), std::string::npos);
  }
}

TEST(Permutation, RelabelingCommutesWithStructure) {
  Rng rng(15);
  const CsrGraph g = make_synthetic(SyntheticKind::ErdosRenyi, 25, 0, 0.12, 8, false);
  std::vector<NodeId> perm(25);
  for (NodeId v = 0; v < 25; ++v) perm[static_cast<size_t>(v)] = v;
  for (size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  std::vector<std::pair<NodeId, NodeId>> pedges;
  for (NodeId u = 0; u < 25; ++u)
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e)
      if (g.target(e) > u)
        pedges.emplace_back(perm[static_cast<size_t>(u)],
                            perm[static_cast<size_t>(g.target(e))]);
  const CsrGraph pg = build_csr(pedges, 25, false);
  EXPECT_EQ(pg.num_edges(), g.num_edges());
  for (NodeId u = 0; u < 25; ++u)
    EXPECT_EQ(pg.degree(perm[static_cast<size_t>(u)]), g.degree(u));
  // hop shells map through the permutation
  const auto s = k_hop_sets(g, 3, 4);
  const auto ps = k_hop_sets(pg, perm[3], 4);
  for (int k = 0; k <= 4; ++k) {
    std::vector<NodeId> mapped;
    for (NodeId v : s[static_cast<size_t>(k)])
      mapped.push_back(perm[static_cast<size_t>(v)]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, ps[static_cast<size_t>(k)]);
  }
}
