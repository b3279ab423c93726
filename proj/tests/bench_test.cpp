#include <gtest/gtest.h>

#include <sstream>

#include "genet/bench.hpp"

using namespace genet;

TEST(Bench, EdgeVisitFormulaExact) {
  const auto records = scaling_run({300, 600}, 3, 2, 3, 6.0, 8, 5);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.edge_visits, 2 * (2 * r.edges) * r.K * r.L);
    EXPECT_GT(r.ms_median, 0.0);
    EXPECT_GT(r.peak_bytes, 0);
  }
}

TEST(Bench, DoublingKDoublesVisits) {
  const auto k3 = scaling_run({400}, 3, 1, 3, 6.0, 8, 5);
  const auto k6 = scaling_run({400}, 6, 1, 3, 6.0, 8, 5);
  EXPECT_EQ(k6[0].edge_visits, 2 * k3[0].edge_visits);
}

TEST(Bench, EliminationOffHalvesVisits) {
  const auto on = scaling_run({400}, 4, 1, 3, 6.0, 8, 5, true);
  const auto off = scaling_run({400}, 4, 1, 3, 6.0, 8, 5, false);
  EXPECT_EQ(off[0].edge_visits * 2, on[0].edge_visits);
}

TEST(Bench, GuardsRejectBadArguments) {
  EXPECT_THROW(scaling_run({100, 50}, 2, 1, 3), ContractError);
  EXPECT_THROW(scaling_run({100}, 2, 1, 2), ContractError);
}

TEST(Bench, CsvHeaderAndRows) {
  const auto records = scaling_run({300}, 2, 1, 3, 6.0, 8, 5);
  std::ostringstream out;
  write_bench_csv(out, records);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("nodes,edges,K,L,ms_median,peak_bytes,edge_visits\n", 0), 0u);
  EXPECT_NE(s.find("300,"), std::string::npos);
}
