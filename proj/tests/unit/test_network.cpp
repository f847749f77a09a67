#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "routefed/error.hpp"
#include "routefed/network.hpp"
#include "routefed/rng.hpp"

using namespace routefed;

namespace {

RoadGraph linear_abc() {
  RoadGraph g;
  g.add_node({"A", "A", 0});
  g.add_node({"B", "B", 10});
  g.add_node({"C", "C", 20});
  g.add_segment({"AB", "A", "B", 10, "E1", 0});
  g.add_segment({"BC", "B", "C", 10, "E1", 5});
  return g;
}

RoadGraph random_graph(Rng& rng, int n, double edge_p, bool integer_lengths) {
  RoadGraph g;
  for (int i = 0; i < n; ++i) g.add_node({"N" + std::to_string(i), "", 0.0});
  int id = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || !rng.bernoulli(edge_p)) continue;
      const int copies = rng.bernoulli(0.1) ? 2 : 1;
      for (int c = 0; c < copies; ++c) {
        const double len = integer_lengths ? static_cast<double>(1 + rng.below(9))
                                           : rng.uniform(0.5, 9.5);
        g.add_segment({"S" + std::to_string(id++), "N" + std::to_string(a), "N" + std::to_string(b),
                       len, "R", 0});
      }
    }
  }
  return g;
}

}  // namespace

TEST(ShortestRoute, LinearGraph) {
  const auto g = linear_abc();
  const auto r = shortest_route(g, "A", "C");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, "AB");
  EXPECT_EQ(r[1].id, "BC");
  EXPECT_TRUE(shortest_route(g, "A", "A").empty());
}

TEST(ShortestRoute, Errors) {
  const auto g = linear_abc();
  try {
    shortest_route(g, "C", "A");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoRoute);
  }
  try {
    shortest_route(g, "A", "Z");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownNode);
  }
}

TEST(ShortestRoute, TieBreaksBySmallestIcSequenceThenParallelSegment) {
  RoadGraph g;
  for (const char* n : {"A", "B", "C", "D"}) g.add_node({n, n, 0});
  g.add_segment({"AC", "A", "C", 1, "R", 0});
  g.add_segment({"CD", "C", "D", 1, "R", 0});
  g.add_segment({"AB2", "A", "B", 1, "R", 0});
  g.add_segment({"AB1", "A", "B", 1, "R", 0});
  g.add_segment({"BD", "B", "D", 1, "R", 0});
  const auto r = shortest_route(g, "A", "D");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, "AB1");
  EXPECT_EQ(r[1].id, "BD");
}

TEST(ShortestRoute, MatchesExhaustiveEnumerationOnRandomGraphs) {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_graph(rng, 8, 0.3, trial % 2 == 0);
    for (int q = 0; q < 50; ++q) {
      const std::string a = "N" + std::to_string(rng.below(8));
      const std::string b = "N" + std::to_string(rng.below(8));
      const auto best = oracle::best_path(g, a, b);
      if (!best) {
        EXPECT_THROW(shortest_route(g, a, b), Error);
        continue;
      }
      const auto route = shortest_route(g, a, b);
      double total = 0.0;
      for (const auto& s : route) total += s.length_km;
      if (trial % 2 == 0) {
        EXPECT_EQ(total, oracle::path_length(g, *best));
        ASSERT_EQ(route.size(), best->size());
        for (std::size_t i = 0; i < route.size(); ++i) {
          EXPECT_EQ(route[i].id, g.segments()[(*best)[i]].id);
        }
      } else {
        EXPECT_NEAR(total, oracle::path_length(g, *best), 1e-9);
      }
    }
  }
}

TEST(PassageTimes, SingleSegmentDeparture) {
  const std::vector<Segment> route{{"S", "A", "B", 40, "R", 0}};
  const double anchor = 600.0;
  const auto p = passage_times(route, anchor, AnchorKind::kDeparture);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0].enter, 600.0);
  EXPECT_DOUBLE_EQ(p[0].exit, 630.0);
}

TEST(PassageTimes, TwoSegmentsArrival) {
  const std::vector<Segment> route{{"S1", "A", "B", 40, "R", 0}, {"S2", "B", "C", 40, "R", 0}};
  const auto p = passage_times(route, 720.0, AnchorKind::kArrival);
  EXPECT_DOUBLE_EQ(p[0].enter, 660.0);
  EXPECT_DOUBLE_EQ(p[1].exit, 720.0);
}

TEST(PassageTimes, MatchesCumulativeSumAndDurations) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Segment> route;
    std::vector<double> lengths;
    for (int i = 0; i < 6; ++i) {
      const double len = rng.uniform(0.5, 30.0);
      lengths.push_back(len);
      route.push_back({"S" + std::to_string(i), "N" + std::to_string(i), "N" + std::to_string(i + 1),
                       len, "R", 0});
    }
    const double anchor = rng.uniform(0.0, 1e6);
    const bool arrival = trial % 2 == 1;
    const auto p = passage_times(route, anchor, arrival ? AnchorKind::kArrival : AnchorKind::kDeparture);
    const auto ref = oracle::naive_enter_times(lengths, anchor, arrival, kDefaultSpeedKmh);
    for (std::size_t i = 0; i < route.size(); ++i) {
      EXPECT_NEAR(p[i].enter, ref[i], 1e-6);
      EXPECT_NEAR(p[i].exit - p[i].enter, lengths[i] / kDefaultSpeedKmh * 60.0, 1e-6);
    }
  }
}

TEST(PassageTimes, RejectsDiscontiguousRoute) {
  const std::vector<Segment> route{{"S1", "A", "B", 4, "R", 0}, {"S2", "C", "D", 4, "R", 0}};
  try {
    passage_times(route, 0.0, AnchorKind::kDeparture);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDiscontiguousRoute);
  }
}

TEST(DegreeSum, TrivialCasesAndDenseMatrix) {
  auto g = linear_abc();
  g.add_node({"X", "X", 0});
  EXPECT_EQ(degree_sum(g, "X"), 0u);
  EXPECT_EQ(degree_sum(g, "B"), 2u);
  EXPECT_THROW(degree_sum(g, "Q"), Error);

  Rng rng(3);
  const auto r = random_graph(rng, 9, 0.35, true);
  const std::size_t n = r.nodes().size();
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  for (const auto& s : r.segments()) {
    m[*r.node_index(s.from_ic)][*r.node_index(s.to_ic)] += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t expect = 0;
    for (std::size_t j = 0; j < n; ++j) expect += static_cast<std::size_t>(m[i][j] + m[j][i]);
    EXPECT_EQ(degree_sum(r, r.nodes()[i].id), expect);
  }
}

TEST(Graph, ValidatesInsertions) {
  RoadGraph g;
  g.add_node({"A", "", 0});
  EXPECT_THROW(g.add_node({"A", "", 0}), Error);
  EXPECT_THROW(g.add_segment({"S", "A", "Z", 1, "R", 0}), Error);
  g.add_node({"B", "", 0});
  EXPECT_THROW(g.add_segment({"S", "A", "B", 0.0, "R", 0}), Error);
  EXPECT_THROW(g.add_segment({"S", "A", "B", -1.0, "R", 0}), Error);
  g.add_segment({"S", "A", "B", 1.0, "R", 0});
  EXPECT_THROW(g.add_segment({"S", "B", "A", 1.0, "R", 0}), Error);
}

TEST(Graph, CsvRoundTrip) {
  Rng rng(4);
  const auto g = random_graph(rng, 6, 0.5, false);
  std::stringstream ic, net;
  write_ic_csv(ic, g);
  write_network_csv(net, g);
  const auto back = read_graph(ic, net);
  ASSERT_EQ(back.segment_count(), g.segment_count());
  for (std::size_t i = 0; i < g.segment_count(); ++i) {
    EXPECT_EQ(back.segments()[i].id, g.segments()[i].id);
    EXPECT_EQ(back.segments()[i].length_km, g.segments()[i].length_km);
  }
}
