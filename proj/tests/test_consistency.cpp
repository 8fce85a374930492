#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nsprune/consistency.hpp"
#include "nsprune/pruner.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace nsprune;

TEST_CASE("value domains project the pre-image sets") {
  auto batch = nsprune::testing::example_batch();
  CHECK(value_domain(batch[1], 0) == std::set<int>{0, 1, 2});
  CHECK(value_domain(batch[0], 0) == std::set<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(value_domain(batch[2], 0) == std::set<int>{7, 8, 9});

  NesySample single;
  single.id = "one";
  single.instance_ids = {"a", "b"};
  single.constraint = {Theory::Sum, 3, 2};
  single.preimages = {{1, 2}};
  CHECK(value_domain(single, 0) == std::set<int>{1});
  CHECK(value_domain(single, 1) == std::set<int>{2});
}

TEST_CASE("edge consistency follows the running example") {
  auto batch = nsprune::testing::example_batch();
  auto edges = nsprune::testing::example_edges();
  const CandidateEdge& e1 = edges.edges[0];

  // Pre-image index i of sample 0 maps x1 to i (sorted sum-8 enumeration).
  CHECK_FALSE(is_consistent(batch, {0, 8}, e1));  // x1 -> 8
  CHECK(is_consistent(batch, {0, 0}, e1));        // x1 -> 0
  CHECK(is_consistent(batch, {0, 2}, e1));
  CHECK_FALSE(is_consistent(batch, {0, 3}, e1));

  // Reverse edge: every pre-image of the second sample is consistent.
  CandidateEdge reverse{1, 0, 0, 0, "y1", "x1", 0.1};
  for (int i = 0; i < 3; ++i) CHECK(is_consistent(batch, {1, i}, reverse));
}

TEST_CASE("edge source must belong to the pre-image's sample") {
  auto batch = nsprune::testing::example_batch();
  auto edges = nsprune::testing::example_edges();
  CHECK_THROWS_AS(is_consistent(batch, {1, 0}, edges.edges[0]), InvariantError);
}

TEST_CASE("incidence on the running fixture") {
  auto batch = nsprune::testing::example_batch();
  auto edges = nsprune::testing::example_edges();
  IncidenceMap inc = incidence(batch, edges);

  REQUIRE(inc.edge_inconsistent.size() == 2);
  CHECK(inc.edge_inconsistent[0].size() == 6);  // x1 in 3..8
  CHECK(inc.edge_inconsistent[1].size() == 7);  // x1 in 0..6
  for (const auto& pid : inc.edge_inconsistent[0]) {
    CHECK(pid.sample == 0);
    CHECK(pid.index >= 3);
  }
  for (const auto& pid : inc.edge_inconsistent[1]) {
    CHECK(pid.sample == 0);
    CHECK(pid.index <= 6);
  }

  // Samples 2 and 3 source no edges, so all their pre-images are globally
  // consistent; none of sample 1's are.
  REQUIRE(inc.globally_consistent.size() == 6);
  for (const auto& pid : inc.globally_consistent) CHECK(pid.sample != 0);
  CHECK(inc.total_preimages == 15);
  CHECK(inc.omegas == std::vector<int>{9, 3, 3});
}

TEST_CASE("incidence maps are exact transposes") {
  auto batch = nsprune::testing::example_batch();
  auto edges = nsprune::testing::example_edges();
  IncidenceMap inc = incidence(batch, edges);
  int pairs_from_edges = 0;
  for (int e = 0; e < static_cast<int>(inc.edge_inconsistent.size()); ++e)
    for (const auto& pid : inc.edge_inconsistent[e]) {
      const auto& lst = inc.preimage_edges[pid.sample][pid.index];
      CHECK(std::find(lst.begin(), lst.end(), e) != lst.end());
      ++pairs_from_edges;
    }
  int pairs_from_preimages = 0;
  for (const auto& per_sample : inc.preimage_edges)
    for (const auto& lst : per_sample) pairs_from_preimages += static_cast<int>(lst.size());
  CHECK(pairs_from_edges == pairs_from_preimages);
}

TEST_CASE("an empty edge set leaves every pre-image globally consistent") {
  auto batch = nsprune::testing::example_batch();
  IncidenceMap inc = incidence(batch, CandidateEdgeSet{});
  CHECK(inc.globally_consistent.size() == 15);
  for (const auto& per_sample : inc.preimage_edges)
    for (const auto& lst : per_sample) CHECK(lst.empty());
}

TEST_CASE("incidence agrees with quantifier expansion on random batches") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    OracleInstance inst = random_oracle_instance({}, seed);
    IncidenceMap inc = incidence(inst.batch, inst.edges);
    for (int e = 0; e < static_cast<int>(inst.edges.edges.size()); ++e) {
      const CandidateEdge& edge = inst.edges.edges[e];
      const int src = edge.src_sample;
      for (int i = 0; i < static_cast<int>(inst.batch[src].preimages.size()); ++i) {
        const bool direct = is_consistent(inst.batch, {src, i}, edge);
        const bool oracle = nsprune::testing::quantifier_consistent(inst.batch, {src, i}, edge);
        CHECK(direct == oracle);
        const auto& lst = inc.preimage_edges[src][i];
        const bool listed = std::find(lst.begin(), lst.end(), e) != lst.end();
        CHECK(listed == !oracle);
      }
    }
  }
}

TEST_CASE("adding an edge never shrinks an inconsistent-edge set") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    OracleInstance inst = random_oracle_instance({}, seed);
    if (inst.edges.edges.size() < 2) continue;
    CandidateEdgeSet fewer = inst.edges;
    fewer.edges.pop_back();
    IncidenceMap small = incidence(inst.batch, fewer);
    IncidenceMap full = incidence(inst.batch, inst.edges);
    for (std::size_t s = 0; s < small.preimage_edges.size(); ++s)
      for (std::size_t i = 0; i < small.preimage_edges[s].size(); ++i)
        CHECK(small.preimage_edges[s][i].size() <= full.preimage_edges[s][i].size());
  }
}
