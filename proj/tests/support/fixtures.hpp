#pragma once

// The three-sample running fixture used across the consistency and pruner
// tests: digit sums 8, 2, and 16, with candidate edges from the first
// sample's first instance to the corresponding instances of the other two.

#include <string>
#include <vector>

#include "nsprune/abduction.hpp"
#include "nsprune/core.hpp"
#include "nsprune/proximity.hpp"

namespace nsprune::testing {

inline std::vector<NesySample> example_batch() {
  auto make = [](const std::string& id, long long target, const char* a, const char* b) {
    NesySample s;
    s.id = id;
    s.instance_ids = {a, b};
    s.constraint = {Theory::Sum, target, 2};
    s.preimages = abduce_sum(2, target).preimages;
    return s;
  };
  NesySample s1 = make("ex1", 8, "x1", "x2");
  s1.gold = PreImage{1, 7};
  NesySample s2 = make("ex2", 2, "y1", "y2");
  NesySample s3 = make("ex3", 16, "z1", "z2");
  return {s1, s2, s3};
}

// e1: (ex1, x1) -> (ex2, y1); e2: (ex1, x1) -> (ex3, z1). Distances order
// e1 before e2 in the canonical edge order.
inline CandidateEdgeSet example_edges(bool with_e1 = true, bool with_e2 = true) {
  CandidateEdgeSet set;
  set.k = 2;
  if (with_e1) set.edges.push_back({0, 0, 1, 0, "x1", "y1", 0.1});
  if (with_e2) set.edges.push_back({0, 0, 2, 0, "x1", "z1", 0.2});
  return set;
}

}  // namespace nsprune::testing
