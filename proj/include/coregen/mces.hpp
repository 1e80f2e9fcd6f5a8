#pragma once

#include <optional>

#include "coregen/molgraph.hpp"

namespace coregen {

struct McesLimits {
  std::size_t max_edges = 30;    // per graph; beyond this only the bound is reported
  double time_budget_s = 2.0;    // per pair
};

struct McesResult {
  int value = 0;     // |E1| + |E2| - 2*|common edge subgraph|
  bool exact = true; // false when a threshold/size/time exit fired
};

// Maximum-common-edge-subgraph distance under exact branch-and-bound.
// Edges match when bond orders and endpoint element multisets agree, with a
// consistent element-preserving vertex correspondence. The search prunes with
// an edge-label multiset bound. With a threshold, returns the label-bound
// lower bound early (inexact) once it exceeds the threshold; past the size
// limit the lower bound is reported, and on timeout the best mapping found so
// far is.
McesResult mces_distance(const MolecularGraph& g1, const MolecularGraph& g2,
                         std::optional<int> threshold = std::nullopt,
                         const McesLimits& limits = {});

}  // namespace coregen
