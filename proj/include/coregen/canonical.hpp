#pragma once

#include <string>
#include <vector>

#include "coregen/molgraph.hpp"

namespace coregen {

// Canonical atom ranks: a permutation of 0..n-1 such that rank assignment is
// determined by iterative color refinement with exhaustive branching on ties,
// taking the lexicographically minimal canonical form. ranks[i] is the
// canonical position of atom i.
std::vector<int> canonical_ranks(const MolecularGraph& graph);

// Identity digest: equal exactly for isomorphic graphs (matching element,
// charge and implicit-H labels and bond orders). 32 hex characters.
// The empty graph maps to a fixed sentinel digest.
std::string canonical_hash(const MolecularGraph& graph);

}  // namespace coregen
