#pragma once

#include "coregen/molgraph.hpp"

namespace coregen {

// ECFP-style circular fingerprint. Initial atom invariant hashes
// (element, degree, implicit hydrogens, formal charge, total bond order);
// each iteration rehashes an atom's invariant with its sorted
// (bond order, neighbor invariant) list. Environments covering a bond set
// already emitted by an earlier round (or a smaller identifier in the same
// round) are dropped, and surviving identifiers fold into nbits by modulo.
Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius = 2,
                               std::size_t nbits = kFingerprintBits);

}  // namespace coregen
