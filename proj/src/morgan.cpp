#include "coregen/morgan.hpp"

#include <algorithm>
#include <tuple>
#include <vector>

#include "coregen/rng.hpp"

namespace coregen {
namespace {

using BondSet = std::vector<std::uint64_t>;

BondSet make_bondset(std::size_t nbonds) { return BondSet((nbonds + 63) / 64, 0); }

void set_bond(BondSet& s, std::size_t i) { s[i / 64] |= (1ULL << (i % 64)); }

BondSet union_of(const BondSet& a, const BondSet& b) {
  BondSet out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] |= b[i];
  return out;
}

std::uint64_t initial_invariant(const MolecularGraph& g, std::size_t i) {
  const Atom& a = g.atom(i);
  Fnv1a h;
  h.feed(a.element);
  h.feed(static_cast<std::uint64_t>(g.degree(i)));
  h.feed(a.implicit_h);
  h.feed(static_cast<std::uint64_t>(static_cast<std::int64_t>(a.formal_charge)));
  h.feed(static_cast<std::uint64_t>(g.bond_order_sum(i)));
  return h.value();
}

}  // namespace

Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius, std::size_t nbits) {
  if (radius < 0) throw std::invalid_argument("negative radius");
  Fingerprint fp(nbits);
  const std::size_t n = graph.atom_count();
  if (n == 0) return fp;

  std::vector<std::uint64_t> invariants(n);
  for (std::size_t i = 0; i < n; ++i) invariants[i] = initial_invariant(graph, i);
  for (std::uint64_t id : invariants) fp.set(id % nbits);

  // Bond coverage of each atom's current environment; grows by one shell per round.
  std::vector<BondSet> coverage(n, make_bondset(graph.bond_count()));
  std::vector<BondSet> seen;

  for (int round = 1; round <= radius; ++round) {
    std::vector<std::uint64_t> next(invariants);
    std::vector<BondSet> next_coverage(coverage);
    // (environment bond set, identifier, atom) sorted so duplicates within a
    // round resolve to the smallest identifier.
    std::vector<std::tuple<BondSet, std::uint64_t, std::size_t>> candidates;

    for (std::size_t i = 0; i < n; ++i) {
      const auto& nbrs = graph.neighbors(i);
      if (nbrs.empty()) continue;
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      env.reserve(nbrs.size());
      BondSet cover = coverage[i];
      for (const auto& nb : nbrs) {
        env.emplace_back(nb.order, invariants[nb.atom]);
        set_bond(cover, nb.bond);
        cover = union_of(cover, coverage[nb.atom]);
      }
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.feed(static_cast<std::uint64_t>(round));
      h.feed(invariants[i]);
      for (const auto& [order, inv] : env) {
        h.feed(order);
        h.feed(inv);
      }
      next[i] = h.value();
      next_coverage[i] = cover;
      if (cover != coverage[i]) candidates.emplace_back(std::move(cover), next[i], i);
    }

    std::sort(candidates.begin(), candidates.end());
    for (const auto& [cover, id, atom] : candidates) {
      if (std::find(seen.begin(), seen.end(), cover) != seen.end()) continue;
      seen.push_back(cover);
      fp.set(id % nbits);
    }
    invariants = std::move(next);
    coverage = std::move(next_coverage);
  }
  return fp;
}

}  // namespace coregen
