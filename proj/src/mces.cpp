#include "coregen/mces.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <tuple>
#include <vector>

namespace coregen {
namespace {

using EdgeLabel = std::tuple<int, int, int>;  // order, min element, max element

EdgeLabel label_of(const MolecularGraph& g, const Bond& b) {
  auto [lo, hi] = std::minmax(g.atom(b.a).element, g.atom(b.b).element);
  return {b.order, lo, hi};
}

// Largest label-compatible pairing, ignoring connectivity: an upper bound on
// the common edge subgraph size.
int label_bound(const std::map<EdgeLabel, int>& a, const std::map<EdgeLabel, int>& b) {
  int bound = 0;
  for (const auto& [label, count] : a) {
    auto it = b.find(label);
    if (it != b.end()) bound += std::min(count, it->second);
  }
  return bound;
}

struct Searcher {
  const MolecularGraph& g1;
  const MolecularGraph& g2;
  std::vector<EdgeLabel> labels1, labels2;
  std::vector<char> used2;
  std::vector<int> map12, map21;  // vertex correspondence, -1 when unset
  std::vector<std::map<EdgeLabel, int>> suffix_labels1;  // labels of edges i..end
  std::chrono::steady_clock::time_point deadline;
  bool timed_out = false;
  long long ticks = 0;
  int best = 0;

  bool expired() {
    if (timed_out) return true;
    if ((++ticks & 0x3ff) == 0 && std::chrono::steady_clock::now() > deadline) timed_out = true;
    return timed_out;
  }

  // Try to bind vertex v1 -> v2; returns false on conflict.
  bool bind(int v1, int v2, std::vector<std::pair<int, int>>& undo) {
    if (map12[v1] == v2 && map21[v2] == v1) return true;
    if (map12[v1] != -1 || map21[v2] != -1) return false;
    if (g1.atom(v1).element != g2.atom(v2).element) return false;
    map12[v1] = v2;
    map21[v2] = v1;
    undo.emplace_back(v1, v2);
    return true;
  }

  void unbind(const std::vector<std::pair<int, int>>& undo) {
    for (const auto& [v1, v2] : undo) {
      map12[v1] = -1;
      map21[v2] = -1;
    }
  }

  void run(std::size_t edge, int matched) {
    best = std::max(best, matched);
    if (edge >= g1.bonds().size() || expired()) return;
    std::map<EdgeLabel, int> unused2;
    for (std::size_t j = 0; j < g2.bonds().size(); ++j) {
      if (!used2[j]) unused2[labels2[j]] += 1;
    }
    if (matched + label_bound(suffix_labels1[edge], unused2) <= best) return;

    const Bond& e1 = g1.bonds()[edge];
    for (std::size_t j = 0; j < g2.bonds().size(); ++j) {
      if (used2[j] || labels1[edge] != labels2[j]) continue;
      const Bond& e2 = g2.bonds()[j];
      for (int flip = 0; flip < 2; ++flip) {
        const int a2 = flip ? e2.b : e2.a;
        const int b2 = flip ? e2.a : e2.b;
        std::vector<std::pair<int, int>> undo;
        if (bind(e1.a, a2, undo) && bind(e1.b, b2, undo)) {
          used2[j] = 1;
          run(edge + 1, matched + 1);
          used2[j] = 0;
        }
        unbind(undo);
        if (timed_out) return;
      }
    }
    run(edge + 1, matched);  // skip this edge
  }
};

}  // namespace

McesResult mces_distance(const MolecularGraph& g1, const MolecularGraph& g2,
                         std::optional<int> threshold, const McesLimits& limits) {
  const int e1 = static_cast<int>(g1.bond_count());
  const int e2 = static_cast<int>(g2.bond_count());

  std::map<EdgeLabel, int> all1, all2;
  for (const Bond& b : g1.bonds()) all1[label_of(g1, b)] += 1;
  for (const Bond& b : g2.bonds()) all2[label_of(g2, b)] += 1;
  const int distance_lower_bound = e1 + e2 - 2 * label_bound(all1, all2);

  if (threshold && distance_lower_bound > *threshold) return {distance_lower_bound, false};
  if (g1.bond_count() > limits.max_edges || g2.bond_count() > limits.max_edges)
    return {distance_lower_bound, false};

  Searcher s{g1, g2, {}, {}, {}, {}, {}, {}};
  for (const Bond& b : g1.bonds()) s.labels1.push_back(label_of(g1, b));
  for (const Bond& b : g2.bonds()) s.labels2.push_back(label_of(g2, b));
  s.used2.assign(g2.bond_count(), 0);
  s.map12.assign(g1.atom_count(), -1);
  s.map21.assign(g2.atom_count(), -1);
  s.suffix_labels1.resize(g1.bond_count() + 1);
  for (std::size_t i = g1.bond_count(); i-- > 0;) {
    s.suffix_labels1[i] = s.suffix_labels1[i + 1];
    s.suffix_labels1[i][s.labels1[i]] += 1;
  }
  s.deadline = std::chrono::steady_clock::now() +
               std::chrono::microseconds(static_cast<long long>(limits.time_budget_s * 1e6));
  s.run(0, 0);

  return {e1 + e2 - 2 * s.best, !s.timed_out};
}

}  // namespace coregen
