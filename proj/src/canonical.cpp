#include "coregen/canonical.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <tuple>

#include "coregen/rng.hpp"

namespace coregen {
namespace {

using Colors = std::vector<int>;

Colors densify(const std::vector<std::vector<int>>& keys) {
  std::vector<int> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  Colors colors(keys.size(), 0);
  int color = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && keys[order[i]] != keys[order[i - 1]]) ++color;
    colors[order[i]] = color;
  }
  return colors;
}

int color_count(const Colors& colors) {
  return colors.empty() ? 0 : *std::max_element(colors.begin(), colors.end()) + 1;
}

Colors initial_colors(const MolecularGraph& g) {
  std::vector<std::vector<int>> keys(g.atom_count());
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    std::vector<int> orders;
    for (const auto& nb : g.neighbors(i)) orders.push_back(nb.order);
    std::sort(orders.begin(), orders.end());
    keys[i] = {a.element, a.formal_charge, a.implicit_h, g.degree(i)};
    keys[i].insert(keys[i].end(), orders.begin(), orders.end());
  }
  return densify(keys);
}

Colors refine(const MolecularGraph& g, Colors colors) {
  int n_colors = color_count(colors);
  for (;;) {
    std::vector<std::vector<int>> keys(g.atom_count());
    for (std::size_t i = 0; i < g.atom_count(); ++i) {
      std::vector<std::pair<int, int>> nbr;
      for (const auto& nb : g.neighbors(i)) nbr.emplace_back(nb.order, colors[nb.atom]);
      std::sort(nbr.begin(), nbr.end());
      keys[i].push_back(colors[i]);
      for (const auto& [order, c] : nbr) {
        keys[i].push_back(order);
        keys[i].push_back(c);
      }
    }
    Colors next = densify(keys);
    const int next_count = color_count(next);
    if (next_count == n_colors) return next;
    colors = std::move(next);
    n_colors = next_count;
  }
}

// Canonical form under a discrete coloring: atom records in rank order
// followed by the sorted rank-relabeled bond list.
std::string serialize(const MolecularGraph& g, const Colors& ranks) {
  std::string out;
  out.reserve(g.atom_count() * 3 + g.bond_count() * 3 + 2);
  out.push_back(static_cast<char>(g.atom_count() & 0xff));
  out.push_back(static_cast<char>((g.atom_count() >> 8) & 0xff));
  std::vector<int> inverse(g.atom_count());
  for (std::size_t i = 0; i < g.atom_count(); ++i) inverse[ranks[i]] = static_cast<int>(i);
  for (std::size_t r = 0; r < g.atom_count(); ++r) {
    const Atom& a = g.atom(inverse[r]);
    out.push_back(static_cast<char>(a.element));
    out.push_back(static_cast<char>(a.formal_charge + 64));
    out.push_back(static_cast<char>(a.implicit_h));
  }
  std::vector<std::tuple<int, int, int>> edges;
  edges.reserve(g.bond_count());
  for (const Bond& b : g.bonds()) {
    auto [lo, hi] = std::minmax(ranks[b.a], ranks[b.b]);
    edges.emplace_back(lo, hi, b.order);
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [lo, hi, order] : edges) {
    out.push_back(static_cast<char>(lo & 0xff));
    out.push_back(static_cast<char>((lo >> 8) & 0xff));
    out.push_back(static_cast<char>(hi & 0xff));
    out.push_back(static_cast<char>((hi >> 8) & 0xff));
    out.push_back(static_cast<char>(order));
  }
  return out;
}

struct Best {
  std::string form;
  Colors ranks;
  bool valid = false;
};

void search(const MolecularGraph& g, const Colors& colors, Best& best) {
  const int n = static_cast<int>(g.atom_count());
  if (color_count(colors) == n) {
    std::string form = serialize(g, colors);
    if (!best.valid || form < best.form) {
      best.form = std::move(form);
      best.ranks = colors;
      best.valid = true;
    }
    return;
  }
  // First color class with more than one member; individualize each member.
  std::vector<int> members;
  for (int c = 0; members.size() < 2; ++c) {
    members.clear();
    for (int v = 0; v < n; ++v) {
      if (colors[v] == c) members.push_back(v);
    }
  }
  for (int v : members) {
    Colors child = colors;
    child[v] = -1;  // sorts first within its class during densify
    std::vector<std::vector<int>> keys(child.size());
    for (std::size_t i = 0; i < child.size(); ++i) keys[i] = {child[i]};
    search(g, refine(g, densify(keys)), best);
  }
}

}  // namespace

std::vector<int> canonical_ranks(const MolecularGraph& graph) {
  if (graph.atom_count() == 0) return {};
  Best best;
  search(graph, refine(graph, initial_colors(graph)), best);
  return best.ranks;
}

std::string canonical_hash(const MolecularGraph& graph) {
  std::string form;
  if (graph.atom_count() == 0) {
    form = "empty";
  } else {
    Best best;
    search(graph, refine(graph, initial_colors(graph)), best);
    form = best.form;
  }
  Fnv1a lo;
  lo.feed_bytes(form.data(), form.size());
  Fnv1a hi;
  hi.feed(0x5eedULL);
  hi.feed_bytes(form.data(), form.size());
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(hi.value()),
                static_cast<unsigned long long>(lo.value()));
  return std::string(buf, 32);
}

}  // namespace coregen
