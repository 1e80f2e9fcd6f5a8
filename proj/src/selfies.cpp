#include "coregen/selfies.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "coregen/canonical.hpp"
#include "coregen/rng.hpp"

namespace coregen {
namespace {

struct ParsedToken {
  TokenFactor factor;
  int charge = 0;
};

int hex_char_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

ParsedToken parse_inner(std::string_view text, const ValenceTable& table) {
  if (text.size() < 3 || text.front() != '[' || text.back() != ']')
    throw std::invalid_argument("malformed token: " + std::string(text));
  std::string_view inner = text.substr(1, text.size() - 2);

  ParsedToken out;
  if (inner == "BOS" || inner == "EOS" || inner == "PAD") {
    out.factor.part = TokenPart::Special;
    return out;
  }
  if (inner.size() == 1) {
    const int hv = hex_char_value(inner[0]);
    // [C] and [F] read as atoms; their hex role is contextual.
    if (hv >= 0 && inner[0] != 'C' && inner[0] != 'F') {
      out.factor.part = TokenPart::HexDigit;
      out.factor.hex_digit = hv;
      return out;
    }
  }

  std::size_t i = 0;
  BondPrefix bond = BondPrefix::None;
  if (inner[i] == '=') {
    bond = BondPrefix::Double;
    ++i;
  } else if (inner[i] == '#') {
    bond = BondPrefix::Triple;
    ++i;
  }

  auto control = [&](std::string_view name, TokenPart part) -> bool {
    if (inner.substr(i).size() != name.size() + 1 || inner.substr(i, name.size()) != name)
      return false;
    const char qc = inner[i + name.size()];
    if (qc < '1' || qc > '3')
      throw std::invalid_argument("ring/branch order outside 1..3: " + std::string(text));
    out.factor.part = part;
    out.factor.rb_order = qc - '0';
    // A bond prefix is a factor only on ring tokens; on branch symbols it is
    // part of the name.
    if (part == TokenPart::Ring) out.factor.bond = bond;
    return true;
  };
  if (control("Ring", TokenPart::Ring) || control("Branch", TokenPart::Branch)) return out;

  // Atom token: [prefix][isotope][element][chirality][Hcount][charge]
  while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i]))) ++i;  // isotope
  if (i >= inner.size() || !std::isupper(static_cast<unsigned char>(inner[i])))
    throw std::invalid_argument("malformed token: " + std::string(text));
  std::string element(1, inner[i++]);
  if (i < inner.size() && std::islower(static_cast<unsigned char>(inner[i]))) element += inner[i++];
  const auto elem_id = table.id_of(element);
  if (!elem_id || element == "H")
    throw std::invalid_argument("unknown element '" + element + "' in " + std::string(text));
  while (i < inner.size() && inner[i] == '@') ++i;  // chirality
  if (i < inner.size() && inner[i] == 'H') {
    ++i;
    while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i]))) ++i;
  }
  if (i < inner.size() && (inner[i] == '+' || inner[i] == '-')) {
    const int sign = inner[i] == '+' ? 1 : -1;
    ++i;
    int magnitude = 1;
    if (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i]))) {
      magnitude = 0;
      while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i])))
        magnitude = magnitude * 10 + (inner[i++] - '0');
    }
    out.charge = sign * magnitude;
  }
  if (i != inner.size()) throw std::invalid_argument("malformed token: " + std::string(text));

  out.factor.part = TokenPart::Atom;
  out.factor.element = *elem_id;
  out.factor.bond = bond;
  return out;
}

std::string bond_prefix_text(BondPrefix b) {
  switch (b) {
    case BondPrefix::Double: return "=";
    case BondPrefix::Triple: return "#";
    default: return "";
  }
}

int bond_prefix_order(BondPrefix b) {
  return b == BondPrefix::None ? 1 : static_cast<int>(b);
}

}  // namespace

TokenFactor parse_token(std::string_view text, const ValenceTable& table) {
  return parse_inner(text, table).factor;
}

std::string canonicalize_token(std::string_view text, const ValenceTable& table) {
  const ParsedToken parsed = parse_inner(text, table);
  if (parsed.factor.part != TokenPart::Atom) return std::string(text);
  return "[" + bond_prefix_text(parsed.factor.bond) +
         table.symbol(*parsed.factor.element) + "]";
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> texts_and_counts) {
  const ValenceTable& table = ValenceTable::standard();
  std::map<std::string, std::uint64_t> counts_by_form;
  for (auto& [text, count] : texts_and_counts) {
    const ParsedToken parsed = parse_inner(text, table);
    Entry entry;
    entry.text = text;
    entry.factor = parsed.factor;
    entry.charge = parsed.charge;
    if (parsed.factor.part == TokenPart::HexDigit) {
      entry.hex_value = parsed.factor.hex_digit;
    } else if (text == "[C]") {
      entry.hex_value = 12;
    } else if (text == "[F]") {
      entry.hex_value = 15;
    }
    entry.canonical = canonicalize_token(text, table);
    counts_by_form[entry.canonical] += count;
    if (!index_.emplace(entry.text, static_cast<int>(tokens_.size())).second)
      throw std::invalid_argument("duplicate vocabulary token " + text);
    tokens_.push_back(std::move(entry));
  }
  for (auto& entry : tokens_) {
    auto it = counts_by_form.find(entry.canonical);
    auto pos = std::find(canonical_forms_.begin(), canonical_forms_.end(), entry.canonical);
    if (pos == canonical_forms_.end()) {
      entry.canonical_index = static_cast<int>(canonical_forms_.size());
      canonical_forms_.push_back(entry.canonical);
      counts_.push_back(it->second);
    } else {
      entry.canonical_index = static_cast<int>(pos - canonical_forms_.begin());
    }
  }
  auto locate = [this](std::string_view text) {
    auto it = index_.find(text);
    if (it == index_.end())
      throw std::invalid_argument("vocabulary missing special token " + std::string(text));
    return it->second;
  };
  bos_ = locate("[BOS]");
  eos_ = locate("[EOS]");
  pad_ = locate("[PAD]");
}

Vocabulary Vocabulary::default_vocabulary() {
  static const char* kTokens[] = {
      "[BOS]", "[EOS]", "[PAD]",
      "[C]", "[=C]", "[#C]", "[N]", "[=N]", "[#N]", "[O]", "[=O]",
      "[S]", "[=S]", "[P]", "[F]", "[Cl]", "[Br]", "[I]",
      "[NH1]", "[N+1]", "[O-1]",
      "[Ring1]", "[=Ring1]", "[Ring2]",
      "[Branch1]", "[=Branch1]", "[#Branch1]", "[Branch2]",
      "[0]", "[1]", "[2]", "[3]", "[4]", "[5]", "[6]", "[7]",
      "[8]", "[9]", "[A]", "[B]", "[D]", "[E]",
  };
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (const char* t : kTokens) entries.emplace_back(t, 0);
  return Vocabulary(std::move(entries));
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      entries.emplace_back(line, 0);
    } else {
      entries.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
    }
  }
  return Vocabulary(std::move(entries));
}

Vocabulary Vocabulary::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file " + path);
  return load(in);
}

void Vocabulary::save(std::ostream& out) const {
  // Counts live on canonical forms; alias tokens write 0 so reloading does
  // not double-count.
  for (const auto& entry : tokens_) {
    const std::uint64_t count =
        entry.text == entry.canonical ? counts_.at(entry.canonical_index) : 0;
    out << entry.text << '\t' << count << '\n';
  }
}

void Vocabulary::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file " + path);
  save(out);
}

std::optional<int> Vocabulary::id_of(std::string_view text) const {
  auto it = index_.find(text);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::count_of_form(std::string_view canonical) const {
  auto pos = std::find(canonical_forms_.begin(), canonical_forms_.end(), canonical);
  if (pos == canonical_forms_.end()) return 0;
  return counts_[static_cast<std::size_t>(pos - canonical_forms_.begin())];
}

Vocabulary Vocabulary::with_counts(const std::map<std::string, std::uint64_t>& counts) const {
  Vocabulary copy(*this);
  std::fill(copy.counts_.begin(), copy.counts_.end(), 0);
  for (const auto& [form, count] : counts) {
    auto pos = std::find(copy.canonical_forms_.begin(), copy.canonical_forms_.end(), form);
    if (pos == copy.canonical_forms_.end()) continue;
    copy.counts_[static_cast<std::size_t>(pos - copy.canonical_forms_.begin())] = count;
  }
  return copy;
}

std::uint64_t Vocabulary::vocab_hash() const {
  Fnv1a h;
  for (const auto& entry : tokens_) {
    h.feed_bytes(entry.text.data(), entry.text.size());
    h.feed_bytes("\n", 1);
  }
  return h.value();
}

std::map<std::string, std::uint64_t> corpus_counts(
    std::span<const std::vector<int>> sequences, const Vocabulary& vocab) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& seq : sequences) {
    for (int id : seq) counts[vocab.canonical_text(id)] += 1;
  }
  return counts;
}

namespace {

// Shared by encode/decode: effective bonding capacity of an element with a
// formal charge. Implicit hydrogens fill whatever bonds leave unused.
int capacity_of(std::uint8_t element, int charge, const ValenceTable& table) {
  return std::max(0, table.max_valence(element) - std::abs(charge));
}

struct EncodeContext {
  const MolecularGraph& graph;
  const Vocabulary& vocab;
  const ValenceTable& table;
  std::vector<int> ranks;
  std::vector<std::vector<int>> tree;            // children by parent, DFS-ordered later
  std::vector<std::pair<int, int>> closures;     // (later endpoint, earlier endpoint) pairs by bond
  std::vector<std::uint8_t> closure_order;
  std::vector<int> placement;                    // atom -> placement position
};

int require_token(const Vocabulary& vocab, const std::string& text) {
  const auto id = vocab.id_of(text);
  if (!id)
    throw std::invalid_argument("graph not expressible: vocabulary lacks " + text);
  return *id;
}

std::string atom_token_text(const EncodeContext& ctx, int atom, int entry_order) {
  const Atom& a = ctx.graph.atom(atom);
  const std::string symbol = ctx.table.symbol(a.element);
  std::string prefix;
  if (entry_order == 2) prefix = "=";
  if (entry_order == 3) prefix = "#";
  if (a.formal_charge != 0) {
    if (entry_order > 1)
      throw std::invalid_argument("graph not expressible: charged atom on multiple bond");
    std::string text = "[" + symbol + (a.formal_charge > 0 ? "+" : "-") +
                       std::to_string(std::abs(a.formal_charge)) + "]";
    return text;
  }
  return "[" + prefix + symbol + "]";
}

void emit_hex_digits(std::vector<int>& out, const Vocabulary& vocab, int value, int digits) {
  static const char* kDigits[16] = {"[0]", "[1]", "[2]", "[3]", "[4]", "[5]", "[6]", "[7]",
                                    "[8]", "[9]", "[A]", "[B]", "[C]", "[D]", "[E]", "[F]"};
  for (int d = digits - 1; d >= 0; --d) {
    out.push_back(require_token(vocab, kDigits[(value >> (4 * d)) & 0xf]));
  }
}

// Renders the subtree rooted at atom (entered through entry_order) and any
// ring closures whose later endpoint lies inside it.
void render(EncodeContext& ctx, int atom, int entry_order, std::vector<int>& out) {
  out.push_back(require_token(ctx.vocab, atom_token_text(ctx, atom, entry_order)));
  for (std::size_t c = 0; c < ctx.closures.size(); ++c) {
    if (ctx.closures[c].first != atom) continue;
    const int partner = ctx.closures[c].second;
    const int span = ctx.placement[atom] - ctx.placement[partner];
    const int order = ctx.closure_order[c];
    std::string ring_text;
    int digits = 0;
    if (order == 1 && span <= 0xf) {
      ring_text = "[Ring1]";
      digits = 1;
    } else if (order == 1 && span <= 0xff) {
      ring_text = "[Ring2]";
      digits = 2;
    } else if (order == 2 && span <= 0xf) {
      ring_text = "[=Ring1]";
      digits = 1;
    } else {
      throw std::invalid_argument("graph not expressible: ring closure order/span unsupported");
    }
    out.push_back(require_token(ctx.vocab, ring_text));
    emit_hex_digits(out, ctx.vocab, span, digits);
  }
  const auto& children = ctx.tree[atom];
  for (std::size_t k = 0; k < children.size(); ++k) {
    const int child = children[k];
    int order = 0;
    for (const auto& nb : ctx.graph.neighbors(atom)) {
      if (nb.atom == static_cast<std::uint16_t>(child)) order = nb.order;
    }
    if (k + 1 == children.size()) {
      render(ctx, child, order, out);  // main chain continues on the last child
    } else {
      std::vector<int> body;
      render(ctx, child, order, body);
      const int span = static_cast<int>(body.size()) - 1;
      if (span <= 0xf) {
        out.push_back(require_token(ctx.vocab, "[Branch1]"));
        emit_hex_digits(out, ctx.vocab, span, 1);
      } else if (span <= 0xff) {
        out.push_back(require_token(ctx.vocab, "[Branch2]"));
        emit_hex_digits(out, ctx.vocab, span, 2);
      } else {
        throw std::invalid_argument("graph not expressible: branch too long");
      }
      out.insert(out.end(), body.begin(), body.end());
    }
  }
}

}  // namespace

std::vector<int> encode(const MolecularGraph& graph, const Vocabulary& vocab, int root) {
  const ValenceTable& table = ValenceTable::standard();
  if (graph.atom_count() == 0) throw std::invalid_argument("cannot encode empty graph");
  if (!graph.connected()) throw std::invalid_argument("cannot encode disconnected graph");
  for (std::size_t i = 0; i < graph.atom_count(); ++i) {
    const Atom& a = graph.atom(i);
    const int cap = capacity_of(a.element, a.formal_charge, table);
    if (graph.bond_order_sum(i) + a.implicit_h != cap) {
      throw std::invalid_argument(
          "graph not expressible: implicit hydrogens must fill remaining capacity (atom " +
          std::to_string(i) + ")");
    }
  }

  EncodeContext ctx{graph, vocab, table, canonical_ranks(graph), {}, {}, {}, {}};
  if (root < 0) {
    for (std::size_t i = 0; i < graph.atom_count(); ++i) {
      if (ctx.ranks[i] == 0) root = static_cast<int>(i);
    }
  }

  // Maximum-bond-order spanning tree from the root, so double/triple bonds
  // stay on the emitted chain and closures are almost always single bonds.
  const std::size_t n = graph.atom_count();
  std::vector<char> in_tree(n, 0);
  std::vector<int> parent(n, -1);
  in_tree[root] = 1;
  ctx.tree.resize(n);
  for (std::size_t added = 1; added < n; ++added) {
    int best_from = -1, best_to = -1, best_order = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v]) continue;
      for (const auto& nb : graph.neighbors(v)) {
        if (in_tree[nb.atom]) continue;
        const bool better =
            nb.order > best_order ||
            (nb.order == best_order &&
             (best_to < 0 || ctx.ranks[nb.atom] < ctx.ranks[best_to] ||
              (ctx.ranks[nb.atom] == ctx.ranks[best_to] && ctx.ranks[v] < ctx.ranks[best_from])));
        if (better) {
          best_from = static_cast<int>(v);
          best_to = nb.atom;
          best_order = nb.order;
        }
      }
    }
    in_tree[best_to] = 1;
    parent[best_to] = best_from;
    ctx.tree[best_from].push_back(best_to);
  }

  // Subtree sizes drive branch ordering: smallest subtree first, main chain
  // continues on the largest.
  std::vector<int> subtree(n, 1);
  std::function<void(int)> sizes = [&](int v) {
    for (int c : ctx.tree[v]) {
      sizes(c);
      subtree[v] += subtree[c];
    }
  };
  sizes(root);
  for (auto& children : ctx.tree) {
    std::sort(children.begin(), children.end(), [&](int a, int b) {
      if (subtree[a] != subtree[b]) return subtree[a] < subtree[b];
      return ctx.ranks[a] < ctx.ranks[b];
    });
  }

  // DFS preorder gives placement positions; closures attach to the later
  // endpoint.
  std::vector<int> preorder;
  std::function<void(int)> order_walk = [&](int v) {
    preorder.push_back(v);
    for (int c : ctx.tree[v]) order_walk(c);
  };
  order_walk(root);
  ctx.placement.assign(n, -1);
  for (std::size_t p = 0; p < preorder.size(); ++p) ctx.placement[preorder[p]] = static_cast<int>(p);

  for (const Bond& b : graph.bonds()) {
    if (parent[b.a] == b.b || parent[b.b] == b.a) continue;
    const bool a_later = ctx.placement[b.a] > ctx.placement[b.b];
    ctx.closures.emplace_back(a_later ? b.a : b.b, a_later ? b.b : b.a);
    ctx.closure_order.push_back(b.order);
  }

  std::vector<int> out;
  render(ctx, root, 0, out);
  return out;
}

MolecularGraph decode(std::span<const int> tokens, const Vocabulary& vocab) {
  const ValenceTable& table = ValenceTable::standard();
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
      throw std::invalid_argument("out-of-vocabulary token id " + std::to_string(id));
  }

  struct Pending {
    std::uint8_t element;
    int charge;
    int capacity;
    int used = 0;
  };
  std::vector<Pending> atoms;
  std::vector<Bond> bonds;
  std::set<std::pair<int, int>> bonded;
  struct Frame {
    int saved_cur;
    std::size_t end;
  };
  std::vector<Frame> frames;
  int cur = -1;

  auto remaining = [&](int atom) { return atoms[atom].capacity - atoms[atom].used; };
  auto frame_end = [&]() { return frames.empty() ? tokens.size() : frames.back().end; };

  std::size_t pos = 0;
  while (pos < tokens.size()) {
    while (!frames.empty() && pos >= frames.back().end) {
      cur = frames.back().saved_cur;
      frames.pop_back();
    }
    const int id = tokens[pos];
    const TokenFactor& f = vocab.factor(id);

    if (id == vocab.eos_id()) break;
    if (f.part == TokenPart::Special || f.part == TokenPart::HexDigit) {
      ++pos;  // BOS/PAD and isolated hex digits derive nothing
      continue;
    }

    if (f.part == TokenPart::Ring || f.part == TokenPart::Branch) {
      const int q = *f.rb_order;
      int value = 0;
      bool complete = true;
      for (int d = 1; d <= q; ++d) {
        if (pos + d >= frame_end() || !vocab.hex_value(tokens[pos + d])) {
          complete = false;
          break;
        }
        value = (value << 4) | *vocab.hex_value(tokens[pos + d]);
      }
      if (!complete) {
        ++pos;  // dangling control token
        continue;
      }
      pos += 1 + static_cast<std::size_t>(q);
      if (f.part == TokenPart::Ring) {
        if (cur < 0) continue;
        const int target = cur - value;
        if (target < 0 || target == cur) continue;
        auto key = std::minmax(target, cur);
        if (bonded.count(key)) continue;
        const int order =
            std::min({bond_prefix_order(f.bond), remaining(cur), remaining(target)});
        if (order < 1) continue;
        bonds.push_back({static_cast<std::uint16_t>(key.first),
                         static_cast<std::uint16_t>(key.second),
                         static_cast<std::uint8_t>(order)});
        bonded.insert(key);
        atoms[cur].used += order;
        atoms[target].used += order;
      } else if (cur >= 0) {
        const std::size_t body_end = std::min(pos + static_cast<std::size_t>(value) + 1,
                                              frame_end());
        frames.push_back({cur, body_end});
      }
      continue;
    }

    // Atom token.
    ++pos;
    const std::uint8_t element = *f.element;
    const int charge = vocab.formal_charge(id);
    const int cap = capacity_of(element, charge, table);
    if (cur < 0) {
      atoms.push_back({element, charge, cap});
      cur = static_cast<int>(atoms.size()) - 1;
      continue;
    }
    const int order = std::min({bond_prefix_order(f.bond), remaining(cur), cap});
    if (order < 1) continue;  // no capacity left: token derives nothing
    atoms.push_back({element, charge, cap});
    const int placed = static_cast<int>(atoms.size()) - 1;
    bonds.push_back({static_cast<std::uint16_t>(cur), static_cast<std::uint16_t>(placed),
                     static_cast<std::uint8_t>(order)});
    bonded.insert({cur, placed});
    atoms[cur].used += order;
    atoms[placed].used += order;
    cur = placed;
  }

  std::vector<Atom> final_atoms;
  final_atoms.reserve(atoms.size());
  for (const Pending& p : atoms) {
    final_atoms.push_back({p.element, static_cast<std::uint8_t>(p.capacity - p.used),
                           static_cast<std::int8_t>(p.charge)});
  }
  return MolecularGraph(std::move(final_atoms), std::move(bonds), table);
}

std::string sequence_to_string(std::span<const int> tokens, const Vocabulary& vocab) {
  std::string out;
  for (int id : tokens) out += vocab.text(id);
  return out;
}

std::vector<int> parse_sequence(std::string_view text, const Vocabulary& vocab) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '[')
      throw std::invalid_argument("token sequence: expected '[' at position " + std::to_string(i));
    const auto close = text.find(']', i);
    if (close == std::string_view::npos)
      throw std::invalid_argument("token sequence: unterminated token");
    const auto id = vocab.id_of(text.substr(i, close - i + 1));
    if (!id)
      throw std::invalid_argument("out-of-vocabulary token " +
                                  std::string(text.substr(i, close - i + 1)));
    out.push_back(*id);
    i = close + 1;
  }
  return out;
}

}  // namespace coregen
