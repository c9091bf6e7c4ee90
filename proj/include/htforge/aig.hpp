#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "htforge/common.hpp"
#include "htforge/netlist.hpp"
#include "htforge/truth_table.hpp"

namespace htforge {

// Literal: node index plus complement flag, packed. Node 0 is the constant
// FALSE, so Lit(0, true) is constant TRUE.
class Lit {
public:
  constexpr Lit() : v_(0) {}
  constexpr Lit(uint32_t node, bool complemented)
      : v_(node * 2 + (complemented ? 1 : 0)) {}

  static constexpr Lit from_value(uint32_t v) {
    Lit l;
    l.v_ = v;
    return l;
  }

  constexpr uint32_t node() const { return v_ >> 1; }
  constexpr bool complemented() const { return v_ & 1; }
  constexpr uint32_t value() const { return v_; }

  constexpr Lit operator^(bool invert) const { return from_value(v_ ^ uint32_t(invert)); }
  constexpr Lit operator~() const { return from_value(v_ ^ 1); }

  constexpr auto operator<=>(const Lit&) const = default;

private:
  uint32_t v_;
};

inline constexpr Lit lit_false = Lit::from_value(0);
inline constexpr Lit lit_true = Lit::from_value(1);

HTFORGE_DEFINE_ERROR(Overflow)

// And-Inverter Graph with one-level structural hashing. Node ids are
// topological by construction: node 0 is the constant, nodes 1..n_pis are
// the primary inputs, AND nodes follow with both fan-in ids strictly
// smaller than their own.
class Aig {
public:
  struct AndNode {
    Lit a, b;  // canonical: a.value() < b.value()
  };

  Aig() = default;
  explicit Aig(std::vector<std::string> pi_names) : pi_names_(std::move(pi_names)) {}

  uint32_t n_pis() const { return uint32_t(pi_names_.size()); }
  uint32_t n_ands() const { return uint32_t(ands_.size()); }
  uint32_t n_nodes() const { return 1 + n_pis() + n_ands(); }

  bool is_const(uint32_t node) const { return node == 0; }
  bool is_pi(uint32_t node) const { return node >= 1 && node <= n_pis(); }
  bool is_and(uint32_t node) const { return node > n_pis(); }

  Lit pi_lit(uint32_t index) const { return Lit(1 + index, false); }
  const std::string& pi_name(uint32_t index) const { return pi_names_[index]; }
  const std::vector<std::string>& pi_names() const { return pi_names_; }

  const AndNode& node(uint32_t id) const { return ands_[id - 1 - n_pis()]; }
  Lit fanin0(uint32_t id) const { return node(id).a; }
  Lit fanin1(uint32_t id) const { return node(id).b; }
  uint32_t and_node_id(uint32_t and_index) const { return 1 + n_pis() + and_index; }

  size_t n_pos() const { return pos_.size(); }
  const std::string& po_name(size_t i) const { return pos_[i].name; }
  Lit po_lit(size_t i) const { return pos_[i].lit; }
  std::vector<std::string> po_names() const {
    std::vector<std::string> out;
    for (auto& p : pos_) out.push_back(p.name);
    return out;
  }

  void add_po(std::string name, Lit l) { pos_.push_back({std::move(name), l}); }

  // AND of two literals with the usual simplifications (x&0=0, x&1=x,
  // x&x=x, x&~x=0) and strash-table reuse. Operands are ordered by encoded
  // value before hashing so the pair key is canonical.
  Lit and2(Lit a, Lit b) {
    if (a.value() > b.value()) std::swap(a, b);
    if (a == lit_false) return lit_false;
    if (a == lit_true) return b;
    if (a == b) return b;
    if (a.node() == b.node()) return lit_false;  // a and ~a
    uint64_t key = (uint64_t(a.value()) << 32) | b.value();
    auto it = strash_.find(key);
    if (it != strash_.end()) return Lit(it->second, false);
    uint32_t id = n_nodes();
    ands_.push_back({a, b});
    strash_.emplace(key, id);
    return Lit(id, false);
  }

  Lit or2(Lit a, Lit b) { return ~and2(~a, ~b); }
  Lit xor2(Lit a, Lit b) { return ~and2(~and2(a, ~b), ~and2(~a, b)); }
  Lit mux(Lit sel, Lit t, Lit e) { return or2(and2(sel, t), and2(~sel, e)); }

  // Balanced reduction used when decomposing k-ary gates.
  Lit and_reduce(const std::vector<Lit>& xs) {
    if (xs.empty()) return lit_true;
    std::vector<Lit> cur = xs;
    while (cur.size() > 1) {
      std::vector<Lit> next;
      for (size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(and2(cur[i], cur[i + 1]));
      if (cur.size() & 1) next.push_back(cur.back());
      cur = std::move(next);
    }
    return cur[0];
  }

  Lit xor_reduce(const std::vector<Lit>& xs) {
    if (xs.empty()) return lit_false;
    std::vector<Lit> cur = xs;
    while (cur.size() > 1) {
      std::vector<Lit> next;
      for (size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(xor2(cur[i], cur[i + 1]));
      if (cur.size() & 1) next.push_back(cur.back());
      cur = std::move(next);
    }
    return cur[0];
  }

  // Level per node counting AND nodes on the longest path from the inputs.
  std::vector<uint32_t> levels() const {
    std::vector<uint32_t> lv(n_nodes(), 0);
    for (uint32_t i = 0; i < n_ands(); ++i) {
      uint32_t id = and_node_id(i);
      lv[id] = 1 + std::max(lv[ands_[i].a.node()], lv[ands_[i].b.node()]);
    }
    return lv;
  }

  struct Metrics {
    uint32_t n_ands = 0;
    uint32_t n_levels = 0;
    bool operator==(const Metrics&) const = default;
  };

  Metrics metrics() const {
    Metrics m;
    m.n_ands = n_ands();
    std::vector<uint32_t> lv = levels();
    for (auto& p : pos_) m.n_levels = std::max(m.n_levels, lv[p.lit.node()]);
    return m;
  }

  // Word-parallel evaluation over one 64-pattern block.
  std::vector<uint64_t> eval_words(const std::vector<uint64_t>& pi_words) const {
    if (pi_words.size() != n_pis())
      throw WidthMismatch("expected " + std::to_string(n_pis()) + " input words");
    std::vector<uint64_t> w(n_nodes());
    w[0] = 0;
    for (uint32_t i = 0; i < n_pis(); ++i) w[1 + i] = pi_words[i];
    for (uint32_t i = 0; i < n_ands(); ++i) {
      const AndNode& nd = ands_[i];
      uint64_t a = w[nd.a.node()] ^ (nd.a.complemented() ? ~uint64_t(0) : 0);
      uint64_t b = w[nd.b.node()] ^ (nd.b.complemented() ? ~uint64_t(0) : 0);
      w[and_node_id(i)] = a & b;
    }
    return w;
  }

  uint64_t lit_word(const std::vector<uint64_t>& node_words, Lit l) const {
    return node_words[l.node()] ^ (l.complemented() ? ~uint64_t(0) : 0);
  }

  // Order-sensitive hash of the whole structure (fan-in pairs and output
  // literals). Two calls on the same graph agree; restructured graphs
  // almost surely differ.
  uint64_t structural_hash() const {
    uint64_t h = 0x9e3779b97f4a7c15ULL ^ (uint64_t(n_pis()) << 32 | n_ands());
    auto mix = [&h](uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (const AndNode& nd : ands_) mix((uint64_t(nd.a.value()) << 32) | nd.b.value());
    for (const auto& p : pos_) {
      mix(p.lit.value());
      for (char c : p.name) mix(uint64_t(uint8_t(c)));
    }
    return h;
  }

private:
  struct Po {
    std::string name;
    Lit lit;
  };

  std::vector<std::string> pi_names_;
  std::vector<AndNode> ands_;
  std::vector<Po> pos_;
  std::unordered_map<uint64_t, uint32_t> strash_;
};

// Bit-parallel simulation with the same interface semantics as
// netlist simulate().
inline BitMatrix sim_aig(const Aig& g, const BitMatrix& patterns) {
  if (patterns.cols() != g.n_pis())
    throw WidthMismatch("pattern width " + std::to_string(patterns.cols()) +
                        " != " + std::to_string(g.n_pis()) + " inputs");
  BitMatrix out(patterns.rows(), g.n_pos());
  for (size_t base = 0; base < patterns.rows(); base += 64) {
    size_t cnt = std::min<size_t>(64, patterns.rows() - base);
    std::vector<uint64_t> pi(g.n_pis(), 0);
    for (uint32_t i = 0; i < g.n_pis(); ++i)
      for (size_t v = 0; v < cnt; ++v)
        if (patterns.get(base + v, i)) pi[i] |= uint64_t(1) << v;
    std::vector<uint64_t> w = g.eval_words(pi);
    for (size_t o = 0; o < g.n_pos(); ++o) {
      uint64_t word = g.lit_word(w, g.po_lit(o));
      for (size_t v = 0; v < cnt; ++v)
        if ((word >> v) & 1) out.set(base + v, o, true);
    }
  }
  return out;
}

// Exhaustive PO truth tables for small graphs; PI i is variable i.
inline std::vector<TruthTable> exhaustive_tables(const Aig& g) {
  if (g.n_pis() > 16) throw Overflow("exhaustive simulation limited to 16 inputs");
  int n = int(g.n_pis());
  std::vector<TruthTable> out(g.n_pos(), TruthTable(n));
  uint64_t total = uint64_t(1) << n;
  for (uint64_t base = 0; base < total; base += 64) {
    std::vector<uint64_t> pi(g.n_pis());
    for (int i = 0; i < n; ++i) {
      if (i < 6) {
        static constexpr uint64_t kVar[6] = {
            0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
            0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
        pi[i] = kVar[i];
      } else {
        pi[i] = ((base >> i) & 1) ? ~uint64_t(0) : 0;
      }
    }
    std::vector<uint64_t> w = g.eval_words(pi);
    uint64_t cnt = std::min<uint64_t>(64, total - base);
    for (size_t o = 0; o < g.n_pos(); ++o) {
      uint64_t word = g.lit_word(w, g.po_lit(o));
      for (uint64_t v = 0; v < cnt; ++v) out[o].set(base + v, (word >> v) & 1);
    }
  }
  return out;
}

// DeMorgan conversion of a netlist: OR(a,b) = ~(~a & ~b), XOR via the
// standard 3-node decomposition, k-ary gates as balanced 2-input trees.
inline Aig from_netlist(const Netlist& n) {
  Aig g(n.input_names());
  std::vector<Lit> net_lit(n.n_nets(), lit_false);
  for (size_t i = 0; i < n.inputs().size(); ++i) net_lit[n.inputs()[i]] = g.pi_lit(uint32_t(i));
  for (int gi : n.topo_order()) {
    const Gate& gate = n.gates()[gi];
    std::vector<Lit> ins;
    ins.reserve(gate.inputs.size());
    for (int in : gate.inputs) ins.push_back(net_lit[in]);
    Lit out;
    switch (gate.kind) {
      case GateKind::And: out = g.and_reduce(ins); break;
      case GateKind::Nand: out = ~g.and_reduce(ins); break;
      case GateKind::Or: {
        for (auto& l : ins) l = ~l;
        out = ~g.and_reduce(ins);
        break;
      }
      case GateKind::Nor: {
        for (auto& l : ins) l = ~l;
        out = g.and_reduce(ins);
        break;
      }
      case GateKind::Xor: out = g.xor_reduce(ins); break;
      case GateKind::Xnor: out = ~g.xor_reduce(ins); break;
      case GateKind::Not: out = ~ins[0]; break;
      case GateKind::Buf: out = ins[0]; break;
    }
    net_lit[gate.output] = out;
  }
  for (int id : n.outputs()) g.add_po(n.net_name(id), net_lit[id]);
  return g;
}

// Copy keeping only logic reachable from the outputs. The interface (all
// PIs, PO names and order) is preserved.
inline Aig cleanup(const Aig& g) {
  Aig out(g.pi_names());
  std::vector<Lit> map(g.n_nodes(), lit_false);
  std::vector<bool> have(g.n_nodes(), false);
  map[0] = lit_false;
  have[0] = true;
  for (uint32_t i = 0; i < g.n_pis(); ++i) {
    map[1 + i] = out.pi_lit(i);
    have[1 + i] = true;
  }
  std::vector<bool> needed(g.n_nodes(), false);
  std::vector<uint32_t> stack;
  for (size_t o = 0; o < g.n_pos(); ++o) stack.push_back(g.po_lit(o).node());
  while (!stack.empty()) {
    uint32_t id = stack.back();
    stack.pop_back();
    if (needed[id]) continue;
    needed[id] = true;
    if (g.is_and(id)) {
      stack.push_back(g.fanin0(id).node());
      stack.push_back(g.fanin1(id).node());
    }
  }
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (!needed[id]) continue;
    Lit a = g.fanin0(id), b = g.fanin1(id);
    map[id] = out.and2(map[a.node()] ^ a.complemented(), map[b.node()] ^ b.complemented());
    have[id] = true;
  }
  for (size_t o = 0; o < g.n_pos(); ++o) {
    Lit l = g.po_lit(o);
    out.add_po(g.po_name(o), map[l.node()] ^ l.complemented());
  }
  return out;
}

enum class GateLibrary { AndNot, NandOnly, NorOnly, Mixed };

inline const char* to_string(GateLibrary lib) {
  switch (lib) {
    case GateLibrary::AndNot: return "AND_NOT";
    case GateLibrary::NandOnly: return "NAND_ONLY";
    case GateLibrary::NorOnly: return "NOR_ONLY";
    case GateLibrary::Mixed: return "MIXED";
  }
  return "?";
}

inline std::optional<GateLibrary> gate_library_from(std::string s) {
  for (auto& c : s) c = char(std::toupper(unsigned(c)));
  if (s == "AND_NOT") return GateLibrary::AndNot;
  if (s == "NAND_ONLY") return GateLibrary::NandOnly;
  if (s == "NOR_ONLY") return GateLibrary::NorOnly;
  if (s == "MIXED") return GateLibrary::Mixed;
  return std::nullopt;
}

namespace detail {

// Shared machinery for netlist export: deterministic fresh names and the
// per-literal net cache.
class NetlistEmitter {
public:
  explicit NetlistEmitter(const Aig& g, std::string circuit_name)
      : g_(g), name_(std::move(circuit_name)) {
    for (auto& s : g.pi_names()) reserved_.insert(s);
    for (size_t o = 0; o < g.n_pos(); ++o) reserved_.insert(g.po_name(o));
    net_of_.assign(2 * g.n_nodes(), std::string());
  }

  Netlist finish() {
    std::vector<std::string> outs;
    for (size_t o = 0; o < g_.n_pos(); ++o) outs.push_back(g_.po_name(o));
    return Netlist::build(name_, g_.pi_names(), outs, std::move(gates_));
  }

  std::string fresh_name() {
    for (;;) {
      std::string cand = "n" + std::to_string(counter_++);
      if (!reserved_.count(cand)) return cand;
    }
  }

  std::string emit(GateKind kind, std::vector<std::string> ins, std::string name = "") {
    if (name.empty()) name = fresh_name();
    gates_.push_back({name, kind, std::move(ins)});
    return name;
  }

  std::string& cache(Lit l) { return net_of_[l.value()]; }

  const Aig& g_;
  std::string name_;
  std::unordered_set<std::string> reserved_;
  std::vector<Netlist::GateSpec> gates_;
  std::vector<std::string> net_of_;
  uint64_t counter_ = 1;
};

}  // namespace detail

// Export to a gate-level netlist over the chosen library. Functionally
// equivalent to the graph, deterministic for a fixed (Aig, library). BENCH
// has no constant literal, so constant nets are realized from the first
// primary input (x AND NOT x).
inline Netlist to_netlist(const Aig& g, GateLibrary lib, std::string circuit_name = "") {
  if (circuit_name.empty()) circuit_name = "aig";
  detail::NetlistEmitter em(g, circuit_name);

  // Which PO gets to name an AND node's positive net directly (AndNot /
  // Mixed only): first PO on a plain AND literal whose name is free.
  std::vector<std::string> claimed(g.n_nodes());
  bool allow_claim = (lib == GateLibrary::AndNot || lib == GateLibrary::Mixed);
  if (allow_claim) {
    for (size_t o = 0; o < g.n_pos(); ++o) {
      Lit l = g.po_lit(o);
      if (!l.complemented() && g.is_and(l.node()) && claimed[l.node()].empty()) {
        bool name_is_pi = false;
        for (auto& p : g.pi_names())
          if (p == g.po_name(o)) name_is_pi = true;
        if (!name_is_pi) claimed[l.node()] = g.po_name(o);
      }
    }
  }

  // For Mixed: nodes used only complemented come out as a single NAND.
  std::vector<bool> nand_form(g.n_nodes(), false);
  if (lib == GateLibrary::Mixed) {
    std::vector<int> pos_uses(g.n_nodes(), 0), neg_uses(g.n_nodes(), 0);
    auto count = [&](Lit l) { (l.complemented() ? neg_uses : pos_uses)[l.node()]++; };
    for (uint32_t i = 0; i < g.n_ands(); ++i) {
      count(g.fanin0(g.and_node_id(i)));
      count(g.fanin1(g.and_node_id(i)));
    }
    for (size_t o = 0; o < g.n_pos(); ++o) count(g.po_lit(o));
    for (uint32_t i = 0; i < g.n_ands(); ++i) {
      uint32_t id = g.and_node_id(i);
      if (neg_uses[id] > 0 && pos_uses[id] == 0 && claimed[id].empty()) nand_form[id] = true;
    }
  }

  // net_for(l) returns the name of a net computing literal l, emitting
  // whatever gates the library needs.
  std::function<std::string(Lit)> net_for = [&](Lit l) -> std::string {
    std::string& hit = em.cache(l);
    if (!hit.empty()) return hit;
    std::string out;
    uint32_t id = l.node();
    switch (lib) {
      case GateLibrary::AndNot:
      case GateLibrary::Mixed: {
        if (g.is_const(id)) {
          if (g.n_pis() == 0) throw InvalidArgument("constant net needs a primary input");
          std::string x = g.pi_name(0);
          std::string nx = em.emit(GateKind::Not, {x});
          std::string c0 = em.emit(GateKind::And, {x, nx});
          em.cache(lit_false) = c0;
          if (l.complemented()) out = em.emit(GateKind::Not, {c0});
          else out = c0;
        } else if (g.is_pi(id)) {
          std::string base = g.pi_name(id - 1);
          out = l.complemented() ? em.emit(GateKind::Not, {base}) : base;
        } else if (nand_form[id]) {
          std::string a = net_for(g.fanin0(id));
          std::string b = net_for(g.fanin1(id));
          std::string neg = em.emit(GateKind::Nand, {a, b});
          em.cache(Lit(id, true)) = neg;
          out = l.complemented() ? neg : em.emit(GateKind::Not, {neg});
        } else {
          std::string a = net_for(g.fanin0(id));
          std::string b = net_for(g.fanin1(id));
          std::string pos = em.emit(GateKind::And, {a, b}, claimed[id]);
          em.cache(Lit(id, false)) = pos;
          out = l.complemented() ? em.emit(GateKind::Not, {pos}) : pos;
        }
        break;
      }
      case GateLibrary::NandOnly: {
        if (g.is_const(id)) {
          if (g.n_pis() == 0) throw InvalidArgument("constant net needs a primary input");
          std::string x = g.pi_name(0);
          std::string nx = em.emit(GateKind::Nand, {x, x});
          std::string c1 = em.emit(GateKind::Nand, {x, nx});  // ~(x & ~x) = TRUE
          em.cache(lit_true) = c1;
          std::string c0 = em.emit(GateKind::Nand, {c1, c1});
          em.cache(lit_false) = c0;
          out = l.complemented() ? c1 : c0;
        } else if (g.is_pi(id)) {
          std::string base = g.pi_name(id - 1);
          out = l.complemented() ? em.emit(GateKind::Nand, {base, base}) : base;
        } else {
          std::string a = net_for(g.fanin0(id));
          std::string b = net_for(g.fanin1(id));
          std::string neg = em.emit(GateKind::Nand, {a, b});
          em.cache(Lit(id, true)) = neg;
          out = l.complemented() ? neg : em.emit(GateKind::Nand, {neg, neg});
        }
        break;
      }
      case GateLibrary::NorOnly: {
        if (g.is_const(id)) {
          if (g.n_pis() == 0) throw InvalidArgument("constant net needs a primary input");
          std::string x = g.pi_name(0);
          std::string nx = em.emit(GateKind::Nor, {x, x});
          std::string c0 = em.emit(GateKind::Nor, {x, nx});  // ~(x | ~x) = FALSE
          em.cache(lit_false) = c0;
          std::string c1 = em.emit(GateKind::Nor, {c0, c0});
          em.cache(lit_true) = c1;
          out = l.complemented() ? c1 : c0;
        } else if (g.is_pi(id)) {
          std::string base = g.pi_name(id - 1);
          out = l.complemented() ? em.emit(GateKind::Nor, {base, base}) : base;
        } else {
          // a & b = ~( ~a | ~b )
          std::string na = net_for(~g.fanin0(id));
          std::string nb = net_for(~g.fanin1(id));
          std::string pos = em.emit(GateKind::Nor, {na, nb});
          em.cache(Lit(id, false)) = pos;
          out = l.complemented() ? em.emit(GateKind::Nor, {pos, pos}) : pos;
        }
        break;
      }
    }
    if (hit.empty()) hit = out;
    return hit;
  };

  // Emit all reachable logic in node-id order so output is deterministic.
  std::vector<bool> needed(g.n_nodes(), false);
  {
    std::vector<uint32_t> stack;
    for (size_t o = 0; o < g.n_pos(); ++o) stack.push_back(g.po_lit(o).node());
    while (!stack.empty()) {
      uint32_t id = stack.back();
      stack.pop_back();
      if (needed[id]) continue;
      needed[id] = true;
      if (g.is_and(id)) {
        stack.push_back(g.fanin0(id).node());
        stack.push_back(g.fanin1(id).node());
      }
    }
  }
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (!needed[id]) continue;
    switch (lib) {
      case GateLibrary::AndNot:
      case GateLibrary::Mixed:
        net_for(Lit(id, nand_form[id]));
        break;
      case GateLibrary::NandOnly:
        net_for(Lit(id, true));  // the NAND gate itself; positive form on demand
        break;
      case GateLibrary::NorOnly:
        net_for(Lit(id, false));
        break;
    }
  }

  // Bind the primary outputs.
  for (size_t o = 0; o < g.n_pos(); ++o) {
    Lit l = g.po_lit(o);
    const std::string& want = g.po_name(o);
    if (!l.complemented() && g.is_pi(l.node()) && g.pi_name(l.node() - 1) == want) continue;
    if (allow_claim && !l.complemented() && g.is_and(l.node()) && claimed[l.node()] == want)
      continue;
    switch (lib) {
      case GateLibrary::AndNot:
      case GateLibrary::Mixed:
        if (l.complemented()) em.emit(GateKind::Not, {net_for(~l)}, want);
        else em.emit(GateKind::Buf, {net_for(l)}, want);
        break;
      case GateLibrary::NandOnly: {
        std::string w = net_for(~l);
        em.emit(GateKind::Nand, {w, w}, want);
        break;
      }
      case GateLibrary::NorOnly: {
        std::string w = net_for(~l);
        em.emit(GateKind::Nor, {w, w}, want);
        break;
      }
    }
  }
  return em.finish();
}

// Transitive primary-input support of a cone plus its truth table, used by
// cone-level resynthesis. Support positions are sorted by node id; variable
// i of the table is support[i].
struct ConeFunction {
  std::vector<uint32_t> support;  // PI node ids
  TruthTable table;
};

inline ConeFunction extract_cone(const Aig& g, Lit root, int max_inputs) {
  if (max_inputs < 0 || max_inputs > 16)
    throw InvalidArgument("max_inputs must be in [0, 16]");
  ConeFunction out;
  // Collect the PI support, bailing out as soon as it exceeds the budget.
  std::vector<bool> seen(g.n_nodes(), false);
  std::vector<uint32_t> stack{root.node()}, cone_nodes;
  std::vector<uint32_t> support;
  while (!stack.empty()) {
    uint32_t id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = true;
    if (g.is_pi(id)) {
      support.push_back(id);
      if (int(support.size()) > max_inputs)
        throw Overflow("cone support exceeds " + std::to_string(max_inputs));
    } else if (g.is_and(id)) {
      cone_nodes.push_back(id);
      stack.push_back(g.fanin0(id).node());
      stack.push_back(g.fanin1(id).node());
    }
  }
  std::sort(support.begin(), support.end());
  std::sort(cone_nodes.begin(), cone_nodes.end());
  int k = int(support.size());
  TruthTable table(k);

  // Evaluate the cone over all 2^k assignments, 64 at a time.
  uint64_t total = uint64_t(1) << k;
  std::vector<uint64_t> val(g.n_nodes(), 0);
  for (uint64_t base = 0; base < total; base += 64) {
    for (int i = 0; i < k; ++i) {
      uint64_t w;
      if (i < 6) {
        static constexpr uint64_t kVar[6] = {
            0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
            0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
        w = kVar[i];
      } else {
        w = ((base >> i) & 1) ? ~uint64_t(0) : 0;
      }
      val[support[i]] = w;
    }
    for (uint32_t id : cone_nodes) {
      Lit a = g.fanin0(id), b = g.fanin1(id);
      val[id] = (val[a.node()] ^ (a.complemented() ? ~uint64_t(0) : 0)) &
                (val[b.node()] ^ (b.complemented() ? ~uint64_t(0) : 0));
    }
    uint64_t word = val[root.node()] ^ (root.complemented() ? ~uint64_t(0) : 0);
    uint64_t cnt = std::min<uint64_t>(64, total - base);
    for (uint64_t v = 0; v < cnt; ++v) table.set(base + v, (word >> v) & 1);
  }
  out.support = std::move(support);
  out.table = std::move(table);
  return out;
}

}  // namespace htforge
