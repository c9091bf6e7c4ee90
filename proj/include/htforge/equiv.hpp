#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htforge/aig.hpp"
#include "htforge/common.hpp"
#include "htforge/sat.hpp"

namespace htforge {

HTFORGE_DEFINE_ERROR(InterfaceMismatch)

// Tseitin encoding: one variable per node (variable id = node id + 1).
// Each AND y = a & b contributes (~y|a)(~y|b)(y|~a|~b) with complement
// edges folded into literal signs. The constant node gets its unit clause
// only when an output actually references it.
struct TseitinResult {
  Cnf cnf;
  int var_of_node(uint32_t node) const { return int(node) + 1; }
  int lit_of(Lit l) const {
    int v = var_of_node(l.node());
    return l.complemented() ? -v : v;
  }
};

inline TseitinResult tseitin_cnf(const Aig& g) {
  TseitinResult r;
  r.cnf.n_vars = int(g.n_nodes());
  bool const_referenced = false;
  for (size_t o = 0; o < g.n_pos(); ++o)
    if (g.po_lit(o).node() == 0) const_referenced = true;
  if (const_referenced) r.cnf.add_clause({-r.var_of_node(0)});
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    int y = r.var_of_node(id);
    int a = r.lit_of(g.fanin0(id));
    int b = r.lit_of(g.fanin1(id));
    r.cnf.add_clause({-y, a});
    r.cnf.add_clause({-y, b});
    r.cnf.add_clause({y, -a, -b});
  }
  return r;
}

// Joint graph for two circuits over shared inputs, with per-side literal
// maps so callers can constrain internal nets of either side.
struct MiterResult {
  Aig miter;                 // single PO named "miter": 1 iff some output differs
  std::vector<Lit> a_map;    // node id in `a` -> literal in the miter
  std::vector<Lit> b_map;
  Lit output;
};

inline std::vector<Lit> copy_into(Aig& dst, const Aig& src) {
  std::vector<Lit> map(src.n_nodes(), lit_false);
  for (uint32_t i = 0; i < src.n_pis(); ++i) map[1 + i] = dst.pi_lit(i);
  for (uint32_t i = 0; i < src.n_ands(); ++i) {
    uint32_t id = src.and_node_id(i);
    Lit a = src.fanin0(id), b = src.fanin1(id);
    map[id] = dst.and2(map[a.node()] ^ a.complemented(), map[b.node()] ^ b.complemented());
  }
  return map;
}

inline void check_same_interface(const Aig& a, const Aig& b) {
  if (a.pi_names() != b.pi_names())
    throw InterfaceMismatch("primary input names/order differ");
  if (a.n_pos() != b.n_pos())
    throw InterfaceMismatch("primary output counts differ (" +
                            std::to_string(a.n_pos()) + " vs " +
                            std::to_string(b.n_pos()) + ")");
}

inline MiterResult build_miter(const Aig& a, const Aig& b) {
  check_same_interface(a, b);
  MiterResult r;
  r.miter = Aig(a.pi_names());
  r.a_map = copy_into(r.miter, a);
  r.b_map = copy_into(r.miter, b);
  std::vector<Lit> diffs;
  for (size_t o = 0; o < a.n_pos(); ++o) {
    Lit la = r.a_map[a.po_lit(o).node()] ^ a.po_lit(o).complemented();
    Lit lb = r.b_map[b.po_lit(o).node()] ^ b.po_lit(o).complemented();
    diffs.push_back(r.miter.xor2(la, lb));
  }
  // Balanced OR tree over the per-output XORs.
  std::vector<Lit> cur = diffs;
  if (cur.empty()) cur.push_back(lit_false);
  while (cur.size() > 1) {
    std::vector<Lit> next;
    for (size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(r.miter.or2(cur[i], cur[i + 1]));
    if (cur.size() & 1) next.push_back(cur.back());
    cur = std::move(next);
  }
  r.output = cur[0];
  r.miter.add_po("miter", r.output);
  return r;
}

struct EquivResult {
  bool equivalent = false;
  std::vector<bool> counterexample;  // input assignment, PI order; iff !equivalent
};

// SAT-based combinational equivalence: UNSAT miter means equivalent; a
// model gives an input vector whose simulation provably differs (replayed
// internally before returning).
inline EquivResult check_equiv(const Aig& a, const Aig& b,
                               uint64_t conflict_budget = 10'000'000) {
  MiterResult m = build_miter(a, b);
  EquivResult res;
  auto replay = [&](const std::vector<bool>& vec) {
    BitMatrix in(1, a.n_pis());
    for (uint32_t i = 0; i < a.n_pis(); ++i) in.set(0, i, vec[i]);
    BitMatrix oa = sim_aig(a, in), ob = sim_aig(b, in);
    if (oa == ob)
      throw Error("InternalCheckFailed", "counterexample does not replay");
  };
  if (m.output == lit_false) {
    res.equivalent = true;
    return res;
  }
  if (m.output == lit_true) {
    res.counterexample.assign(a.n_pis(), false);
    replay(res.counterexample);
    return res;
  }
  TseitinResult t = tseitin_cnf(m.miter);
  SatSolver solver(t.cnf, conflict_budget);
  SatResult r = solver.solve({t.lit_of(m.output)});
  if (r.status == SatStatus::Unsat) {
    res.equivalent = true;
    return res;
  }
  res.counterexample.resize(a.n_pis());
  for (uint32_t i = 0; i < a.n_pis(); ++i)
    res.counterexample[i] = r.model[t.var_of_node(1 + i) - 1];
  replay(res.counterexample);
  return res;
}

}  // namespace htforge
