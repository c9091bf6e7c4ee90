#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "htforge/aig.hpp"
#include "htforge/common.hpp"

namespace htforge {

// Input negation / input permutation / output negation transform over
// 4-variable truth tables. (t.F)(x0..x3) = output_neg ^ F(y0..y3) with
// y_i = x_{perm[i]} ^ input_neg_i.
struct NpnTransform {
  std::array<uint8_t, 4> perm{0, 1, 2, 3};
  uint8_t input_neg = 0;  // bit i complements formal input i
  bool output_neg = false;
};

inline uint16_t npn_apply(const NpnTransform& t, uint16_t f) {
  uint16_t g = 0;
  for (int m = 0; m < 16; ++m) {
    int src = 0;
    for (int i = 0; i < 4; ++i) {
      int bit = ((m >> t.perm[i]) & 1) ^ ((t.input_neg >> i) & 1);
      src |= bit << i;
    }
    int v = ((f >> src) & 1) ^ (t.output_neg ? 1 : 0);
    g |= uint16_t(v) << m;
  }
  return g;
}

namespace detail {

inline const std::vector<NpnTransform>& all_npn_transforms() {
  static const std::vector<NpnTransform> all = [] {
    std::vector<NpnTransform> v;
    std::array<uint8_t, 4> p{0, 1, 2, 3};
    do {
      for (int neg = 0; neg < 16; ++neg)
        for (int out = 0; out < 2; ++out)
          v.push_back({p, uint8_t(neg), out != 0});
    } while (std::next_permutation(p.begin(), p.end()));
    return v;
  }();
  return all;
}

}  // namespace detail

inline uint16_t npn_canonical(uint16_t f) {
  uint16_t best = npn_apply(detail::all_npn_transforms()[0], f);
  for (const auto& t : detail::all_npn_transforms()) {
    uint16_t g = npn_apply(t, f);
    if (g < best) best = g;
  }
  return best;
}

// A transform t with npn_apply(t, from) == to, if the tables share an
// orbit.
inline std::optional<NpnTransform> npn_find_transform(uint16_t from, uint16_t to) {
  for (const auto& t : detail::all_npn_transforms())
    if (npn_apply(t, from) == to) return t;
  return std::nullopt;
}

// A stored AND-graph implementation of a 4-variable function. Operand
// codes: (idx << 1) | neg with idx 0..3 the formal inputs and idx >= 4
// referring to step idx-4. Constant outputs use the sentinels below.
struct NpnImpl {
  static constexpr int kOutConstFalse = -1;
  static constexpr int kOutConstTrue = -2;

  std::vector<std::array<int, 2>> steps;
  int out = kOutConstFalse;

  size_t n_nodes() const { return steps.size(); }
  bool operator==(const NpnImpl&) const = default;
};

// Instantiates an implementation over concrete leaf literals.
inline Lit npn_instantiate(Aig& dst, const NpnImpl& impl, const std::array<Lit, 4>& leaves) {
  std::vector<Lit> step_lits;
  step_lits.reserve(impl.steps.size());
  auto resolve = [&](int code) -> Lit {
    int idx = code >> 1;
    bool n = code & 1;
    Lit base = idx < 4 ? leaves[idx] : step_lits[idx - 4];
    return base ^ n;
  };
  for (const auto& s : impl.steps) step_lits.push_back(dst.and2(resolve(s[0]), resolve(s[1])));
  if (impl.out == NpnImpl::kOutConstFalse) return lit_false;
  if (impl.out == NpnImpl::kOutConstTrue) return lit_true;
  return resolve(impl.out);
}

namespace detail {

inline int impl_code_of(const Aig& g, Lit l, const std::vector<int>& and_index) {
  uint32_t id = l.node();
  int idx;
  if (g.is_pi(id)) idx = int(id) - 1;
  else idx = 4 + and_index[id];
  return (idx << 1) | int(l.complemented());
}

// Serializes the cone of `out` in a scratch 4-input graph into a recipe.
inline NpnImpl serialize_impl(const Aig& g, Lit out) {
  NpnImpl impl;
  if (out == lit_false) {
    impl.out = NpnImpl::kOutConstFalse;
    return impl;
  }
  if (out == lit_true) {
    impl.out = NpnImpl::kOutConstTrue;
    return impl;
  }
  std::vector<bool> needed(g.n_nodes(), false);
  std::vector<uint32_t> stack{out.node()};
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
  std::vector<int> and_index(g.n_nodes(), -1);
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (!needed[id]) continue;
    and_index[id] = int(impl.steps.size());
    impl.steps.push_back({impl_code_of(g, g.fanin0(id), and_index),
                          impl_code_of(g, g.fanin1(id), and_index)});
  }
  impl.out = impl_code_of(g, out, and_index);
  return impl;
}

inline uint16_t tt4_cofactor(uint16_t f, int var, bool value) {
  uint16_t out = 0;
  for (int m = 0; m < 16; ++m) {
    int src = (m & ~(1 << var)) | (int(value) << var);
    out |= uint16_t((f >> src) & 1) << m;
  }
  return out;
}

// Shannon synthesis of a 4-variable table in the given variable order.
// use_xor additionally recognizes f = x ^ g cofactor structure.
inline Lit shannon4(Aig& dst, uint16_t f, const std::array<int, 4>& order, size_t pos,
                    bool use_xor, std::unordered_map<uint16_t, Lit>& memo) {
  if (f == 0) return lit_false;
  if (f == 0xFFFF) return lit_true;
  auto it = memo.find(f);
  if (it != memo.end()) return it->second;
  size_t p = pos;
  int var = -1;
  uint16_t c0 = 0, c1 = 0;
  while (p < 4) {
    var = order[p];
    c0 = tt4_cofactor(f, var, false);
    c1 = tt4_cofactor(f, var, true);
    if (c0 != c1) break;
    ++p;
  }
  Lit v = dst.pi_lit(uint32_t(var));
  Lit res;
  if (use_xor && c0 == uint16_t(~c1)) {
    Lit s0 = shannon4(dst, c0, order, p + 1, use_xor, memo);
    res = dst.xor2(v, s0);
  } else {
    Lit s0 = shannon4(dst, c0, order, p + 1, use_xor, memo);
    Lit s1 = shannon4(dst, c1, order, p + 1, use_xor, memo);
    res = dst.mux(v, s1, s0);
  }
  memo.emplace(f, res);
  return res;
}

}  // namespace detail

// Precomputed implementation library covering every NPN class of
// 4-variable functions (there are 222). Each class stores the distinct
// structures produced by Shannon decomposition under several variable
// orders, with and without XOR recognition.
class NpnLibrary {
public:
  static const NpnLibrary& instance() {
    static const NpnLibrary lib;
    return lib;
  }

  size_t n_classes() const { return impls_.size(); }

  const std::vector<NpnImpl>* impls_for_canon(uint16_t canon) const {
    auto it = impls_.find(canon);
    return it == impls_.end() ? nullptr : &it->second;
  }

private:
  NpnLibrary() {
    static constexpr std::array<std::array<int, 4>, 6> kOrders{{
        {0, 1, 2, 3}, {3, 2, 1, 0}, {1, 0, 3, 2}, {2, 3, 0, 1}, {0, 2, 1, 3}, {3, 1, 2, 0}}};
    std::vector<bool> seen(1 << 16, false);
    for (uint32_t f = 0; f < (1u << 16); ++f) {
      if (seen[f]) continue;
      uint16_t canon = npn_canonical(uint16_t(f));
      // Mark the whole orbit of the class in one sweep.
      for (const auto& t : detail::all_npn_transforms()) seen[npn_apply(t, canon)] = true;
      std::vector<NpnImpl> impls;
      for (const auto& order : kOrders) {
        for (bool use_xor : {false, true}) {
          Aig scratch(std::vector<std::string>{"x0", "x1", "x2", "x3"});
          std::unordered_map<uint16_t, Lit> memo;
          Lit out = detail::shannon4(scratch, canon, order, 0, use_xor, memo);
          NpnImpl impl = detail::serialize_impl(scratch, out);
          bool dup = false;
          for (const auto& e : impls) dup = dup || e == impl;
          if (!dup) impls.push_back(std::move(impl));
          if (impls.size() >= 5) break;
        }
        if (impls.size() >= 5) break;
      }
      impls_.emplace(canon, std::move(impls));
    }
  }

  std::unordered_map<uint16_t, std::vector<NpnImpl>> impls_;
};

}  // namespace htforge
