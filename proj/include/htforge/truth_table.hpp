#pragma once

#include <cstdint>
#include <vector>

#include "htforge/common.hpp"

namespace htforge {

// Dense truth table over n_vars <= 16 variables. Bit m holds f(m) with
// variable i taken from bit i of the minterm index.
class TruthTable {
public:
  TruthTable() : n_vars_(0), bits_(1, 0) {}
  explicit TruthTable(int n_vars)
      : n_vars_(n_vars), bits_(words_for(n_vars), 0) {
    if (n_vars < 0 || n_vars > 16)
      throw InvalidArgument("truth table limited to 16 variables");
  }

  static TruthTable constant(int n_vars, bool v) {
    TruthTable t(n_vars);
    if (v)
      for (auto& w : t.bits_) w = ~uint64_t(0);
    t.mask_tail();
    return t;
  }

  // Table of variable `var` over an n_vars-input space.
  static TruthTable variable(int n_vars, int var) {
    TruthTable t(n_vars);
    for (uint64_t m = 0; m < t.size(); ++m)
      if ((m >> var) & 1) t.set(m, true);
    return t;
  }

  int n_vars() const { return n_vars_; }
  uint64_t size() const { return uint64_t(1) << n_vars_; }

  bool get(uint64_t m) const { return (bits_[m / 64] >> (m % 64)) & 1; }
  void set(uint64_t m, bool v) {
    uint64_t& w = bits_[m / 64];
    uint64_t msk = uint64_t(1) << (m % 64);
    w = v ? (w | msk) : (w & ~msk);
  }

  bool is_const(bool v) const {
    for (size_t i = 0; i < bits_.size(); ++i) {
      uint64_t expect = v ? ~uint64_t(0) : 0;
      if (n_vars_ < 6 && i == 0) {
        uint64_t m = (uint64_t(1) << size()) - 1;
        if ((bits_[0] & m) != (expect & m)) return false;
      } else if (bits_[i] != expect) {
        return false;
      }
    }
    return true;
  }

  TruthTable cofactor(int var, bool value) const {
    TruthTable out(n_vars_);
    for (uint64_t m = 0; m < size(); ++m) {
      uint64_t src = (m & ~(uint64_t(1) << var)) | (uint64_t(value) << var);
      out.set(m, get(src));
    }
    return out;
  }

  uint16_t as_u16() const { return uint16_t(bits_[0]); }

  const std::vector<uint64_t>& words() const { return bits_; }
  std::vector<uint64_t>& words() { return bits_; }

  bool operator==(const TruthTable&) const = default;

private:
  static size_t words_for(int n_vars) {
    return n_vars >= 6 ? (size_t(1) << (n_vars - 6)) : 1;
  }
  void mask_tail() {
    if (n_vars_ < 6) bits_[0] &= (uint64_t(1) << size()) - 1;
  }

  int n_vars_;
  std::vector<uint64_t> bits_;
};

}  // namespace htforge
