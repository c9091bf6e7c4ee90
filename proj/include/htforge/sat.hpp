#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "htforge/common.hpp"

namespace htforge {

// CNF in DIMACS conventions: variables 1..n_vars, literals +v / -v.
struct Cnf {
  int n_vars = 0;
  std::vector<std::vector<int>> clauses;

  void add_clause(std::vector<int> lits) {
    for (int l : lits) {
      if (l == 0) throw InvalidArgument("literal 0 is reserved in DIMACS");
      n_vars = std::max(n_vars, std::abs(l));
    }
    clauses.push_back(std::move(lits));
  }

  std::string to_dimacs() const {
    std::ostringstream os;
    os << "p cnf " << n_vars << " " << clauses.size() << "\n";
    for (const auto& c : clauses) {
      for (int l : c) os << l << " ";
      os << "0\n";
    }
    return os.str();
  }
};

enum class SatStatus { Sat, Unsat };

struct SatResult {
  SatStatus status = SatStatus::Unsat;
  std::vector<bool> model;  // model[v-1] holds variable v; filled iff Sat

  bool is_sat() const { return status == SatStatus::Sat; }
};

HTFORGE_DEFINE_ERROR(ResourceLimit)

// CDCL solver: two-watched-literal propagation, first-UIP clause learning
// with local minimization, VSIDS decisions (decay 0.95), phase saving and
// Luby restarts (base 64). Deterministic: ties break on variable index and
// the default phase is false. Assumptions are decided first, minisat-style.
class SatSolver {
public:
  explicit SatSolver(const Cnf& f, uint64_t conflict_budget = 10'000'000)
      : n_(f.n_vars), budget_(conflict_budget) {
    value_.assign(n_, -1);
    level_.assign(n_, 0);
    reason_.assign(n_, -1);
    activity_.assign(n_, 0.0);
    phase_.assign(n_, 0);
    seen_.assign(n_, 0);
    watches_.assign(2 * n_, {});
    for (const auto& c : f.clauses) add_clause_internal(c, false);
    for (int v = 0; v < n_; ++v) order_.push({0.0, v});
  }

  // Decides the formula under the given assumptions (DIMACS literals).
  SatResult solve(const std::vector<int>& assumptions = {}) {
    SatResult res;
    if (!ok_) return res;  // Unsat at the root
    backtrack(0);
    uint64_t conflicts = 0, restart_count = 0;
    uint64_t restart_limit = 64 * luby(++restart_count);
    uint64_t conflicts_since_restart = 0;

    for (;;) {
      int confl = propagate();
      if (confl >= 0) {
        ++conflicts;
        ++conflicts_since_restart;
        if (conflicts > budget_)
          throw ResourceLimit("conflict budget " + std::to_string(budget_) + " exceeded");
        if (decision_level() == 0) {
          ok_ = false;
          return res;
        }
        std::vector<int> learnt;
        int bt = analyze(confl, learnt);
        backtrack(bt);
        if (learnt.size() == 1) {
          enqueue(learnt[0], -1);
        } else {
          int cref = add_learnt(learnt);
          enqueue(learnt[0], cref);
        }
        var_inc_ /= 0.95;
        if (var_inc_ > 1e100) rescale_activity();
      } else {
        if (conflicts_since_restart >= restart_limit && decision_level() > int(assumptions.size())) {
          conflicts_since_restart = 0;
          restart_limit = 64 * luby(++restart_count);
          backtrack(int(assumptions.size()));
          continue;
        }
        // Apply pending assumptions, then branch.
        if (decision_level() < int(assumptions.size())) {
          int a = assumptions[decision_level()];
          int al = enc(a);
          int v = var_of(al);
          if (value_[v] >= 0) {
            if (value_[v] != pol(al)) return res;  // conflicts with an assumption
            new_level();                           // already satisfied; placeholder level
            continue;
          }
          new_level();
          enqueue(al, -1);
          continue;
        }
        int next = pick_branch_var();
        if (next < 0) {
          res.status = SatStatus::Sat;
          res.model.resize(n_);
          for (int v = 0; v < n_; ++v) res.model[v] = value_[v] == 1;
          return res;
        }
        new_level();
        enqueue(2 * next + (phase_[next] ? 0 : 1), -1);
      }
    }
  }

private:
  // Literal encoding: variable v (0-based) -> 2v positive, 2v+1 negative.
  static int enc(int dimacs) {
    int v = std::abs(dimacs) - 1;
    return 2 * v + (dimacs < 0 ? 1 : 0);
  }
  static int var_of(int lit) { return lit >> 1; }
  static int neg(int lit) { return lit ^ 1; }
  static int pol(int lit) { return (lit & 1) ? 0 : 1; }  // value making lit true

  struct Watcher {
    int cref;
    int blocker;
  };

  int decision_level() const { return int(trail_lim_.size()); }
  void new_level() { trail_lim_.push_back(int(trail_.size())); }

  // -2: satisfied at root and dropped; -1: empty (unsat); >= 0: clause ref.
  void add_clause_internal(std::vector<int> dimacs_lits, bool learnt) {
    std::vector<int> lits;
    lits.reserve(dimacs_lits.size());
    for (int l : dimacs_lits) lits.push_back(enc(l));
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    for (size_t i = 0; i + 1 < lits.size(); ++i)
      if (lits[i] == neg(lits[i + 1])) return;  // tautology
    if (!learnt) {
      if (lits.empty()) {
        ok_ = false;
        return;
      }
      if (lits.size() == 1) {
        int v = var_of(lits[0]);
        if (value_[v] < 0) {
          enqueue(lits[0], -1);
        } else if (value_[v] != pol(lits[0])) {
          ok_ = false;
        }
        return;
      }
    }
    int cref = int(clauses_.size());
    watches_[lits[0]].push_back({cref, lits[1]});
    watches_[lits[1]].push_back({cref, lits[0]});
    clauses_.push_back(std::move(lits));
  }

  int add_learnt(std::vector<int>& lits) {
    int cref = int(clauses_.size());
    watches_[lits[0]].push_back({cref, lits[1]});
    watches_[lits[1]].push_back({cref, lits[0]});
    clauses_.push_back(lits);
    return cref;
  }

  bool lit_true(int l) const { return value_[var_of(l)] == pol(l); }
  bool lit_false(int l) const {
    return value_[var_of(l)] >= 0 && value_[var_of(l)] != pol(l);
  }

  void enqueue(int l, int reason_cref) {
    int v = var_of(l);
    value_[v] = int8_t(pol(l));
    level_[v] = decision_level();
    reason_[v] = reason_cref;
    trail_.push_back(l);
  }

  // Returns a conflicting clause ref, or -1.
  int propagate() {
    while (qhead_ < trail_.size()) {
      int p = trail_[qhead_++];
      int fl = neg(p);  // literal that just became false
      auto& ws = watches_[fl];
      size_t keep = 0;
      for (size_t i = 0; i < ws.size(); ++i) {
        Watcher w = ws[i];
        if (lit_true(w.blocker)) {
          ws[keep++] = w;
          continue;
        }
        auto& c = clauses_[w.cref];
        if (c[0] == fl) std::swap(c[0], c[1]);
        if (lit_true(c[0])) {
          ws[keep++] = {w.cref, c[0]};
          continue;
        }
        bool moved = false;
        for (size_t k = 2; k < c.size(); ++k) {
          if (!lit_false(c[k])) {
            std::swap(c[1], c[k]);
            watches_[c[1]].push_back({w.cref, c[0]});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        // Unit or conflicting.
        ws[keep++] = {w.cref, c[0]};
        if (lit_false(c[0])) {
          for (size_t j = i + 1; j < ws.size(); ++j) ws[keep++] = ws[j];
          ws.resize(keep);
          qhead_ = trail_.size();
          return w.cref;
        }
        enqueue(c[0], w.cref);
      }
      ws.resize(keep);
    }
    return -1;
  }

  void bump(int v) {
    activity_[v] += var_inc_;
    order_.push({activity_[v], v});
  }

  void rescale_activity() {
    for (int v = 0; v < n_; ++v) activity_[v] *= 1e-100;
    var_inc_ *= 1e-100;
    order_ = {};
    for (int v = 0; v < n_; ++v)
      if (value_[v] < 0) order_.push({activity_[v], v});
  }

  // First-UIP learning. Returns the backtrack level; learnt[0] is the
  // asserting literal.
  int analyze(int confl, std::vector<int>& learnt) {
    learnt.assign(1, 0);
    std::vector<int> to_clear;
    int path = 0, p = -1;
    int index = int(trail_.size()) - 1;
    do {
      const auto& c = clauses_[confl];
      for (int q : c) {
        if (p >= 0 && q == p) continue;
        int v = var_of(q);
        if (!seen_[v] && level_[v] > 0) {
          seen_[v] = 1;
          to_clear.push_back(v);
          bump(v);
          if (level_[v] >= decision_level()) {
            ++path;
          } else {
            learnt.push_back(q);
          }
        }
      }
      while (!seen_[var_of(trail_[index])]) --index;
      p = trail_[index];
      --index;
      confl = reason_[var_of(p)];
      seen_[var_of(p)] = 0;  // keep `seen` = learnt-clause vars only
      --path;
    } while (path > 0);
    learnt[0] = neg(p);

    // Local minimization: drop literals implied by the rest of the clause.
    size_t keep = 1;
    for (size_t i = 1; i < learnt.size(); ++i) {
      int v = var_of(learnt[i]);
      int r = reason_[v];
      bool redundant = r >= 0;
      if (redundant) {
        for (int q : clauses_[r]) {
          int qv = var_of(q);
          if (qv != v && !seen_[qv] && level_[qv] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant) learnt[keep++] = learnt[i];
    }
    learnt.resize(keep);
    for (int v : to_clear) seen_[v] = 0;

    int bt = 0;
    size_t max_i = 1;
    for (size_t i = 1; i < learnt.size(); ++i) {
      if (level_[var_of(learnt[i])] > bt) {
        bt = level_[var_of(learnt[i])];
        max_i = i;
      }
    }
    if (learnt.size() > 1) std::swap(learnt[1], learnt[max_i]);
    return bt;
  }

  void backtrack(int target) {
    if (decision_level() <= target) return;
    int limit = trail_lim_[target];
    for (int i = int(trail_.size()) - 1; i >= limit; --i) {
      int v = var_of(trail_[i]);
      phase_[v] = int8_t(value_[v]);
      value_[v] = -1;
      reason_[v] = -1;
      order_.push({activity_[v], v});
    }
    trail_.resize(limit);
    trail_lim_.resize(target);
    qhead_ = trail_.size();
  }

  int pick_branch_var() {
    while (!order_.empty()) {
      auto [act, v] = order_.top();
      order_.pop();
      if (value_[v] < 0 && act == activity_[v]) return v;
    }
    for (int v = 0; v < n_; ++v)
      if (value_[v] < 0) return v;  // safety net for stale heap entries
    return -1;
  }

  static uint64_t luby(uint64_t i) {
    // Luby sequence 1,1,2,1,1,2,4,...
    uint64_t k = 1;
    while ((uint64_t(1) << (k + 1)) - 1 <= i) ++k;
    while ((uint64_t(1) << k) - 1 != i) {
      i = i - ((uint64_t(1) << (k - 1)) - 1) - 1;
      k = 1;
      while ((uint64_t(1) << (k + 1)) - 1 <= i) ++k;
    }
    return uint64_t(1) << (k - 1);
  }

  struct OrderCmp {
    bool operator()(const std::pair<double, int>& a, const std::pair<double, int>& b) const {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;  // smaller variable wins ties
    }
  };

  int n_;
  uint64_t budget_;
  bool ok_ = true;
  std::vector<std::vector<int>> clauses_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<int8_t> value_, phase_;
  std::vector<int> level_, reason_;
  std::vector<int> trail_, trail_lim_;
  size_t qhead_ = 0;
  std::vector<char> seen_;
  std::vector<double> activity_;
  double var_inc_ = 1.0;
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, OrderCmp>
      order_;
};

// Convenience wrapper matching the operation-style interface.
inline SatResult sat_solve(const Cnf& f, const std::vector<int>& assumptions = {},
                           uint64_t conflict_budget = 10'000'000) {
  SatSolver s(f, conflict_budget);
  return s.solve(assumptions);
}

}  // namespace htforge
