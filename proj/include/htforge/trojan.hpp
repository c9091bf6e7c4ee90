#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "htforge/aig.hpp"
#include "htforge/common.hpp"
#include "htforge/equiv.hpp"
#include "htforge/prng.hpp"

namespace htforge {

HTFORGE_DEFINE_ERROR(InsufficientRareNets)
HTFORGE_DEFINE_ERROR(NoValidPayload)
HTFORGE_DEFINE_ERROR(StealthViolation)
HTFORGE_DEFINE_ERROR(IneffectiveTrojan)

// Per-net probability of logic 1 under uniform i.i.d. inputs, indexed by
// node id. n_samples records how many vectors backed the estimate.
struct SignalProbMap {
  std::vector<double> p_one;
  uint64_t n_samples = 0;

  size_t n_nets() const { return p_one.size(); }
  // Rarity of a net: probability of its less likely value.
  double rarity(uint32_t node) const { return std::min(p_one[node], 1.0 - p_one[node]); }
  // The value the net takes with minimal probability (ties lean to 1).
  bool rare_polarity(uint32_t node) const { return p_one[node] <= 0.5; }
};

// Monte-Carlo estimate with at least 1024 vectors (rounded up to whole
// 64-bit words), seeded and deterministic.
inline SignalProbMap estimate_signal_probs(const Aig& g, uint64_t n_vectors, uint64_t seed) {
  if (n_vectors < 1024)
    throw InvalidArgument("signal probability estimation needs >= 1024 vectors");
  SplitMix64 rng(seed);
  uint64_t chunks = (n_vectors + 63) / 64;
  std::vector<uint64_t> ones(g.n_nodes(), 0);
  std::vector<uint64_t> pi(g.n_pis());
  for (uint64_t c = 0; c < chunks; ++c) {
    for (uint32_t i = 0; i < g.n_pis(); ++i) pi[i] = rng.next();
    std::vector<uint64_t> w = g.eval_words(pi);
    for (uint32_t n = 0; n < g.n_nodes(); ++n) ones[n] += uint64_t(__builtin_popcountll(w[n]));
  }
  SignalProbMap m;
  m.n_samples = chunks * 64;
  m.p_one.resize(g.n_nodes());
  for (uint32_t n = 0; n < g.n_nodes(); ++n) m.p_one[n] = double(ones[n]) / double(m.n_samples);
  return m;
}

// Exact probabilities by exhaustive enumeration (up to 16 inputs).
inline SignalProbMap exhaustive_signal_probs(const Aig& g) {
  if (g.n_pis() > 16) throw Overflow("exhaustive signal probabilities limited to 16 inputs");
  uint64_t total = uint64_t(1) << g.n_pis();
  std::vector<uint64_t> ones(g.n_nodes(), 0);
  std::vector<uint64_t> pi(g.n_pis());
  for (uint64_t base = 0; base < total; base += 64) {
    uint64_t cnt = std::min<uint64_t>(64, total - base);
    uint64_t mask = cnt == 64 ? ~uint64_t(0) : ((uint64_t(1) << cnt) - 1);
    for (uint32_t i = 0; i < g.n_pis(); ++i) {
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
    for (uint32_t n = 0; n < g.n_nodes(); ++n)
      ones[n] += uint64_t(__builtin_popcountll(w[n] & mask));
  }
  SignalProbMap m;
  m.n_samples = total;
  m.p_one.resize(g.n_nodes());
  for (uint32_t n = 0; n < g.n_nodes(); ++n) m.p_one[n] = double(ones[n]) / double(total);
  return m;
}

struct TriggerSpec {
  struct Member {
    uint32_t node = 0;
    bool polarity = true;  // required value of the net
    double prob = 0.0;     // P(net == polarity)

    bool operator==(const Member&) const = default;
  };
  std::vector<Member> nets;
  double theta = 0.1;
  double estimated_activation = 0.0;  // product of member rarities

  bool operator==(const TriggerSpec&) const = default;
};

// Seed-driven sample of r distinct nets whose rare polarity has probability
// <= theta. Candidates are ordered by ascending (probability, net id)
// before sampling, so the result is a pure function of the arguments.
inline TriggerSpec select_trigger(const SignalProbMap& probs, int r, double theta,
                                  uint64_t seed) {
  if (r < 2 || r > 8) throw InvalidArgument("trigger arity must be in [2, 8]");
  struct Cand {
    double prob;
    uint32_t node;
    bool polarity;
  };
  std::vector<Cand> cands;
  for (uint32_t n = 1; n < probs.n_nets(); ++n) {
    double rar = probs.rarity(n);
    // rarity 0 means the value was never observed (or is unreachable); a
    // trigger on such a net could never fire, so it is not a candidate.
    if (rar > 0.0 && rar <= theta) cands.push_back({rar, n, probs.rare_polarity(n)});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.prob != b.prob) return a.prob < b.prob;
    return a.node < b.node;
  });
  if (cands.size() < size_t(r))
    throw InsufficientRareNets("only " + std::to_string(cands.size()) +
                               " nets at rarity <= " + std::to_string(theta) +
                               ", need " + std::to_string(r));
  SplitMix64 rng(seed);
  for (int i = 0; i < r; ++i) {
    size_t j = i + rng.below(cands.size() - i);
    std::swap(cands[i], cands[j]);
  }
  cands.resize(size_t(r));
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.prob != b.prob) return a.prob < b.prob;
    return a.node < b.node;
  });
  TriggerSpec t;
  t.theta = theta;
  t.estimated_activation = 1.0;
  for (const Cand& c : cands) {
    t.nets.push_back({c.node, c.polarity, c.prob});
    t.estimated_activation *= c.prob;
  }
  return t;
}

struct TrojanRecord {
  TriggerSpec trigger;      // node ids refer to the pre-insertion graph
  uint32_t payload_node = 0;
  std::string payload_kind = "xor_flip";
  std::string instance_id;
  uint64_t seed = 0;
};

struct InsertionResult {
  Aig infected;
  TrojanRecord record;
};

// Inserts the Trojan: an AND tree over the polarity-adjusted trigger
// literals gates an XOR flip on a seed-chosen payload net. The payload is
// drawn uniformly from AND nodes that reach a primary output and are
// outside the trigger literals' transitive fan-in (which rules out
// combinational cycles by construction).
inline InsertionResult insert_trojan(const Aig& g, const TriggerSpec& t, uint64_t seed) {
  // Nodes reaching a primary output.
  std::vector<bool> reaches_po(g.n_nodes(), false);
  {
    std::vector<uint32_t> stack;
    for (size_t o = 0; o < g.n_pos(); ++o) stack.push_back(g.po_lit(o).node());
    while (!stack.empty()) {
      uint32_t id = stack.back();
      stack.pop_back();
      if (reaches_po[id]) continue;
      reaches_po[id] = true;
      if (g.is_and(id)) {
        stack.push_back(g.fanin0(id).node());
        stack.push_back(g.fanin1(id).node());
      }
    }
  }
  // Transitive fan-in of the trigger nets (the nets included).
  std::vector<bool> in_trigger_cone(g.n_nodes(), false);
  {
    std::vector<uint32_t> stack;
    for (const auto& m : t.nets) stack.push_back(m.node);
    while (!stack.empty()) {
      uint32_t id = stack.back();
      stack.pop_back();
      if (in_trigger_cone[id]) continue;
      in_trigger_cone[id] = true;
      if (g.is_and(id)) {
        stack.push_back(g.fanin0(id).node());
        stack.push_back(g.fanin1(id).node());
      }
    }
  }
  std::vector<uint32_t> eligible;
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (reaches_po[id] && !in_trigger_cone[id]) eligible.push_back(id);
  }
  if (eligible.empty()) throw NoValidPayload("no payload net outside the trigger cone reaches an output");
  SplitMix64 rng(seed);
  uint32_t payload = eligible[rng.below(eligible.size())];

  // Transitive fan-out of the payload (strict).
  std::vector<bool> downstream(g.n_nodes(), false);
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (id == payload) continue;
    uint32_t a = g.fanin0(id).node(), b = g.fanin1(id).node();
    if (a == payload || b == payload || downstream[a] || downstream[b]) downstream[id] = true;
  }

  Aig out(g.pi_names());
  std::vector<Lit> map(g.n_nodes(), lit_false);
  for (uint32_t i = 0; i < g.n_pis(); ++i) map[1 + i] = out.pi_lit(i);
  // Pass A: everything not downstream of the payload copies verbatim.
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (downstream[id]) continue;
    Lit a = g.fanin0(id), b = g.fanin1(id);
    map[id] = out.and2(map[a.node()] ^ a.complemented(), map[b.node()] ^ b.complemented());
  }
  // Pass B: trigger tree and the XOR payload flip. Trigger nets are never
  // downstream of the payload, so their copies are already in place.
  std::vector<Lit> trig_lits;
  for (const auto& m : t.nets) trig_lits.push_back(map[m.node] ^ !m.polarity);
  Lit trigger = out.and_reduce(trig_lits);
  Lit flipped = out.xor2(map[payload], trigger);
  // Pass C: rebuild the payload's fan-out against the flipped literal.
  auto mapped = [&](Lit l) {
    Lit base = l.node() == payload ? flipped : map[l.node()];
    return base ^ l.complemented();
  };
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    if (!downstream[id]) continue;
    map[id] = out.and2(mapped(g.fanin0(id)), mapped(g.fanin1(id)));
  }
  for (size_t o = 0; o < g.n_pos(); ++o) out.add_po(g.po_name(o), mapped(g.po_lit(o)));

  InsertionResult res{cleanup(out), TrojanRecord{}};
  res.record.trigger = t;
  res.record.payload_node = payload;
  res.record.seed = seed;
  return res;
}

struct ValidationReport {
  std::vector<bool> witness;  // one input vector exposing the deviation
  bool stealth_ok = false;
  bool effective = false;
};

struct TrojanParams {
  int r = 4;
  double theta = 0.1;
  int max_attempts = 32;
};

// Proves the stealth/effectiveness dichotomy with SAT: the miter must be
// satisfiable (some deviation exists) while miter AND NOT trigger must be
// unsatisfiable (no deviation without trigger activation). The witness is
// replayed through simulation before returning.
inline ValidationReport validate_trojan(const Aig& original, const Aig& infected,
                                        const TrojanRecord& rec,
                                        uint64_t conflict_budget = 10'000'000) {
  MiterResult m = build_miter(original, infected);
  if (m.output == lit_false)
    throw IneffectiveTrojan("infected circuit is equivalent to the original");

  // Trigger condition expressed over the original side of the miter.
  std::vector<Lit> trig_lits;
  for (const auto& mem : rec.trigger.nets)
    trig_lits.push_back(m.a_map[mem.node] ^ !mem.polarity);
  Lit trigger = m.miter.and_reduce(trig_lits);

  TseitinResult ts = tseitin_cnf(m.miter);
  SatSolver solver(ts.cnf, conflict_budget);

  SatResult eff = solver.solve({ts.lit_of(m.output)});
  if (!eff.is_sat())
    throw IneffectiveTrojan("no input makes the infected circuit deviate");
  ValidationReport rep;
  rep.effective = true;
  rep.witness.resize(original.n_pis());
  for (uint32_t i = 0; i < original.n_pis(); ++i)
    rep.witness[i] = eff.model[ts.var_of_node(1 + i) - 1];
  {
    BitMatrix in(1, original.n_pis());
    for (uint32_t i = 0; i < original.n_pis(); ++i) in.set(0, i, rep.witness[i]);
    if (sim_aig(original, in) == sim_aig(infected, in))
      throw Error("InternalCheckFailed", "validation witness does not replay");
  }

  if (trigger == lit_true) {
    rep.stealth_ok = true;  // NOT trigger is unsatisfiable outright
    return rep;
  }
  if (trigger == lit_false)
    throw StealthViolation("deviation exists but the trigger is constant false");
  SatResult st = solver.solve({ts.lit_of(m.output), ts.lit_of(~trigger)});
  if (st.is_sat()) {
    std::string v;
    for (uint32_t i = 0; i < original.n_pis(); ++i)
      v += st.model[ts.var_of_node(1 + i) - 1] ? '1' : '0';
    throw StealthViolation("deviation without trigger activation, witness " + v);
  }
  rep.stealth_ok = true;
  return rep;
}

// Insertion with seeded retries: a trigger drawn from rare nets can be
// jointly unsatisfiable on small circuits, or its fan-in cones can swallow
// every payload candidate. Attempts walk a derived seed sequence; every
// eighth failing attempt steps the trigger arity down (never below 2) to
// shrink the excluded cone. Every emitted Trojan carries a validation
// proof. Deterministic in (g, probs, p, seed).
inline InsertionResult insert_valid_trojan(const Aig& g, const SignalProbMap& probs,
                                           const TrojanParams& p, uint64_t seed) {
  std::string last = "no attempt made";
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    int r = std::max(2, p.r - attempt / 8);
    try {
      TriggerSpec t = select_trigger(probs, r, p.theta, derive_seed(seed, 0x7716, attempt));
      InsertionResult ins = insert_trojan(g, t, derive_seed(seed, 0xbad5eed, attempt));
      validate_trojan(g, ins.infected, ins.record);
      return ins;
    } catch (const IneffectiveTrojan& e) {
      last = e.what();
    } catch (const NoValidPayload& e) {
      last = e.what();
    } catch (const InsufficientRareNets& e) {
      last = e.what();
    }
  }
  throw IneffectiveTrojan("no valid trojan after " + std::to_string(p.max_attempts) +
                          " attempts (last: " + last + ")");
}

}  // namespace htforge
