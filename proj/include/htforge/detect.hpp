#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htforge/aig.hpp"
#include "htforge/benchgen.hpp"
#include "htforge/common.hpp"
#include "htforge/equiv.hpp"
#include "htforge/netlist.hpp"
#include "htforge/prng.hpp"
#include "htforge/trojan.hpp"

namespace htforge {

HTFORGE_DEFINE_ERROR(DegenerateTraining)

// --------------------------------------------------------------------------
// Golden-model detection
// --------------------------------------------------------------------------

enum class DetectStrategy { Uniform, RareGuided };

inline std::optional<DetectStrategy> detect_strategy_from(std::string s) {
  for (auto& c : s) c = char(std::tolower(unsigned(c)));
  if (s == "uniform") return DetectStrategy::Uniform;
  if (s == "rare_guided" || s == "rare-guided") return DetectStrategy::RareGuided;
  return std::nullopt;
}

struct GoldenDetectResult {
  bool infected = false;
  uint64_t queries_used = 0;
  std::optional<std::vector<bool>> witness;
};

namespace detail {

// Per-net logic-1 counts for a netlist under the given number of vectors.
// Exhaustive when the input count allows it, else seeded Monte-Carlo.
inline std::pair<std::vector<double>, uint64_t> netlist_signal_probs(const Netlist& n,
                                                                     uint64_t mc_vectors,
                                                                     uint64_t mc_seed) {
  size_t n_in = n.inputs().size();
  std::vector<uint64_t> ones(n.n_nets(), 0);
  uint64_t samples = 0;
  if (n_in <= 16) {
    uint64_t total = uint64_t(1) << n_in;
    for (uint64_t base = 0; base < total; base += 64) {
      uint64_t cnt = std::min<uint64_t>(64, total - base);
      uint64_t mask = cnt == 64 ? ~uint64_t(0) : ((uint64_t(1) << cnt) - 1);
      std::vector<uint64_t> pi(n_in);
      for (size_t i = 0; i < n_in; ++i) {
        if (i < 6) {
          static constexpr uint64_t kVar[6] = {
              0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
              0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
          pi[i] = kVar[i];
        } else {
          pi[i] = ((base >> i) & 1) ? ~uint64_t(0) : 0;
        }
      }
      std::vector<uint64_t> w = n.eval_words(pi);
      for (size_t net = 0; net < w.size(); ++net)
        ones[net] += uint64_t(__builtin_popcountll(w[net] & mask));
    }
    samples = total;
  } else {
    SplitMix64 rng(mc_seed);
    uint64_t chunks = (mc_vectors + 63) / 64;
    std::vector<uint64_t> pi(n_in);
    for (uint64_t c = 0; c < chunks; ++c) {
      for (size_t i = 0; i < n_in; ++i) pi[i] = rng.next();
      std::vector<uint64_t> w = n.eval_words(pi);
      for (size_t net = 0; net < w.size(); ++net)
        ones[net] += uint64_t(__builtin_popcountll(w[net]));
    }
    samples = chunks * 64;
  }
  std::vector<double> p(n.n_nets());
  for (size_t net = 0; net < p.size(); ++net) p[net] = double(ones[net]) / double(samples);
  return {p, samples};
}

}  // namespace detail

// Applies up to `budget` test vectors to both circuits and flags the
// suspect as infected on the first output mismatch. With a golden model a
// mismatch is definitive, so false positives are impossible by
// construction. rare_guided biases vectors toward driving low-probability
// internal nets of the suspect to their rare values via the SAT engine.
inline GoldenDetectResult golden_model_detect(const Netlist& suspect, const Netlist& golden,
                                              uint64_t budget, DetectStrategy strategy,
                                              uint64_t seed) {
  if (suspect.input_names() != golden.input_names())
    throw InterfaceMismatch("primary input names/order differ");
  if (suspect.outputs().size() != golden.outputs().size())
    throw InterfaceMismatch("primary output counts differ");

  GoldenDetectResult res;
  size_t n_in = suspect.inputs().size();
  SplitMix64 rng(seed);

  auto scan_chunk = [&](const std::vector<uint64_t>& pi, uint64_t valid) -> bool {
    std::vector<uint64_t> ws = suspect.eval_words(pi);
    std::vector<uint64_t> wg = golden.eval_words(pi);
    uint64_t mask = valid == 64 ? ~uint64_t(0) : ((uint64_t(1) << valid) - 1);
    uint64_t diff = 0;
    for (size_t o = 0; o < suspect.outputs().size(); ++o)
      diff |= (ws[suspect.outputs()[o]] ^ wg[golden.outputs()[o]]) & mask;
    if (diff == 0) {
      res.queries_used += valid;
      return false;
    }
    uint64_t first = uint64_t(__builtin_ctzll(diff));
    res.queries_used += first + 1;
    std::vector<bool> w(n_in);
    for (size_t i = 0; i < n_in; ++i) w[i] = (pi[i] >> first) & 1;
    res.witness = std::move(w);
    res.infected = true;
    return true;
  };

  if (strategy == DetectStrategy::Uniform) {
    uint64_t applied = 0;
    while (applied < budget) {
      uint64_t valid = std::min<uint64_t>(64, budget - applied);
      std::vector<uint64_t> pi(n_in);
      for (size_t i = 0; i < n_in; ++i) pi[i] = rng.next();
      if (scan_chunk(pi, valid)) return res;
      applied += valid;
    }
    return res;
  }

  // rare_guided: one SAT-derived vector at a time.
  Aig g = from_netlist(suspect);
  SignalProbMap probs = g.n_pis() <= 16
                            ? exhaustive_signal_probs(g)
                            : estimate_signal_probs(g, 65536, derive_seed(seed, 0x4a2e));
  std::vector<uint32_t> candidates;
  for (uint32_t i = 0; i < g.n_ands(); ++i) {
    uint32_t id = g.and_node_id(i);
    double rar = probs.rarity(id);
    if (rar > 0.0 && rar < 0.1) candidates.push_back(id);
  }
  TseitinResult ts = tseitin_cnf(g);
  for (uint64_t q = 0; q < budget; ++q) {
    std::vector<uint64_t> pi(n_in);
    for (size_t i = 0; i < n_in; ++i) pi[i] = rng.next() & 1;
    if (!candidates.empty()) {
      uint32_t target = candidates[rng.below(candidates.size())];
      Lit want(target, !probs.rare_polarity(target));
      SatSolver solver(ts.cnf);
      SatResult sr = solver.solve({ts.lit_of(want)});
      if (sr.is_sat()) {
        // Keep the assignment on the target's support, leave the rest of
        // the vector random.
        std::vector<bool> in_support(g.n_nodes(), false);
        std::vector<uint32_t> stack{target};
        while (!stack.empty()) {
          uint32_t id = stack.back();
          stack.pop_back();
          if (in_support[id]) continue;
          in_support[id] = true;
          if (g.is_and(id)) {
            stack.push_back(g.fanin0(id).node());
            stack.push_back(g.fanin1(id).node());
          }
        }
        for (size_t i = 0; i < n_in; ++i)
          if (in_support[1 + i]) pi[i] = sr.model[ts.var_of_node(uint32_t(1 + i)) - 1] ? 1 : 0;
      }
    }
    if (scan_chunk(pi, 1)) return res;
  }
  return res;
}

// --------------------------------------------------------------------------
// Structural features
// --------------------------------------------------------------------------

inline constexpr size_t kFeatureDim = 64;
using FeatureVector = std::array<double, kFeatureDim>;

// Fixed 64-entry layout (indices documented in docs/features.md):
//   0-7   normalized gate-kind histogram [AND,NAND,OR,NOR,XOR,XNOR,NOT,BUF]
//   8-11  n_inputs, n_outputs, n_gates, netlist depth
//   12-13 AIG n_ands, AIG n_levels
//   14-20 gate fan-in quantiles  {min,p10,p25,p50,p75,p90,max}
//   21-27 net fan-out quantiles  {min,p10,p25,p50,p75,p90,max}
//   28-31 count of nets with P(net=1) below {0.25, 0.1, 0.05, 0.01}
//   32-47 16-bin histogram of P(net=1), normalized by net count
//   48-55 8-bin histogram of gate depth / circuit depth, normalized
//   56-63 ratio features: gates/input, ands/gate, aig-levels/depth,
//         mean fan-in, mean fan-out, inverting fraction, ands/input,
//         mean P(net=1)
// Signal probabilities are exhaustive up to 16 inputs, else a 65,536-vector
// Monte-Carlo run with fixed seed 0.
inline FeatureVector extract_features(const Netlist& c) {
  FeatureVector f{};
  const auto& gates = c.gates();
  size_t n_gates = gates.size();
  CircuitStats stats = circuit_stats(c);

  for (const Gate& g : gates) f[size_t(g.kind)] += 1.0;
  if (n_gates > 0)
    for (size_t i = 0; i < 8; ++i) f[i] /= double(n_gates);

  f[8] = double(c.inputs().size());
  f[9] = double(c.outputs().size());
  f[10] = double(n_gates);
  f[11] = double(stats.depth);

  Aig g = from_netlist(c);
  Aig::Metrics m = g.metrics();
  f[12] = double(m.n_ands);
  f[13] = double(m.n_levels);

  auto quantiles = [](std::vector<double> v) -> std::array<double, 7> {
    std::array<double, 7> q{};
    if (v.empty()) return q;
    std::sort(v.begin(), v.end());
    const double ps[7] = {0.0, 0.10, 0.25, 0.50, 0.75, 0.90, 1.0};
    for (int i = 0; i < 7; ++i)
      q[size_t(i)] = v[size_t(ps[i] * double(v.size() - 1) + 0.5)];
    return q;
  };

  std::vector<double> fanins;
  for (const Gate& gt : gates) fanins.push_back(double(gt.inputs.size()));
  std::array<double, 7> qin = quantiles(fanins);
  for (int i = 0; i < 7; ++i) f[size_t(14 + i)] = qin[size_t(i)];

  std::vector<double> fanouts(c.n_nets(), 0.0);
  for (const Gate& gt : gates)
    for (int in : gt.inputs) fanouts[size_t(in)] += 1.0;
  for (int out : c.outputs()) fanouts[size_t(out)] += 1.0;
  std::array<double, 7> qout = quantiles(fanouts);
  for (int i = 0; i < 7; ++i) f[size_t(21 + i)] = qout[size_t(i)];

  auto [probs, samples] = detail::netlist_signal_probs(c, 65536, 0);
  (void)samples;
  const double thresholds[4] = {0.25, 0.1, 0.05, 0.01};
  for (double p : probs) {
    for (int t = 0; t < 4; ++t)
      if (p < thresholds[t]) f[size_t(28 + t)] += 1.0;
    int bin = std::min(15, int(p * 16.0));
    f[size_t(32 + bin)] += 1.0 / double(probs.size());
    f[63] += p / double(probs.size());
  }

  std::vector<size_t> level(c.n_nets(), 0);
  for (int gi : c.topo_order()) {
    const Gate& gt = gates[size_t(gi)];
    size_t lv = 0;
    for (int in : gt.inputs) lv = std::max(lv, level[size_t(in)]);
    level[size_t(gt.output)] = lv + 1;
    double rel = stats.depth == 0 ? 0.0 : double(lv + 1) / double(stats.depth);
    int bin = std::min(7, int(rel * 8.0));
    if (n_gates > 0) f[size_t(48 + bin)] += 1.0 / double(n_gates);
  }

  double mean_fanin = 0.0, mean_fanout = 0.0;
  for (double v : fanins) mean_fanin += v;
  for (double v : fanouts) mean_fanout += v;
  f[56] = double(n_gates) / std::max(1.0, f[8]);
  f[57] = n_gates == 0 ? 0.0 : double(m.n_ands) / double(n_gates);
  f[58] = stats.depth == 0 ? 0.0 : double(m.n_levels) / double(stats.depth);
  f[59] = n_gates == 0 ? 0.0 : mean_fanin / double(n_gates);
  f[60] = mean_fanout / double(c.n_nets());
  f[61] = n_gates == 0 ? 0.0 : (f[1] + f[3] + f[6] + f[5]);  // NAND+NOR+NOT+XNOR fractions
  f[62] = double(m.n_ands) / std::max(1.0, f[8]);
  return f;
}

// --------------------------------------------------------------------------
// k-NN classification
// --------------------------------------------------------------------------

struct TrainingScenario {
  std::string id;
  std::vector<FeatureVector> features;
  std::vector<bool> labels;  // true = infected
};

struct KnnResult {
  std::vector<bool> verdicts;
  std::vector<double> scores;  // fraction of infected neighbors
};

// Majority vote over the k nearest training points in train-standardized
// Euclidean space. k must be odd so ties are impossible.
inline KnnResult knn_classify(const TrainingScenario& train,
                              const std::vector<FeatureVector>& test, int k = 3) {
  size_t n = train.features.size();
  if (n == 0 || train.labels.size() != n)
    throw DegenerateTraining("training set empty or label count mismatch");
  if (k < 1 || k % 2 == 0 || size_t(k) > n)
    throw DegenerateTraining("k must be odd and at most the training size");
  bool has_pos = false, has_neg = false;
  for (bool b : train.labels) (b ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DegenerateTraining("training set contains a single class");

  // Standardize by train mean/stddev; zero-variance features fall back to
  // unit scale.
  std::array<double, kFeatureDim> mean{}, sd{};
  for (const auto& fv : train.features)
    for (size_t d = 0; d < kFeatureDim; ++d) mean[d] += fv[d] / double(n);
  for (const auto& fv : train.features)
    for (size_t d = 0; d < kFeatureDim; ++d) sd[d] += (fv[d] - mean[d]) * (fv[d] - mean[d]);
  for (size_t d = 0; d < kFeatureDim; ++d) {
    sd[d] = std::sqrt(sd[d] / double(n));
    if (sd[d] < 1e-12) sd[d] = 1.0;
  }
  auto standardize = [&](const FeatureVector& fv) {
    std::array<double, kFeatureDim> out;
    for (size_t d = 0; d < kFeatureDim; ++d) out[d] = (fv[d] - mean[d]) / sd[d];
    return out;
  };
  std::vector<std::array<double, kFeatureDim>> ztrain;
  ztrain.reserve(n);
  for (const auto& fv : train.features) ztrain.push_back(standardize(fv));

  KnnResult res;
  for (const auto& fv : test) {
    auto z = standardize(fv);
    std::vector<std::pair<double, size_t>> dist;
    dist.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      double d2 = 0;
      for (size_t d = 0; d < kFeatureDim; ++d) {
        double diff = z[d] - ztrain[i][d];
        d2 += diff * diff;
      }
      dist.push_back({d2, i});
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    int infected = 0;
    for (int i = 0; i < k; ++i)
      if (train.labels[dist[size_t(i)].second]) ++infected;
    res.verdicts.push_back(infected * 2 > k);
    res.scores.push_back(double(infected) / double(k));
  }
  return res;
}

// --------------------------------------------------------------------------
// Per-(circuit, pipeline) detection heatmap
// --------------------------------------------------------------------------

struct Heatmap {
  struct Cell {
    uint64_t infected = 0;
    uint64_t detected = 0;
    bool present() const { return infected > 0; }
    double rate() const { return present() ? double(detected) / double(infected) : 0.0; }
  };

  std::vector<std::string> circuits;  // rows, sorted
  std::vector<int> pipelines;         // columns, sorted
  std::vector<std::vector<Cell>> cells;

  // Header row of pipeline ids; absent cells stay empty rather than zero.
  std::string to_csv() const {
    std::string out = "circuit";
    for (int p : pipelines) out += ",p" + std::to_string(p);
    out += "\n";
    char buf[32];
    for (size_t r = 0; r < circuits.size(); ++r) {
      out += circuits[r];
      for (size_t c = 0; c < pipelines.size(); ++c) {
        out += ",";
        if (cells[r][c].present()) {
          std::snprintf(buf, sizeof buf, "%.2f", 100.0 * cells[r][c].rate());
          out += buf;
        }
      }
      out += "\n";
    }
    return out;
  }
};

// True-positive percentage per (source circuit, pipeline) over the infected
// instances, mirroring a per-method detection accuracy grid.
inline Heatmap heatmap_accuracy(const std::vector<ManifestInstance>& instances,
                                const std::map<std::string, bool>& verdicts,
                                const std::map<std::string, bool>& labels) {
  Heatmap h;
  for (const auto& e : instances) {
    if (std::find(h.circuits.begin(), h.circuits.end(), e.source) == h.circuits.end())
      h.circuits.push_back(e.source);
    if (std::find(h.pipelines.begin(), h.pipelines.end(), e.pipeline) == h.pipelines.end())
      h.pipelines.push_back(e.pipeline);
  }
  std::sort(h.circuits.begin(), h.circuits.end());
  std::sort(h.pipelines.begin(), h.pipelines.end());
  h.cells.assign(h.circuits.size(), std::vector<Heatmap::Cell>(h.pipelines.size()));
  for (const auto& e : instances) {
    auto lit = labels.find(e.instance_id);
    if (lit == labels.end() || !lit->second) continue;  // clean or unknown
    size_t r = size_t(std::find(h.circuits.begin(), h.circuits.end(), e.source) -
                      h.circuits.begin());
    size_t c = size_t(std::find(h.pipelines.begin(), h.pipelines.end(), e.pipeline) -
                      h.pipelines.begin());
    auto vit = verdicts.find(e.instance_id);
    if (vit == verdicts.end()) throw MissingVerdict("no verdict for instance " + e.instance_id);
    h.cells[r][c].infected++;
    if (vit->second) h.cells[r][c].detected++;
  }
  return h;
}

}  // namespace htforge
