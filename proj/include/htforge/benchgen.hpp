#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "htforge/aig.hpp"
#include "htforge/common.hpp"
#include "htforge/equiv.hpp"
#include "htforge/netlist.hpp"
#include "htforge/prng.hpp"
#include "htforge/restructure.hpp"
#include "htforge/trojan.hpp"

namespace htforge {

using ordered_json = nlohmann::ordered_json;

HTFORGE_DEFINE_ERROR(DigestMismatch)
HTFORGE_DEFINE_ERROR(ValidationFailed)
HTFORGE_DEFINE_ERROR(MissingVerdict)
HTFORGE_DEFINE_ERROR(IoError)

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("InternalCheckFailed", "EVP_Digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

inline std::string bytes_to_hex(const std::vector<uint8_t>& bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (uint8_t b : bytes) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

inline std::vector<uint8_t> hex_to_bytes(const std::string& s) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw InvalidArgument("bad hex digit");
  };
  if (s.size() % 2) throw InvalidArgument("odd hex length");
  std::vector<uint8_t> out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = uint8_t(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return out;
}

// Digest of (instance_id || label || salt); the public side of the sealed
// answer key.
inline std::string seal_digest(const std::string& instance_id, const std::string& label,
                               const std::vector<uint8_t>& salt) {
  std::string blob = instance_id + label;
  blob.append(reinterpret_cast<const char*>(salt.data()), salt.size());
  return sha256_hex(blob);
}

inline std::map<std::string, std::string> seal_labels(
    const std::vector<std::pair<std::string, std::string>>& labels,
    const std::vector<uint8_t>& salt) {
  if (salt.size() < 16) throw InvalidArgument("salt must be at least 16 bytes");
  std::map<std::string, std::string> out;
  for (const auto& [id, label] : labels) out[id] = seal_digest(id, label, salt);
  return out;
}

// --------------------------------------------------------------------------
// Bundle configuration
// --------------------------------------------------------------------------

struct BundleConfig {
  enum class Mode { Sampled, Grid };
  enum class Order { InsertThenRestructure, RestructureThenInsert };

  std::string bundle_id = "bundle";
  std::vector<std::string> sources;  // paths to BENCH files

  Mode mode = Mode::Sampled;
  // sampled mode
  uint64_t n_instances = 1;
  double p_infect = 0.5;
  std::optional<uint64_t> fixed_k;
  // grid mode: every source gets hts_per_source Trojans, each restructured
  // under every selected pipeline; clean_per_source clean replicas likewise.
  uint64_t hts_per_source = 0;
  uint64_t clean_per_source = 0;

  std::vector<int> pipelines = {1, 2,  3,  4,  5,  6,  7,  8,  9,
                                10, 11, 12, 13, 14, 15, 16, 17, 18};
  uint64_t master_seed = 0;
  int trigger_r = 4;
  double theta = 0.1;
  int max_attempts = 32;
  Order order = Order::InsertThenRestructure;
  uint64_t prob_vectors = 65536;
  int jobs = 1;  // worker threads; has no effect on the produced bytes

  static BundleConfig from_json(const ordered_json& j) {
    BundleConfig c;
    if (j.contains("bundle_id")) c.bundle_id = j.at("bundle_id").get<std::string>();
    if (j.contains("sources")) c.sources = j.at("sources").get<std::vector<std::string>>();
    if (j.contains("mode")) {
      std::string m = j.at("mode").get<std::string>();
      if (m == "sampled") c.mode = Mode::Sampled;
      else if (m == "grid") c.mode = Mode::Grid;
      else throw InvalidArgument("mode must be 'sampled' or 'grid'");
    }
    if (j.contains("n_instances")) c.n_instances = j.at("n_instances").get<uint64_t>();
    if (j.contains("p_infect")) c.p_infect = j.at("p_infect").get<double>();
    if (j.contains("fixed_k") && !j.at("fixed_k").is_null())
      c.fixed_k = j.at("fixed_k").get<uint64_t>();
    if (j.contains("hts_per_source")) c.hts_per_source = j.at("hts_per_source").get<uint64_t>();
    if (j.contains("clean_per_source"))
      c.clean_per_source = j.at("clean_per_source").get<uint64_t>();
    if (j.contains("pipelines")) c.pipelines = j.at("pipelines").get<std::vector<int>>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("r")) c.trigger_r = j.at("r").get<int>();
    if (j.contains("theta")) c.theta = j.at("theta").get<double>();
    if (j.contains("max_attempts")) c.max_attempts = j.at("max_attempts").get<int>();
    if (j.contains("order")) {
      std::string o = j.at("order").get<std::string>();
      if (o == "insert_then_restructure") c.order = Order::InsertThenRestructure;
      else if (o == "restructure_then_insert") c.order = Order::RestructureThenInsert;
      else throw InvalidArgument("order must be 'insert_then_restructure' or 'restructure_then_insert'");
    }
    if (j.contains("prob_vectors")) c.prob_vectors = j.at("prob_vectors").get<uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    return c;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["bundle_id"] = bundle_id;
    j["sources"] = sources;
    j["mode"] = mode == Mode::Sampled ? "sampled" : "grid";
    j["n_instances"] = n_instances;
    j["p_infect"] = p_infect;
    if (fixed_k) j["fixed_k"] = *fixed_k;
    else j["fixed_k"] = nullptr;
    j["hts_per_source"] = hts_per_source;
    j["clean_per_source"] = clean_per_source;
    j["pipelines"] = pipelines;
    j["master_seed"] = master_seed;
    j["r"] = trigger_r;
    j["theta"] = theta;
    j["max_attempts"] = max_attempts;
    j["order"] = order == Order::InsertThenRestructure ? "insert_then_restructure"
                                                       : "restructure_then_insert";
    j["prob_vectors"] = prob_vectors;
    j["jobs"] = jobs;
    return j;
  }

  void validate() const {
    if (sources.empty()) throw InvalidArgument("config needs at least one source circuit");
    if (p_infect < 0.0 || p_infect > 1.0) throw InvalidArgument("p_infect must be in [0, 1]");
    if (mode == Mode::Sampled && n_instances < 1)
      throw InvalidArgument("n_instances must be >= 1");
    if (pipelines.empty()) throw InvalidArgument("config needs at least one pipeline");
    for (int p : pipelines) pipeline_spec(p);  // range check
    if (fixed_k && *fixed_k > n_instances)
      throw InvalidArgument("fixed_k cannot exceed n_instances");
  }
};

struct ManifestInstance {
  std::string instance_id;
  std::string file;
  std::string source;
  int pipeline = 0;
};

struct BenchmarkManifest {
  std::string bundle_id;
  std::vector<ManifestInstance> instances;
  std::map<std::string, std::string> sealed_key;  // instance id -> digest

  ordered_json to_json() const {
    ordered_json j;
    j["schema_version"] = 1;
    j["bundle_id"] = bundle_id;
    j["instances"] = ordered_json::array();
    for (const auto& e : instances) {
      ordered_json i;
      i["instance_id"] = e.instance_id;
      i["file"] = e.file;
      i["source"] = e.source;
      i["pipeline"] = e.pipeline;
      j["instances"].push_back(i);
    }
    ordered_json sk = ordered_json::object();
    for (const auto& e : instances) sk[e.instance_id] = sealed_key.at(e.instance_id);
    j["sealed_key"] = sk;
    return j;
  }

  static BenchmarkManifest from_json(const ordered_json& j) {
    BenchmarkManifest m;
    m.bundle_id = j.at("bundle_id").get<std::string>();
    for (const auto& i : j.at("instances")) {
      ManifestInstance e;
      e.instance_id = i.at("instance_id").get<std::string>();
      e.file = i.at("file").get<std::string>();
      e.source = i.at("source").get<std::string>();
      e.pipeline = i.at("pipeline").get<int>();
      m.instances.push_back(e);
    }
    for (const auto& [k, v] : j.at("sealed_key").items()) m.sealed_key[k] = v.get<std::string>();
    return m;
  }
};

inline ordered_json trojan_record_to_json(const TrojanRecord& r) {
  ordered_json j;
  j["payload_node"] = r.payload_node;
  j["payload_kind"] = r.payload_kind;
  j["seed"] = r.seed;
  j["theta"] = r.trigger.theta;
  j["estimated_activation"] = r.trigger.estimated_activation;
  j["trigger"] = ordered_json::array();
  for (const auto& m : r.trigger.nets) {
    ordered_json t;
    t["node"] = m.node;
    t["polarity"] = m.polarity;
    t["prob"] = m.prob;
    j["trigger"].push_back(t);
  }
  return j;
}

// --------------------------------------------------------------------------
// Bundle generation
// --------------------------------------------------------------------------

struct SourceCircuit {
  std::string name;
  Netlist netlist;
};

struct BundleOutputs {
  BenchmarkManifest manifest;
  ordered_json reveal;
  std::filesystem::path bundle_dir;
  std::filesystem::path reveal_file;
};

namespace detail {

struct InstancePlan {
  size_t source = 0;
  int pipeline = 1;
  bool infected = false;
  uint64_t ht_seed = 0;
  uint64_t pipe_seed = 0;
  std::string instance_id;  // assigned after the shuffle
};

struct InstanceResult {
  std::string bench_text;
  std::optional<TrojanRecord> record;
  std::string error;  // non-empty on failure
};

// Seed stream tags; part of the documented derivation scheme.
enum SeedTag : uint64_t {
  kTagHt = 1,
  kTagPipe = 2,
  kTagSource = 3,
  kTagPipelinePick = 4,
  kTagLabel = 5,
  kTagFixedK = 6,
  kTagShuffle = 7,
  kTagSalt = 8,
  kTagProbs = 9,
};

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  os.write(bytes.data(), std::streamsize(bytes.size()));
  if (!os) throw IoError("short write to " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace detail

// Generates one instance deterministically from its plan entry. Exposed for
// tests; generate_bundle runs this over the whole plan.
inline detail::InstanceResult generate_instance(const BundleConfig& cfg,
                                                const detail::InstancePlan& plan,
                                                const Aig& source_aig,
                                                const SignalProbMap& source_probs) {
  detail::InstanceResult out;
  try {
    TrojanParams params{cfg.trigger_r, cfg.theta, cfg.max_attempts};
    Aig produced;
    if (!plan.infected) {
      produced = apply_pipeline(source_aig, plan.pipeline, plan.pipe_seed);
      EquivResult eq = check_equiv(produced, source_aig);
      if (!eq.equivalent) throw ValidationFailed("clean instance differs from source");
    } else if (cfg.order == BundleConfig::Order::InsertThenRestructure) {
      InsertionResult ins = insert_valid_trojan(source_aig, source_probs, params, plan.ht_seed);
      produced = apply_pipeline(ins.infected, plan.pipeline, plan.pipe_seed);
      EquivResult eq = check_equiv(produced, ins.infected);
      if (!eq.equivalent) throw ValidationFailed("restructured instance differs from its infected reference");
      out.record = ins.record;
    } else {
      Aig restructured = apply_pipeline(source_aig, plan.pipeline, plan.pipe_seed);
      EquivResult eq = check_equiv(restructured, source_aig);
      if (!eq.equivalent) throw ValidationFailed("restructured circuit differs from source");
      SignalProbMap probs =
          restructured.n_pis() <= 16
              ? exhaustive_signal_probs(restructured)
              : estimate_signal_probs(restructured, cfg.prob_vectors,
                                      derive_seed(plan.ht_seed, detail::kTagProbs));
      InsertionResult ins = insert_valid_trojan(restructured, probs, params, plan.ht_seed);
      produced = ins.infected;
      out.record = ins.record;
    }
    Netlist exported = pipeline_to_netlist(produced, plan.pipeline, plan.instance_id);
    out.bench_text = write_bench(exported);
    if (out.record) out.record->instance_id = plan.instance_id;
  } catch (const Error& e) {
    out.error = e.kind() + ": " + e.what();
  }
  return out;
}

inline BundleOutputs generate_bundle(const BundleConfig& cfg, const std::vector<SourceCircuit>& sources,
                                     const std::filesystem::path& out_root) {
  cfg.validate();
  if (sources.empty()) throw InvalidArgument("no source circuits");

  // Per-source graphs and signal probabilities (exact when feasible).
  std::vector<Aig> aigs;
  std::vector<SignalProbMap> probs;
  for (size_t s = 0; s < sources.size(); ++s) {
    aigs.push_back(from_netlist(sources[s].netlist));
    if (aigs.back().n_pis() <= 16) {
      probs.push_back(exhaustive_signal_probs(aigs.back()));
    } else {
      probs.push_back(estimate_signal_probs(aigs.back(), cfg.prob_vectors,
                                            derive_seed(cfg.master_seed, detail::kTagProbs, s)));
    }
  }

  // Build the deterministic instance plan.
  std::vector<detail::InstancePlan> plan;
  if (cfg.mode == BundleConfig::Mode::Grid) {
    size_t idx = 0;
    for (size_t s = 0; s < sources.size(); ++s)
      for (uint64_t h = 0; h < cfg.hts_per_source; ++h) {
        uint64_t ht_seed = derive_seed(cfg.master_seed, detail::kTagHt, s, h);
        for (int p : cfg.pipelines) {
          detail::InstancePlan e;
          e.source = s;
          e.pipeline = p;
          e.infected = true;
          e.ht_seed = ht_seed;
          e.pipe_seed = derive_seed(cfg.master_seed, detail::kTagPipe, idx);
          plan.push_back(e);
          ++idx;
        }
      }
    for (size_t s = 0; s < sources.size(); ++s)
      for (uint64_t c = 0; c < cfg.clean_per_source; ++c)
        for (int p : cfg.pipelines) {
          detail::InstancePlan e;
          e.source = s;
          e.pipeline = p;
          e.infected = false;
          e.pipe_seed = derive_seed(cfg.master_seed, detail::kTagPipe, idx);
          plan.push_back(e);
          ++idx;
        }
  } else {
    std::vector<bool> infected(cfg.n_instances, false);
    if (cfg.fixed_k) {
      std::vector<uint64_t> order(cfg.n_instances);
      for (uint64_t i = 0; i < cfg.n_instances; ++i) order[i] = i;
      SplitMix64 rng(derive_seed(cfg.master_seed, detail::kTagFixedK));
      rng.shuffle(order);
      for (uint64_t i = 0; i < *cfg.fixed_k; ++i) infected[order[i]] = true;
    } else {
      for (uint64_t i = 0; i < cfg.n_instances; ++i) {
        SplitMix64 rng(derive_seed(cfg.master_seed, detail::kTagLabel, i));
        infected[i] = rng.bernoulli(cfg.p_infect);
      }
    }
    for (uint64_t i = 0; i < cfg.n_instances; ++i) {
      detail::InstancePlan e;
      e.source = size_t(derive_seed(cfg.master_seed, detail::kTagSource, i) % sources.size());
      e.pipeline = cfg.pipelines[size_t(derive_seed(cfg.master_seed, detail::kTagPipelinePick, i) %
                                        cfg.pipelines.size())];
      e.infected = infected[i];
      e.ht_seed = derive_seed(cfg.master_seed, detail::kTagHt, i);
      e.pipe_seed = derive_seed(cfg.master_seed, detail::kTagPipe, i);
      plan.push_back(e);
    }
  }

  // Shuffle so neither position nor id ordering correlates with anything,
  // then hand out sequential public ids.
  {
    SplitMix64 rng(derive_seed(cfg.master_seed, detail::kTagShuffle));
    rng.shuffle(plan);
  }
  int width = 4;
  for (size_t n = plan.size(); n >= 10000; n /= 10) ++width;
  for (size_t i = 0; i < plan.size(); ++i) {
    std::string num = std::to_string(i);
    plan[i].instance_id = "i" + std::string(size_t(width) - std::min(num.size(), size_t(width)), '0') + num;
  }

  // Generate instances (parallel across instances; the result only depends
  // on the plan entry, never on scheduling).
  std::vector<detail::InstanceResult> results(plan.size());
  {
    std::atomic<size_t> next{0};
    int jobs = std::max(1, cfg.jobs);
    auto worker = [&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= plan.size()) break;
        results[i] = generate_instance(cfg, plan[i], aigs[plan[i].source], probs[plan[i].source]);
      }
    };
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
  }
  for (size_t i = 0; i < results.size(); ++i)
    if (!results[i].error.empty())
      throw ValidationFailed("instance " + plan[i].instance_id + ": " + results[i].error);

  // Salt and sealed key.
  std::vector<uint8_t> salt(16);
  {
    SplitMix64 rng(derive_seed(cfg.master_seed, detail::kTagSalt));
    for (int w = 0; w < 2; ++w) {
      uint64_t v = rng.next();
      for (int b = 0; b < 8; ++b) salt[size_t(8 * w + b)] = uint8_t(v >> (8 * b));
    }
  }

  BundleOutputs out;
  out.manifest.bundle_id = cfg.bundle_id;
  std::vector<std::pair<std::string, std::string>> labels;
  for (size_t i = 0; i < plan.size(); ++i) {
    ManifestInstance mi;
    mi.instance_id = plan[i].instance_id;
    mi.file = "circuits/" + plan[i].instance_id + ".bench";
    mi.source = sources[plan[i].source].name;
    mi.pipeline = plan[i].pipeline;
    out.manifest.instances.push_back(mi);
    labels.push_back({plan[i].instance_id, plan[i].infected ? "infected" : "clean"});
  }
  out.manifest.sealed_key = seal_labels(labels, salt);

  ordered_json reveal;
  reveal["schema_version"] = 1;
  reveal["bundle_id"] = cfg.bundle_id;
  reveal["salt"] = bytes_to_hex(salt);
  ordered_json jl = ordered_json::object();
  for (const auto& [id, label] : labels) jl[id] = label;
  reveal["labels"] = jl;
  ordered_json jt = ordered_json::object();
  for (size_t i = 0; i < plan.size(); ++i)
    if (results[i].record) jt[plan[i].instance_id] = trojan_record_to_json(*results[i].record);
  reveal["trojans"] = jt;
  reveal["config"] = cfg.to_json();
  out.reveal = reveal;

  // Write the trees: bundle/<id>/{manifest.json,circuits/*.bench} and
  // reveal/<id>.json.
  out.bundle_dir = out_root / "bundle" / cfg.bundle_id;
  std::filesystem::create_directories(out.bundle_dir / "circuits");
  std::filesystem::create_directories(out_root / "reveal");
  for (size_t i = 0; i < plan.size(); ++i)
    detail::write_file(out.bundle_dir / "circuits" / (plan[i].instance_id + ".bench"),
                       results[i].bench_text);
  detail::write_file(out.bundle_dir / "manifest.json", out.manifest.to_json().dump(2) + "\n");
  out.reveal_file = out_root / "reveal" / (cfg.bundle_id + ".json");
  detail::write_file(out.reveal_file, reveal.dump(2) + "\n");
  return out;
}

// File-based entry point: sources named by path, circuit name = file stem.
inline BundleOutputs generate_bundle(const BundleConfig& cfg,
                                     const std::filesystem::path& out_root) {
  std::vector<SourceCircuit> sources;
  for (const auto& path : cfg.sources) {
    std::string text = detail::read_file(path);
    std::string stem = std::filesystem::path(path).stem().string();
    sources.push_back({stem, parse_bench(text, stem)});
  }
  return generate_bundle(cfg, sources, out_root);
}

// Verifies every digest and returns instance -> infected? flags.
inline std::map<std::string, bool> reveal_labels(
    const std::map<std::string, std::string>& sealed_key, const ordered_json& reveal) {
  std::vector<uint8_t> salt = hex_to_bytes(reveal.at("salt").get<std::string>());
  std::map<std::string, bool> out;
  for (const auto& [id, digest] : sealed_key) {
    if (!reveal.at("labels").contains(id))
      throw DigestMismatch("instance " + id + " missing from the reveal file");
    std::string label = reveal.at("labels").at(id).get<std::string>();
    if (seal_digest(id, label, salt) != digest)
      throw DigestMismatch("instance " + id + " label does not match its sealed digest");
    out[id] = label == "infected";
  }
  return out;
}

// --------------------------------------------------------------------------
// Scoring
// --------------------------------------------------------------------------

struct ConfusionMatrix {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  uint64_t total() const { return tp + fp + tn + fn; }
  // Rates over an absent class default to 1 (no mistakes were possible).
  double tpr() const { return tp + fn == 0 ? 1.0 : double(tp) / double(tp + fn); }
  double tnr() const { return tn + fp == 0 ? 1.0 : double(tn) / double(tn + fp); }
  double fpr() const { return 1.0 - tnr(); }
  double accuracy() const { return total() == 0 ? 1.0 : double(tp + tn) / double(total()); }
  double balanced_accuracy() const { return (tpr() + tnr()) / 2.0; }
};

struct ScoreReport {
  ConfusionMatrix cm;
  uint64_t total_queries = 0;
  std::map<std::string, uint64_t> queries_per_instance;
  // The hider maximizes both blindness (1 - balanced accuracy) and the
  // seeker's spent queries.
  double hider_blindness = 0.0;

  ordered_json to_json() const {
    ordered_json j;
    j["tp"] = cm.tp;
    j["fp"] = cm.fp;
    j["tn"] = cm.tn;
    j["fn"] = cm.fn;
    j["tpr"] = cm.tpr();
    j["fpr"] = cm.fpr();
    j["accuracy"] = cm.accuracy();
    j["balanced_accuracy"] = cm.balanced_accuracy();
    j["total_queries"] = total_queries;
    j["hider_score"] = {{"blindness", hider_blindness}, {"total_queries", total_queries}};
    return j;
  }
};

inline ScoreReport score_game(const std::map<std::string, bool>& verdicts,
                              const std::map<std::string, uint64_t>& queries_used,
                              const std::map<std::string, bool>& labels) {
  ScoreReport r;
  for (const auto& [id, infected] : labels) {
    auto it = verdicts.find(id);
    if (it == verdicts.end()) throw MissingVerdict("no verdict for instance " + id);
    bool said_infected = it->second;
    if (infected && said_infected) ++r.cm.tp;
    else if (infected && !said_infected) ++r.cm.fn;
    else if (!infected && said_infected) ++r.cm.fp;
    else ++r.cm.tn;
    auto q = queries_used.find(id);
    uint64_t used = q == queries_used.end() ? 0 : q->second;
    r.queries_per_instance[id] = used;
    r.total_queries += used;
  }
  r.hider_blindness = 1.0 - r.cm.balanced_accuracy();
  return r;
}

}  // namespace htforge
