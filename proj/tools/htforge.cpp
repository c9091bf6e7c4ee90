#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "htforge/htforge.hpp"

namespace fs = std::filesystem;
using namespace htforge;

namespace {

std::string read_file(const fs::path& p) { return detail::read_file(p); }

void write_file(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  detail::write_file(p, bytes);
}

Netlist load_bench(const std::string& path) {
  return parse_bench(read_file(path), fs::path(path).stem().string());
}

std::string format_stats(const Netlist& n) {
  CircuitStats s = circuit_stats(n);
  std::ostringstream os;
  os << n.name() << ": inputs=" << s.n_inputs << " outputs=" << s.n_outputs
     << " gates=" << s.n_gates << " depth=" << s.depth << " [";
  bool first = true;
  for (const auto& [kind, count] : s.gate_histogram) {
    if (!first) os << " ";
    os << to_string(kind) << "=" << count;
    first = false;
  }
  os << "]";
  return os.str();
}

ordered_json stats_json(const Netlist& n) {
  CircuitStats s = circuit_stats(n);
  ordered_json j;
  j["name"] = n.name();
  j["n_inputs"] = s.n_inputs;
  j["n_outputs"] = s.n_outputs;
  j["n_gates"] = s.n_gates;
  j["depth"] = s.depth;
  ordered_json h = ordered_json::object();
  for (const auto& [kind, count] : s.gate_histogram) h[to_string(kind)] = count;
  j["gate_histogram"] = h;
  return j;
}

struct VerdictRow {
  std::string id;
  bool infected = false;
  uint64_t queries = 0;
};

std::vector<VerdictRow> read_verdicts(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot open " + p.string());
  std::vector<VerdictRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    VerdictRow r;
    std::string verdict, queries;
    if (!std::getline(ls, r.id, ',') || !std::getline(ls, verdict, ',') ||
        !std::getline(ls, queries))
      throw IoError("malformed verdict line: " + line);
    if (verdict != "infected" && verdict != "clean")
      throw IoError("verdict must be 'infected' or 'clean': " + line);
    r.infected = verdict == "infected";
    r.queries = std::stoull(queries);
    rows.push_back(r);
  }
  return rows;
}

// features.csv: instance_id,f00..f63 with one header line.
void write_features_csv(const fs::path& p, const std::vector<std::string>& ids,
                        const std::vector<FeatureVector>& rows) {
  std::string out = "instance_id";
  for (size_t d = 0; d < kFeatureDim; ++d) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",f%02zu", d);
    out += buf;
  }
  out += "\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (size_t d = 0; d < kFeatureDim; ++d) out += "," + detail::fmt_double(rows[i][d]);
    out += "\n";
  }
  write_file(p, out);
}

std::pair<std::vector<std::string>, Matrix> read_features_csv(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot open " + p.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty features file");
  std::vector<std::string> ids;
  Matrix rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ',')) throw IoError("malformed features line");
    ids.push_back(cell);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return {ids, rows};
}

int run(int argc, char** argv) {
  CLI::App app{"htforge: benchmark forge and evaluation harness for hidden hardware trojans"};
  app.require_subcommand(1);

  // ---- parse ----
  auto* cmd_parse = app.add_subcommand("parse", "Parse and validate a BENCH netlist");
  std::string parse_in, parse_out;
  cmd_parse->add_option("input", parse_in, "BENCH file")->required();
  cmd_parse->add_option("--out", parse_out, "directory for canonical output and stats");
  cmd_parse->callback([&] {
    Netlist n = load_bench(parse_in);
    std::cout << format_stats(n) << "\n";
    if (!parse_out.empty()) {
      write_file(fs::path(parse_out) / (n.name() + ".bench"), write_bench(n));
      write_file(fs::path(parse_out) / (n.name() + "_stats.json"),
                 stats_json(n).dump(2) + "\n");
    }
  });

  // ---- restructure ----
  auto* cmd_rst = app.add_subcommand("restructure", "Apply a functional restructuring pipeline");
  std::string rst_in, rst_out;
  int rst_pipeline = 1;
  uint64_t rst_seed = 0;
  cmd_rst->add_option("input", rst_in, "BENCH file")->required();
  cmd_rst->add_option("--pipeline", rst_pipeline, "pipeline id (1..18)")
      ->required()
      ->check(CLI::Range(1, 18));
  cmd_rst->add_option("--seed", rst_seed, "pass seed")->required();
  cmd_rst->add_option("--out", rst_out, "output directory")->required();
  cmd_rst->callback([&] {
    Netlist n = load_bench(rst_in);
    Aig g = from_netlist(n);
    Aig h = apply_pipeline(g, rst_pipeline, rst_seed);
    const PipelineSpec& spec = pipeline_spec(rst_pipeline);
    std::string out_name = n.name() + "_p" + std::to_string(rst_pipeline);
    Netlist exported = pipeline_to_netlist(h, rst_pipeline, out_name);
    write_file(fs::path(rst_out) / (out_name + ".bench"), write_bench(exported));
    std::cout << "pipeline " << rst_pipeline << " (" << spec.summary << "): "
              << g.metrics().n_ands << "/" << g.metrics().n_levels << " -> "
              << h.metrics().n_ands << "/" << h.metrics().n_levels
              << " ands/levels, export " << to_string(spec.export_lib) << ", seed "
              << rst_seed << "\n";
  });

  // ---- insert-ht ----
  auto* cmd_ht = app.add_subcommand("insert-ht", "Insert a validated rare-trigger trojan");
  std::string ht_in, ht_out;
  uint64_t ht_seed = 0;
  int ht_r = 4, ht_attempts = 32;
  double ht_theta = 0.1;
  cmd_ht->add_option("input", ht_in, "BENCH file")->required();
  cmd_ht->add_option("--seed", ht_seed, "insertion seed")->required();
  cmd_ht->add_option("--r", ht_r, "trigger arity (2..8)")->check(CLI::Range(2, 8));
  cmd_ht->add_option("--theta", ht_theta, "rarity threshold");
  cmd_ht->add_option("--max-attempts", ht_attempts, "validated-insertion retries");
  cmd_ht->add_option("--out", ht_out, "output directory")->required();
  cmd_ht->callback([&] {
    Netlist n = load_bench(ht_in);
    Aig g = from_netlist(n);
    SignalProbMap probs = g.n_pis() <= 16
                              ? exhaustive_signal_probs(g)
                              : estimate_signal_probs(g, 65536, derive_seed(ht_seed, 0x9a0b));
    InsertionResult ins =
        insert_valid_trojan(g, probs, {ht_r, ht_theta, ht_attempts}, ht_seed);
    std::string out_name = n.name() + "_ht";
    ins.record.instance_id = out_name;
    Netlist exported = to_netlist(ins.infected, GateLibrary::AndNot, out_name);
    write_file(fs::path(ht_out) / (out_name + ".bench"), write_bench(exported));
    write_file(fs::path(ht_out) / (out_name + ".json"),
               trojan_record_to_json(ins.record).dump(2) + "\n");
    std::cout << "inserted trojan: r=" << ins.record.trigger.nets.size()
              << " theta=" << ins.record.trigger.theta
              << " estimated_activation=" << ins.record.trigger.estimated_activation
              << " payload_node=" << ins.record.payload_node << "\n";
  });

  // ---- check-equiv ----
  auto* cmd_eq = app.add_subcommand("check-equiv", "SAT equivalence check of two netlists");
  std::string eq_a, eq_b;
  uint64_t eq_budget = 10'000'000;
  cmd_eq->add_option("a", eq_a, "first BENCH file")->required();
  cmd_eq->add_option("b", eq_b, "second BENCH file")->required();
  cmd_eq->add_option("--budget", eq_budget, "SAT conflict budget");
  cmd_eq->callback([&] {
    Aig a = from_netlist(load_bench(eq_a));
    Aig b = from_netlist(load_bench(eq_b));
    EquivResult r = check_equiv(a, b, eq_budget);
    if (r.equivalent) {
      std::cout << "EQUIVALENT\n";
    } else {
      std::string v;
      for (bool bit : r.counterexample) v += bit ? '1' : '0';
      std::cout << "NOT EQUIVALENT witness=" << v << "\n";
    }
  });

  // ---- gen-bundle ----
  auto* cmd_gen = app.add_subcommand("gen-bundle", "Generate a sealed benchmark bundle");
  std::string gen_config, gen_out;
  uint64_t gen_seed = 0;
  double gen_pinfect = -1.0, gen_theta = -1.0;
  int gen_r = 0, gen_jobs = 0, gen_pipeline = 0;
  bool gen_seed_set = false;
  cmd_gen->add_option("--config", gen_config, "bundle config JSON")->required();
  cmd_gen->add_option("--out", gen_out, "output root")->required();
  cmd_gen->add_option("--seed", gen_seed, "override master_seed")->each([&](const std::string&) {
    gen_seed_set = true;
  });
  cmd_gen->add_option("--p-infect", gen_pinfect, "override p_infect");
  cmd_gen->add_option("--r", gen_r, "override trigger arity");
  cmd_gen->add_option("--theta", gen_theta, "override rarity threshold");
  cmd_gen->add_option("--pipeline", gen_pipeline, "restrict to a single pipeline");
  cmd_gen->add_option("--jobs", gen_jobs, "worker threads");
  cmd_gen->callback([&] {
    ordered_json j = ordered_json::parse(read_file(gen_config));
    BundleConfig cfg = BundleConfig::from_json(j);
    if (!j.contains("master_seed") && !gen_seed_set)
      throw InvalidArgument("a master seed is required (config master_seed or --seed)");
    if (gen_seed_set) cfg.master_seed = gen_seed;
    if (gen_pinfect >= 0.0) cfg.p_infect = gen_pinfect;
    if (gen_r > 0) cfg.trigger_r = gen_r;
    if (gen_theta >= 0.0) cfg.theta = gen_theta;
    if (gen_pipeline > 0) cfg.pipelines = {gen_pipeline};
    if (gen_jobs > 0) cfg.jobs = gen_jobs;
    // Source paths are resolved relative to the config file.
    fs::path base = fs::path(gen_config).parent_path();
    for (auto& s : cfg.sources) {
      fs::path p(s);
      if (p.is_relative()) s = (base / p).string();
    }
    BundleOutputs out = generate_bundle(cfg, gen_out);
    std::cout << "bundle " << cfg.bundle_id << ": " << out.manifest.instances.size()
              << " instances\n";
    std::cout << "  public: " << out.bundle_dir.string() << "\n";
    std::cout << "  reveal: " << out.reveal_file.string() << "\n";
  });

  // ---- detect ----
  auto* cmd_det = app.add_subcommand("detect", "Golden-model detection over a bundle");
  std::string det_bundle, det_golden, det_out, det_strategy = "uniform";
  uint64_t det_budget = 1024, det_seed = 0;
  int det_jobs = 1;
  cmd_det->add_option("--bundle", det_bundle, "bundle directory (with manifest.json)")->required();
  cmd_det->add_option("--golden-dir", det_golden, "directory of golden <source>.bench files")
      ->required();
  cmd_det->add_option("--strategy", det_strategy, "uniform | rare_guided");
  cmd_det->add_option("--budget", det_budget, "max test vectors per instance (L)");
  cmd_det->add_option("--seed", det_seed, "vector generation seed")->required();
  cmd_det->add_option("--jobs", det_jobs, "worker threads");
  cmd_det->add_option("--out", det_out, "output directory")->required();
  cmd_det->callback([&] {
    auto strat = detect_strategy_from(det_strategy);
    if (!strat) throw InvalidArgument("strategy must be uniform or rare_guided");
    BenchmarkManifest manifest = BenchmarkManifest::from_json(
        ordered_json::parse(read_file(fs::path(det_bundle) / "manifest.json")));
    std::map<std::string, Netlist> goldens;
    for (const auto& e : manifest.instances)
      if (!goldens.count(e.source))
        goldens.emplace(e.source, load_bench((fs::path(det_golden) / (e.source + ".bench")).string()));
    std::vector<VerdictRow> rows(manifest.instances.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    auto worker = [&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= manifest.instances.size() || failed.load()) break;
        const auto& e = manifest.instances[i];
        try {
          Netlist suspect = parse_bench(read_file(fs::path(det_bundle) / e.file), e.instance_id);
          GoldenDetectResult r =
              golden_model_detect(suspect, goldens.at(e.source), det_budget, *strat,
                                  derive_seed(det_seed, i));
          rows[i] = {e.instance_id, r.infected, r.queries_used};
        } catch (const std::exception& ex) {
          std::lock_guard<std::mutex> lock(error_mu);
          error = e.instance_id + std::string(": ") + ex.what();
          failed.store(true);
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, det_jobs); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw Error("DetectFailed", error);
    std::string csv;
    uint64_t total = 0;
    size_t flagged = 0;
    for (const auto& r : rows) {
      csv += r.id + "," + (r.infected ? "infected" : "clean") + "," + std::to_string(r.queries) + "\n";
      total += r.queries;
      flagged += r.infected ? 1 : 0;
    }
    write_file(fs::path(det_out) / "verdicts.csv", csv);
    std::cout << "detect: " << flagged << "/" << rows.size() << " flagged infected, strategy "
              << det_strategy << ", budget " << det_budget << ", total queries " << total << "\n";
  });

  // ---- score ----
  auto* cmd_score = app.add_subcommand("score", "Score verdicts against a revealed answer key");
  std::string sc_verdicts, sc_reveal, sc_manifest, sc_out;
  cmd_score->add_option("--verdicts", sc_verdicts, "verdicts.csv")->required();
  cmd_score->add_option("--reveal", sc_reveal, "reveal JSON")->required();
  cmd_score->add_option("--manifest", sc_manifest, "bundle manifest.json")->required();
  cmd_score->add_option("--out", sc_out, "output directory")->required();
  cmd_score->callback([&] {
    BenchmarkManifest manifest =
        BenchmarkManifest::from_json(ordered_json::parse(read_file(sc_manifest)));
    ordered_json reveal = ordered_json::parse(read_file(sc_reveal));
    std::map<std::string, bool> labels = reveal_labels(manifest.sealed_key, reveal);
    std::map<std::string, bool> verdicts;
    std::map<std::string, uint64_t> queries;
    for (const auto& r : read_verdicts(sc_verdicts)) {
      verdicts[r.id] = r.infected;
      queries[r.id] = r.queries;
    }
    ScoreReport report = score_game(verdicts, queries, labels);
    write_file(fs::path(sc_out) / "score.json", report.to_json().dump(2) + "\n");
    Heatmap hm = heatmap_accuracy(manifest.instances, verdicts, labels);
    write_file(fs::path(sc_out) / "heatmap.csv", hm.to_csv());
    std::cout << "score: tp=" << report.cm.tp << " fp=" << report.cm.fp
              << " tn=" << report.cm.tn << " fn=" << report.cm.fn
              << " balanced_accuracy=" << report.cm.balanced_accuracy()
              << " total_queries=" << report.total_queries << "\n";
  });

  // ---- features ----
  auto* cmd_feat = app.add_subcommand("features", "Extract structural feature vectors");
  std::vector<std::string> feat_inputs;
  std::string feat_bundle, feat_out;
  cmd_feat->add_option("inputs", feat_inputs, "BENCH files");
  cmd_feat->add_option("--bundle", feat_bundle, "bundle directory (all instances)");
  cmd_feat->add_option("--out", feat_out, "output directory")->required();
  cmd_feat->callback([&] {
    std::vector<std::string> ids;
    std::vector<FeatureVector> rows;
    for (const auto& path : feat_inputs) {
      Netlist n = load_bench(path);
      ids.push_back(n.name());
      rows.push_back(extract_features(n));
    }
    if (!feat_bundle.empty()) {
      BenchmarkManifest manifest = BenchmarkManifest::from_json(
          ordered_json::parse(read_file(fs::path(feat_bundle) / "manifest.json")));
      for (const auto& e : manifest.instances) {
        Netlist n = parse_bench(read_file(fs::path(feat_bundle) / e.file), e.instance_id);
        ids.push_back(e.instance_id);
        rows.push_back(extract_features(n));
      }
    }
    if (ids.empty()) throw InvalidArgument("no inputs given");
    write_features_csv(fs::path(feat_out) / "features.csv", ids, rows);
    std::cout << "features: " << ids.size() << " circuits, dim " << kFeatureDim << "\n";
  });

  // ---- pca ----
  auto* cmd_pca = app.add_subcommand("pca", "PCA over feature vectors (joint fit)");
  std::string pca_features, pca_reveal, pca_manifest, pca_out;
  size_t pca_m = 2;
  cmd_pca->add_option("--features", pca_features, "features.csv")->required();
  cmd_pca->add_option("--components", pca_m, "number of components");
  cmd_pca->add_option("--reveal", pca_reveal, "reveal JSON (adds a class column)");
  cmd_pca->add_option("--manifest", pca_manifest, "manifest.json (verifies the reveal)");
  cmd_pca->add_option("--out", pca_out, "output directory")->required();
  cmd_pca->callback([&] {
    auto [ids, X] = read_features_csv(pca_features);
    // Standardize columns before the covariance fit so no single raw scale
    // dominates.
    if (X.empty()) throw DegenerateInput("no feature rows");
    size_t d = X[0].size();
    for (size_t j = 0; j < d; ++j) {
      double mean = 0, sd = 0;
      for (const auto& r : X) mean += r[j] / double(X.size());
      for (const auto& r : X) sd += (r[j] - mean) * (r[j] - mean);
      sd = std::sqrt(sd / double(X.size()));
      if (sd < 1e-12) sd = 1.0;
      for (auto& r : X) r[j] = (r[j] - mean) / sd;
    }
    PcaModel model = pca_fit(X, pca_m);
    Matrix scores = pca_project(model, X);
    std::vector<std::string> classes;
    if (!pca_reveal.empty()) {
      if (pca_manifest.empty())
        throw InvalidArgument("--reveal needs --manifest for digest verification");
      BenchmarkManifest manifest =
          BenchmarkManifest::from_json(ordered_json::parse(read_file(pca_manifest)));
      std::map<std::string, bool> labels =
          reveal_labels(manifest.sealed_key, ordered_json::parse(read_file(pca_reveal)));
      for (const auto& id : ids) {
        auto it = labels.find(id);
        classes.push_back(it == labels.end() ? "unknown" : (it->second ? "infected" : "clean"));
      }
    }
    write_file(fs::path(pca_out) / "scatter.csv", scatter_csv(ids, scores, classes));
    write_file(fs::path(pca_out) / "explained.csv", explained_csv(model));
    std::cout << "pca: " << ids.size() << " rows, " << model.n_components()
              << " components, pc1 ratio " << model.explained_ratio[0] << " (joint fit)\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
