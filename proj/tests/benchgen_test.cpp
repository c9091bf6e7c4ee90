#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "htforge/benchgen.hpp"
#include "support/test_circuits.hpp"

using namespace htforge;
using namespace htforge::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("htforge_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<SourceCircuit> test_sources(int count) {
  std::vector<SourceCircuit> out;
  for (int i = 0; i < count; ++i) {
    Netlist n = random_netlist(1000 + uint64_t(i) * 17, 9, 40, 4);
    out.push_back({"src" + std::to_string(i), n});
  }
  return out;
}

BundleConfig small_config() {
  BundleConfig cfg;
  cfg.bundle_id = "unit";
  cfg.mode = BundleConfig::Mode::Sampled;
  cfg.n_instances = 10;
  cfg.p_infect = 0.5;
  cfg.master_seed = 7;
  cfg.trigger_r = 3;
  cfg.theta = 0.25;
  cfg.pipelines = {1, 5, 9, 14, 17};
  cfg.sources = {"<in-memory>"};
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sha256 matches the NIST reference vectors") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("seal and reveal round trip; tampering is caught per instance") {
  std::vector<uint8_t> salt(16, 0xab);
  std::vector<std::pair<std::string, std::string>> labels = {
      {"i0", "infected"}, {"i1", "clean"}, {"i2", "clean"}};
  auto sealed = seal_labels(labels, salt);
  ordered_json reveal;
  reveal["salt"] = bytes_to_hex(salt);
  reveal["labels"] = {{"i0", "infected"}, {"i1", "clean"}, {"i2", "clean"}};
  auto back = reveal_labels(sealed, reveal);
  CHECK(back.at("i0"));
  CHECK_FALSE(back.at("i1"));

  reveal["labels"]["i1"] = "infected";  // tamper with exactly one label
  try {
    reveal_labels(sealed, reveal);
    FAIL("expected DigestMismatch");
  } catch (const DigestMismatch& e) {
    CHECK(std::string(e.what()).find("i1") != std::string::npos);
  }
}

TEST_CASE("short salts are rejected") {
  CHECK_THROWS_AS(seal_labels({{"a", "clean"}}, std::vector<uint8_t>(8, 1)), InvalidArgument);
}

TEST_CASE("different salts give disjoint digest sets") {
  std::vector<std::pair<std::string, std::string>> labels = {{"i0", "clean"}, {"i1", "infected"}};
  auto s1 = seal_labels(labels, std::vector<uint8_t>(16, 1));
  auto s2 = seal_labels(labels, std::vector<uint8_t>(16, 2));
  for (auto& [id, d] : s1)
    for (auto& [id2, d2] : s2) CHECK(d != d2);
}

TEST_CASE("bundle generation is deterministic byte for byte") {
  auto sources = test_sources(2);
  BundleConfig cfg = small_config();
  fs::path d1 = temp_dir("det1"), d2 = temp_dir("det2");
  BundleOutputs o1 = generate_bundle(cfg, sources, d1);
  BundleOutputs o2 = generate_bundle(cfg, sources, d2);
  CHECK(slurp(d1 / "bundle/unit/manifest.json") == slurp(d2 / "bundle/unit/manifest.json"));
  CHECK(slurp(d1 / "reveal/unit.json") == slurp(d2 / "reveal/unit.json"));
  for (const auto& e : o1.manifest.instances)
    CHECK(slurp(o1.bundle_dir / e.file) == slurp(o2.bundle_dir / e.file));
  // thread count must not affect the bytes
  BundleConfig cfg2 = cfg;
  cfg2.jobs = 2;
  fs::path d3 = temp_dir("det3");
  generate_bundle(cfg2, sources, d3);
  CHECK(slurp(d1 / "bundle/unit/manifest.json") == slurp(d3 / "bundle/unit/manifest.json"));
  fs::remove_all(d1); fs::remove_all(d2); fs::remove_all(d3);
}

TEST_CASE("no label plaintext leaks into the public bundle") {
  auto sources = test_sources(2);
  BundleConfig cfg = small_config();
  cfg.bundle_id = "leak";
  fs::path dir = temp_dir("leak");
  BundleOutputs out = generate_bundle(cfg, sources, dir);
  for (auto& p : fs::recursive_directory_iterator(out.bundle_dir)) {
    if (!p.is_regular_file()) continue;
    std::string bytes = slurp(p.path());
    CHECK(bytes.find("infected") == std::string::npos);
    // "clean" must not appear as a label; the word could only come from a
    // label field since net names are generated
    CHECK(bytes.find("\"clean\"") == std::string::npos);
    CHECK(bytes.find(",clean") == std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("p_infect zero legally yields k = 0 with the same schema") {
  auto sources = test_sources(1);
  BundleConfig cfg = small_config();
  cfg.bundle_id = "allclean";
  cfg.p_infect = 0.0;
  fs::path dir = temp_dir("allclean");
  BundleOutputs out = generate_bundle(cfg, sources, dir);
  auto labels = reveal_labels(out.manifest.sealed_key, out.reveal);
  size_t k = 0;
  for (auto& [id, inf] : labels) k += inf ? 1 : 0;
  CHECK(k == 0);
  CHECK(out.manifest.instances.size() == cfg.n_instances);
  for (const auto& e : out.manifest.instances) {
    CHECK_FALSE(e.instance_id.empty());
    CHECK(e.pipeline >= 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("fixed_k mode plants exactly k trojans") {
  auto sources = test_sources(1);
  BundleConfig cfg = small_config();
  cfg.bundle_id = "fixedk";
  cfg.fixed_k = 3;
  fs::path dir = temp_dir("fixedk");
  BundleOutputs out = generate_bundle(cfg, sources, dir);
  auto labels = reveal_labels(out.manifest.sealed_key, out.reveal);
  size_t k = 0;
  for (auto& [id, inf] : labels) k += inf ? 1 : 0;
  CHECK(k == 3);
  fs::remove_all(dir);
}

TEST_CASE("grid mode enumerates sources x trojans x pipelines") {
  auto sources = test_sources(2);
  BundleConfig cfg = small_config();
  cfg.bundle_id = "grid";
  cfg.mode = BundleConfig::Mode::Grid;
  cfg.hts_per_source = 3;
  cfg.clean_per_source = 1;
  cfg.pipelines = {2, 9, 14, 18};
  cfg.jobs = 2;
  fs::path dir = temp_dir("grid");
  BundleOutputs out = generate_bundle(cfg, sources, dir);
  auto labels = reveal_labels(out.manifest.sealed_key, out.reveal);
  size_t infected = 0, clean = 0;
  for (auto& [id, inf] : labels) (inf ? infected : clean)++;
  CHECK(infected == 2 * 3 * 4);
  CHECK(clean == 2 * 1 * 4);
  // every infected instance has a trojan record in the reveal
  for (auto& [id, inf] : labels)
    CHECK(out.reveal.at("trojans").contains(id) == inf);
  fs::remove_all(dir);
}

TEST_CASE("every bundle instance passes an independent equivalence replay") {
  auto sources = test_sources(1);
  BundleConfig cfg = small_config();
  cfg.bundle_id = "replay";
  cfg.n_instances = 6;
  fs::path dir = temp_dir("replay");
  BundleOutputs out = generate_bundle(cfg, sources, dir);
  auto labels = reveal_labels(out.manifest.sealed_key, out.reveal);
  Aig src = from_netlist(sources[0].netlist);
  BitMatrix v = random_vectors(5, 512, src.n_pis());
  BitMatrix ref = sim_aig(src, v);
  for (const auto& e : out.manifest.instances) {
    Netlist inst = parse_bench(slurp(out.bundle_dir / e.file), e.instance_id);
    BitMatrix got = simulate(inst, v);
    if (labels.at(e.instance_id)) {
      // infected instances may deviate, but only on trigger-active vectors;
      // equality of interfaces is still required
      CHECK(inst.inputs().size() == src.n_pis());
    } else {
      CHECK(got == ref);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("score_game confusion matrix and balanced accuracy") {
  std::map<std::string, bool> labels;
  for (int i = 0; i < 3; ++i) labels["h" + std::to_string(i)] = true;
  for (int i = 0; i < 7; ++i) labels["c" + std::to_string(i)] = false;
  std::map<std::string, bool> all_clean;
  std::map<std::string, uint64_t> queries;
  for (auto& [id, l] : labels) {
    all_clean[id] = false;
    queries[id] = 10;
  }
  ScoreReport r = score_game(all_clean, queries, labels);
  CHECK(r.cm.tn == 7);
  CHECK(r.cm.fn == 3);
  CHECK(r.cm.fp == 0);
  CHECK(r.cm.tp == 0);
  CHECK(r.cm.balanced_accuracy() == Catch::Approx(0.5));
  CHECK(r.total_queries == 100);
  CHECK(r.hider_blindness == Catch::Approx(0.5));

  std::map<std::string, bool> perfect;
  for (auto& [id, l] : labels) perfect[id] = l;
  CHECK(score_game(perfect, queries, labels).cm.balanced_accuracy() == Catch::Approx(1.0));

  std::map<std::string, bool> missing = perfect;
  missing.erase("h0");
  CHECK_THROWS_AS(score_game(missing, queries, labels), MissingVerdict);
}

TEST_CASE("config json round trip and validation") {
  BundleConfig cfg = small_config();
  cfg.fixed_k = 4;
  BundleConfig back = BundleConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  BundleConfig bad = small_config();
  bad.p_infect = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.pipelines = {42};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
