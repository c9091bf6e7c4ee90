#include <catch_amalgamated.hpp>

#include <set>

#include "htforge/equiv.hpp"
#include "htforge/npn.hpp"
#include "htforge/restructure.hpp"
#include "support/test_circuits.hpp"

using namespace htforge;
using namespace htforge::testing;

namespace {
bool same_function(const Aig& a, const Aig& b) {
  auto ta = exhaustive_tables(a), tb = exhaustive_tables(b);
  if (ta.size() != tb.size()) return false;
  for (size_t i = 0; i < ta.size(); ++i)
    if (!(ta[i] == tb[i])) return false;
  return true;
}
}  // namespace

TEST_CASE("npn library covers all 222 classes with alternatives") {
  const NpnLibrary& lib = NpnLibrary::instance();
  CHECK(lib.n_classes() == 222);
  size_t with_two = 0;
  std::set<uint16_t> canons;
  for (uint32_t f = 0; f < (1u << 16); f += 31) canons.insert(npn_canonical(uint16_t(f)));
  for (uint16_t c : canons) {
    const auto* impls = lib.impls_for_canon(c);
    REQUIRE(impls != nullptr);
    REQUIRE_FALSE(impls->empty());
    if (impls->size() >= 2) ++with_two;
  }
  CHECK(with_two * 10 >= canons.size() * 8);  // the vast majority have alternatives
}

TEST_CASE("npn canonicalization and instantiation reconstruct any function") {
  SplitMix64 rng(3);
  for (int iter = 0; iter < 200; ++iter) {
    uint16_t f = uint16_t(rng.next());
    uint16_t canon = npn_canonical(f);
    auto tf = npn_find_transform(canon, f);
    REQUIRE(tf.has_value());
    const auto* impls = NpnLibrary::instance().impls_for_canon(canon);
    REQUIRE(impls);
    for (const auto& impl : *impls) {
      Aig g(std::vector<std::string>{"a", "b", "c", "d"});
      std::array<Lit, 4> leaves;
      for (int i = 0; i < 4; ++i)
        leaves[size_t(i)] = g.pi_lit(tf->perm[size_t(i)]) ^ bool((tf->input_neg >> i) & 1);
      g.add_po("y", npn_instantiate(g, impl, leaves) ^ tf->output_neg);
      REQUIRE(exhaustive_tables(g)[0].as_u16() == f);
    }
  }
}

TEST_CASE("balance flattens an AND chain to logarithmic depth") {
  Aig chain(std::vector<std::string>{"a", "b", "c", "d"});
  Lit acc = chain.pi_lit(0);
  for (uint32_t i = 1; i < 4; ++i) acc = chain.and2(acc, chain.pi_lit(i));
  chain.add_po("y", acc);
  REQUIRE(chain.metrics().n_levels == 3);
  Aig b = balance(chain);
  CHECK(b.metrics().n_levels == 2);
  CHECK(same_function(chain, b));
}

TEST_CASE("balance leaves an already balanced tree structurally identical") {
  Aig g(std::vector<std::string>{"a", "b", "c", "d"});
  g.add_po("y", g.and2(g.and2(g.pi_lit(0), g.pi_lit(1)), g.and2(g.pi_lit(2), g.pi_lit(3))));
  Aig b = balance(g);
  CHECK(b.structural_hash() == g.structural_hash());
}

TEST_CASE("balance preserves function and never deepens") {
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    Aig g = random_aig(seed * 17, 8, 70, 4);
    Aig b = balance(g);
    REQUIRE(same_function(g, b));
    REQUIRE(b.metrics().n_levels <= g.metrics().n_levels);
  }
}

TEST_CASE("rewrite leaves a single fresh AND unchanged") {
  Aig g(std::vector<std::string>{"a", "b"});
  g.add_po("y", g.and2(g.pi_lit(0), g.pi_lit(1)));
  Aig r = rewrite(g, 5);
  CHECK(r.structural_hash() == g.structural_hash());
}

TEST_CASE("rewrite preserves function exhaustively") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Aig g = random_aig(seed * 29 + 1, 10, 60, 4);
    Aig r = rewrite(g, seed);
    REQUIRE(same_function(g, r));
  }
}

TEST_CASE("rewrite usually changes structure on circuits with >= 50 nodes") {
  Aig g = random_aig(303, 9, 70, 4);
  uint64_t base = cleanup(g).structural_hash();
  int changed = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed)
    if (rewrite(g, seed).structural_hash() != base) ++changed;
  CHECK(changed >= 27);  // the contract asks for probability >= 0.9
}

TEST_CASE("rewrite respects the 1.25x growth budget") {
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    Aig g = random_aig(seed * 31, 9, 80, 4);
    Aig r = rewrite(g, seed);
    CHECK(r.n_ands() <= g.n_ands() + g.n_ands() / 4);
  }
}

TEST_CASE("two representations of one truth table differ in size or shape") {
  // a rewrite outcome with the same function but different structure
  Aig g = random_aig(404, 8, 64, 3);
  Aig r = rewrite(g, 12345);
  REQUIRE(same_function(g, r));
  CHECK(r.structural_hash() != cleanup(g).structural_hash());
}

TEST_CASE("refactor preserves function and skips oversized cones") {
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    Aig g = random_aig(seed * 37 + 2, 10, 70, 4);
    for (int cone : {4, 6, 8}) {
      Aig r = refactor(g, seed, cone);
      REQUIRE(same_function(g, r));
    }
  }
  CHECK_THROWS_AS(refactor(random_aig(1, 4, 10, 2), 1, 1), InvalidArgument);
}

TEST_CASE("refactor at cone budget 2 is a fixpoint on a pure AND tree") {
  // every 2-input cone of an AND tree resynthesizes to itself; larger cones
  // overflow the budget and are skipped
  Netlist n = parse_bench(
      "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nINPUT(f)\nINPUT(g)\nINPUT(h)\n"
      "OUTPUT(y)\ny = AND(a, b, c, d, e, f, g, h)\n");
  Aig g = from_netlist(n);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Aig r = refactor(g, seed, 2);
    CHECK(r.structural_hash() == g.structural_hash());
  }
}

TEST_CASE("pipeline catalog is fixed and complete") {
  const auto& cat = pipeline_catalog();
  REQUIRE(cat.size() == 18);
  for (int i = 1; i <= 18; ++i) {
    CHECK(cat[size_t(i) - 1].id == i);
    CHECK_FALSE(cat[size_t(i) - 1].steps.empty());
    CHECK_FALSE(cat[size_t(i) - 1].summary.empty());
  }
  CHECK(pipeline_spec(17).export_lib == GateLibrary::NandOnly);
  CHECK(pipeline_spec(18).export_lib == GateLibrary::NorOnly);
  CHECK_THROWS_AS(pipeline_spec(0), InvalidArgument);
  CHECK_THROWS_AS(pipeline_spec(19), InvalidArgument);
}

TEST_CASE("every pipeline preserves function; runs are deterministic") {
  Aig g = random_aig(505, 9, 90, 5);
  for (int pid = 1; pid <= 18; ++pid) {
    Aig h1 = apply_pipeline(g, pid, 777);
    Aig h2 = apply_pipeline(g, pid, 777);
    REQUIRE(h1.structural_hash() == h2.structural_hash());
    REQUIRE(same_function(g, h1));
    std::string b1 = write_bench(pipeline_to_netlist(h1, pid, "t"));
    std::string b2 = write_bench(pipeline_to_netlist(h2, pid, "t"));
    REQUIRE(b1 == b2);
  }
}

TEST_CASE("the 18 pipelines produce mostly distinct outputs") {
  Aig g = random_aig(606, 9, 100, 5);
  std::set<std::string> uniq;
  for (int pid = 1; pid <= 18; ++pid)
    uniq.insert(write_bench(pipeline_to_netlist(apply_pipeline(g, pid, 4242), pid, "t")));
  // soft target: pipelines 1 and 4 coincide by construction (both are the
  // seed-free balance pass), everything else should differ
  CHECK(uniq.size() >= 16);
}

TEST_CASE("pipeline equivalence holds under SAT as well") {
  Aig g = random_aig(707, 12, 120, 6);
  for (int pid : {1, 9, 15, 17, 18}) {
    Aig h = apply_pipeline(g, pid, 31);
    CHECK(check_equiv(g, h).equivalent);
  }
}
