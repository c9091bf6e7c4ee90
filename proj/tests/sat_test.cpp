#include <catch_amalgamated.hpp>

#include "htforge/aig.hpp"
#include "htforge/equiv.hpp"
#include "htforge/prng.hpp"
#include "htforge/sat.hpp"
#include "support/sat_oracle.hpp"
#include "support/test_circuits.hpp"

using namespace htforge;
using namespace htforge::testing;


TEST_CASE("trivial unsat and sat") {
  Cnf u;
  u.add_clause({1});
  u.add_clause({-1});
  CHECK(sat_solve(u).status == SatStatus::Unsat);

  Cnf s;
  s.add_clause({1, 2});
  s.add_clause({-1, 2});
  SatResult r = sat_solve(s);
  REQUIRE(r.status == SatStatus::Sat);
  CHECK(r.model[1]);  // y must be true
  CHECK(model_satisfies(s, r.model));
}

TEST_CASE("empty clause is trivially unsat") {
  Cnf f;
  f.n_vars = 2;
  f.clauses.push_back({});
  CHECK(sat_solve(f).status == SatStatus::Unsat);
}

TEST_CASE("assumptions restrict the search") {
  Cnf f;
  f.add_clause({1, 2});
  CHECK(sat_solve(f, {-1, -2}).status == SatStatus::Unsat);
  SatResult r = sat_solve(f, {-1});
  REQUIRE(r.status == SatStatus::Sat);
  CHECK_FALSE(r.model[0]);
  CHECK(r.model[1]);
  // assumption dichotomy: f unsat under [-3] plus f sat means every model sets 3
  Cnf g;
  g.add_clause({3});
  g.add_clause({1, -2});
  CHECK(sat_solve(g).status == SatStatus::Sat);
  CHECK(sat_solve(g, {-3}).status == SatStatus::Unsat);
}

TEST_CASE("solver is reusable across assumption queries") {
  Cnf f;
  f.add_clause({1, 2, 3});
  f.add_clause({-1, -2});
  SatSolver s(f);
  CHECK(s.solve({1}).status == SatStatus::Sat);
  CHECK(s.solve({1, 2}).status == SatStatus::Unsat);
  CHECK(s.solve({-1, -2, -3}).status == SatStatus::Unsat);
  CHECK(s.solve().status == SatStatus::Sat);
}

TEST_CASE("random 3-CNFs match the exhaustive oracle, models verified") {
  int checked = 0;
  for (uint64_t seed = 0; seed < 150; ++seed) {
    Cnf f = random_3cnf(seed, 16);
    bool expect = brute_force_sat(f);
    SatResult r = sat_solve(f);
    REQUIRE((r.status == SatStatus::Sat) == expect);
    if (r.status == SatStatus::Sat) {
      REQUIRE(model_satisfies(f, r.model));
      ++checked;
    }
  }
  CHECK(checked > 10);  // both outcomes appeared
}

TEST_CASE("conflict budget raises ResourceLimit, distinct from Unsat") {
  // pigeonhole PHP(5,4): 5 pigeons, 4 holes; var p*4+h+1
  Cnf f;
  for (int p = 0; p < 5; ++p) {
    std::vector<int> c;
    for (int h = 0; h < 4; ++h) c.push_back(p * 4 + h + 1);
    f.add_clause(c);
  }
  for (int h = 0; h < 4; ++h)
    for (int p1 = 0; p1 < 5; ++p1)
      for (int p2 = p1 + 1; p2 < 5; ++p2)
        f.add_clause({-(p1 * 4 + h + 1), -(p2 * 4 + h + 1)});
  CHECK(sat_solve(f).status == SatStatus::Unsat);
  CHECK_THROWS_AS(sat_solve(f, {}, 3), ResourceLimit);
}

TEST_CASE("dimacs export") {
  Cnf f;
  f.add_clause({1, -2});
  f.add_clause({2, 3, -1});
  std::string d = f.to_dimacs();
  CHECK(d == "p cnf 3 2\n1 -2 0\n2 3 -1 0\n");
}

TEST_CASE("tseitin clause counts") {
  Aig g(std::vector<std::string>{"a", "b"});
  g.add_po("y", g.and2(g.pi_lit(0), g.pi_lit(1)));
  TseitinResult t = tseitin_cnf(g);
  CHECK(t.cnf.clauses.size() == 3);

  Aig pass(std::vector<std::string>{"a"});
  pass.add_po("y", pass.pi_lit(0));
  CHECK(tseitin_cnf(pass).cnf.clauses.empty());

  Aig con(std::vector<std::string>{"a"});
  con.add_po("y", lit_false);
  TseitinResult tc = tseitin_cnf(con);
  REQUIRE(tc.cnf.clauses.size() == 1);  // the referenced constant's unit clause
  CHECK(tc.cnf.clauses[0] == std::vector<int>{-tc.var_of_node(0)});
}

TEST_CASE("tseitin models replay through simulation") {
  for (uint64_t seed : {91, 92, 93, 94}) {
    Aig g = random_aig(seed, 8, 40, 3);
    TseitinResult t = tseitin_cnf(g);
    for (size_t o = 0; o < g.n_pos(); ++o) {
      for (bool want : {false, true}) {
        SatSolver solver(t.cnf);
        Lit po = g.po_lit(o);
        SatResult r = solver.solve({want ? t.lit_of(po) : -t.lit_of(po)});
        if (r.status != SatStatus::Sat) continue;  // output may be constant
        BitMatrix in(1, g.n_pis());
        for (uint32_t i = 0; i < g.n_pis(); ++i)
          in.set(0, i, r.model[size_t(t.var_of_node(1 + i) - 1)]);
        BitMatrix out = sim_aig(g, in);
        REQUIRE(out.get(0, o) == want);
      }
    }
  }
}
