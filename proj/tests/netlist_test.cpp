#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "htforge/netlist.hpp"
#include "support/test_circuits.hpp"

using namespace htforge;
using namespace htforge::testing;

static std::string read_data_file(const std::string& name) {
  std::ifstream is(std::string(HTFORGE_TEST_DATA_DIR) + "/" + name, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TEST_CASE("parse minimal AND circuit") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
  CHECK(n.inputs().size() == 2);
  CHECK(n.outputs().size() == 1);
  CHECK(n.gates().size() == 1);
  CHECK(n.gates()[0].kind == GateKind::And);
}

TEST_CASE("parser tolerates case, whitespace and CRLF") {
  Netlist n = parse_bench("  input( a )\r\nOutput(y)\r\n y  =  nAnD( a , a )\r\n");
  CHECK(n.inputs().size() == 1);
  CHECK(n.gates()[0].kind == GateKind::Nand);
}

TEST_CASE("first lone-identifier comment names the circuit") {
  Netlist n = parse_bench("# mychip\nINPUT(a)\nOUTPUT(a)\n");
  CHECK(n.name() == "mychip");
  Netlist d = parse_bench("# not a single identifier\nINPUT(a)\nOUTPUT(a)\n", "fallback");
  CHECK(d.name() == "fallback");
}

TEST_CASE("undefined net is reported with its line") {
  try {
    parse_bench("INPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
    FAIL("expected UndefinedNet");
  } catch (const UndefinedNet& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(e.kind() == "UndefinedNet");
  }
}

TEST_CASE("duplicate driver detected") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUF(a)\ny = NOT(a)\n"),
                  DuplicateDriver);
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nINPUT(a)\nOUTPUT(a)\n"), DuplicateDriver);
}

TEST_CASE("combinational cycle detected") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, z)\nz = BUF(y)\n"),
                  CycleDetected);
}

TEST_CASE("arity is enforced") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a, a)\n"), BadArity);
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a)\n"), BadArity);
}

TEST_CASE("syntax errors carry line numbers") {
  try {
    parse_bench("INPUT(a)\nOUTPUT(a)\nwhat is this\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = FROB(a, a)\n"), SyntaxError);
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(a)\nOUTPUT(a)\n"), SyntaxError);
}

TEST_CASE("a net may be both an output and a gate input") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(t)\nOUTPUT(y)\nt = AND(a, b)\ny = NOT(t)\n");
  CHECK(n.outputs().size() == 2);
}

TEST_CASE("write_bench emits 4 non-comment lines for a 1-gate netlist") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
  std::string text = write_bench(n);
  int lines = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++lines;
  CHECK(lines == 4);
}

TEST_CASE("round trip: parse(write(n)) is structurally identical, write is a fixed point") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    Netlist n = random_netlist(seed, 6, 25, 4);
    std::string once = write_bench(n);
    Netlist back = parse_bench(once);
    CHECK(n.structurally_equal(back));
    CHECK(write_bench(back) == once);
  }
}

TEST_CASE("c17 fixture: stats match an independent line count") {
  std::string text = read_data_file("c17.bench");
  Netlist n = parse_bench(text, "c17");
  CircuitStats s = circuit_stats(n);

  // independent oracle: count INPUT(/OUTPUT( occurrences in the raw text
  size_t in_lines = 0, out_lines = 0, gate_lines = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("INPUT(", 0) == 0) ++in_lines;
    else if (line.rfind("OUTPUT(", 0) == 0) ++out_lines;
    else if (line.find('=') != std::string::npos) ++gate_lines;
  }
  CHECK(s.n_inputs == in_lines);
  CHECK(s.n_outputs == out_lines);
  CHECK(s.n_gates == gate_lines);
  CHECK(s.n_inputs == 5);
  CHECK(s.n_outputs == 2);
  CHECK(s.n_gates == 6);
  CHECK(s.depth == 3);
  CHECK(s.gate_histogram.at(GateKind::Nand) == 6);

  // round trip preserves the stats exactly
  Netlist back = parse_bench(write_bench(n));
  CHECK(circuit_stats(back) == s);
}

TEST_CASE("histogram sums to gate count; depth >= 1 with gates") {
  for (uint64_t seed : {10, 11, 12}) {
    Netlist n = random_netlist(seed, 5, 30, 3);
    CircuitStats s = circuit_stats(n);
    size_t sum = 0;
    for (auto& [k, v] : s.gate_histogram) sum += v;
    CHECK(sum == s.n_gates);
    CHECK(s.depth >= 1);
  }
}

TEST_CASE("simulate: AND and XOR truth tables") {
  Netlist andn = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
  BitMatrix v = all_input_vectors(2);
  BitMatrix out = simulate(andn, v);
  CHECK_FALSE(out.get(0, 0));
  CHECK_FALSE(out.get(1, 0));
  CHECK_FALSE(out.get(2, 0));
  CHECK(out.get(3, 0));

  Netlist xorn = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = XOR(a, b)");
  BitMatrix xo = simulate(xorn, v);
  CHECK_FALSE(xo.get(0, 0));
  CHECK(xo.get(1, 0));
  CHECK(xo.get(2, 0));
  CHECK_FALSE(xo.get(3, 0));
}

TEST_CASE("simulate matches the naive recursive oracle exhaustively") {
  for (uint64_t seed : {21, 22, 23, 24}) {
    Netlist n = random_netlist(seed, 8, 40, 5);
    BitMatrix v = all_input_vectors(8);
    BitMatrix out = simulate(n, v);
    for (size_t r = 0; r < v.rows(); ++r) {
      std::vector<bool> expect = naive_eval(n, v.row(r));
      for (size_t o = 0; o < expect.size(); ++o) {
        if (out.get(r, o) != expect[o]) {
          CAPTURE(seed, r, o);
          REQUIRE(out.get(r, o) == expect[o]);
        }
      }
    }
  }
}

TEST_CASE("simulate rejects width mismatches") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
  CHECK_THROWS_AS(simulate(n, BitMatrix(4, 3)), WidthMismatch);
}

TEST_CASE("topological order is a valid linear extension") {
  for (uint64_t seed : {31, 32, 33}) {
    Netlist n = random_netlist(seed, 6, 35, 4);
    std::vector<int> pos(n.n_nets(), -1);
    for (size_t i = 0; i < n.topo_order().size(); ++i)
      pos[n.gates()[n.topo_order()[i]].output] = int(i);
    for (size_t i = 0; i < n.topo_order().size(); ++i) {
      const Gate& g = n.gates()[n.topo_order()[i]];
      for (int in : g.inputs) {
        if (pos[in] >= 0) CHECK(pos[in] < int(i));
      }
    }
  }
}

TEST_CASE("n-ary XOR means odd parity") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = XOR(a, b, c)");
  BitMatrix v = all_input_vectors(3);
  BitMatrix out = simulate(n, v);
  for (size_t r = 0; r < 8; ++r) {
    int ones = int(v.get(r, 0)) + int(v.get(r, 1)) + int(v.get(r, 2));
    CHECK(out.get(r, 0) == (ones % 2 == 1));
  }
}
