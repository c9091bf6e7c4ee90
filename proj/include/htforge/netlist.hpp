#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "htforge/common.hpp"

namespace htforge {

enum class GateKind { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

inline const char* to_string(GateKind k) {
  switch (k) {
    case GateKind::And: return "AND";
    case GateKind::Nand: return "NAND";
    case GateKind::Or: return "OR";
    case GateKind::Nor: return "NOR";
    case GateKind::Xor: return "XOR";
    case GateKind::Xnor: return "XNOR";
    case GateKind::Not: return "NOT";
    case GateKind::Buf: return "BUF";
  }
  return "?";
}

inline std::optional<GateKind> gate_kind_from(std::string s) {
  for (auto& c : s) c = char(std::toupper(unsigned(c)));
  if (s == "AND") return GateKind::And;
  if (s == "NAND") return GateKind::Nand;
  if (s == "OR") return GateKind::Or;
  if (s == "NOR") return GateKind::Nor;
  if (s == "XOR") return GateKind::Xor;
  if (s == "XNOR") return GateKind::Xnor;
  if (s == "NOT") return GateKind::Not;
  if (s == "BUF" || s == "BUFF") return GateKind::Buf;
  return std::nullopt;
}

inline bool is_unary(GateKind k) { return k == GateKind::Not || k == GateKind::Buf; }

struct Gate {
  int output = -1;  // net id
  GateKind kind = GateKind::And;
  std::vector<int> inputs;  // net ids

  bool operator==(const Gate&) const = default;
};

class SyntaxError : public Error {
public:
  SyntaxError(int line, const std::string& what)
      : Error("SyntaxError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

class UndefinedNet : public Error {
public:
  UndefinedNet(int line, const std::string& net)
      : Error("UndefinedNet",
              "line " + std::to_string(line) + ": net '" + net +
                  "' is never driven") {}
};

class DuplicateDriver : public Error {
public:
  DuplicateDriver(int line, const std::string& net)
      : Error("DuplicateDriver",
              "line " + std::to_string(line) + ": net '" + net +
                  "' already has a driver") {}
};

HTFORGE_DEFINE_ERROR(CycleDetected)

class BadArity : public Error {
public:
  BadArity(int line, const std::string& what)
      : Error("BadArity", "line " + std::to_string(line) + ": " + what) {}
};

HTFORGE_DEFINE_ERROR(WidthMismatch)

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(unsigned(c)) && c != '_') return false;
  }
  return true;
}

// Packed bit matrix, row-major, 64 bits per word.
class BitMatrix {
public:
  BitMatrix() : rows_(0), cols_(0) {}
  BitMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), row_words_((cols + 63) / 64),
        data_(rows * row_words_, 0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  bool get(size_t r, size_t c) const {
    return (data_[r * row_words_ + c / 64] >> (c % 64)) & 1;
  }
  void set(size_t r, size_t c, bool v) {
    uint64_t& w = data_[r * row_words_ + c / 64];
    uint64_t m = uint64_t(1) << (c % 64);
    w = v ? (w | m) : (w & ~m);
  }

  std::vector<bool> row(size_t r) const {
    std::vector<bool> out(cols_);
    for (size_t c = 0; c < cols_; ++c) out[c] = get(r, c);
    return out;
  }

  bool operator==(const BitMatrix&) const = default;

private:
  size_t rows_, cols_, row_words_ = 0;
  std::vector<uint64_t> data_;
};

// Gate-level combinational netlist. Immutable once built; build() validates
// the single-driver rule, arity, name legality and acyclicity, and computes
// a deterministic topological order of the gates.
class Netlist {
public:
  struct GateSpec {
    std::string output;
    GateKind kind = GateKind::And;
    std::vector<std::string> inputs;
  };

  static Netlist build(std::string name, std::vector<std::string> input_names,
                       std::vector<std::string> output_names,
                       std::vector<GateSpec> gate_specs,
                       const std::vector<int>* input_lines = nullptr,
                       const std::vector<int>* output_lines = nullptr,
                       const std::vector<int>* gate_lines = nullptr) {
    Netlist n;
    n.name_ = std::move(name);
    auto line_of = [](const std::vector<int>* v, size_t i) {
      return (v && i < v->size()) ? (*v)[i] : 0;
    };

    auto add_net = [&](const std::string& s, int line) {
      if (!is_identifier(s))
        throw SyntaxError(line, "bad net name '" + s + "'");
      auto [it, fresh] = n.net_ids_.try_emplace(s, int(n.net_names_.size()));
      if (fresh) n.net_names_.push_back(s);
      return it->second;
    };

    auto declare_driver = [&](int id, int line) {
      if (size_t(id) >= n.has_driver_.size()) n.has_driver_.resize(id + 1, false);
      if (n.has_driver_[id]) throw DuplicateDriver(line, n.net_names_[id]);
      n.has_driver_[id] = true;
    };

    for (size_t i = 0; i < input_names.size(); ++i) {
      int line = line_of(input_lines, i);
      int id = add_net(input_names[i], line);
      declare_driver(id, line);
      n.inputs_.push_back(id);
    }
    for (size_t i = 0; i < gate_specs.size(); ++i) {
      auto& gs = gate_specs[i];
      int line = line_of(gate_lines, i);
      size_t arity = gs.inputs.size();
      if (is_unary(gs.kind) && arity != 1)
        throw BadArity(line, std::string(to_string(gs.kind)) + " takes exactly 1 input");
      if (!is_unary(gs.kind) && arity < 2)
        throw BadArity(line, std::string(to_string(gs.kind)) + " needs >= 2 inputs");
      int id = add_net(gs.output, line);
      declare_driver(id, line);
    }
    // Inputs resolved after all drivers are known: BENCH permits forward
    // references.
    for (size_t i = 0; i < gate_specs.size(); ++i) {
      auto& gs = gate_specs[i];
      int line = line_of(gate_lines, i);
      Gate g;
      g.kind = gs.kind;
      g.output = n.net_ids_.at(gs.output);
      for (auto& in : gs.inputs) {
        auto it = n.net_ids_.find(in);
        if (it == n.net_ids_.end() || !n.has_driver_[it->second])
          throw UndefinedNet(line, in);
        g.inputs.push_back(it->second);
      }
      n.gates_.push_back(std::move(g));
    }
    std::vector<bool> seen_output(n.net_names_.size(), false);
    for (size_t i = 0; i < output_names.size(); ++i) {
      int line = line_of(output_lines, i);
      auto it = n.net_ids_.find(output_names[i]);
      if (it == n.net_ids_.end() || !n.has_driver_[it->second])
        throw UndefinedNet(line, output_names[i]);
      if (seen_output[it->second])
        throw SyntaxError(line, "duplicate OUTPUT '" + output_names[i] + "'");
      seen_output[it->second] = true;
      n.outputs_.push_back(it->second);
    }
    n.compute_topo_order();
    return n;
  }

  const std::string& name() const { return name_; }
  const std::vector<int>& inputs() const { return inputs_; }
  const std::vector<int>& outputs() const { return outputs_; }
  const std::vector<Gate>& gates() const { return gates_; }
  // Gate indices in a valid evaluation order (deterministic: Kahn with the
  // smallest declaration index first).
  const std::vector<int>& topo_order() const { return topo_order_; }

  size_t n_nets() const { return net_names_.size(); }
  const std::string& net_name(int id) const { return net_names_[id]; }
  int net_id(const std::string& s) const {
    auto it = net_ids_.find(s);
    return it == net_ids_.end() ? -1 : it->second;
  }

  std::vector<std::string> input_names() const { return names_of(inputs_); }
  std::vector<std::string> output_names() const { return names_of(outputs_); }

  // Structural equality: same name and interface, same gate set. Gate
  // declaration order is canonicalized away (writers emit topological
  // order, which need not match the parse order).
  bool structurally_equal(const Netlist& o) const {
    if (name_ != o.name_) return false;
    if (input_names() != o.input_names()) return false;
    if (output_names() != o.output_names()) return false;
    if (gates_.size() != o.gates_.size()) return false;
    auto key = [](const Netlist& n) {
      std::map<std::string, std::pair<GateKind, std::vector<std::string>>> m;
      for (auto& g : n.gates_) {
        std::vector<std::string> ins;
        for (int i : g.inputs) ins.push_back(n.net_names_[i]);
        m[n.net_names_[g.output]] = {g.kind, std::move(ins)};
      }
      return m;
    };
    return key(*this) == key(o);
  }

  // Net -> driving gate index, -1 for primary inputs.
  const std::vector<int>& driver_of() const { return driver_gate_; }

  // Word-parallel evaluation of one 64-vector block. pi_words[i] carries the
  // values of input i across the block. Returns one word per net.
  std::vector<uint64_t> eval_words(const std::vector<uint64_t>& pi_words) const {
    if (pi_words.size() != inputs_.size())
      throw WidthMismatch("expected " + std::to_string(inputs_.size()) +
                          " input words, got " + std::to_string(pi_words.size()));
    std::vector<uint64_t> w(net_names_.size(), 0);
    for (size_t i = 0; i < inputs_.size(); ++i) w[inputs_[i]] = pi_words[i];
    for (int gi : topo_order_) {
      const Gate& g = gates_[gi];
      uint64_t v = 0;
      switch (g.kind) {
        case GateKind::And:
        case GateKind::Nand:
          v = ~uint64_t(0);
          for (int in : g.inputs) v &= w[in];
          if (g.kind == GateKind::Nand) v = ~v;
          break;
        case GateKind::Or:
        case GateKind::Nor:
          v = 0;
          for (int in : g.inputs) v |= w[in];
          if (g.kind == GateKind::Nor) v = ~v;
          break;
        case GateKind::Xor:
        case GateKind::Xnor:
          v = 0;
          for (int in : g.inputs) v ^= w[in];
          if (g.kind == GateKind::Xnor) v = ~v;
          break;
        case GateKind::Not:
          v = ~w[g.inputs[0]];
          break;
        case GateKind::Buf:
          v = w[g.inputs[0]];
          break;
      }
      w[g.output] = v;
    }
    return w;
  }

private:
  std::vector<std::string> names_of(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(net_names_[id]);
    return out;
  }

  void compute_topo_order() {
    driver_gate_.assign(net_names_.size(), -1);
    for (size_t i = 0; i < gates_.size(); ++i) driver_gate_[gates_[i].output] = int(i);

    std::vector<int> pending(gates_.size(), 0);
    std::vector<std::vector<int>> users(gates_.size());
    for (size_t i = 0; i < gates_.size(); ++i) {
      for (int in : gates_[i].inputs) {
        int d = driver_gate_[in];
        if (d >= 0) {
          ++pending[i];
          users[d].push_back(int(i));
        }
      }
    }
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (size_t i = 0; i < gates_.size(); ++i)
      if (pending[i] == 0) ready.push(int(i));
    topo_order_.clear();
    while (!ready.empty()) {
      int gi = ready.top();
      ready.pop();
      topo_order_.push_back(gi);
      for (int u : users[gi])
        if (--pending[u] == 0) ready.push(u);
    }
    if (topo_order_.size() != gates_.size()) {
      for (size_t i = 0; i < gates_.size(); ++i)
        if (pending[i] > 0)
          throw CycleDetected("combinational cycle through net '" +
                              net_names_[gates_[i].output] + "'");
    }
  }

  std::string name_;
  std::vector<std::string> net_names_;
  std::unordered_map<std::string, int> net_ids_;
  std::vector<bool> has_driver_;
  std::vector<int> inputs_, outputs_;
  std::vector<Gate> gates_;
  std::vector<int> topo_order_;
  std::vector<int> driver_gate_;
};

struct CircuitStats {
  size_t n_inputs = 0, n_outputs = 0, n_gates = 0;
  size_t depth = 0;  // max logic levels, primary inputs at level 0
  std::map<GateKind, size_t> gate_histogram;

  bool operator==(const CircuitStats&) const = default;
};

inline CircuitStats circuit_stats(const Netlist& n) {
  CircuitStats s;
  s.n_inputs = n.inputs().size();
  s.n_outputs = n.outputs().size();
  s.n_gates = n.gates().size();
  std::vector<size_t> level(n.n_nets(), 0);
  for (int gi : n.topo_order()) {
    const Gate& g = n.gates()[gi];
    size_t lv = 0;
    for (int in : g.inputs) lv = std::max(lv, level[in]);
    level[g.output] = lv + 1;
    s.depth = std::max(s.depth, lv + 1);
    ++s.gate_histogram[g.kind];
  }
  return s;
}

// Parse the ISCAS-85 BENCH text format. Lines are comments (#...),
// INPUT(name), OUTPUT(name) or `name = KIND(a, b, ...)`. Gate kinds are
// case-insensitive; net names are case-sensitive [A-Za-z0-9_]+. A first
// comment consisting of a lone identifier names the circuit.
inline Netlist parse_bench(std::string_view text, std::string default_name = "bench") {
  std::vector<std::string> in_names, out_names;
  std::vector<Netlist::GateSpec> gates;
  std::vector<int> in_lines, out_lines, gate_lines;
  std::string name = std::move(default_name);
  bool name_from_comment = false;

  auto trim = [](std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(unsigned(s[b]))) ++b;
    while (e > b && std::isspace(unsigned(s[e - 1]))) --e;
    return s.substr(b, e - b);
  };

  int line_no = 0;
  size_t pos = 0;
  bool saw_noncomment = false;
  while (pos < text.size() || (pos == text.size() && line_no == 0)) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    size_t hash = line.find('#');
    if (hash != std::string_view::npos) {
      std::string_view comment = trim(line.substr(hash + 1));
      if (!saw_noncomment && !name_from_comment && is_identifier(comment)) {
        name = std::string(comment);
        name_from_comment = true;
      }
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    saw_noncomment = true;

    auto parse_decl = [&](std::string_view body) -> std::string {
      size_t open = body.find('(');
      size_t close = body.rfind(')');
      if (open == std::string_view::npos || close == std::string_view::npos ||
          close < open || !trim(body.substr(close + 1)).empty())
        throw SyntaxError(line_no, "malformed declaration");
      std::string net(trim(body.substr(open + 1, close - open - 1)));
      if (!is_identifier(net)) throw SyntaxError(line_no, "bad net name '" + net + "'");
      return net;
    };

    auto upper_prefix = [&](std::string_view s, std::string_view kw) {
      if (s.size() < kw.size()) return false;
      for (size_t i = 0; i < kw.size(); ++i)
        if (std::toupper(unsigned(s[i])) != kw[i]) return false;
      std::string_view rest = trim(s.substr(kw.size()));
      return !rest.empty() && rest.front() == '(';
    };

    size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      if (upper_prefix(line, "INPUT")) {
        in_names.push_back(parse_decl(line.substr(5)));
        in_lines.push_back(line_no);
      } else if (upper_prefix(line, "OUTPUT")) {
        out_names.push_back(parse_decl(line.substr(6)));
        out_lines.push_back(line_no);
      } else {
        throw SyntaxError(line_no, "expected INPUT, OUTPUT or assignment");
      }
      continue;
    }

    Netlist::GateSpec gs;
    gs.output = std::string(trim(line.substr(0, eq)));
    if (!is_identifier(gs.output))
      throw SyntaxError(line_no, "bad net name '" + gs.output + "'");
    std::string_view rhs = trim(line.substr(eq + 1));
    size_t open = rhs.find('(');
    size_t close = rhs.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos ||
        close < open || !trim(rhs.substr(close + 1)).empty())
      throw SyntaxError(line_no, "malformed gate expression");
    auto kind = gate_kind_from(std::string(trim(rhs.substr(0, open))));
    if (!kind) throw SyntaxError(line_no, "unknown gate kind '" +
                                              std::string(trim(rhs.substr(0, open))) + "'");
    gs.kind = *kind;
    std::string_view args = rhs.substr(open + 1, close - open - 1);
    size_t a = 0;
    while (a <= args.size()) {
      size_t comma = args.find(',', a);
      if (comma == std::string_view::npos) comma = args.size();
      std::string arg(trim(args.substr(a, comma - a)));
      if (!is_identifier(arg)) throw SyntaxError(line_no, "bad net name '" + arg + "'");
      gs.inputs.push_back(std::move(arg));
      a = comma + 1;
      if (comma == args.size()) break;
    }
    gates.push_back(std::move(gs));
    gate_lines.push_back(line_no);
  }

  return Netlist::build(std::move(name), std::move(in_names), std::move(out_names),
                        std::move(gates), &in_lines, &out_lines, &gate_lines);
}

// Canonical BENCH text: name comment, INPUT lines, OUTPUT lines, gates in
// topological order. Byte-for-byte deterministic; LF line endings.
inline std::string write_bench(const Netlist& n) {
  std::ostringstream os;
  os << "# " << n.name() << "\n";
  for (int id : n.inputs()) os << "INPUT(" << n.net_name(id) << ")\n";
  for (int id : n.outputs()) os << "OUTPUT(" << n.net_name(id) << ")\n";
  for (int gi : n.topo_order()) {
    const Gate& g = n.gates()[gi];
    os << n.net_name(g.output) << " = " << to_string(g.kind) << "(";
    for (size_t i = 0; i < g.inputs.size(); ++i) {
      if (i) os << ", ";
      os << n.net_name(g.inputs[i]);
    }
    os << ")\n";
  }
  return os.str();
}

// Bit-parallel simulation: row v of the result holds the output values of
// the netlist under input row v. Processes 64 vectors per pass.
inline BitMatrix simulate(const Netlist& n, const BitMatrix& vectors) {
  if (vectors.cols() != n.inputs().size())
    throw WidthMismatch("vector width " + std::to_string(vectors.cols()) +
                        " != " + std::to_string(n.inputs().size()) + " inputs");
  BitMatrix out(vectors.rows(), n.outputs().size());
  size_t n_in = n.inputs().size();
  for (size_t base = 0; base < vectors.rows(); base += 64) {
    size_t cnt = std::min<size_t>(64, vectors.rows() - base);
    std::vector<uint64_t> pi(n_in, 0);
    for (size_t i = 0; i < n_in; ++i)
      for (size_t v = 0; v < cnt; ++v)
        if (vectors.get(base + v, i)) pi[i] |= uint64_t(1) << v;
    std::vector<uint64_t> w = n.eval_words(pi);
    for (size_t o = 0; o < n.outputs().size(); ++o) {
      uint64_t word = w[n.outputs()[o]];
      for (size_t v = 0; v < cnt; ++v)
        if ((word >> v) & 1) out.set(base + v, o, true);
    }
  }
  return out;
}

}  // namespace htforge
