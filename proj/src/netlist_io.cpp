#include "htrl/netlist_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "htrl/error.hpp"

namespace htrl {

NetlistFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".bench" ? NetlistFormat::Bench : NetlistFormat::StructuralVerilog;
}

namespace {

// ---------------------------------------------------------------------------
// Structural Verilog subset

enum class TokKind { Ident, Literal, Punct, End };

struct Token {
  TokKind kind;
  std::string text;
  std::size_t line;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      const auto stop = end == std::string_view::npos ? src.size() : end + 2;
      line += static_cast<std::size_t>(std::count(src.begin() + i, src.begin() + stop, '\n'));
      i = stop;
    } else if (c == '\\') {
      // Escaped identifier: everything up to whitespace.
      std::size_t j = i + 1;
      while (j < src.size() && !std::isspace(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({TokKind::Ident, std::string(src.substr(i + 1, j - i - 1)), line});
      i = j;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      out.push_back({TokKind::Ident, std::string(src.substr(i, j - i)), line});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '\'' ||
                                src[j] == '_')) {
        ++j;
      }
      out.push_back({TokKind::Literal, std::string(src.substr(i, j - i)), line});
      i = j;
    } else if (c == '\'') {
      std::size_t j = i + 1;
      while (j < src.size() && std::isalnum(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({TokKind::Literal, std::string(src.substr(i, j - i)), line});
      i = j;
    } else {
      out.push_back({TokKind::Punct, std::string(1, c), line});
      ++i;
    }
  }
  out.push_back({TokKind::End, "", line});
  return out;
}

class VerilogParser {
 public:
  explicit VerilogParser(std::string_view text) : toks_(tokenize(text)) {}

  RawNetlist parse() {
    if (peek().kind == TokKind::End) throw Error(ErrorKind::EmptyModule, "no module found");
    expect_ident("module");
    net_.module_name = ident();
    if (accept("#")) unsupported("parameterized module");
    if (accept("(")) parse_header_ports();
    expect(";");
    while (!accept_ident("endmodule")) {
      if (peek().kind == TokKind::End) unsupported("missing endmodule");
      statement();
    }
    if (peek().kind != TokKind::End) unsupported("more than one module (netlist must be flat)");
    return std::move(net_);
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(std::string_view punct) {
    if (peek().kind == TokKind::Punct && peek().text == punct) {
      next();
      return true;
    }
    return false;
  }
  bool accept_ident(std::string_view word) {
    if (peek().kind == TokKind::Ident && peek().text == word) {
      next();
      return true;
    }
    return false;
  }
  [[noreturn]] void unsupported(const std::string& what) const {
    throw Error(ErrorKind::UnsupportedConstruct,
                what + " (line " + std::to_string(peek().line) + ")");
  }
  void expect(std::string_view punct) {
    if (!accept(punct)) unsupported("expected '" + std::string(punct) + "' near '" + peek().text + "'");
  }
  void expect_ident(std::string_view word) {
    if (!accept_ident(word)) unsupported("expected '" + std::string(word) + "'");
  }
  std::string ident() {
    if (peek().kind != TokKind::Ident) unsupported("expected identifier near '" + peek().text + "'");
    return next().text;
  }

  void parse_header_ports() {
    if (accept(")")) return;
    // ANSI style: (input a, b, output y)
    if (peek().kind == TokKind::Ident && (peek().text == "input" || peek().text == "output")) {
      std::vector<std::string>* dir = nullptr;
      do {
        if (accept_ident("input")) dir = &net_.ordered_inputs;
        else if (accept_ident("output")) dir = &net_.ordered_outputs;
        accept_ident("wire");
        if (peek().text == "[") unsupported("vector port");
        if (dir == nullptr) unsupported("port without direction");
        dir->push_back(ident());
      } while (accept(","));
      expect(")");
      return;
    }
    do {
      ident();  // directions come from the declarations
    } while (accept(","));
    expect(")");
  }

  std::vector<std::string> name_list() {
    std::vector<std::string> names;
    accept_ident("wire");
    if (peek().text == "[") unsupported("vector net");
    do {
      names.push_back(ident());
    } while (accept(","));
    expect(";");
    return names;
  }

  void statement() {
    const Token& head = peek();
    if (head.kind != TokKind::Ident) unsupported("unexpected '" + head.text + "'");
    const std::string word = head.text;
    if (word == "input") {
      next();
      for (auto& n : name_list()) net_.ordered_inputs.push_back(std::move(n));
    } else if (word == "output") {
      next();
      for (auto& n : name_list()) net_.ordered_outputs.push_back(std::move(n));
    } else if (word == "wire") {
      next();
      name_list();
    } else if (word == "assign") {
      next();
      assign();
    } else if (auto kind = parse_gate_kind(word)) {
      next();
      primitive(*kind);
    } else {
      unsupported("unsupported construct or unknown primitive '" + word + "'");
    }
  }

  void assign() {
    const std::string lhs = ident();
    expect("=");
    const Token& rhs = next();
    if (rhs.kind == TokKind::Ident) {
      net_.gates.push_back(RawGate{GateKind::Buf, lhs, {rhs.text}});
    } else if (rhs.kind == TokKind::Literal) {
      const std::string& lit = rhs.text;
      const char bit = lit.empty() ? '?' : lit.back();
      const bool binary = lit == "0" || lit == "1" || lit.find("'b") != std::string::npos ||
                          lit.find("'h") != std::string::npos || lit.find("'d") != std::string::npos;
      if (!binary || (bit != '0' && bit != '1')) unsupported("constant '" + lit + "'");
      net_.gates.push_back(RawGate{bit == '1' ? GateKind::Const1 : GateKind::Const0, lhs, {}});
    } else {
      unsupported("expression assignment");
    }
    if (!accept(";")) unsupported("expression assignment");
  }

  void primitive(GateKind kind) {
    if (peek().text == "#") unsupported("gate delay");
    if (peek().kind == TokKind::Ident) next();  // optional instance name
    expect("(");
    if (peek().text == ".") unsupported("named port connection");
    std::vector<std::string> terms;
    do {
      terms.push_back(ident());
    } while (accept(","));
    expect(")");
    expect(";");
    RawGate gate{kind, terms.front(), {terms.begin() + 1, terms.end()}};
    net_.gates.push_back(std::move(gate));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  RawNetlist net_;
};

// ---------------------------------------------------------------------------
// Bench

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

RawNetlist parse_bench(std::string_view text, std::string_view module_name) {
  RawNetlist net;
  net.module_name = std::string(module_name);
  std::istringstream in{std::string(text)};
  std::string raw_line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::UnsupportedConstruct, what + " (line " + std::to_string(line_no) + ")");
  };
  auto inside_parens = [&](const std::string& s) {
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      fail("malformed statement '" + s + "'");
    }
    return std::pair{trim(s.substr(0, open)), s.substr(open + 1, close - open - 1)};
  };
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(raw_line.substr(0, raw_line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      auto [head, arg] = inside_parens(line);
      std::string upper = head;
      std::transform(upper.begin(), upper.end(), upper.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      if (upper == "INPUT") net.ordered_inputs.push_back(trim(arg));
      else if (upper == "OUTPUT") net.ordered_outputs.push_back(trim(arg));
      else fail("unknown declaration '" + head + "'");
      continue;
    }
    const std::string lhs = trim(line.substr(0, eq));
    auto [kind_name, args] = inside_parens(line.substr(eq + 1));
    const auto kind = parse_gate_kind(kind_name);
    if (!kind) fail("unsupported cell '" + kind_name + "'");
    RawGate gate{*kind, lhs, {}};
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ',')) gate.inputs.push_back(trim(item));
    net.gates.push_back(std::move(gate));
  }
  if (net.ordered_inputs.empty() && net.gates.empty()) {
    throw Error(ErrorKind::EmptyModule, "bench netlist has no logic");
  }
  return net;
}

bool simple_identifier(const std::string& name) {
  if (name.empty() || !is_ident_start(name.front())) return false;
  static const std::unordered_set<std::string> keywords = {
      "module", "endmodule", "input", "output", "wire", "assign", "and",  "nand",
      "or",     "nor",       "xor",   "xnor",   "not",  "buf",    "reg",  "inout"};
  if (keywords.contains(name)) return false;
  return std::all_of(name.begin(), name.end(), is_ident_char);
}

std::string vname(const std::string& name) {
  return simple_identifier(name) ? name : "\\" + name + " ";
}

void write_list(std::ostringstream& os, std::string_view keyword,
                const std::vector<std::string>& names) {
  if (names.empty()) return;
  os << "  " << keyword;
  std::size_t col = 4 + keyword.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string item = vname(names[i]) + (i + 1 < names.size() ? "," : ";");
    if (col + item.size() + 1 > 78) {
      os << "\n     ";
      col = 5;
    }
    os << ' ' << item;
    col += item.size() + 1;
  }
  os << '\n';
}

}  // namespace

RawNetlist parse_netlist(std::string_view text, NetlistFormat format, std::string_view module_name) {
  RawNetlist net = format == NetlistFormat::Bench ? parse_bench(text, module_name)
                                                  : VerilogParser(text).parse();
  validate(net);
  return net;
}

RawNetlist read_netlist_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str(), format_from_path(path), path.stem().string());
}

Circuit load_circuit(const std::filesystem::path& path) { return Circuit(read_netlist_file(path)); }

std::string write_verilog(const RawNetlist& netlist) {
  const std::unordered_set<std::string> pis(netlist.ordered_inputs.begin(),
                                            netlist.ordered_inputs.end());
  for (const auto& po : netlist.ordered_outputs) {
    if (pis.contains(po)) {
      throw Error(ErrorKind::UnsupportedConstruct, "port '" + po + "' is both input and output");
    }
  }
  const std::unordered_set<std::string> pos(netlist.ordered_outputs.begin(),
                                            netlist.ordered_outputs.end());
  std::vector<std::string> wires;
  std::unordered_set<std::string> all_nets(pis);
  for (const auto& g : netlist.gates) {
    all_nets.insert(g.output);
    if (!pos.contains(g.output)) wires.push_back(g.output);
  }

  std::ostringstream os;
  std::vector<std::string> ports = netlist.ordered_inputs;
  ports.insert(ports.end(), netlist.ordered_outputs.begin(), netlist.ordered_outputs.end());
  os << "module " << vname(netlist.module_name.empty() ? "top" : netlist.module_name) << " (";
  for (std::size_t i = 0; i < ports.size(); ++i) {
    os << (i ? ", " : "") << vname(ports[i]);
  }
  os << ");\n";
  write_list(os, "input", netlist.ordered_inputs);
  write_list(os, "output", netlist.ordered_outputs);
  write_list(os, "wire", wires);

  std::size_t index = 0;
  for (const auto& g : netlist.gates) {
    if (is_constant(g.kind)) {
      os << "  assign " << vname(g.output) << " = 1'b" << (g.kind == GateKind::Const1 ? '1' : '0')
         << ";\n";
      continue;
    }
    std::string inst = "U" + std::to_string(index++);
    while (all_nets.contains(inst)) inst += "_i";
    os << "  " << to_string(g.kind) << ' ' << inst << " (" << vname(g.output);
    for (const auto& in : g.inputs) os << ", " << vname(in);
    os << ");\n";
  }
  os << "endmodule\n";
  return os.str();
}

std::string emit_netlist(const Circuit& circuit, std::span<const TrojanInstance> trojans) {
  RawNetlist raw = circuit.to_raw();
  for (std::size_t i = 0; i < trojans.size(); ++i) {
    const auto& t = trojans[i];
    const auto n = circuit.net_count();
    if (t.target_net >= n) throw Error(ErrorKind::UnknownNet, "target net out of range");
    for (NetId trig : t.trigger_nets) {
      if (trig >= n) throw Error(ErrorKind::UnknownNet, "trigger net out of range");
      if (circuit.level(t.target_net) <= circuit.level(trig)) {
        throw Error(ErrorKind::CyclicResult, "payload on '" + circuit.net_name(t.target_net) +
                                                 "' would not sit above trigger '" +
                                                 circuit.net_name(trig) + "'");
      }
    }
    check_trojan_rules(circuit, t);
    std::vector<std::string> triggers;
    for (NetId trig : t.trigger_nets) triggers.push_back(circuit.net_name(trig));
    splice_into(raw, triggers, t.polarities, circuit.net_name(t.target_net),
                "ht" + std::to_string(i));
  }
  try {
    Circuit check(raw);
  } catch (const CombinationalLoopError& e) {
    throw CombinationalLoopError(ErrorKind::CyclicResult, e.cycle());
  }
  return write_verilog(raw);
}

std::vector<TestVector> read_vectors(std::string_view text, std::size_t width) {
  std::vector<TestVector> out;
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.size() != width) {
      throw Error(ErrorKind::LengthMismatch, "row " + std::to_string(row) + " has " +
                                                 std::to_string(line.size()) + " bits, expected " +
                                                 std::to_string(width));
    }
    TestVector v(width);
    for (std::size_t i = 0; i < width; ++i) {
      if (line[i] != '0' && line[i] != '1') {
        throw Error(ErrorKind::IllegalCharacter,
                    "row " + std::to_string(row) + " column " + std::to_string(i + 1));
      }
      v[i] = static_cast<std::uint8_t>(line[i] - '0');
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string write_vectors(std::span<const TestVector> vectors, std::size_t width) {
  std::string out;
  out.reserve(vectors.size() * (width + 1));
  for (const auto& v : vectors) {
    if (v.size() != width) {
      throw Error(ErrorKind::LengthMismatch, "vector of width " + std::to_string(v.size()) +
                                                 ", expected " + std::to_string(width));
    }
    for (auto b : v) {
      if (b > 1) throw Error(ErrorKind::IllegalCharacter, "vector entry is not 0/1");
      out.push_back(static_cast<char>('0' + b));
    }
    out.push_back('\n');
  }
  return out;
}

std::string to_bit_string(const TestVector& vector) {
  std::string s(vector.size(), '0');
  for (std::size_t i = 0; i < vector.size(); ++i) s[i] = vector[i] ? '1' : '0';
  return s;
}

TestVector from_bit_string(std::string_view bits) {
  auto rows = read_vectors(bits, bits.size());
  return rows.empty() ? TestVector{} : std::move(rows.front());
}

std::string_view to_string(PayloadMode mode) {
  return mode == PayloadMode::High ? "high" : "rand";
}

PayloadMode parse_payload_mode(std::string_view text) {
  if (text == "rand" || text == "P_rand") return PayloadMode::Random;
  if (text == "high" || text == "P_high") return PayloadMode::High;
  throw Error(ErrorKind::Usage, "payload mode must be 'rand' or 'high'");
}

ManifestEntry to_manifest_entry(const Circuit& circuit, const TrojanInstance& trojan,
                                std::uint32_t id, PayloadMode mode) {
  ManifestEntry e;
  e.id = id;
  for (NetId t : trojan.trigger_nets) e.trigger_nets.push_back(circuit.net_name(t));
  e.polarities = trojan.polarities;
  e.target_net = circuit.net_name(trojan.target_net);
  e.rare_trigger_count = trojan.rare_trigger_count;
  if (trojan.activation_vector) e.activation_vector = to_bit_string(*trojan.activation_vector);
  e.payload_mode = mode;
  return e;
}

TrojanInstance from_manifest_entry(const Circuit& circuit, const ManifestEntry& entry) {
  auto resolve = [&](const std::string& name) {
    auto id = circuit.find_net(name);
    if (!id) {
      throw Error(ErrorKind::ManifestMismatch,
                  "Trojan " + std::to_string(entry.id) + " references unknown net '" + name + "'");
    }
    return *id;
  };
  TrojanInstance t;
  for (const auto& name : entry.trigger_nets) t.trigger_nets.push_back(resolve(name));
  t.polarities = entry.polarities;
  t.target_net = resolve(entry.target_net);
  t.rare_trigger_count = entry.rare_trigger_count;
  if (!entry.activation_vector.empty()) {
    if (entry.activation_vector.size() != circuit.inputs().size()) {
      throw Error(ErrorKind::ManifestMismatch,
                  "Trojan " + std::to_string(entry.id) + " activation vector width mismatch");
    }
    try {
      t.activation_vector = from_bit_string(entry.activation_vector);
    } catch (const Error& e) {
      throw Error(ErrorKind::ManifestMismatch, e.what());
    }
  }
  try {
    check_trojan_rules(circuit, t);
  } catch (const Error& e) {
    throw Error(ErrorKind::ManifestMismatch,
                "Trojan " + std::to_string(entry.id) + " does not splice: " + e.what());
  }
  return t;
}

std::string write_manifest(std::span<const ManifestEntry> entries) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["trigger_nets"] = e.trigger_nets;
    std::vector<int> pol(e.polarities.begin(), e.polarities.end());
    j["polarities"] = pol;
    j["target_net"] = e.target_net;
    j["rare_trigger_count"] = e.rare_trigger_count;
    j["activation_vector"] = e.activation_vector;
    j["payload_mode"] = to_string(e.payload_mode);
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::vector<ManifestEntry> read_manifest(std::string_view json_text) {
  std::vector<ManifestEntry> out;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_array()) throw Error(ErrorKind::ManifestMismatch, "manifest must be a JSON array");
    for (const auto& j : doc) {
      ManifestEntry e;
      e.id = j.at("id").get<std::uint32_t>();
      e.trigger_nets = j.at("trigger_nets").get<std::vector<std::string>>();
      for (int p : j.at("polarities").get<std::vector<int>>()) {
        e.polarities.push_back(static_cast<std::uint8_t>(p));
      }
      e.target_net = j.at("target_net").get<std::string>();
      e.rare_trigger_count = j.at("rare_trigger_count").get<std::uint32_t>();
      e.activation_vector = j.value("activation_vector", std::string{});
      e.payload_mode = parse_payload_mode(j.value("payload_mode", std::string{"rand"}));
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ManifestMismatch, std::string("malformed manifest: ") + e.what());
  }
  return out;
}

}  // namespace htrl
