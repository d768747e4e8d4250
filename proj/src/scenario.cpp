#include "bargaining/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bargaining {
namespace {

using json = nlohmann::json;

// JSON pointer reference token escaping.
std::string escape(const std::string& key) {
  std::string out;
  for (char ch : key) {
    if (ch == '~') {
      out += "~0";
    } else if (ch == '/') {
      out += "~1";
    } else {
      out += ch;
    }
  }
  return out;
}

// Line of every key and array element, keyed by JSON pointer. nlohmann does not
// keep source positions, so a light scan of the raw text recovers them.
std::map<std::string, int> index_lines(const std::string& s) {
  struct Frame {
    bool object;
    std::string key;
    int index;
  };
  std::map<std::string, int> out;
  std::vector<Frame> stack;
  int line = 1;
  bool expect_key = false;
  bool pending_element = false;
  auto pointer = [&] {
    std::string p;
    for (const auto& f : stack) p += "/" + (f.object ? escape(f.key) : std::to_string(f.index));
    return p;
  };
  out[""] = 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '\n') {
      ++line;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (pending_element && ch != ']') {
      out[pointer()] = line;
      pending_element = false;
    }
    if (ch == '"') {
      std::string str;
      std::size_t j = i + 1;
      for (; j < s.size() && s[j] != '"'; ++j) {
        if (s[j] == '\\' && j + 1 < s.size()) ++j;
        if (s[j] == '\n') ++line;
        str += s[j];
      }
      if (expect_key && !stack.empty() && stack.back().object) {
        stack.back().key = str;
        out[pointer()] = line;
        expect_key = false;
      }
      i = j;
    } else if (ch == '{') {
      stack.push_back({true, "", 0});
      expect_key = true;
    } else if (ch == '[') {
      stack.push_back({false, "", 0});
      pending_element = true;
    } else if (ch == '}' || ch == ']') {
      if (!stack.empty()) stack.pop_back();
      pending_element = false;
      expect_key = false;
    } else if (ch == ',' && !stack.empty()) {
      if (stack.back().object) {
        expect_key = true;
      } else {
        ++stack.back().index;
        pending_element = true;
      }
    }
  }
  return out;
}

class Context {
 public:
  Context(std::string source, const std::string& text) : source_(std::move(source)), lines_(index_lines(text)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw Error(ErrorKind::Input, source_ + ":" + std::to_string(line_of(ptr)) + ": " + (ptr.empty() ? "/" : ptr) +
                                      ": " + msg);
  }

 private:
  int line_of(std::string ptr) const {
    for (;;) {
      auto it = lines_.find(ptr);
      if (it != lines_.end()) return it->second;
      const auto cut = ptr.rfind('/');
      if (cut == std::string::npos) return 1;
      ptr.resize(cut);
    }
  }

  std::string source_;
  std::map<std::string, int> lines_;
};

// A JSON value together with its pointer, so every check can report a line.
struct Node {
  const json& value;
  std::string ptr;
  const Context& ctx;

  [[noreturn]] void fail(const std::string& msg) const { ctx.fail(ptr, msg); }

  bool has(const std::string& key) const { return value.contains(key); }

  Node operator[](const std::string& key) const {
    if (!value.contains(key)) fail("missing required key \"" + key + "\"");
    return {value.at(key), ptr + "/" + escape(key), ctx};
  }
  Node operator[](std::size_t i) const { return {value.at(i), ptr + "/" + std::to_string(i), ctx}; }

  const Node& object(std::initializer_list<const char*> allowed) const {
    if (!value.is_object()) fail("expected an object");
    for (const auto& [key, _] : value.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!known) ctx.fail(ptr + "/" + escape(key), "unknown key \"" + key + "\"");
    }
    return *this;
  }

  std::size_t array() const {
    if (!value.is_array()) fail("expected an array");
    return value.size();
  }

  double number() const {
    if (!value.is_number()) fail("expected a number");
    const double d = value.get<double>();
    if (!std::isfinite(d)) fail("expected a finite number");
    return d;
  }

  long long integer() const {
    if (!value.is_number_integer()) fail("expected an integer");
    return value.get<long long>();
  }

  std::string string() const {
    if (!value.is_string()) fail("expected a string");
    return value.get<std::string>();
  }

  bool boolean() const {
    if (!value.is_boolean()) fail("expected true or false");
    return value.get<bool>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0, n = array(); i < n; ++i) out.push_back((*this)[i].number());
    return out;
  }
};

// Runs a constructor that may throw a domain error and re-anchors it at the node.
template <class F>
auto anchored(const Node& node, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Input) throw;
    node.fail(e.what());
  }
}

FunctionSpec parse_function(const Node& node, FunctionRole role) {
  const std::string family = node.object({"family", "slope", "a", "r", "inner", "threshold", "outer_slope"})["family"].string();
  if (family == "linear") {
    node.object({"family", "slope"});
    const double slope = node["slope"].number();
    return anchored(node, [&] { return FunctionSpec::linear(slope, role); });
  }
  if (family == "power") {
    node.object({"family", "a", "r"});
    const double a = node["a"].number();
    const double r = node["r"].number();
    return anchored(node, [&] { return FunctionSpec::power(a, r, role); });
  }
  if (family == "kinked") {
    node.object({"family", "inner", "threshold", "outer_slope"});
    const FunctionSpec inner = parse_function(node["inner"], role);
    const double threshold = node["threshold"].number();
    const double outer = node["outer_slope"].number();
    return anchored(node, [&] { return FunctionSpec::kinked(inner, threshold, outer, role); });
  }
  node["family"].fail("unknown family \"" + family + "\" (expected linear, power or kinked)");
}

AgentSpec parse_agent(const Node& node) {
  node.object({"impact", "cost", "delta", "alpha", "beta"});
  const FunctionSpec impact = parse_function(node["impact"], FunctionRole::Impact);
  const FunctionSpec cost = parse_function(node["cost"], FunctionRole::Cost);
  const double delta = node["delta"].number();
  const double alpha = node.has("alpha") ? node["alpha"].number() : 1.0;
  const double beta = node.has("beta") ? node["beta"].number() : 0.0;
  return anchored(node, [&] {
    AgentSpec a = make_agent(impact, cost, delta, alpha, beta);
    a.validate();
    return a;
  });
}

std::vector<double> target_or_uniform(const Node& node, std::size_t n) {
  if (!node.has("target")) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  return node["target"].numbers();
}

ObjectiveSpec parse_objective(const Node& node, std::size_t n) {
  const std::string form = node.object({"form", "lambda", "target", "weights"})["form"].string();
  ObjectiveSpec obj;
  if (form == "total_effort") {
    node.object({"form"});
    obj.form = TotalEffort{};
  } else if (form == "expected_winner_effort") {
    node.object({"form"});
    obj.form = ExpectedWinnerEffort{};
  } else if (form == "fairness_penalized") {
    node.object({"form", "lambda", "target"});
    obj.form = FairnessPenalized{node["lambda"].number(), target_or_uniform(node, n)};
  } else if (form == "weighted_effort") {
    obj.form = WeightedEffort{node["weights"].numbers(), node["lambda"].number(), target_or_uniform(node, n)};
  } else {
    node["form"].fail("unknown objective \"" + form +
                      "\" (expected total_effort, fairness_penalized, expected_winner_effort or weighted_effort)");
  }
  anchored(node, [&] {
    obj.validate(n);
    return 0;
  });
  return obj;
}

void parse_solver(const Node& node, SolverConfig& cfg) {
  node.object({"bisect_tol", "grid_points", "scan_points", "bracket_growth", "partition_tol", "max_iter",
               "root_selection", "verify_tol"});
  if (node.has("bisect_tol")) cfg.bisect_tol = node["bisect_tol"].number();
  if (node.has("grid_points")) cfg.grid_points = static_cast<int>(node["grid_points"].integer());
  if (node.has("scan_points")) cfg.scan_points = static_cast<int>(node["scan_points"].integer());
  if (node.has("bracket_growth")) cfg.bracket_growth = node["bracket_growth"].number();
  if (node.has("partition_tol")) cfg.partition_tol = node["partition_tol"].number();
  if (node.has("max_iter")) cfg.max_iter = static_cast<int>(node["max_iter"].integer());
  if (node.has("verify_tol")) cfg.verify_tol = node["verify_tol"].number();
  if (node.has("root_selection")) {
    const std::string sel = node["root_selection"].string();
    if (sel == "largest") {
      cfg.root_selection = RootSelection::Largest;
    } else if (sel == "all") {
      cfg.root_selection = RootSelection::All;
    } else {
      node["root_selection"].fail("expected \"largest\" or \"all\"");
    }
  }
  anchored(node, [&] {
    cfg.validate();
    return 0;
  });
}

}  // namespace

DesignProblem Scenario::design_problem() const {
  DesignProblem d;
  d.base_agents = game.agents;
  d.objective = objective;
  d.k_candidates = k_candidates;
  d.solver = solver;
  d.starts = starts;
  d.max_probes = max_probes;
  if (locked) {
    Mechanism m;
    for (const auto& a : game.agents) {
      m.alpha.push_back(a.alpha);
      m.beta.push_back(a.beta);
    }
    d.locked = m;
  }
  d.validate();
  return d;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw Error(ErrorKind::Input, source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const Context ctx(source, text);
  const Node root{doc, "", ctx};
  root.object({"agents", "k", "objective", "solver", "design", "profile", "simulate"});

  Scenario sc;
  sc.source = source;
  const Node agents = root["agents"];
  const std::size_t n = agents.array();
  if (n < 2) agents.fail("at least two agents are required");
  for (std::size_t i = 0; i < n; ++i) sc.game.agents.push_back(parse_agent(agents[i]));

  auto check_k = [&](const Node& node) {
    const long long k = node.integer();
    if (k < 1 || k > static_cast<long long>(n)) node.fail("k must lie in 1.." + std::to_string(n));
    return static_cast<int>(k);
  };
  sc.game.k = root.has("k") ? check_k(root["k"]) : 1;
  for (int k = 1; k <= static_cast<int>(n); ++k) sc.k_candidates.push_back(k);

  if (root.has("objective")) sc.objective = parse_objective(root["objective"], n);
  if (root.has("solver")) parse_solver(root["solver"], sc.solver);

  if (root.has("design")) {
    const Node d = root["design"];
    d.object({"k_candidates", "mechanism", "starts", "max_probes"});
    if (d.has("k_candidates")) {
      const Node ks = d["k_candidates"];
      sc.k_candidates.clear();
      for (std::size_t i = 0, m = ks.array(); i < m; ++i) sc.k_candidates.push_back(check_k(ks[i]));
      if (sc.k_candidates.empty()) ks.fail("k_candidates must not be empty");
    }
    if (d.has("mechanism")) {
      const std::string mode = d["mechanism"].string();
      if (mode != "locked" && mode != "free") d["mechanism"].fail("expected \"locked\" or \"free\"");
      sc.locked = mode == "locked";
    }
    if (d.has("starts")) {
      sc.starts = static_cast<int>(d["starts"].integer());
      if (sc.starts < 1) d["starts"].fail("starts must be positive");
    }
    if (d.has("max_probes")) {
      sc.max_probes = static_cast<int>(d["max_probes"].integer());
      if (sc.max_probes < 1) d["max_probes"].fail("max_probes must be positive");
    }
  }

  if (root.has("profile")) {
    const Node pr = root["profile"];
    pr.object({"x", "p"});
    FixedProfile fp{pr["x"].numbers(), pr["p"].numbers()};
    if (fp.x.size() != n) pr["x"].fail("expected " + std::to_string(n) + " entries");
    if (fp.p.size() != n) pr["p"].fail("expected " + std::to_string(n) + " entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fp.x[i] < 0.0) pr["x"][i].fail("effort must be nonnegative");
      if (fp.p[i] < 0.0 || fp.p[i] > 1.0) pr["p"][i].fail("probability must lie in [0, 1]");
      sum += fp.p[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) pr["p"].fail("probabilities must sum to 1");
    sc.profile = std::move(fp);
  }

  if (root.has("simulate")) {
    const Node s = root["simulate"];
    s.object({"rounds", "seed"});
    if (s.has("rounds")) {
      sc.rounds = s["rounds"].integer();
      if (sc.rounds < 2) s["rounds"].fail("rounds must be at least 2");
    }
    if (s.has("seed")) {
      const long long seed = s["seed"].integer();
      if (seed <= 0) s["seed"].fail("seed must be a positive integer (0 is reserved)");
      sc.seed = static_cast<std::uint64_t>(seed);
    }
  }

  anchored(root, [&] {
    sc.game.validate();
    return 0;
  });
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, path + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

void write_equilibrium_csv(std::ostream& out, const Equilibrium& eq) {
  const std::size_t n = eq.size();
  out << "agent,x,p,mu,v,partition";
  for (std::size_t j = 0; j < n; ++j) out << ",psi_" << j + 1;
  out << ",VL,VDelta,Y\n";
  std::ostringstream row;
  row << std::setprecision(10);
  for (std::size_t i = 0; i < n; ++i) {
    row.str("");
    row << i + 1 << ',' << eq.x[i] << ',' << eq.p[i] << ',' << eq.mu[i] << ',' << eq.v[i] << ",N"
        << partition_label(eq.partition[i]);
    for (std::size_t j = 0; j < n; ++j) row << ',' << eq.psi[i][j];
    row << ',' << eq.v_low << ',' << eq.v_delta << ',' << eq.Y << '\n';
    out << row.str();
  }
}

Equilibrium read_equilibrium_csv(std::istream& in, const std::string& source) {
  auto fail = [&](int line, const std::string& msg) {
    throw Error(ErrorKind::Input, source + ":" + std::to_string(line) + ": " + msg);
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  auto number = [&](const std::string& cell, int line) {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size() || !std::isfinite(d)) fail(line, "not a number: \"" + cell + "\"");
    return d;
  };

  std::string text;
  if (!std::getline(in, text)) fail(1, "empty file");
  if (!text.empty() && text.back() == '\r') text.pop_back();
  const auto header = split(text);
  if (header.size() < 10 || header[0] != "agent" || header[1] != "x" || header[2] != "p" || header[3] != "mu" ||
      header[4] != "v" || header[5] != "partition") {
    fail(1, "header must start with agent,x,p,mu,v,partition");
  }
  const std::size_t n = header.size() - 9;
  for (std::size_t j = 0; j < n; ++j) {
    if (header[6 + j] != "psi_" + std::to_string(j + 1)) fail(1, "expected column psi_" + std::to_string(j + 1));
  }
  if (header[6 + n] != "VL" || header[7 + n] != "VDelta" || header[8 + n] != "Y") {
    fail(1, "header must end with VL,VDelta,Y");
  }

  Equilibrium eq;
  int line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto cells = split(text);
    if (cells.size() != header.size()) fail(line, "expected " + std::to_string(header.size()) + " columns");
    if (number(cells[0], line) != static_cast<double>(eq.x.size() + 1)) fail(line, "agents must be numbered 1..n in order");
    eq.x.push_back(number(cells[1], line));
    eq.p.push_back(number(cells[2], line));
    eq.mu.push_back(number(cells[3], line));
    eq.v.push_back(number(cells[4], line));
    if (cells[5] == "N1") {
      eq.partition.push_back(Partition::Cheap);
    } else if (cells[5] == "N2") {
      eq.partition.push_back(Partition::Marginal);
    } else if (cells[5] == "N3") {
      eq.partition.push_back(Partition::Expensive);
    } else {
      fail(line, "partition must be N1, N2 or N3");
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) row.push_back(number(cells[6 + j], line));
    eq.psi.push_back(std::move(row));
    const double VL = number(cells[6 + n], line);
    const double VD = number(cells[7 + n], line);
    const double Y = number(cells[8 + n], line);
    if (eq.x.size() == 1) {
      eq.v_low = VL;
      eq.v_delta = VD;
      eq.Y = Y;
    } else if (VL != eq.v_low || VD != eq.v_delta || Y != eq.Y) {
      fail(line, "VL, VDelta and Y must be identical on every row");
    }
  }
  if (eq.x.size() != n) fail(line, "expected " + std::to_string(n) + " agent rows");
  return eq;
}

}  // namespace bargaining
