#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "bargaining/scenario.hpp"

using namespace bargaining;

namespace {

const char* const kTwoAgents = R"({
  "agents": [
    {"impact": {"family": "linear", "slope": 1}, "cost": {"family": "linear", "slope": 1}, "delta": 0.5},
    {"impact": {"family": "power", "a": 1, "r": 0.5},
     "cost": {"family": "kinked", "inner": {"family": "linear", "slope": 1}, "threshold": 2, "outer_slope": 10},
     "delta": 0.4, "alpha": 1.5, "beta": 0.1}
  ],
  "k": 2,
  "objective": {"form": "fairness_penalized", "lambda": 5},
  "solver": {"grid_points": 256, "root_selection": "all"},
  "design": {"k_candidates": [1], "mechanism": "locked"},
  "simulate": {"rounds": 500, "seed": 3}
})";

// Error message of parse_scenario, or "" if it parsed.
std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text, "s.json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("a full scenario parses") {
  const Scenario sc = parse_scenario(kTwoAgents);
  REQUIRE(sc.game.size() == 2);
  CHECK(sc.game.k == 2);
  CHECK(sc.game.agents[1].alpha == 1.5);
  CHECK(sc.game.agents[1].beta == 0.1);
  CHECK(sc.game.agents[1].cost.value(3.0) == doctest::Approx(12.0));
  CHECK(sc.objective.name() == "fairness_penalized");
  CHECK(std::get<FairnessPenalized>(sc.objective.form).target[0] == doctest::Approx(0.5));
  CHECK(sc.solver.grid_points == 256);
  CHECK(sc.solver.root_selection == RootSelection::All);
  CHECK(sc.locked);
  CHECK(sc.k_candidates == std::vector<int>{1});
  CHECK(sc.rounds == 500);
  CHECK(sc.seed == 3u);
  const DesignProblem d = sc.design_problem();
  REQUIRE(d.locked);
  CHECK(d.locked->alpha[1] == 1.5);
}

TEST_CASE("defaults") {
  const Scenario sc = parse_scenario(R"({"agents": [
    {"impact": {"family": "linear", "slope": 1}, "cost": {"family": "linear", "slope": 1}, "delta": 0.5},
    {"impact": {"family": "linear", "slope": 1}, "cost": {"family": "linear", "slope": 1}, "delta": 0.5}]})");
  CHECK(sc.game.k == 1);
  CHECK(sc.game.agents[0].alpha == 1.0);
  CHECK(sc.objective.name() == "total_effort");
  CHECK(sc.k_candidates == std::vector<int>{1, 2});
  CHECK_FALSE(sc.locked);
  CHECK_FALSE(sc.profile);
}

TEST_CASE("unknown keys are rejected with their line") {
  const std::string msg = parse_error(replace(kTwoAgents, "\"delta\": 0.4", "\"delta\": 0.4, \"detla\": 0.4"));
  CHECK(msg.find("s.json:6:") == 0);
  CHECK(msg.find("/agents/1/detla") != std::string::npos);
  CHECK(msg.find("unknown key") != std::string::npos);

  CHECK(parse_error(replace(kTwoAgents, "\"k\": 2", "\"k\": 2, \"extra\": 1")).find("s.json:8:") == 0);
}

TEST_CASE("type and domain errors point at the value") {
  CHECK(parse_error(replace(kTwoAgents, "\"k\": 2", "\"k\": 3")).find("s.json:8: /k: k must lie in 1..2") == 0);
  CHECK(parse_error(replace(kTwoAgents, "\"k\": 2", "\"k\": \"two\"")).find("expected an integer") !=
        std::string::npos);
  const std::string neg = parse_error(replace(kTwoAgents, "\"outer_slope\": 10", "\"outer_slope\": 10, \"x\": 1"));
  CHECK(neg.find("/agents/1/cost/x") != std::string::npos);
  const std::string fam = parse_error(replace(kTwoAgents, "\"power\"", "\"cubic\""));
  CHECK(fam.find("s.json:4:") == 0);
  CHECK(fam.find("unknown family") != std::string::npos);
  const std::string shape = parse_error(replace(kTwoAgents, "\"r\": 0.5", "\"r\": 1.5"));
  CHECK(shape.find("s.json:4: /agents/1/impact") == 0);
  CHECK(shape.find("concave") != std::string::npos);
  CHECK(parse_error(replace(kTwoAgents, "\"delta\": 0.5", "\"delta\": 1.5")).find("s.json:3:") == 0);
  CHECK(parse_error(replace(kTwoAgents, "\"seed\": 3", "\"seed\": 0")).find("reserved") != std::string::npos);
  CHECK(parse_error(replace(kTwoAgents, "\"root_selection\": \"all\"", "\"root_selection\": \"first\"")) != "");
}

TEST_CASE("missing keys and malformed JSON") {
  const std::string missing = parse_error(replace(kTwoAgents, "\"delta\": 0.5", "\"dummy\": 0.5"));
  CHECK(missing.find("unknown key \"dummy\"") != std::string::npos);
  CHECK(parse_error(R"({"k": 1})").find("missing required key \"agents\"") != std::string::npos);
  const std::string bad = parse_error("{\n  \"agents\": [\n    {,\n  ]\n}");
  CHECK(bad.find("s.json:3: malformed JSON") == 0);
}

TEST_CASE("profile section") {
  std::string text = replace(kTwoAgents, "\"k\": 2,", "\"k\": 2, \"profile\": {\"x\": [0.1, 0.2], \"p\": [0.4, 0.6]},");
  const Scenario sc = parse_scenario(text);
  REQUIRE(sc.profile);
  CHECK(sc.profile->p[1] == 0.6);
  CHECK(parse_error(replace(text, "[0.4, 0.6]", "[0.4, 0.5]")).find("sum to 1") != std::string::npos);
}

TEST_CASE("equilibrium CSV round trip") {
  const Scenario sc = parse_scenario(kTwoAgents);
  const Equilibrium eq = solve(sc.game, sc.solver);
  REQUIRE(eq.residuals.pass);
  std::stringstream a, b;
  write_equilibrium_csv(a, eq);
  write_equilibrium_csv(b, solve(sc.game, sc.solver));
  CHECK(a.str() == b.str());  // byte-identical across runs
  CHECK(a.str().rfind("agent,x,p,mu,v,partition,psi_1,psi_2,VL,VDelta,Y\n", 0) == 0);

  const Equilibrium back = read_equilibrium_csv(a, "eq.csv");
  CHECK(back.x[1] == doctest::Approx(eq.x[1]).epsilon(1e-9));
  CHECK(back.partition == eq.partition);
  CHECK(verify_equilibrium(sc.game, back, sc.solver.verify_tol).pass);
}

TEST_CASE("CSV reader diagnostics") {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_equilibrium_csv(in, "eq.csv");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string header = "agent,x,p,mu,v,partition,psi_1,psi_2,VL,VDelta,Y\n";
  CHECK(error_of("agent,x\n").find("eq.csv:1:") == 0);
  CHECK(error_of(header + "1,0.1,0.5,0.5,0.1,N2,0,1,0.9,0.1,1\n2,abc,0.5,0.5,0.1,N2,1,0,0.9,0.1,1\n")
            .find("eq.csv:3: not a number") == 0);
  CHECK(error_of(header + "1,0.1,0.5,0.5,0.1,N4,0,1,0.9,0.1,1\n").find("partition") != std::string::npos);
  CHECK(error_of(header + "1,0.1,0.5,0.5,0.1,N2,0,1,0.9,0.1,1\n").find("expected 2 agent rows") != std::string::npos);
}

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"example1_k1", "example1_k2", "example1_k3", "example1_k4", "example2", "example3"}) {
    INFO(name);
    const std::string path = std::string(SCENARIO_DIR) + "/" + name + ".json";
    CHECK_NOTHROW(load_scenario(path));
  }
  CHECK_THROWS_AS(load_scenario(std::string(SCENARIO_DIR) + "/missing.json"), Error);
}
