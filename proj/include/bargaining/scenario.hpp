#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bargaining/design.hpp"
#include "bargaining/model.hpp"
#include "bargaining/solver.hpp"

namespace bargaining {

struct FixedProfile {
  std::vector<double> x;
  std::vector<double> p;
};

// A parsed scenario file. Every section except "agents" is optional.
struct Scenario {
  std::string source;
  GameSpec game;                    // agents carry the mechanism given in the file (default alpha 1, beta 0)
  ObjectiveSpec objective;          // default total effort
  SolverConfig solver;
  std::vector<int> k_candidates;    // default 1..n
  bool locked = false;              // design: evaluate the file's mechanism instead of searching
  int starts = 8;
  int max_probes = 80;
  std::optional<FixedProfile> profile;
  std::int64_t rounds = 1000000;
  std::uint64_t seed = 20240601;

  DesignProblem design_problem() const;
};

// Strict parse: unknown keys, wrong types and out-of-domain values raise
// Error(Input) with a "source:line: /json/pointer: message" diagnostic.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::string& path);

// Equilibrium CSV: agent,x,p,mu,v,partition,psi_1..psi_n,VL,VDelta,Y (one row per
// agent, the scalars repeated). Numbers use 10 significant digits.
void write_equilibrium_csv(std::ostream& out, const Equilibrium& eq);
Equilibrium read_equilibrium_csv(std::istream& in, const std::string& source = "<csv>");

}  // namespace bargaining
