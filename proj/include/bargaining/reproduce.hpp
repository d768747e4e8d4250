#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bargaining {

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Bundled example runs and seeded property suites, shared by the CLI and the
// acceptance binary.
struct Reproduction {
  std::string id;
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;  // diagnostics that do not gate the result
  double seconds = 0.0;
  double max_residual = 0.0;       // over every solver output produced
  int solves = 0;

  bool pass() const;
  void add(std::string name, bool pass, std::string detail);
};

// Example 1 table: neutral mechanism, k = 1..4, against the printed 4-digit entries.
Reproduction reproduce_example1(double tol = 5e-4);
// Example 2 at c = 0.01 against the exact rationals.
Reproduction reproduce_example2(double tol = 1e-8);
// Example 3 fixed-profile analysis at k = 4, 5 with the printed constants.
Reproduction reproduce_example3(double tol = 5e-4);

Reproduction reproduce_reduction_roundtrip(int games = 50, std::uint64_t seed = 20240601);
Reproduction reproduce_spread_signs(int games = 20, std::uint64_t seed = 20240602);
// Deviation gains on the bundled examples and random games, and the static-contest
// fixed point against the solver at k = 1.
Reproduction check_oracles(int games = 50, std::uint64_t seed = 20240603);
// Monte Carlo play of Example 1 (k = 2) and Example 2.
Reproduction check_monte_carlo(std::int64_t rounds = 1000000, std::uint64_t seed = 20240601);
// Total effort strictly decreasing in k for symmetric games with n in 3..6.
Reproduction check_symmetric_monotonicity(int games = 20, std::uint64_t seed = 20240604);

// ids: ex1, ex2, ex3, thm2-roundtrip, thm3-signs. Unknown ids raise Error(Input).
Reproduction reproduce(const std::string& id);
const std::vector<std::string>& reproduction_ids();

// 10 significant digits.
std::string fmt(double value);

}  // namespace bargaining
