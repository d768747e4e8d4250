// Acceptance report: one PASS/FAIL line per criterion. Exit status is 0 once the
// report is complete; --strict makes any FAIL exit 1.
#include <cstring>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "bargaining/reproduce.hpp"

using namespace bargaining;

namespace {

int failures = 0;

std::string seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << s << " s";
  return os.str();
}

void details(const Reproduction& r) {
  for (const auto& a : r.assertions) {
    std::cout << "    " << (a.pass ? "ok   " : "FAIL ") << r.id << '.' << a.name << ": " << a.detail << '\n';
  }
  for (const auto& note : r.notes) std::cout << "    note " << r.id << ": " << note << '\n';
}

void criterion(int id, const std::string& title, bool pass, const std::string& summary) {
  if (!pass) ++failures;
  std::cout << "CRITERION " << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << title << "  [" << summary << "]\n";
}

// Assertions pass and the run stays inside its time budget.
void simple(int id, const std::string& title, const Reproduction& r, double budget) {
  const bool in_time = r.seconds < budget;
  criterion(id, title, r.pass() && in_time,
            seconds(r.seconds) + " of " + seconds(budget) + ", max residual " + fmt(r.max_residual));
  details(r);
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;

  const Reproduction ex1 = reproduce_example1();
  simple(1, "Example 1 table (k = 1..4, 5e-4)", ex1, 5.0);

  const Reproduction ex2 = reproduce_example2();
  simple(2, "Example 2 exact rationals (1e-8)", ex2, 2.0);

  const Reproduction ex3 = reproduce_example3();
  simple(3, "Example 3 fixed-profile values and k=5 over k=4", ex3, 10.0);

  const Reproduction thm2 = reproduce_reduction_roundtrip();
  simple(4, "dictatorship reduction round trip (50 games)", thm2, 60.0);

  const Reproduction thm3 = reproduce_spread_signs();
  simple(5, "A, B, C, D signs and spread monotonicity (20 games)", thm3, 60.0);

  const Reproduction oracles = check_oracles();
  criterion(6, "best-response grid and static fixed point", oracles.pass(),
            seconds(oracles.seconds) + ", " + std::to_string(oracles.solves) + " solves");
  details(oracles);

  // Criterion 7 pools every solver output from criteria 1-5 and adds Monte Carlo.
  const Reproduction mc = check_monte_carlo();
  double worst = 0.0;
  int solves = 0;
  double total = mc.seconds;
  for (const Reproduction* r : {&ex1, &ex2, &ex3, &thm2, &thm3}) {
    worst = std::max(worst, r->max_residual);
    solves += r->solves;
    total += r->seconds;
  }
  const bool residual_ok = worst <= 1e-7;
  criterion(7, "residual suite and Monte Carlo (1e6 rounds)", residual_ok && mc.pass() && total < 120.0,
            "max residual " + fmt(worst) + " over " + std::to_string(solves) + " solves, " + seconds(total) +
                " of 120.00 s");
  std::cout << "    " << (residual_ok ? "ok   " : "FAIL ") << "residuals: max " << fmt(worst) << " <= 1e-7\n";
  details(mc);

  const Reproduction sym = check_symmetric_monotonicity();
  criterion(8, "symmetric games: total effort strictly decreasing in k", sym.pass(), seconds(sym.seconds));
  details(sym);

  std::cout << "SUMMARY " << 8 - failures << "/8 criteria PASS\n";
  return strict && failures > 0 ? 1 : 0;
}
