// bargain: solve, design, verify and simulate k-majority bargaining games with
// contest-based recognition.
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bargaining/design.hpp"
#include "bargaining/oracle.hpp"
#include "bargaining/reproduce.hpp"
#include "bargaining/scenario.hpp"
#include "bargaining/solver.hpp"

using namespace bargaining;

namespace {

enum Exit { kOk = 0, kInput = 1, kSolver = 2, kVerify = 3 };

struct Options {
  std::string scenario;
  std::string csv;
  std::optional<double> tol;
  std::optional<std::string> roots;
  std::optional<int> grid;
  std::optional<long long> seed;
  std::optional<long long> rounds;
  std::string id;
};

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

// Scenario plus command-line overrides.
Scenario load(const Options& o) {
  Scenario sc = load_scenario(o.scenario);
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw Error(ErrorKind::Input, "--tol must be positive");
    sc.solver.verify_tol = *o.tol;
  }
  if (o.roots) sc.solver.root_selection = *o.roots == "all" ? RootSelection::All : RootSelection::Largest;
  if (o.grid) {
    if (*o.grid < 2) throw Error(ErrorKind::Input, "--grid must be at least 2");
    sc.solver.grid_points = *o.grid;
  }
  if (o.seed) {
    if (*o.seed <= 0) throw Error(ErrorKind::Input, "--seed must be a positive integer (0 is reserved)");
    sc.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.rounds) {
    if (*o.rounds < 2) throw Error(ErrorKind::Input, "--rounds must be at least 2");
    sc.rounds = *o.rounds;
  }
  return sc;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, path + ": cannot write CSV");
  return out;
}

void print_equilibrium(std::ostream& out, const Equilibrium& eq) {
  const std::size_t n = eq.size();
  out << "agent        x        p       mu        v  set\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << std::setw(5) << i + 1 << std::setw(9) << fixed4(eq.x[i]) << std::setw(9) << fixed4(eq.p[i])
        << std::setw(9) << fixed4(eq.mu[i]) << std::setw(9) << fixed4(eq.v[i]) << "   N"
        << partition_label(eq.partition[i]) << '\n';
  }
  out << "total effort " << fixed4(eq.total_effort()) << "  VL " << fixed4(eq.v_low) << "  VDelta "
      << fixed4(eq.v_delta) << "  Y " << fixed4(eq.Y) << '\n';
  out << "coalition membership psi (row proposer, column member)\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << std::setw(5) << i + 1;
    for (std::size_t j = 0; j < n; ++j) out << std::setw(9) << (i == j ? std::string("-") : fixed4(eq.psi[i][j]));
    out << '\n';
  }
  out << "values (10 significant digits)\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "  agent " << i + 1 << ": x=" << fmt(eq.x[i]) << " p=" << fmt(eq.p[i]) << " mu=" << fmt(eq.mu[i])
        << " v=" << fmt(eq.v[i]) << '\n';
  }
  out << "  VL=" << fmt(eq.v_low) << " VDelta=" << fmt(eq.v_delta) << " Y=" << fmt(eq.Y)
      << " total=" << fmt(eq.total_effort()) << '\n';
}

void print_residuals(std::ostream& out, const ResidualReport& rep) {
  out << "residuals";
  for (const auto& c : rep.conditions) out << ' ' << c.name << '=' << fmt(c.value);
  out << "\nverification " << (rep.pass ? "PASS" : "FAIL") << " max_residual=" << fmt(rep.max_residual)
      << " tol=" << fmt(rep.tolerance) << '\n';
}

int cmd_solve(const Options& o) {
  const Scenario sc = load(o);
  std::vector<Equilibrium> eqs;
  if (sc.solver.root_selection == RootSelection::All) {
    eqs = solve_all(sc.game, sc.solver);
  } else {
    eqs.push_back(solve(sc.game, sc.solver));
  }
  std::ostringstream out;
  out << "n=" << sc.game.size() << " k=" << sc.game.k << " equilibria=" << eqs.size() << '\n';
  bool all_pass = true;
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    if (eqs.size() > 1) out << "\n# equilibrium " << e + 1 << '\n';
    print_equilibrium(out, eqs[e]);
    print_residuals(out, eqs[e].residuals);
    all_pass = all_pass && eqs[e].residuals.pass;
  }
  if (!o.csv.empty()) {
    auto f = open_csv(o.csv);
    write_equilibrium_csv(f, eqs.front());
  }
  std::cout << out.str();
  return all_pass ? kOk : kVerify;
}

int design_profile(const Scenario& sc) {
  const auto& prof = *sc.profile;
  std::ostringstream out;
  out << "fixed-profile analysis, objective " << sc.objective.name() << '\n';
  out << "    k       VL   VDelta  VL+VDelta  implementable   Lambda\n";
  int best_k = 0;
  bool all_verified = true;
  const double lambda = evaluate_objective(sc.objective, prof.x, prof.p);
  for (int k : sc.k_candidates) {
    const ProfileAnalysis a = analyze_fixed_profile(sc.game.agents, prof.x, prof.p, k, sc.solver);
    out << std::setw(5) << k << std::setw(9) << fixed4(a.v_low) << std::setw(9) << fixed4(a.v_delta)
        << std::setw(11) << fixed4(a.v_low + a.v_delta) << std::setw(15) << (a.implementable ? "yes" : "no")
        << std::setw(9) << (a.implementable ? fixed4(lambda) : std::string("n/a")) << '\n';
    for (std::size_t i = 0; i < a.implementation.size(); ++i) {
      if (!a.implementation[i].feasible) {
        out << "      agent " << i + 1 << ": spread " << fmt(a.spread[i]) << " below required "
            << fmt(a.implementation[i].required_spread) << '\n';
      }
    }
    if (a.implementable) {
      if (!best_k) best_k = k;
      all_verified = all_verified && a.equilibrium->residuals.pass;
      out << "      VL=" << fmt(a.v_low) << " VDelta=" << fmt(a.v_delta)
          << " max_residual=" << fmt(a.equilibrium->residuals.max_residual) << '\n';
    }
  }
  if (best_k) {
    out << "target profile implementable at k=" << best_k << " with Lambda=" << fmt(lambda)
        << "; rules marked no cannot reach it\n";
  } else {
    out << "target profile not implementable at any candidate k\n";
  }
  std::cout << out.str();
  return all_verified ? kOk : kVerify;
}

int cmd_design(const Options& o) {
  const Scenario sc = load(o);
  if (sc.profile) return design_profile(sc);
  const SweepReport rep = sweep_k(sc.design_problem());
  std::ostringstream out;
  out << "objective " << sc.objective.name() << ", mechanism " << (sc.locked ? "locked" : "optimized") << '\n';
  out << "    k     Lambda  search     status\n";
  bool verified = true;
  for (const auto& row : rep.rows) {
    out << std::setw(5) << row.k << std::setw(11) << (row.ok ? fixed4(row.lambda_value) : std::string("-"))
        << std::setw(8) << (sc.locked ? "fixed" : row.heuristic ? "local" : "simplex") << "     "
        << (row.ok ? "ok" : row.note) << '\n';
    verified = verified && row.ok;
  }
  for (const auto& row : rep.rows) {
    if (row.k != rep.best_k || !row.result) continue;
    const auto& m = row.result->mechanism;
    out << "best k=" << row.k << " Lambda=" << fmt(row.lambda_value) << '\n';
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
      out << "  agent " << i + 1 << ": alpha=" << fmt(m.alpha[i]) << " beta=" << fmt(m.beta[i])
          << " x=" << fmt(row.result->equilibrium.x[i]) << " p=" << fmt(row.result->equilibrium.p[i]) << '\n';
    }
  }
  if (!sc.locked) {
    out << "k=1 dominance (best at k=1 >= best elsewhere - 1e-5): " << (rep.k1_dominates ? "PASS" : "FAIL") << '\n';
  }
  std::cout << out.str();
  if (!rep.best_k) return kSolver;
  return verified && (sc.locked || rep.k1_dominates) ? kOk : kVerify;
}

int cmd_verify(const Options& o) {
  const Scenario sc = load(o);
  if (o.csv.empty()) throw Error(ErrorKind::Input, "verify needs --csv with an equilibrium table");
  std::ifstream in(o.csv);
  if (!in) throw Error(ErrorKind::Input, o.csv + ": cannot open CSV");
  const Equilibrium eq = read_equilibrium_csv(in, o.csv);
  if (eq.size() != sc.game.size()) {
    throw Error(ErrorKind::Input, o.csv + ": " + std::to_string(eq.size()) + " agents, scenario has " +
                                      std::to_string(sc.game.size()));
  }
  const ResidualReport rep = verify_equilibrium(sc.game, eq, sc.solver.verify_tol);
  print_residuals(std::cout, rep);
  return rep.pass ? kOk : kVerify;
}

int cmd_simulate(const Options& o) {
  const Scenario sc = load(o);
  const Equilibrium eq = solve(sc.game, sc.solver);
  if (!eq.residuals.pass) {
    print_residuals(std::cerr, eq.residuals);
    return kVerify;
  }
  const SimulationStats st = simulate_bargaining(sc.game, eq, sc.rounds, sc.seed);
  std::ostringstream out;
  out << "rounds=" << st.rounds << " seed=" << st.seed << '\n';
  out << "agent    p_hat        p   mu_hat       mu    v_hat        v   max|z|\n";
  for (std::size_t i = 0; i < sc.game.size(); ++i) {
    double z = 0.0;
    const double err[3][2] = {{st.p_hat[i] - eq.p[i], st.p_se[i]},
                              {st.mu_hat[i] - eq.mu[i], st.mu_se[i]},
                              {st.v_hat[i] - eq.v[i], st.v_se[i]}};
    for (const auto& e : err) {
      if (e[1] > 0.0) z = std::max(z, std::abs(e[0]) / e[1]);
    }
    out << std::setw(5) << i + 1 << std::setw(9) << fixed4(st.p_hat[i]) << std::setw(9) << fixed4(eq.p[i])
        << std::setw(9) << fixed4(st.mu_hat[i]) << std::setw(9) << fixed4(eq.mu[i]) << std::setw(9)
        << fixed4(st.v_hat[i]) << std::setw(9) << fixed4(eq.v[i]) << std::setw(9) << fixed4(z) << '\n';
  }
  out << "agreement period histogram:";
  for (std::size_t t = 0; t < st.agreement_period.size(); ++t) out << ' ' << t << ':' << st.agreement_period[t];
  out << '\n';
  if (!o.csv.empty()) {
    auto f = open_csv(o.csv);
    write_simulation_csv(f, st);
  }
  std::cout << out.str();
  return kOk;
}

int cmd_reproduce(const Options& o) {
  const Reproduction r = reproduce(o.id);
  for (const auto& a : r.assertions) {
    std::cout << "ASSERT " << r.id << '.' << a.name << ' ' << (a.pass ? "PASS" : "FAIL") << ' ' << a.detail << '\n';
  }
  for (const auto& note : r.notes) std::cout << "NOTE " << r.id << ' ' << note << '\n';
  std::cout << "SUMMARY " << r.id << ' ' << (r.pass() ? "PASS" : "FAIL") << " solves=" << r.solves
            << " max_residual=" << fmt(r.max_residual) << " seconds=" << fmt(r.seconds) << '\n';
  return r.pass() ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-majority bargaining with contest-based recognition"};
  app.require_subcommand(1);
  Options o;

  auto scenario_flags = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required();
    sub->add_option("--tol", o.tol, "verification tolerance");
    sub->add_option("--roots", o.roots, "V_L root selection")->check(CLI::IsMember({"largest", "all"}));
    sub->add_option("--grid", o.grid, "V_L grid points");
  };
  auto* solve_cmd = app.add_subcommand("solve", "solve the scenario's game and verify the result");
  scenario_flags(solve_cmd);
  solve_cmd->add_option("--csv", o.csv, "write the equilibrium table to this CSV file");

  auto* design_cmd = app.add_subcommand("design", "compare voting rules and recognition mechanisms");
  scenario_flags(design_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "check an equilibrium CSV against the scenario's game");
  scenario_flags(verify_cmd);
  verify_cmd->add_option("--csv", o.csv, "equilibrium CSV written by solve")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo play of the solved equilibrium");
  scenario_flags(sim_cmd);
  sim_cmd->add_option("--seed", o.seed, "RNG seed (positive)");
  sim_cmd->add_option("--rounds", o.rounds, "number of simulated games");
  sim_cmd->add_option("--csv", o.csv, "write per-agent statistics to this CSV file");

  auto* repro_cmd = app.add_subcommand("reproduce", "run a bundled example with its assertions");
  repro_cmd->add_option("id", o.id, "ex1, ex2, ex3, thm2-roundtrip or thm3-signs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*solve_cmd) return cmd_solve(o);
    if (*design_cmd) return cmd_design(o);
    if (*verify_cmd) return cmd_verify(o);
    if (*sim_cmd) return cmd_simulate(o);
    return cmd_reproduce(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::Input ? kInput : kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
}
