#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bargaining/model.hpp"
#include "bargaining/solver.hpp"

namespace bargaining {

struct Mechanism {
  std::vector<double> alpha;
  std::vector<double> beta;
};

struct DesignProblem {
  std::vector<AgentSpec> base_agents;  // alpha/beta ignored unless the mechanism is locked
  ObjectiveSpec objective;
  std::vector<int> k_candidates;
  std::optional<Mechanism> locked;     // evaluate this mechanism instead of searching
  SolverConfig solver;
  int starts = 8;
  int max_probes = 80;  // full solves per heuristic k >= 2 search

  void validate() const;
  GameSpec game(int k, const Mechanism& m) const;
};

struct DesignResult {
  int k = 1;
  Mechanism mechanism;
  Equilibrium equilibrium;
  double lambda_value = 0.0;
  bool heuristic = false;  // local search with the solver in the loop
  bool verified = false;
  std::vector<std::string> log;
};

double evaluate_objective(const ObjectiveSpec& obj, std::span<const double> x, std::span<const double> p);

// (alpha^, beta^) making the k = 1 game replicate (x, p).
struct Reduction {
  Mechanism mechanism;
  std::vector<double> theta;  // theta^_i before the clamp at 0, NaN for agents with x_i = 0
};
Reduction reduce_to_dictatorship(const GameSpec& game, const Equilibrium& eq, double tol = 1e-9);

// x_i solving c_i'(x) f_i(x) / f_i'(x) = spread * p (1 - p); the k = 1 effort for
// recognition probability p under a zero headstart.
double effort_for_probability(const AgentSpec& agent, double p, double spread = 1.0);

DesignResult optimize_biases_k1(const DesignProblem& problem,
                                const std::vector<std::vector<double>>& extra_starts = {});
DesignResult heuristic_biases_k(const DesignProblem& problem, int k, const Mechanism& init);

struct SpreadQuantities {
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
  double dvl_dk = 0.0;
  double dvdelta_dk = 0.0;
  bool signs_hold = false;  // A, B, D > 0, C >= 0 and, when all delta <= 1/2, dVL/dk <= 0 <= dVD/dk
};
SpreadQuantities spread_quantities(const Equilibrium& eq, const GameSpec& game);

// Bias/headstart making (x_i, p_i) optimal for agent i facing spread s at Y = 1.
struct Implementation {
  bool feasible = false;
  double alpha = 0.0;
  double beta = 0.0;
  double required_spread = 0.0;  // smallest spread at which beta >= 0 is attainable
};
Implementation implement_profile(const AgentSpec& agent, double x, double p, double spread);

// Fix (x, p), solve the remaining conditions for (V_L, V^Delta, mu) at rule k, and
// check whether some (alpha, beta) implements the profile.
struct ProfileAnalysis {
  int k = 1;
  double v_low = 0.0;
  double v_delta = 0.0;
  std::vector<double> mu;
  std::vector<double> spread;
  std::vector<Implementation> implementation;
  bool implementable = false;
  std::optional<Equilibrium> equilibrium;  // set when implementable, with the mechanism applied
  std::optional<Mechanism> mechanism;
};
ProfileAnalysis analyze_fixed_profile(const std::vector<AgentSpec>& agents, std::span<const double> x,
                                      std::span<const double> p, int k, const SolverConfig& cfg = {});

struct SweepRow {
  int k = 1;
  bool ok = false;
  double lambda_value = 0.0;
  bool heuristic = false;
  std::string note;
  std::optional<DesignResult> result;
};
struct SweepReport {
  std::vector<SweepRow> rows;
  int best_k = 0;
  bool k1_dominates = true;  // best at k = 1 >= best elsewhere - 1e-5
};
SweepReport sweep_k(const DesignProblem& problem);

}  // namespace bargaining
