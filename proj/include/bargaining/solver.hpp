#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bargaining/model.hpp"

namespace bargaining {

enum class RootSelection { Largest, All };

struct SolverConfig {
  double bisect_tol = 1e-11;
  int grid_points = 512;     // V_L scan over [0, 1]
  int scan_points = 32;      // V^Delta scan below the upper bracket
  double bracket_growth = 2.0;
  double partition_tol = 1e-8;
  int max_iter = 200;
  RootSelection root_selection = RootSelection::Largest;
  double verify_tol = 1e-7;

  void validate() const;
};

// Which branch of the median defining mu_i is active.
enum class MuBranch { Lower, Interior, Upper };

struct PointwiseSolution {
  double p = 0.0;
  double mu = 0.0;
  double x = 0.0;
  double cost = 0.0;
  bool corner = false;
  MuBranch branch = MuBranch::Lower;
};

// mu_i = med{0, VD (1 - p), VD / delta - p (VL + VD) + c} / VD, with mu = 0 at VD = 0.
std::pair<double, MuBranch> inclusion_from_median(double p, double cost, double delta,
                                                  double v_low, double v_delta);

// Step I: the unique (p_i, mu_i) for fixed (Y, V^Delta, V_L).
PointwiseSolution step_i_pointwise(const AgentSpec& agent, double Y, double v_delta, double v_low);

// Step II: largest Y >= sum f~_i(0) with sum_i p_i(Y) = 1.
double step_ii_solve_y(double v_delta, double v_low, const GameSpec& game, const SolverConfig& cfg,
                       double y_hint = 0.0);

// Everything beneath a (V^Delta, V_L) pair.
struct InnerCandidate {
  double Y = 0.0;
  double v_delta = 0.0;
  double v_low = 0.0;
  std::vector<double> p;
  std::vector<double> mu;
  std::vector<double> x;
  std::vector<double> cost;
  std::vector<MuBranch> branch;
};

InnerCandidate inner_candidate(double v_delta, double v_low, const GameSpec& game,
                               const SolverConfig& cfg, double y_hint = 0.0);

// Maps (V^Delta, V_L) to the per-agent state. The solver uses Steps I-II; the
// fixed-profile analysis plugs in constant (p, c).
using InnerModel = std::function<InnerCandidate(double v_delta, double v_low)>;

// Step III over an arbitrary inner model: largest V^Delta with sum mu = k - 1
// (boundary of the flat set for k = 1 and k = n).
double largest_v_delta(const InnerModel& model, std::span<const double> deltas, int k,
                       double v_low, const SolverConfig& cfg);

// LHS - 1 of the budget condition, with N1 read off the candidate.
double budget_residual(const InnerCandidate& c, std::span<const double> deltas, int k);

// Step IV over an arbitrary inner model: every grid-bracketed V_L root in [0, 1].
std::vector<double> v_low_roots(const InnerModel& model, std::span<const double> deltas, int k,
                                const SolverConfig& cfg);

double step_iii_solve_v_delta(double v_low, const GameSpec& game, const SolverConfig& cfg);
std::vector<double> step_iv_solve_v_low(const GameSpec& game, const SolverConfig& cfg);

// psi_ij with psi = 1 on N1 columns, 0 on N3 columns, and N2 columns filled so that
// rows sum to k - 1 and p-weighted columns reproduce mu.
std::vector<std::vector<double>> coalition_fill(std::span<const double> p, std::span<const double> mu,
                                                std::span<const Partition> partition, int k,
                                                const SolverConfig& cfg = {});

// Completes (x, p, mu, V_L, V^Delta) into a full equilibrium record: Y, v,
// partition and psi. Residuals are left empty.
Equilibrium complete_equilibrium(const GameSpec& game, std::vector<double> x, std::vector<double> p,
                                 std::vector<double> mu, double v_low, double v_delta,
                                 const SolverConfig& cfg = {});

Equilibrium assemble_equilibrium(const GameSpec& game, double v_low, const SolverConfig& cfg);

ResidualReport verify_equilibrium(const GameSpec& game, const Equilibrium& eq, double tol);

// Canonical equilibrium (largest V_L root), verified at cfg.verify_tol.
Equilibrium solve(const GameSpec& game, const SolverConfig& cfg = {});
// One equilibrium per V_L root.
std::vector<Equilibrium> solve_all(const GameSpec& game, const SolverConfig& cfg = {});

}  // namespace bargaining
