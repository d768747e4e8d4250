#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bargaining/model.hpp"

namespace bargaining {

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int points = 4001;
};

struct DeviationReport {
  std::size_t agent = 0;
  double best_deviation = 0.0;
  double gain = 0.0;  // best grid payoff minus payoff at the equilibrium effort
  GridSpec grid;
};

// One-shot deviation check: opponents' efforts, coalition behaviour and continuation
// values stay at their equilibrium levels. The equilibrium effort is always probed.
DeviationReport best_response_grid(const GameSpec& game, const Equilibrium& eq, std::size_t agent,
                                   const GridSpec& grid);
// Every agent on [0, 2 max x] with the given number of points.
std::vector<DeviationReport> best_response_all(const GameSpec& game, const Equilibrium& eq,
                                               int points = 4001);

struct FixedPointResult {
  std::vector<double> x;
  int iterations = 0;
  double last_change = 0.0;
  bool converged = false;
};

// Damped best-response iteration (Gauss-Seidel order) of the k = 1 static contest, prize 1.
FixedPointResult static_contest_fixed_point(const GameSpec& game, double damping = 0.5,
                                            int max_iter = 20000, double tol = 1e-14);

struct SimulationStats {
  std::int64_t rounds = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> agreement_period;  // histogram, index = period
  std::vector<double> p_hat, p_se;
  std::vector<double> mu_hat, mu_se;
  std::vector<double> v_hat, v_se;
};

// Plays the stationary strategy profile round by round. Each round draws from its
// own generator seeded by (seed, round), so results do not depend on scheduling.
SimulationStats simulate_bargaining(const GameSpec& game, const Equilibrium& eq, std::int64_t rounds,
                                    std::uint64_t seed);

void write_simulation_csv(std::ostream& out, const SimulationStats& stats);

}  // namespace bargaining
