#pragma once

#include <random>
#include <vector>

#include "bargaining/design.hpp"
#include "bargaining/model.hpp"

namespace bargaining::catalog {

// Four agents, f_i = c_i = eta_i x with eta = (1, .2, .2, .2), delta = (.1, .5, .5, .5).
GameSpec example1(int k);

// Three agents, f = x, c = (x, x, c x), delta = (3/8, 1/2, 12/13), k = 2, under the
// mechanism alpha = (62/35, 62/37, 62c/39) Y, beta = (0, 17/222, 0) Y.
GameSpec example2(double c = 0.01, double Y = 1.0);
std::vector<AgentSpec> example2_agents(double c = 0.01);

struct Example3 {
  std::vector<AgentSpec> agents;  // neutral mechanism; the profile analysis sets alpha/beta
  std::vector<double> target_p;
  std::vector<double> target_x;
  double exponent = 0.0;          // r = 839.9 p7 (1 - p7)
};
// Seven agents with delta = 0.999, f = x and kinked costs capping effort at x~.
// x_low / x_mid are x~ for agents 1-3 / 4-6; x~7 = base^(1/r).
Example3 example3(double x_low = 0.0037, double x_mid = 0.0144, double base = 1e-4,
                  double outer_slope = 1e6);

// Seeded random games used by the property suites.
struct RandomGameOptions {
  int n_min = 2;
  int n_max = 5;
  int k_min = 1;        // clipped to n
  int k_max = 99;
  double delta_lo = 0.05;
  double delta_hi = 0.95;
  bool random_mechanism = true;
};
GameSpec random_game(std::mt19937_64& rng, const RandomGameOptions& opt);

// n identical agents with neutral mechanism.
GameSpec random_symmetric_game(std::mt19937_64& rng, int n, int k);

}  // namespace bargaining::catalog
