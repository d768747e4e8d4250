#include "bargaining/catalog.hpp"

#include <cmath>

namespace bargaining::catalog {

GameSpec example1(int k) {
  const double eta[] = {1.0, 0.2, 0.2, 0.2};
  const double delta[] = {0.1, 0.5, 0.5, 0.5};
  GameSpec g;
  g.k = k;
  for (int i = 0; i < 4; ++i) {
    g.agents.push_back(make_agent(FunctionSpec::linear(eta[i], FunctionRole::Impact),
                                  FunctionSpec::linear(eta[i], FunctionRole::Cost), delta[i]));
  }
  g.validate();
  return g;
}

std::vector<AgentSpec> example2_agents(double c) {
  const double cost[] = {1.0, 1.0, c};
  const double delta[] = {3.0 / 8.0, 0.5, 12.0 / 13.0};
  std::vector<AgentSpec> out;
  for (int i = 0; i < 3; ++i) {
    out.push_back(make_agent(FunctionSpec::linear(1.0, FunctionRole::Impact),
                             FunctionSpec::linear(cost[i], FunctionRole::Cost), delta[i]));
  }
  return out;
}

GameSpec example2(double c, double Y) {
  GameSpec g;
  g.agents = example2_agents(c);
  g.k = 2;
  const std::vector<double> alpha = {62.0 * Y / 35.0, 62.0 * Y / 37.0, 62.0 * Y * c / 39.0};
  const std::vector<double> beta = {0.0, 17.0 * Y / 222.0, 0.0};
  g = g.with_mechanism(alpha, beta);
  g.validate();
  return g;
}

Example3 example3(double x_low, double x_mid, double base, double outer_slope) {
  Example3 ex;
  ex.target_p = {0.005, 0.005, 0.005, 0.1, 0.1, 0.1, 0.685};
  ex.exponent = 839.9 * ex.target_p[6] * (1.0 - ex.target_p[6]);
  const double x7 = std::pow(base, 1.0 / ex.exponent);
  ex.target_x = {x_low, x_low, x_low, x_mid, x_mid, x_mid, x7};
  for (int i = 0; i < 7; ++i) {
    const FunctionSpec inner = i < 6 ? FunctionSpec::linear(1.0, FunctionRole::Cost)
                                     : FunctionSpec::power(1.0, ex.exponent, FunctionRole::Cost);
    ex.agents.push_back(make_agent(FunctionSpec::linear(1.0, FunctionRole::Impact),
                                   FunctionSpec::kinked(inner, ex.target_x[i], outer_slope, FunctionRole::Cost),
                                   0.999));
  }
  return ex;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

FunctionSpec random_impact(std::mt19937_64& rng) {
  if (uniform(rng, 0.0, 1.0) < 0.5) return FunctionSpec::linear(uniform(rng, 0.3, 2.0), FunctionRole::Impact);
  return FunctionSpec::power(uniform(rng, 0.5, 2.0), uniform(rng, 0.4, 1.0), FunctionRole::Impact);
}

FunctionSpec random_cost(std::mt19937_64& rng) {
  if (uniform(rng, 0.0, 1.0) < 0.5) return FunctionSpec::linear(uniform(rng, 0.3, 2.0), FunctionRole::Cost);
  return FunctionSpec::power(uniform(rng, 0.5, 2.0), uniform(rng, 1.0, 2.5), FunctionRole::Cost);
}

}  // namespace

GameSpec random_game(std::mt19937_64& rng, const RandomGameOptions& opt) {
  GameSpec g;
  const int n = std::uniform_int_distribution<int>(opt.n_min, opt.n_max)(rng);
  const int k_hi = std::min(opt.k_max, n);
  const int k_lo = std::min(opt.k_min, k_hi);
  g.k = std::uniform_int_distribution<int>(k_lo, k_hi)(rng);
  for (int i = 0; i < n; ++i) {
    AgentSpec a = make_agent(random_impact(rng), random_cost(rng), uniform(rng, opt.delta_lo, opt.delta_hi));
    if (opt.random_mechanism) {
      a.alpha = uniform(rng, 0.5, 2.0);
      a.beta = uniform(rng, 0.0, 1.0) < 0.3 ? uniform(rng, 0.0, 0.2) : 0.0;
    }
    g.agents.push_back(std::move(a));
  }
  g.validate();
  return g;
}

GameSpec random_symmetric_game(std::mt19937_64& rng, int n, int k) {
  const FunctionSpec impact = random_impact(rng);
  const FunctionSpec cost = random_cost(rng);
  const double delta = uniform(rng, 0.05, 0.95);
  GameSpec g;
  g.k = k;
  for (int i = 0; i < n; ++i) g.agents.push_back(make_agent(impact, cost, delta));
  g.validate();
  return g;
}

}  // namespace bargaining::catalog
