#include <doctest.h>

#include <sstream>

#include "bargaining/catalog.hpp"
#include "bargaining/oracle.hpp"
#include "bargaining/solver.hpp"

using namespace bargaining;

namespace {

FunctionSpec lin(double s, FunctionRole r) { return FunctionSpec::linear(s, r); }

}  // namespace

TEST_CASE("no profitable deviation on Example 1 at k = 2") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  for (std::size_t i = 0; i < 4; ++i) {
    const DeviationReport r = best_response_grid(g, eq, i, {0.0, 2.0, 4001});
    CHECK(r.gain <= 1e-5);
    CHECK(r.gain >= 0.0);
  }
}

TEST_CASE("a displaced effort shows up as a gain") {
  const GameSpec g = catalog::example1(2);
  Equilibrium eq = solve(g);
  const double x0 = eq.x[1];
  eq.x[1] = 1.5 * x0;  // opponents and continuation values stay put
  const DeviationReport r = best_response_grid(g, eq, 1, {0.0, 2.0, 4001});
  CHECK(r.gain > 1e-3);
  CHECK(r.best_deviation == doctest::Approx(x0).epsilon(1e-3));
}

TEST_CASE("zero bias agent stays at zero effort") {
  GameSpec g;
  g.k = 1;
  g.agents = {make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5),
              make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5, 0.0, 0.2)};
  const Equilibrium eq = solve(g);
  const DeviationReport r = best_response_grid(g, eq, 1, {0.0, 1.0, 101});
  CHECK(eq.x[1] == 0.0);
  CHECK(r.gain == 0.0);
  CHECK(r.best_deviation == 0.0);
}

TEST_CASE("grid validation") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  CHECK_THROWS_AS(best_response_grid(g, eq, 0, {1.0, 0.5, 10}), Error);
  CHECK_THROWS_AS(best_response_grid(g, eq, 0, {0.0, 1.0, 1}), Error);
}

TEST_CASE("static contest fixed point") {
  SUBCASE("Example 1 at k = 1") {
    const FixedPointResult fp = static_contest_fixed_point(catalog::example1(1));
    CHECK(fp.converged);
    CHECK(fp.x[0] == doctest::Approx(3.0 / 16).epsilon(1e-10));
    CHECK(fp.x[3] == doctest::Approx(15.0 / 16).epsilon(1e-10));
  }
  SUBCASE("two symmetric linear agents") {
    GameSpec g;
    g.k = 1;
    for (int i = 0; i < 2; ++i) {
      g.agents.push_back(make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5));
    }
    const FixedPointResult fp = static_contest_fixed_point(g);
    CHECK(fp.x[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fp.x[1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("one active agent against a headstart background") {
    GameSpec g;
    g.k = 1;
    g.agents = {make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5),
                make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5, 0.0, 0.25)};
    // x maximises x / (x + 1/4) - x: (x + 1/4)^2 = 1/4
    const FixedPointResult fp = static_contest_fixed_point(g);
    CHECK(fp.x[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fp.x[1] == 0.0);
  }
  SUBCASE("matches the solver on random k = 1 games") {
    std::mt19937_64 rng(5);
    catalog::RandomGameOptions opt;
    opt.k_max = 1;
    for (int n = 0; n < 10; ++n) {
      const GameSpec g = catalog::random_game(rng, opt);
      const Equilibrium eq = solve(g);
      const FixedPointResult fp = static_contest_fixed_point(g);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(fp.x[i] == doctest::Approx(eq.x[i]).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(static_contest_fixed_point(catalog::example1(2)), Error);
}

TEST_CASE("simulation of a dictatorship") {
  const GameSpec g = catalog::example1(1);
  const Equilibrium eq = solve(g);
  const SimulationStats st = simulate_bargaining(g, eq, 20000, 7);
  REQUIRE(st.agreement_period.size() == 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(st.mu_hat[i] == 0.0);
    // proposer keeps the whole unit, so v_hat = p_hat - c(x)
    CHECK(st.v_hat[i] == doctest::Approx(st.p_hat[i] - g.agents[i].cost.value(eq.x[i])).epsilon(1e-12));
  }
}

TEST_CASE("simulation agrees with Example 2 and is reproducible") {
  const GameSpec g = catalog::example2();
  const Equilibrium eq = solve(g);
  const SimulationStats a = simulate_bargaining(g, eq, 200000, 11);
  const SimulationStats b = simulate_bargaining(g, eq, 200000, 11);
  CHECK(a.v_hat == b.v_hat);
  CHECK(a.agreement_period.size() == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(a.p_hat[i] - eq.p[i]) <= 3.0 * a.p_se[i]);
    CHECK(std::abs(a.mu_hat[i] - eq.mu[i]) <= 3.0 * a.mu_se[i] + 1e-12);
    CHECK(std::abs(a.v_hat[i] - eq.v[i]) <= 3.0 * a.v_se[i]);
  }
  const SimulationStats c = simulate_bargaining(g, eq, 200000, 12);
  CHECK(c.v_hat != a.v_hat);

  std::ostringstream csv;
  write_simulation_csv(csv, a);
  CHECK(csv.str().rfind("agent,p_hat,p_se,mu_hat,mu_se,v_hat,v_se\n", 0) == 0);
}

TEST_CASE("seed 0 is reserved") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  CHECK_THROWS_AS(simulate_bargaining(g, eq, 100, 0), Error);
}
