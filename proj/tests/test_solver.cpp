#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "bargaining/catalog.hpp"
#include "bargaining/solver.hpp"

using namespace bargaining;

namespace {

FunctionSpec lin(double s, FunctionRole r) { return FunctionSpec::linear(s, r); }

GameSpec symmetric_linear(int n, int k, double delta) {
  GameSpec g;
  g.k = k;
  for (int i = 0; i < n; ++i) {
    g.agents.push_back(make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), delta));
  }
  return g;
}

}  // namespace

TEST_CASE("inclusion median branches") {
  // t = VD/delta - p (VL + VD) + c
  auto [lo, b1] = inclusion_from_median(0.5, 0.0, 0.5, 0.9, 0.1);  // t = 0.2 - 0.5 = -0.3
  CHECK(lo == 0.0);
  CHECK(b1 == MuBranch::Lower);
  auto [up, b2] = inclusion_from_median(0.0, 0.0, 0.5, 0.9, 0.1);  // t/VD = 2 > 1 - p
  CHECK(up == doctest::Approx(1.0));
  CHECK(b2 == MuBranch::Upper);
  auto [mid, b3] = inclusion_from_median(0.1, 0.0, 0.5, 0.9, 0.1);  // t = 0.1 >= VD (1 - p)
  CHECK(mid == doctest::Approx(0.9));
  CHECK(b3 == MuBranch::Upper);
  auto [in, b4] = inclusion_from_median(0.15, 0.0, 0.5, 0.9, 0.1);  // t = 0.05
  CHECK(in == doctest::Approx(0.5));
  CHECK(b4 == MuBranch::Interior);
  CHECK(inclusion_from_median(0.2, 0.0, 0.5, 0.9, 0.0).first == 0.0);
}

TEST_CASE("Step I corner when the headstart already exceeds the target") {
  AgentSpec a = make_agent(lin(1.0, FunctionRole::Impact), lin(10.0, FunctionRole::Cost), 0.5, 1.0, 0.5);
  const auto s = step_i_pointwise(a, 1.0, 0.0, 1.0);
  CHECK(s.corner);
  CHECK(s.x == 0.0);
  CHECK(s.p == doctest::Approx(0.5));
}

TEST_CASE("two symmetric linear agents at k = 1") {
  const Equilibrium eq = solve(symmetric_linear(2, 1, 0.5));
  CHECK(eq.x[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(eq.x[1] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(eq.residuals.pass);
}

TEST_CASE("Example 1 at k = 1 equals Y p / eta") {
  const Equilibrium eq = solve(catalog::example1(1));
  const double want[4] = {3.0 / 16, 15.0 / 16, 15.0 / 16, 15.0 / 16};
  for (int i = 0; i < 4; ++i) {
    CHECK(eq.x[i] == doctest::Approx(want[i]).epsilon(1e-10));
    CHECK(eq.p[i] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(eq.psi[i][(i + 1) % 4] == 0.0);
  }
}

TEST_CASE("Example 1 at k = 2 and k = 4 match the table") {
  const Equilibrium e2 = solve(catalog::example1(2));
  CHECK(std::abs(e2.p[0] - 0.2322) <= 5e-4);
  CHECK(std::abs(e2.p[1] - 0.2559) <= 5e-4);
  CHECK(std::abs(e2.x[0] - 0.1711) <= 5e-4);
  CHECK(std::abs(e2.x[1] - 0.9433) <= 5e-4);
  CHECK(std::abs(e2.total_effort() - 3.0011) <= 5e-4);
  const Equilibrium e4 = solve(catalog::example1(4));
  CHECK(std::abs(e4.x[0] - 0.1570) <= 5e-4);
  CHECK(std::abs(e4.total_effort() - 2.5116) <= 5e-4);
  // unanimity: every proposer buys every other vote
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) CHECK(e4.psi[i][j] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("Example 1 at k = 3 has a single verified equilibrium") {
  SolverConfig cfg;
  cfg.root_selection = RootSelection::All;
  cfg.grid_points = 2048;
  const auto all = solve_all(catalog::example1(3), cfg);
  REQUIRE(all.size() == 1);
  const Equilibrium& eq = all.front();
  CHECK(eq.residuals.pass);
  // agent 1's effort is the only entry of the printed column this equilibrium shares
  CHECK(std::abs(eq.x[0] - 0.1656) <= 5e-4);
  CHECK(eq.total_effort() == doctest::Approx(2.8072).epsilon(1e-4));
}

TEST_CASE("Example 2 hits the exact rationals") {
  const double c = 0.01;
  const Equilibrium eq = solve(catalog::example2(c));
  CHECK(eq.x[0] == doctest::Approx(70.0 / 372).epsilon(1e-12));
  CHECK(eq.x[1] == doctest::Approx(57.0 / 372).epsilon(1e-12));
  CHECK(eq.x[2] == doctest::Approx(78.0 / (372 * c)).epsilon(1e-12));
  CHECK(eq.v[1] == doctest::Approx(72.0 / 372).epsilon(1e-12));
  CHECK(eq.v_low == doctest::Approx(105.0 / 124).epsilon(1e-12));
  CHECK(eq.v_delta == doctest::Approx(3.0 / 31).epsilon(1e-12));
  CHECK(partition_label(eq.partition[0]) == '1');
  CHECK(eq.psi[2][0] == doctest::Approx(1.0));
}

TEST_CASE("Y scaling leaves the Example 2 profile unchanged") {
  const Equilibrium a = solve(catalog::example2(0.01, 1.0));
  const Equilibrium b = solve(catalog::example2(0.01, 3.0));
  for (int i = 0; i < 3; ++i) {
    CHECK(a.x[i] == doctest::Approx(b.x[i]).epsilon(1e-9));
    CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-9));
  }
  CHECK(b.Y == doctest::Approx(3.0));
}

TEST_CASE("perturbing an equilibrium fails verification") {
  const GameSpec g = catalog::example1(2);
  Equilibrium eq = solve(g);
  REQUIRE(eq.residuals.pass);
  eq.x[1] *= 1.001;
  const ResidualReport rep = verify_equilibrium(g, eq, 1e-7);
  CHECK_FALSE(rep.pass);
  CHECK(rep.get("impact_consistency") > 1e-7);
  Equilibrium eq2 = solve(g);
  eq2.v_delta += 1e-4;
  CHECK_FALSE(verify_equilibrium(g, eq2, 1e-7).pass);
}

TEST_CASE("coalition fill reproduces the marginals") {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
  const std::vector<Partition> part(4, Partition::Marginal);
  // sum mu = k - 1 = 2 with mu_i <= 1 - p_i
  const std::vector<double> mu = {0.8, 0.6, 0.4, 0.2};
  const auto psi = coalition_fill(p, mu, part, 3);
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) {
      CHECK(psi[i][j] >= -1e-12);
      CHECK(psi[i][j] <= 1.0 + 1e-12);
      if (j != i) row += psi[i][j];
    }
    CHECK(row == doctest::Approx(2.0));
  }
  for (int j = 0; j < 4; ++j) {
    double col = 0.0;
    for (int i = 0; i < 4; ++i) col += p[i] * psi[i][j];
    CHECK(col == doctest::Approx(mu[j]).epsilon(1e-10));
  }
}

TEST_CASE("coalition fill rejects impossible marginals") {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<Partition> part(2, Partition::Marginal);
  const std::vector<double> mu = {0.9, 0.1};  // mu_1 > 1 - p_1
  CHECK_THROWS_AS(coalition_fill(p, mu, part, 2), Error);
}

TEST_CASE("zero-value corner agents share free votes at V^Delta = 0") {
  // Two agents cannot afford to enter; votes cost nothing and sum mu = k - 1
  // must still hold.
  GameSpec g;
  g.k = 2;
  g.agents = {
      make_agent(lin(1.84, FunctionRole::Impact), lin(1.67, FunctionRole::Cost), 0.40, 0.77, 0.0),
      make_agent(lin(1.88, FunctionRole::Impact), FunctionSpec::power(0.67, 1.85, FunctionRole::Cost), 0.11, 1.0, 0.038),
      make_agent(lin(1.47, FunctionRole::Impact), FunctionSpec::power(1.77, 1.22, FunctionRole::Cost), 0.43, 1.76, 0.178),
      make_agent(lin(1.67, FunctionRole::Impact), lin(1.67, FunctionRole::Cost), 0.30, 0.68, 0.0),
  };
  const Equilibrium eq = solve(g);
  CHECK(eq.v_delta == 0.0);
  CHECK(eq.x[0] == 0.0);
  CHECK(eq.mu[0] + eq.mu[1] + eq.mu[2] + eq.mu[3] == doctest::Approx(1.0));
  CHECK(eq.residuals.pass);
}

TEST_CASE("random games verify and Largest picks the top V_L root") {
  std::mt19937_64 rng(99);
  catalog::RandomGameOptions opt;
  SolverConfig all;
  all.root_selection = RootSelection::All;
  for (int g = 0; g < 12; ++g) {
    const GameSpec game = catalog::random_game(rng, opt);
    const auto eqs = solve_all(game, all);
    REQUIRE(!eqs.empty());
    const Equilibrium top = solve(game);
    CHECK(top.residuals.pass);
    double largest = 0.0;
    for (const auto& e : eqs) largest = std::max(largest, e.v_low);
    CHECK(top.v_low == doctest::Approx(largest));
    if (game.k == 1) CHECK(eqs.size() == 1);  // unique at k = 1
  }
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.grid_points = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.bracket_growth = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
