#include <doctest.h>

#include <cmath>
#include <random>

#include "bargaining/catalog.hpp"
#include "bargaining/design.hpp"

using namespace bargaining;

namespace {

FunctionSpec lin(double s, FunctionRole r) { return FunctionSpec::linear(s, r); }

DesignProblem two_unit_agents() {
  DesignProblem d;
  for (int i = 0; i < 2; ++i) {
    d.base_agents.push_back(make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5));
  }
  d.objective.form = TotalEffort{};
  d.k_candidates = {1, 2};
  return d;
}

}  // namespace

TEST_CASE("objective forms") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const std::vector<double> p = {0.2, 0.3, 0.5};
  ObjectiveSpec o;
  o.form = TotalEffort{};
  CHECK(evaluate_objective(o, x, p) == doctest::Approx(6.0));
  o.form = ExpectedWinnerEffort{};
  CHECK(evaluate_objective(o, x, p) == doctest::Approx(0.2 + 0.6 + 1.5));
  o.form = FairnessPenalized{10.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  CHECK(evaluate_objective(o, x, p) == doctest::Approx(6.0 - 10.0 * (2.0 / 15 + 1.0 / 30 + 1.0 / 6)));
  o.form = WeightedEffort{{1.0, 0.0, 2.0}, 0.0, {0.2, 0.3, 0.5}};
  CHECK(evaluate_objective(o, x, p) == doctest::Approx(7.0));
  const std::vector<double> flat = {0.5, 0.5, 0.5};
  const std::vector<double> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  o.form = ExpectedWinnerEffort{};
  CHECK(evaluate_objective(o, flat, uniform) == doctest::Approx(0.5));
}

TEST_CASE("Example 2 objective equals the closed form") {
  const double c = 0.01;
  const Equilibrium eq = solve(catalog::example2(c));
  ObjectiveSpec o;
  o.form = FairnessPenalized{1e4, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  CHECK(evaluate_objective(o, eq.x, eq.p) == doctest::Approx(127.0 / 372 + 78.0 / (372 * c)).epsilon(1e-10));
}

TEST_CASE("reduction of Example 1 at k = 2 round-trips through k = 1") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  const Reduction red = reduce_to_dictatorship(g, eq);
  const Equilibrium e1 = solve(g.with_k(1).with_mechanism(red.mechanism.alpha, red.mechanism.beta));
  for (int i = 0; i < 4; ++i) {
    CHECK(e1.x[i] == doctest::Approx(eq.x[i]).epsilon(1e-9));
    CHECK(e1.p[i] == doctest::Approx(eq.p[i]).epsilon(1e-9));
    CHECK(red.theta[i] >= -1e-9);
  }
  CHECK(std::abs(e1.p[0] - 0.2322) <= 5e-4);
  CHECK(std::abs(e1.x[1] - 0.9433) <= 5e-4);
}

TEST_CASE("reduction of a zero-effort agent is (0, p)") {
  GameSpec g;
  g.k = 1;
  g.agents = {make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5),
              make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5, 0.0, 0.1)};
  const Equilibrium eq = solve(g);
  REQUIRE(eq.x[1] == 0.0);
  const Reduction red = reduce_to_dictatorship(g, eq);
  CHECK(red.mechanism.alpha[1] == 0.0);
  CHECK(red.mechanism.beta[1] == doctest::Approx(eq.p[1]));
  CHECK(std::isnan(red.theta[1]));
}

TEST_CASE("reduction of a k = 1 game recovers its mechanism up to scale") {
  GameSpec g = catalog::example1(1);
  const std::vector<double> alpha = {1.0, 2.0, 1.0, 1.0};
  const std::vector<double> beta = {0.05, 0.0, 0.02, 0.0};
  g = g.with_mechanism(alpha, beta);
  const Equilibrium eq = solve(g);
  const Reduction red = reduce_to_dictatorship(g, eq);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(eq.x[i] > 0.0);
    CHECK(red.theta[i] == doctest::Approx(beta[i] / alpha[i]).epsilon(1e-9));
    CHECK(red.mechanism.alpha[i] * eq.Y == doctest::Approx(alpha[i]).epsilon(1e-9));
  }
}

TEST_CASE("inconsistent equilibrium is rejected") {
  const GameSpec g = catalog::example1(2);
  Equilibrium eq = solve(g);
  eq.p[1] = 1e-3;  // FOC now demands far less effort than eq.x[1]
  CHECK_THROWS_AS(reduce_to_dictatorship(g, eq), Error);
}

TEST_CASE("effort for a target probability") {
  const AgentSpec a = make_agent(lin(1.0, FunctionRole::Impact), lin(0.01, FunctionRole::Cost), 0.5);
  CHECK(effort_for_probability(a, 1.0 / 3) == doctest::Approx(2.0 / (9 * 0.01)));
  const AgentSpec b = make_agent(lin(1.0, FunctionRole::Impact), FunctionSpec::power(1.0, 2.0, FunctionRole::Cost), 0.5);
  // c'(x) f / f' = 2 x^2 = p (1 - p)
  CHECK(effort_for_probability(b, 0.5) == doctest::Approx(std::sqrt(0.125)));
}

TEST_CASE("k = 1 bias search: two unit agents") {
  const DesignResult r = optimize_biases_k1(two_unit_agents());
  CHECK(r.verified);
  CHECK(r.equilibrium.p[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.equilibrium.x[0] == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(r.lambda_value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.mechanism.beta[0] == 0.0);
}

TEST_CASE("k = 1 bias search: Example 2 primitives with a heavy fairness penalty") {
  const double c = 0.01;
  DesignProblem d;
  d.base_agents = catalog::example2_agents(c);
  d.objective.form = FairnessPenalized{1e4, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  d.k_candidates = {1};
  const DesignResult r = optimize_biases_k1(d);
  for (int i = 0; i < 3; ++i) CHECK(r.equilibrium.p[i] == doctest::Approx(1.0 / 3).epsilon(1e-6));
  CHECK(r.lambda_value == doctest::Approx(4.0 / 9 + 2.0 / (9 * c)).epsilon(1e-6));
  CHECK(r.lambda_value > 127.0 / 372 + 78.0 / (372 * c));
}

TEST_CASE("k = 1 bias search is symmetric for identical agents") {
  DesignProblem d;
  for (int i = 0; i < 3; ++i) {
    d.base_agents.push_back(make_agent(FunctionSpec::power(1.0, 0.7, FunctionRole::Impact),
                                       FunctionSpec::power(1.0, 1.5, FunctionRole::Cost), 0.5));
  }
  d.objective.form = TotalEffort{};
  d.k_candidates = {1};
  const DesignResult r = optimize_biases_k1(d);
  for (int i = 0; i < 3; ++i) CHECK(r.equilibrium.p[i] == doctest::Approx(1.0 / 3).epsilon(1e-4));
}

TEST_CASE("Example 2 construction is locally optimal at k = 2") {
  const double c = 0.01;
  DesignProblem d;
  d.base_agents = catalog::example2_agents(c);
  d.objective.form = FairnessPenalized{1e3, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  d.k_candidates = {2};
  d.max_probes = 40;
  const GameSpec g = catalog::example2(c);
  Mechanism init;
  for (const auto& a : g.agents) {
    init.alpha.push_back(a.alpha);
    init.beta.push_back(a.beta);
  }
  const DesignResult r = heuristic_biases_k(d, 2, init);
  CHECK(r.heuristic);
  CHECK(r.verified);
  CHECK(r.lambda_value == doctest::Approx(127.0 / 372 + 78.0 / (372 * c)).epsilon(1e-6));
}

TEST_CASE("spread quantities A to D") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  const SpreadQuantities t = spread_quantities(eq, g);
  CHECK(t.A > 0.0);
  CHECK(t.B > 0.0);
  CHECK(t.D > 0.0);
  CHECK(t.dvl_dk <= 0.0);
  CHECK(t.dvdelta_dk >= 0.0);
  CHECK(t.signs_hold);

  SUBCASE("N1 empty, one N2 agent with delta 1/2 and p = 0") {
    Equilibrium e;
    e.p = {0.0, 0.5, 0.5};
    e.partition = {Partition::Marginal, Partition::Expensive, Partition::Expensive};
    e.v_delta = 0.1;
    GameSpec h;
    h.k = 1;
    for (int i = 0; i < 3; ++i) {
      h.agents.push_back(make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5));
    }
    const SpreadQuantities q = spread_quantities(e, h);
    CHECK(q.C - q.A == doctest::Approx(-1.0));
    CHECK(q.dvdelta_dk >= 0.0);
  }
}

TEST_CASE("profile implementation") {
  const AgentSpec a = make_agent(lin(1.0, FunctionRole::Impact), lin(1.0, FunctionRole::Cost), 0.5);
  // at spread s, alpha = c'/(f' (1 - p) s) and beta = p - alpha f
  const Implementation im = implement_profile(a, 0.1, 0.3, 1.0);
  CHECK(im.feasible);
  CHECK(im.alpha == doctest::Approx(1.0 / 0.7));
  CHECK(im.beta == doctest::Approx(0.3 - 0.1 / 0.7));
  CHECK(im.required_spread == doctest::Approx(0.1 / 0.21));
  CHECK_FALSE(implement_profile(a, 0.5, 0.3, 1.0).feasible);  // would need beta < 0
  CHECK(implement_profile(a, 0.0, 0.2, 1.0).beta == doctest::Approx(0.2));
}

TEST_CASE("fixed-profile analysis reproduces a solved equilibrium") {
  const GameSpec g = catalog::example1(2);
  const Equilibrium eq = solve(g);
  const ProfileAnalysis a = analyze_fixed_profile(g.agents, eq.x, eq.p, 2);
  CHECK(a.v_low == doctest::Approx(eq.v_low).epsilon(1e-9));
  CHECK(a.v_delta == doctest::Approx(eq.v_delta).epsilon(1e-9));
  REQUIRE(a.implementable);
  CHECK(a.equilibrium->residuals.pass);
  const ProfileAnalysis b = analyze_fixed_profile(g.agents, eq.x, eq.p, 3);
  for (int i = 0; i < 4; ++i) CHECK(b.spread[i] <= a.spread[i] + 1e-12);
}

TEST_CASE("Example 3 reconstruction separates k = 5 from k = 4") {
  const auto ex = catalog::example3(0.003655925194548428, 0.014382947897367476, 1e-3);
  const ProfileAnalysis a5 = analyze_fixed_profile(ex.agents, ex.target_x, ex.target_p, 5);
  const ProfileAnalysis a4 = analyze_fixed_profile(ex.agents, ex.target_x, ex.target_p, 4);
  CHECK(a5.v_low + a5.v_delta == doctest::Approx(0.8399).epsilon(1e-6));
  CHECK(a5.implementable);
  CHECK_FALSE(a4.implementable);
  CHECK(std::abs(a4.v_low - 0.7439) <= 5e-4);
  CHECK(std::abs(a4.v_delta - 0.0669) <= 5e-4);
  // agent 7's first-order condition binds at the kink: r x^r = 0.8399 p (1 - p)
  const double x7 = ex.target_x[6];
  CHECK(ex.exponent * std::pow(x7, ex.exponent) == doctest::Approx(0.8399 * 0.685 * 0.315).epsilon(1e-9));
}

TEST_CASE("sweep with a locked neutral mechanism") {
  DesignProblem d;
  d.base_agents = catalog::example1(1).agents;
  d.objective.form = TotalEffort{};
  d.k_candidates = {1, 2, 3, 4};
  d.locked = Mechanism{{1, 1, 1, 1}, {0, 0, 0, 0}};
  const SweepReport rep = sweep_k(d);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.rows[0].lambda_value == doctest::Approx(3.0));
  CHECK(std::abs(rep.rows[1].lambda_value - 3.0011) <= 5e-4);
  CHECK(std::abs(rep.rows[3].lambda_value - 2.5116) <= 5e-4);
  CHECK(rep.best_k == 2);
}

TEST_CASE("free sweep keeps k = 1 on top") {
  DesignProblem d = two_unit_agents();
  d.max_probes = 30;
  const SweepReport rep = sweep_k(d);
  CHECK(rep.k1_dominates);
  CHECK(rep.best_k == 1);
}

TEST_CASE("design problem validation") {
  DesignProblem d = two_unit_agents();
  d.k_candidates = {3};
  CHECK_THROWS_AS(d.validate(), Error);
  d = two_unit_agents();
  d.k_candidates.clear();
  CHECK_THROWS_AS(d.validate(), Error);
}
