#include "bargaining/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "bargaining/catalog.hpp"
#include "bargaining/design.hpp"
#include "bargaining/oracle.hpp"
#include "bargaining/solver.hpp"

namespace bargaining {
namespace {

// Rows: p1, p2-4, x1, x2-4, total effort. Columns: k = 1..4.
constexpr double kTable1[5][4] = {
    {0.2500, 0.2322, 0.2421, 0.2500},
    {0.2500, 0.2559, 0.2526, 0.2500},
    {0.1875, 0.1711, 0.1656, 0.1570},
    {0.9375, 0.9433, 0.8641, 0.7849},
    {3.0000, 3.0011, 2.7578, 2.5116},
};
const char* const kTable1Rows[5] = {"p1", "p2-4", "x1", "x2-4", "total"};

Reproduction timed(const std::string& id, const std::function<void(Reproduction&)>& body) {
  Reproduction r;
  r.id = id;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void record(Reproduction& r, const Equilibrium& eq) {
  r.max_residual = std::max(r.max_residual, eq.residuals.max_residual);
  ++r.solves;
}

Equilibrium solve_recorded(Reproduction& r, const GameSpec& game) {
  Equilibrium eq = solve(game);
  record(r, eq);
  return eq;
}

double max_gain(const GameSpec& game, const Equilibrium& eq) {
  double g = 0.0;
  for (const auto& rep : best_response_all(game, eq)) g = std::max(g, rep.gain);
  return g;
}

std::string join(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

std::string shortfalls(const ProfileAnalysis& a) {
  std::string s;
  for (std::size_t i = 0; i < a.implementation.size(); ++i) {
    if (a.implementation[i].feasible) continue;
    s += (s.empty() ? "" : "; ") + std::string("agent ") + std::to_string(i + 1) + " spread " + fmt(a.spread[i]) +
         " < required " + fmt(a.implementation[i].required_spread);
  }
  return s.empty() ? "every agent implementable" : s;
}

}  // namespace

std::string fmt(double value) {
  std::ostringstream os;
  os.precision(10);
  os << value;
  return os.str();
}

bool Reproduction::pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

void Reproduction::add(std::string name, bool ok, std::string detail) {
  assertions.push_back({std::move(name), ok, std::move(detail)});
}

Reproduction reproduce_example1(double tol) {
  return timed("ex1", [tol](Reproduction& r) {
    std::vector<double> totals;
    int within = 0;
    for (int k = 1; k <= 4; ++k) {
      const Equilibrium eq = solve_recorded(r, catalog::example1(k));
      double worst = 0.0;
      std::string worst_name;
      auto compare = [&](double got, int row, const std::string& label) {
        const double dev = std::abs(got - kTable1[row][k - 1]);
        if (dev > worst) {
          worst = dev;
          worst_name = label;
        }
        return dev;
      };
      // one table entry per row; agents 2-4 must all match their shared entry
      const double entries[5] = {
          compare(eq.p[0], 0, "p1"),
          std::max({compare(eq.p[1], 1, "p2"), compare(eq.p[2], 1, "p3"), compare(eq.p[3], 1, "p4")}),
          compare(eq.x[0], 2, "x1"),
          std::max({compare(eq.x[1], 3, "x2"), compare(eq.x[2], 3, "x3"), compare(eq.x[3], 3, "x4")}),
          compare(eq.total_effort(), 4, "total"),
      };
      std::string detail = "max_dev=" + fmt(worst) + (worst_name.empty() ? "" : " at " + worst_name) + " solver";
      for (int row = 0; row < 5; ++row) {
        if (entries[row] <= tol) ++within;
        detail += std::string(row ? "," : "") + " " + kTable1Rows[row] + "=" + fmt(row == 4   ? eq.total_effort()
                                                                                 : row == 0 ? eq.p[0]
                                                                                 : row == 1 ? eq.p[1]
                                                                                 : row == 2 ? eq.x[0]
                                                                                            : eq.x[1]);
      }
      r.add("table1_k" + std::to_string(k), worst <= tol, detail);
      totals.push_back(eq.total_effort());
    }
    r.add("table1_entries", within == 20, std::to_string(within) + "/20 entries within " + fmt(tol));
    const auto best = std::max_element(totals.begin(), totals.end()) - totals.begin() + 1;
    r.add("total_effort_argmax_k2", best == 2, "total effort by k " + join(totals));
  });
}

Reproduction reproduce_example2(double tol) {
  return timed("ex2", [tol](Reproduction& r) {
    const double c = 0.01;
    const GameSpec game = catalog::example2(c);
    const Equilibrium eq = solve_recorded(r, game);
    const double x[3] = {70.0 / 372, 57.0 / 372, 78.0 / (372 * c)};
    const double v[3] = {56.0 / 372, 72.0 / 372, 39.0 / 372};
    double dx = 0.0, dp = 0.0, dv = 0.0;
    for (int i = 0; i < 3; ++i) {
      dx = std::max(dx, std::abs(eq.x[i] - x[i]));
      dp = std::max(dp, std::abs(eq.p[i] - 1.0 / 3));
      dv = std::max(dv, std::abs(eq.v[i] - v[i]));
    }
    r.add("x", dx <= tol, "max_dev=" + fmt(dx) + " x=" + join(eq.x));
    r.add("p", dp <= tol, "max_dev=" + fmt(dp) + " p=" + join(eq.p));
    r.add("v", dv <= tol, "max_dev=" + fmt(dv) + " v=" + join(eq.v));
    const double dl = std::abs(eq.v_low - 105.0 / 124);
    const double dd = std::abs(eq.v_delta - 3.0 / 31);
    r.add("VL", dl <= tol, "dev=" + fmt(dl) + " VL=" + fmt(eq.v_low));
    r.add("VDelta", dd <= tol, "dev=" + fmt(dd) + " VDelta=" + fmt(eq.v_delta));
    // coalitions {1,2}, {1,2}, {1,3}: proposer i pays exactly member j
    const int member[3] = {1, 0, 0};
    double dpsi = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (j != i) dpsi = std::max(dpsi, std::abs(eq.psi[i][j] - (j == member[i] ? 1.0 : 0.0)));
      }
    }
    r.add("coalitions", dpsi <= tol, "max_dev=" + fmt(dpsi) + " expected {1,2},{1,2},{1,3}");
    r.add("verified", eq.residuals.pass, "max_residual=" + fmt(eq.residuals.max_residual));

    // The same primitives at k = 1 with p uniform: x solves c_i x_i = 2/9.
    std::vector<double> p(3, 1.0 / 3), alpha, beta(3, 0.0), x1;
    const auto agents = catalog::example2_agents(c);
    for (const auto& a : agents) {
      x1.push_back(effort_for_probability(a, 1.0 / 3));
      alpha.push_back((1.0 / 3) / a.impact.value(x1.back()));
    }
    GameSpec g1;
    g1.agents = agents;
    g1.k = 1;
    g1 = g1.with_mechanism(alpha, beta);
    const Equilibrium e1 = solve_recorded(r, g1);
    const double lam2 = eq.total_effort();
    const double lam1 = e1.total_effort();
    r.notes.push_back("fairness-penalized objective with uniform target: k=2 construction " + fmt(lam2) +
                      " (127/372 + 78/(372c) = " + fmt(127.0 / 372 + 78.0 / (372 * c)) + "), k=1 with alpha=" +
                      join(alpha) + " gives " + fmt(lam1) + " (4/9 + 2/(9c) = " + fmt(4.0 / 9 + 2.0 / (9 * c)) +
                      "); " + (lam1 > lam2 ? "k=1" : "k=2") + " attains the larger value");
  });
}

Reproduction reproduce_example3(double tol) {
  return timed("ex3", [tol](Reproduction& r) {
    auto run = [&](const catalog::Example3& ex, int k) {
      ProfileAnalysis a = analyze_fixed_profile(ex.agents, ex.target_x, ex.target_p, k);
      if (a.equilibrium) record(r, *a.equilibrium);
      return a;
    };
    const catalog::Example3 lit = catalog::example3();
    const ProfileAnalysis a5 = run(lit, 5);
    const ProfileAnalysis a4 = run(lit, 4);
    const double sum5 = a5.v_low + a5.v_delta;
    r.add("k5_VL_plus_VDelta", std::abs(sum5 - 0.8399) <= tol, "VL+VDelta=" + fmt(sum5) + " expected 0.8399");
    r.add("k4_VL", std::abs(a4.v_low - 0.7439) <= tol, "VL=" + fmt(a4.v_low) + " expected 0.7439");
    r.add("k4_VDelta", std::abs(a4.v_delta - 0.0669) <= tol, "VDelta=" + fmt(a4.v_delta) + " expected 0.0669");
    r.add("k5_implementable", a5.implementable, shortfalls(a5));
    r.add("k4_not_implementable", !a4.implementable, shortfalls(a4));

    // x~7 = 0.001^(1/r) satisfies r x~7^r = 0.8399 p7 (1 - p7); agents 1-6 refit to match.
    const catalog::Example3 rec = catalog::example3(0.003655925194548428, 0.014382947897367476, 1e-3);
    const ProfileAnalysis b5 = run(rec, 5);
    const ProfileAnalysis b4 = run(rec, 4);
    r.notes.push_back("printed constants: k=5 VL+VDelta=" + fmt(sum5) + " implementable=" +
                      (a5.implementable ? "yes" : "no") + "; k=4 (VL, VDelta)=(" + fmt(a4.v_low) + ", " +
                      fmt(a4.v_delta) + ") implementable=" + (a4.implementable ? "yes" : "no"));
    r.notes.push_back("reconstructed constants (x~7 base 0.001, x~1-6 refit): k=5 VL+VDelta=" +
                      fmt(b5.v_low + b5.v_delta) + " implementable=" + (b5.implementable ? "yes" : "no") +
                      "; k=4 (VL, VDelta)=(" + fmt(b4.v_low) + ", " + fmt(b4.v_delta) +
                      ") implementable=" + (b4.implementable ? "yes" : "no"));
  });
}

Reproduction reproduce_reduction_roundtrip(int games, std::uint64_t seed) {
  return timed("thm2-roundtrip", [=](Reproduction& r) {
    std::mt19937_64 rng(seed);
    catalog::RandomGameOptions opt;
    opt.k_min = 2;
    double worst = 0.0;
    double min_theta = std::numeric_limits<double>::infinity();
    int failures = 0;
    std::string first_failure;
    for (int g = 0; g < games; ++g) {
      const GameSpec game = catalog::random_game(rng, opt);
      try {
        const Equilibrium eq = solve_recorded(r, game);
        const Reduction red = reduce_to_dictatorship(game, eq);
        for (double t : red.theta) {
          if (!std::isnan(t)) min_theta = std::min(min_theta, t);
        }
        const Equilibrium e1 =
            solve_recorded(r, game.with_k(1).with_mechanism(red.mechanism.alpha, red.mechanism.beta));
        for (std::size_t i = 0; i < game.size(); ++i) {
          worst = std::max({worst, std::abs(eq.x[i] - e1.x[i]), std::abs(eq.p[i] - e1.p[i])});
        }
      } catch (const std::exception& e) {
        if (failures++ == 0) first_failure = "game " + std::to_string(g) + ": " + e.what();
      }
    }
    r.add("solves", failures == 0,
          std::to_string(games - failures) + "/" + std::to_string(games) + " games" +
              (failures ? " (first failure " + first_failure + ")" : ""));
    r.add("roundtrip", failures == 0 && worst <= 1e-6, "max |dx|,|dp| = " + fmt(worst));
    r.add("theta_nonnegative", min_theta >= -1e-9, "min theta = " + fmt(min_theta));
  });
}

Reproduction reproduce_spread_signs(int games, std::uint64_t seed) {
  return timed("thm3-signs", [=](Reproduction& r) {
    std::mt19937_64 rng(seed);
    catalog::RandomGameOptions opt;
    opt.delta_hi = 0.5;
    int equilibria = 0, sign_bad = 0, spread_bad = 0, failures = 0, comparisons = 0;
    std::string first_failure, first_sign, first_spread;
    for (int g = 0; g < games; ++g) {
      const GameSpec base = catalog::random_game(rng, opt);
      for (int k = 1; k <= static_cast<int>(base.size()); ++k) {
        const GameSpec game = base.with_k(k);
        try {
          const Equilibrium eq = solve_recorded(r, game);
          ++equilibria;
          const SpreadQuantities t = spread_quantities(eq, game);
          if (!t.signs_hold && sign_bad++ == 0) {
            first_sign = "game " + std::to_string(g) + " k=" + std::to_string(k) + " A=" + fmt(t.A) +
                         " B=" + fmt(t.B) + " C=" + fmt(t.C) + " D=" + fmt(t.D);
          }
          if (k < static_cast<int>(base.size())) {
            const ProfileAnalysis next = analyze_fixed_profile(game.agents, eq.x, eq.p, k + 1);
            for (std::size_t i = 0; i < game.size(); ++i) {
              ++comparisons;
              if (next.spread[i] > eq.effective_spread(i) + 1e-9 && spread_bad++ == 0) {
                first_spread = "game " + std::to_string(g) + " k=" + std::to_string(k) + " agent " +
                               std::to_string(i + 1) + ": " + fmt(eq.effective_spread(i)) + " -> " +
                               fmt(next.spread[i]);
              }
            }
          }
        } catch (const std::exception& e) {
          if (failures++ == 0) first_failure = "game " + std::to_string(g) + " k=" + std::to_string(k) + ": " + e.what();
        }
      }
    }
    r.add("solves", failures == 0,
          std::to_string(equilibria) + " equilibria" + (failures ? ", first failure " + first_failure : ""));
    r.add("ABCD_and_derivative_signs", sign_bad == 0,
          std::to_string(equilibria - sign_bad) + "/" + std::to_string(equilibria) + " hold" +
              (sign_bad ? ", first violation " + first_sign : ""));
    r.add("spreads_nonincreasing", spread_bad == 0,
          std::to_string(comparisons - spread_bad) + "/" + std::to_string(comparisons) + " agent comparisons" +
              (spread_bad ? ", first violation " + first_spread : ""));
  });
}

Reproduction check_oracles(int games, std::uint64_t seed) {
  return timed("oracles", [=](Reproduction& r) {
    double example_gain = 0.0, random_gain = 0.0, fp_dev = 0.0;
    int failures = 0, fixed_points = 0;
    std::string first_failure;
    auto fixed_point_dev = [&](const GameSpec& g1, const Equilibrium& e1) {
      const FixedPointResult fp = static_contest_fixed_point(g1);
      ++fixed_points;
      double d = 0.0;
      for (std::size_t i = 0; i < g1.size(); ++i) d = std::max(d, std::abs(fp.x[i] - e1.x[i]));
      return d;
    };

    for (int k = 1; k <= 4; ++k) {
      const GameSpec g = catalog::example1(k);
      const Equilibrium eq = solve_recorded(r, g);
      example_gain = std::max(example_gain, max_gain(g, eq));
      if (k == 1) fp_dev = std::max(fp_dev, fixed_point_dev(g, eq));
    }
    {
      const GameSpec g = catalog::example2();
      example_gain = std::max(example_gain, max_gain(g, solve_recorded(r, g)));
    }
    for (const auto& ex : {catalog::example3(), catalog::example3(0.003655925194548428, 0.014382947897367476, 1e-3)}) {
      for (int k : {4, 5}) {
        const ProfileAnalysis a = analyze_fixed_profile(ex.agents, ex.target_x, ex.target_p, k);
        if (!a.equilibrium) continue;
        record(r, *a.equilibrium);
        GameSpec g;
        g.agents = ex.agents;
        g.k = k;
        g = g.with_mechanism(a.mechanism->alpha, a.mechanism->beta);
        example_gain = std::max(example_gain, max_gain(g, *a.equilibrium));
      }
    }

    std::mt19937_64 rng(seed);
    catalog::RandomGameOptions opt;
    for (int n = 0; n < games; ++n) {
      const GameSpec game = catalog::random_game(rng, opt);
      try {
        const Equilibrium eq = solve_recorded(r, game);
        random_gain = std::max(random_gain, max_gain(game, eq));
        const GameSpec g1 = game.with_k(1);
        const Equilibrium e1 = game.k == 1 ? eq : solve_recorded(r, g1);
        if (game.k != 1) random_gain = std::max(random_gain, max_gain(g1, e1));
        fp_dev = std::max(fp_dev, fixed_point_dev(g1, e1));
      } catch (const std::exception& e) {
        if (failures++ == 0) first_failure = "game " + std::to_string(n) + ": " + e.what();
      }
    }
    r.add("examples_gain", example_gain <= 1e-5, "max gain " + fmt(example_gain));
    r.add("random_games_gain", failures == 0 && random_gain <= 1e-5,
          "max gain " + fmt(random_gain) + " over " + std::to_string(games) + " games" +
              (failures ? ", first failure " + first_failure : ""));
    r.add("fixed_point_k1", failures == 0 && fp_dev <= 1e-6,
          "max |x_fp - x_solver| = " + fmt(fp_dev) + " over " + std::to_string(fixed_points) + " k=1 games");
  });
}

Reproduction check_monte_carlo(std::int64_t rounds, std::uint64_t seed) {
  return timed("monte-carlo", [=](Reproduction& r) {
    auto check = [&](const std::string& name, const GameSpec& game) {
      const Equilibrium eq = solve_recorded(r, game);
      const SimulationStats st = simulate_bargaining(game, eq, rounds, seed);
      double worst = 0.0;  // largest |error| / SE
      bool ok = true;
      for (std::size_t i = 0; i < game.size(); ++i) {
        const double pairs[3][3] = {{st.p_hat[i], eq.p[i], st.p_se[i]},
                                    {st.mu_hat[i], eq.mu[i], st.mu_se[i]},
                                    {st.v_hat[i], eq.v[i], st.v_se[i]}};
        for (const auto& q : pairs) {
          const double err = std::abs(q[0] - q[1]);
          ok = ok && err <= 3.0 * q[2] + 1e-12;
          if (q[2] > 0.0) worst = std::max(worst, err / q[2]);
        }
      }
      const bool immediate = st.agreement_period.size() == 1;
      r.add(name + "_within_3se", ok, "max |error|/SE = " + fmt(worst) + " at " + std::to_string(rounds) + " rounds");
      r.add(name + "_period0", immediate,
            immediate ? "all rounds agree in period 0"
                      : std::to_string(rounds - st.agreement_period[0]) + " rounds delayed");
    };
    check("ex1_k2", catalog::example1(2));
    check("ex2", catalog::example2());
  });
}

Reproduction check_symmetric_monotonicity(int games, std::uint64_t seed) {
  return timed("symmetric", [=](Reproduction& r) {
    std::mt19937_64 rng(seed);
    int bad = 0, failures = 0;
    std::string first;
    for (int g = 0; g < games; ++g) {
      const int n = 3 + g % 4;
      const GameSpec base = catalog::random_symmetric_game(rng, n, 1);
      std::vector<double> totals;
      try {
        for (int k = 1; k <= n; ++k) totals.push_back(solve_recorded(r, base.with_k(k)).total_effort());
      } catch (const std::exception& e) {
        if (failures++ == 0) first = "game " + std::to_string(g) + ": " + e.what();
        continue;
      }
      for (int k = 1; k < n; ++k) {
        if (!(totals[k] < totals[k - 1] - 1e-9)) {
          if (bad++ == 0 && first.empty()) first = "game " + std::to_string(g) + " totals " + join(totals);
          break;
        }
      }
    }
    r.add("strictly_decreasing", bad == 0 && failures == 0,
          std::to_string(games - bad - failures) + "/" + std::to_string(games) + " games" +
              (first.empty() ? "" : ", first problem " + first));
  });
}

const std::vector<std::string>& reproduction_ids() {
  static const std::vector<std::string> ids = {"ex1", "ex2", "ex3", "thm2-roundtrip", "thm3-signs"};
  return ids;
}

Reproduction reproduce(const std::string& id) {
  if (id == "ex1") return reproduce_example1();
  if (id == "ex2") return reproduce_example2();
  if (id == "ex3") return reproduce_example3();
  if (id == "thm2-roundtrip") return reproduce_reduction_roundtrip();
  if (id == "thm3-signs") return reproduce_spread_signs();
  throw Error(ErrorKind::Input, "unknown reproduction id \"" + id + "\" (expected ex1, ex2, ex3, thm2-roundtrip or thm3-signs)");
}

}  // namespace bargaining
