// Checks that share no code with the nested solver beyond the model primitives.
#include "bargaining/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

namespace bargaining {
namespace {

struct Environment {
  double others = 0.0;    // sum of opponents' effective output
  double keep = 0.0;      // 1 - w_i when recognised
  double included = 0.0;  // sum_j f~_j psi_ji, scaled by 1/S below
  double reward = 0.0;    // delta_i v_i
};

Environment environment(const GameSpec& game, const Equilibrium& eq, std::size_t i) {
  Environment env;
  double w = 0.0;
  for (std::size_t j = 0; j < game.size(); ++j) {
    if (j == i) continue;
    const double out = game.agents[j].effective_impact(eq.x[j]);
    env.others += out;
    env.included += out * eq.psi[j][i];
    w += eq.psi[i][j] * game.agents[j].delta * eq.v[j];
  }
  env.keep = 1.0 - w;
  env.reward = game.agents[i].delta * eq.v[i];
  return env;
}

double deviation_payoff(const AgentSpec& a, const Environment& env, std::size_t n, double x) {
  const double own = a.effective_impact(x);
  const double total = own + env.others;
  const double win = total > 0.0 ? own / total : 1.0 / static_cast<double>(n);
  // opponents keep their psi rows; their recognition odds rescale with the total
  const double inclusion = total > 0.0 ? env.included / total : 0.0;
  return win * env.keep + inclusion * env.reward - a.cost.value(x);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

DeviationReport best_response_grid(const GameSpec& game, const Equilibrium& eq, std::size_t agent,
                                   const GridSpec& grid) {
  if (grid.points < 2 || !(grid.hi > grid.lo) || grid.lo < 0.0) {
    throw Error(ErrorKind::Domain, "deviation grid needs lo >= 0, hi > lo and at least 2 points");
  }
  const auto& a = game.agents[agent];
  const Environment env = environment(game, eq, agent);
  const double at_eq = deviation_payoff(a, env, game.size(), eq.x[agent]);

  DeviationReport rep;
  rep.agent = agent;
  rep.grid = grid;
  rep.best_deviation = eq.x[agent];
  double best = at_eq;
  for (int g = 0; g < grid.points; ++g) {
    const double x = grid.lo + (grid.hi - grid.lo) * g / (grid.points - 1);
    const double u = deviation_payoff(a, env, game.size(), x);
    if (u > best) {
      best = u;
      rep.best_deviation = x;
    }
  }
  rep.gain = best - at_eq;
  return rep;
}

std::vector<DeviationReport> best_response_all(const GameSpec& game, const Equilibrium& eq, int points) {
  double top = *std::max_element(eq.x.begin(), eq.x.end());
  GridSpec grid{0.0, top > 0.0 ? 2.0 * top : 1.0, points};
  std::vector<DeviationReport> out;
  for (std::size_t i = 0; i < game.size(); ++i) out.push_back(best_response_grid(game, eq, i, grid));
  return out;
}

FixedPointResult static_contest_fixed_point(const GameSpec& game, double damping, int max_iter, double tol) {
  if (game.k != 1) throw Error(ErrorKind::Oracle, "static contest oracle requires k = 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorKind::Domain, "damping must lie in (0, 1]");
  const std::size_t n = game.size();

  // argmax_x f~(x) / (f~(x) + S) - c(x): marginal benefit f~'(x) S / (f~ + S)^2 is
  // decreasing, marginal cost increasing, so bisect on their difference.
  auto best_response = [&](const AgentSpec& a, double S) {
    if (a.alpha == 0.0 || S <= 0.0) return 0.0;
    auto g = [&](double x) {
      const double own = a.effective_impact(x);
      return a.effective_slope(x) * S / ((own + S) * (own + S)) - a.cost.derivative(x);
    };
    if (g(0.0) <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (g(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e30) throw Error(ErrorKind::Oracle, "best response unbounded");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  FixedPointResult res;
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (game.agents[i].alpha > 0.0) res.x[i] = 0.1;
  }
  // Gauss-Seidel sweeps; the damping halves whenever 50 sweeps fail to halve the step.
  double step = damping;
  double checkpoint = std::numeric_limits<double>::infinity();
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += game.agents[i].effective_impact(res.x[i]);
    res.last_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = game.agents[i];
      const double before = a.effective_impact(res.x[i]);
      const double others = total - before;
      const double next = (1.0 - step) * res.x[i] + step * best_response(a, others);
      res.last_change = std::max(res.last_change, std::abs(next - res.x[i]));
      res.x[i] = next;
      total = others + a.effective_impact(next);
    }
    if (res.last_change <= tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations % 50 == 0) {
      if (res.last_change > 0.5 * checkpoint) step *= 0.5;
      checkpoint = res.last_change;
    }
  }
  throw Error(ErrorKind::Oracle, "static contest iteration did not converge (last change " +
                                     std::to_string(res.last_change) + ")");
}

SimulationStats simulate_bargaining(const GameSpec& game, const Equilibrium& eq, std::int64_t rounds,
                                    std::uint64_t seed) {
  if (seed == 0) throw Error(ErrorKind::Domain, "seed 0 is reserved");
  if (rounds < 2) throw Error(ErrorKind::Domain, "simulation needs at least 2 rounds");
  const std::size_t n = game.size();
  const int slots = game.k - 1;
  constexpr int kMaxPeriods = 1000;

  std::vector<double> price(n);  // delta_j v_j: what a responder needs to accept
  std::vector<double> cost(n);
  for (std::size_t j = 0; j < n; ++j) {
    price[j] = game.agents[j].delta * eq.v[j];
    cost[j] = game.agents[j].cost.value(eq.x[j]);
  }

  SimulationStats st;
  st.rounds = rounds;
  st.seed = seed;
  std::vector<double> sum_p(n), sum_mu(n), sum_v(n), sq_v(n);
  std::vector<double> payoff(n);
  std::vector<std::size_t> members;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::int64_t r = 0; r < rounds; ++r) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r))));
    std::fill(payoff.begin(), payoff.end(), 0.0);
    int period = 0;
    for (;; ++period) {
      for (std::size_t j = 0; j < n; ++j) payoff[j] -= std::pow(game.agents[j].delta, period) * cost[j];
      double u = unit(rng);
      std::size_t proposer = n - 1;
      for (std::size_t j = 0; j < n; ++j) {
        if (u < eq.p[j]) {
          proposer = j;
          break;
        }
        u -= eq.p[j];
      }
      // systematic sampling: k - 1 distinct members with marginals psi_ij
      members.clear();
      if (slots > 0) {
        const double start = unit(rng);
        double cum = 0.0;
        int next = 0;
        for (std::size_t j = 0; j < n && next < slots; ++j) {
          if (j == proposer) continue;
          cum += eq.psi[proposer][j];
          while (next < slots && start + next < cum) {
            members.push_back(j);
            ++next;
          }
        }
        // round-off can leave the last slot unfilled; give it to the last eligible column
        for (std::size_t j = n; next < slots && j-- > 0;) {
          if (j != proposer && std::find(members.begin(), members.end(), j) == members.end()) {
            members.push_back(j);
            ++next;
          }
        }
      }
      bool accepted = true;
      for (auto j : members) accepted = accepted && price[j] >= game.agents[j].delta * eq.v[j] - 1e-12;
      if (accepted) {
        double paid = 0.0;
        for (auto j : members) {
          payoff[j] += std::pow(game.agents[j].delta, period) * price[j];
          paid += price[j];
          if (period == 0) sum_mu[j] += 1.0;
        }
        payoff[proposer] += std::pow(game.agents[proposer].delta, period) * (1.0 - paid);
        if (period == 0) sum_p[proposer] += 1.0;
        break;
      }
      if (period + 1 >= kMaxPeriods) break;
    }
    if (static_cast<std::size_t>(period) >= st.agreement_period.size()) st.agreement_period.resize(period + 1);
    ++st.agreement_period[period];
    for (std::size_t j = 0; j < n; ++j) {
      sum_v[j] += payoff[j];
      sq_v[j] += payoff[j] * payoff[j];
    }
  }

  const double R = static_cast<double>(rounds);
  auto bernoulli_se = [R](double q) { return std::sqrt(std::max(0.0, q * (1.0 - q)) / R); };
  for (std::size_t j = 0; j < n; ++j) {
    const double ph = sum_p[j] / R;
    const double mh = sum_mu[j] / R;
    const double vh = sum_v[j] / R;
    st.p_hat.push_back(ph);
    st.p_se.push_back(bernoulli_se(ph));
    st.mu_hat.push_back(mh);
    st.mu_se.push_back(bernoulli_se(mh));
    st.v_hat.push_back(vh);
    st.v_se.push_back(std::sqrt(std::max(0.0, sq_v[j] / R - vh * vh) / (R - 1.0)));
  }
  return st;
}

void write_simulation_csv(std::ostream& out, const SimulationStats& stats) {
  out << "agent,p_hat,p_se,mu_hat,mu_se,v_hat,v_se\n";
  out << std::setprecision(10);
  for (std::size_t j = 0; j < stats.p_hat.size(); ++j) {
    out << j + 1 << ',' << stats.p_hat[j] << ',' << stats.p_se[j] << ',' << stats.mu_hat[j] << ','
        << stats.mu_se[j] << ',' << stats.v_hat[j] << ',' << stats.v_se[j] << '\n';
  }
}

}  // namespace bargaining
