#include "bargaining/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "roots.hpp"

namespace bargaining {

using detail::bracketed_root;
using detail::median3;

namespace {

constexpr double kYFloor = 1e-30;
constexpr double kHardCap = 1e30;
// |LHS - 1| allowed at a refined V_L root before the bracket is treated as a jump.
constexpr double kRootResidual = 1e-8;
constexpr double kTiny = 1e-300;
constexpr double kZeroSnap = 1e-250;

}  // namespace

void SolverConfig::validate() const {
  if (!(bisect_tol > 0.0) || !(partition_tol > 0.0) || !(verify_tol > 0.0)) {
    throw Error(ErrorKind::Domain, "solver tolerances must be positive");
  }
  if (grid_points < 16) throw Error(ErrorKind::Domain, "grid_points must be >= 16");
  if (scan_points < 4) throw Error(ErrorKind::Domain, "scan_points must be >= 4");
  if (!(bracket_growth > 1.0)) throw Error(ErrorKind::Domain, "bracket_growth must exceed 1");
  if (max_iter < 8) throw Error(ErrorKind::Domain, "max_iter must be >= 8");
}

std::pair<double, MuBranch> inclusion_from_median(double p, double cost, double delta,
                                                  double v_low, double v_delta) {
  if (!(v_delta > 0.0)) return {0.0, MuBranch::Lower};  // V^Delta -> 0 limit
  const double third = v_delta / delta - p * (v_low + v_delta) + cost;
  if (third <= 0.0) return {0.0, MuBranch::Lower};
  if (third >= v_delta * (1.0 - p)) return {1.0 - p, MuBranch::Upper};
  return {third / v_delta, MuBranch::Interior};
}

PointwiseSolution step_i_pointwise(const AgentSpec& agent, double Y, double v_delta, double v_low) {
  if (!(Y > 0.0) || !std::isfinite(Y)) throw Error(ErrorKind::Domain, "aggregate output Y must be > 0");
  if (!(v_delta >= 0.0)) throw Error(ErrorKind::Domain, "V^Delta must be >= 0");

  PointwiseSolution out;
  const double p_floor = std::min(1.0, agent.beta / Y);
  auto finish = [&](double p, double x, bool corner) {
    out.p = p;
    out.x = x;
    out.cost = agent.cost.value(x);
    out.corner = corner;
    std::tie(out.mu, out.branch) = inclusion_from_median(p, out.cost, agent.delta, v_low, v_delta);
    return out;
  };
  if (agent.alpha == 0.0) return finish(p_floor, 0.0, true);

  const double high = v_low + v_delta;
  const double vote_price = v_delta / agent.delta;
  auto phi = [&](double p) {
    const double x = invert_effective_impact(agent, Y * p);
    const double lhs = Y * agent.marginal_ratio(x);
    const double rhs = median3((1.0 - p) * high, (1.0 - p) * v_low,
                               high - vote_price - agent.cost.value(x));
    return lhs - rhs;
  };

  const double phi_floor = phi(p_floor);
  if (phi_floor >= 0.0) return finish(p_floor, 0.0, true);
  const double phi_one = phi(1.0);
  if (phi_one < 0.0) {
    throw Error(ErrorKind::Bracket, "no interior recognition probability in (f(0)/Y, 1]");
  }
  const double p = bracketed_root(phi, p_floor, 1.0, phi_floor, phi_one, 200);
  return finish(p, invert_effective_impact(agent, Y * p), false);
}

namespace {

double sum_recognition(const GameSpec& game, double Y, double v_delta, double v_low) {
  double total = 0.0;
  for (const auto& agent : game.agents) total += step_i_pointwise(agent, Y, v_delta, v_low).p;
  return total;
}

}  // namespace

double step_ii_solve_y(double v_delta, double v_low, const GameSpec& game, const SolverConfig& cfg,
                       double y_hint) {
  double headstarts = 0.0;
  for (const auto& agent : game.agents) headstarts += agent.beta;
  const double floor = std::max(headstarts, kYFloor);
  const double growth = cfg.bracket_growth;
  auto excess = [&](double Y) { return sum_recognition(game, Y, v_delta, v_low) - 1.0; };

  // A warm start begins with a tight bracket whose ratio squares up to the configured growth.
  double start = y_hint > 0.0 ? std::max(y_hint, floor) : std::max(floor, 1.0);
  double factor = y_hint > 0.0 ? std::min(1.001, growth) : growth;
  auto widen = [&] { factor = std::min(factor * factor, growth); };
  double lo = start;
  double hi = start;
  double e_lo = excess(start);
  double e_hi = e_lo;
  if (e_lo >= 0.0) {
    do {
      lo = hi;
      e_lo = e_hi;
      hi *= factor;
      widen();
      if (hi > kHardCap) throw Error(ErrorKind::Divergence, "aggregate output bracket exceeded 1e30");
      e_hi = excess(hi);
    } while (e_hi >= 0.0);
  } else {
    while (e_lo < 0.0) {
      hi = lo;
      e_hi = e_lo;
      if (lo <= floor) {
        throw Error(ErrorKind::NoCandidate,
                    "sum of recognition probabilities below 1 at the headstart boundary");
      }
      lo = std::max(floor, lo / factor);
      widen();
      e_lo = excess(lo);
    }
  }

  // Under Assumption 1 the sum is nonincreasing in Y, so [lo, hi] holds the only
  // crossing. With non-convex costs, look further up for a larger one.
  if (!game.all_costs_convex()) {
    const int nodes = cfg.scan_points;
    const double top = hi * 1e6;
    double prev_y = hi;
    double prev_e = e_hi;
    for (int j = 1; j <= nodes; ++j) {
      const double y = hi * std::pow(top / hi, static_cast<double>(j) / nodes);
      const double e = excess(y);
      if (prev_e < 0.0 && e >= 0.0) {
        // a later crossing from above 1 to below 1 exists beyond y
        lo = y;
        e_lo = e;
        double next = y;
        do {
          next *= growth;
          if (next > kHardCap) throw Error(ErrorKind::Divergence, "aggregate output bracket exceeded 1e30");
          e_hi = excess(next);
          if (e_hi >= 0.0) {
            lo = next;
            e_lo = e_hi;
          }
        } while (e_hi >= 0.0);
        hi = next;
      }
      prev_y = y;
      prev_e = e;
    }
    (void)prev_y;
  }
  return bracketed_root(excess, lo, hi, e_lo, e_hi, cfg.max_iter);
}

InnerCandidate inner_candidate(double v_delta, double v_low, const GameSpec& game,
                               const SolverConfig& cfg, double y_hint) {
  InnerCandidate c;
  c.v_delta = v_delta;
  c.v_low = v_low;
  c.Y = step_ii_solve_y(v_delta, v_low, game, cfg, y_hint);
  const std::size_t n = game.size();
  c.p.resize(n);
  c.mu.resize(n);
  c.x.resize(n);
  c.cost.resize(n);
  c.branch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = step_i_pointwise(game.agents[i], c.Y, v_delta, v_low);
    c.p[i] = s.p;
    c.mu[i] = s.mu;
    c.x[i] = s.x;
    c.cost[i] = s.cost;
    c.branch[i] = s.branch;
  }
  return c;
}

namespace {

// Signed distance to the V^Delta root of the inclusion condition. Positive means the
// candidate lies above the largest root.
double inclusion_crossing(const InnerCandidate& c, std::span<const double> deltas, int k) {
  const std::size_t n = deltas.size();
  const double vd = c.v_delta;
  if (k == 1) {
    // sum mu > 0 iff some third median argument is positive
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      best = std::max(best, vd / deltas[i] - c.p[i] * (c.v_low + vd) + c.cost[i]);
    }
    return best;
  }
  if (k == static_cast<int>(n)) {
    // sum mu = n - 1 iff every agent sits on the upper branch
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double third = vd / deltas[i] - c.p[i] * (c.v_low + vd) + c.cost[i];
      worst = std::min(worst, third - vd * (1.0 - c.p[i]));
    }
    return worst;
  }
  double total = 0.0;
  for (double m : c.mu) total += m;
  return total - static_cast<double>(k - 1);
}

bool above_root(double crossing, int k, std::size_t n) {
  return k == static_cast<int>(n) ? crossing >= 0.0 : crossing > 0.0;
}

}  // namespace

double largest_v_delta(const InnerModel& model, std::span<const double> deltas, int k, double v_low,
                       const SolverConfig& cfg) {
  const std::size_t n = deltas.size();
  // Exact zeros occur on flat stretches (agents pinned to a median branch); map them
  // to the side the predicate assigns so the refinement lands on the boundary.
  auto raw = [&](double vd) { return inclusion_crossing(model(vd, v_low), deltas, k); };
  auto crossing = [&](double vd) {
    const double c = raw(vd);
    if (c != 0.0) return c;
    return above_root(c, k, n) ? kTiny : -kTiny;
  };

  double top = 1.0;
  double c_top = crossing(top);
  while (c_top < 0.0) {
    top *= cfg.bracket_growth;
    if (top > kHardCap) {
      throw Error(ErrorKind::Divergence, "no V^Delta crossing located below the 1e30 cap");
    }
    c_top = crossing(top);
  }

  // Geometric nodes top * ratio^j down to 1e-6 top, then V^Delta = 0.
  const int nodes = cfg.scan_points;
  const double ratio = std::pow(1e-6, 1.0 / nodes);
  double upper = top;
  double c_upper = c_top;
  for (int j = 1; j <= nodes + 1; ++j) {
    const double vd = j <= nodes ? top * std::pow(ratio, j) : 0.0;
    const double c = crossing(vd);
    if (c < 0.0) {
      const double root = bracketed_root(crossing, vd, upper, c, c_upper, cfg.max_iter, cfg.bisect_tol * 1e-3);
      if (root < kZeroSnap) return 0.0;  // a crossing squeezed onto V^Delta = 0
      // sum mu jumps at 0 when zero-value agents sit on the upper branch; the
      // completion step splits mu among them at V^Delta = 0
      if (vd == 0.0 && std::abs(raw(root)) > 1e-6) return 0.0;
      return root;
    }
    upper = vd;
    c_upper = c;
  }
  return 0.0;
}

double budget_residual(const InnerCandidate& c, std::span<const double> deltas, int k) {
  double lhs = c.v_low + static_cast<double>(k) * c.v_delta;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double discounted = deltas[i] * (c.p[i] * c.v_low - c.cost[i]) / (1.0 - deltas[i]);
    lhs += std::min(0.0, discounted - c.v_delta);
  }
  return lhs - 1.0;
}

std::vector<double> v_low_roots(const InnerModel& model, std::span<const double> deltas, int k,
                                const SolverConfig& cfg) {
  auto residual = [&](double v_low) {
    if (v_low <= 0.0) return -1.0;  // both V^Delta and the N1 terms vanish as V_L -> 0
    const double vd = largest_v_delta(model, deltas, k, v_low, cfg);
    return budget_residual(model(vd, v_low), deltas, k);
  };
  auto safe_residual = [&](double v_low) {
    try {
      return residual(v_low);
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();  // brackets touching this node are skipped
    }
  };
  const bool largest_only = cfg.root_selection == RootSelection::Largest;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const int nodes = attempt == 0 ? cfg.grid_points : 4 * cfg.grid_points;
    std::vector<double> roots;
    // Top-down, so the largest root is met first.
    double rb = safe_residual(1.0);
    for (int j = nodes - 1; j >= 0; --j) {
      const double a = static_cast<double>(j) / nodes;
      const double b = static_cast<double>(j + 1) / nodes;
      const double ra = j == 0 ? -1.0 : safe_residual(a);
      if (!std::isnan(ra) && !std::isnan(rb)) {
        if (rb == 0.0) {
          roots.push_back(b);
        } else if (ra != 0.0 && (ra > 0.0) != (rb > 0.0)) {
          try {
            const double root = bracketed_root(residual, a, b, ra, rb, cfg.max_iter, 1e-15);
            if (std::abs(residual(root)) <= kRootResidual) roots.push_back(root);
          } catch (const Error&) {
          }
        }
      }
      if (largest_only && !roots.empty()) return roots;
      rb = ra;
    }
    if (!roots.empty()) return roots;
  }
  throw Error(ErrorKind::Resolution, "no V_L root located on the grid (after a 4x rescan)");
}

namespace {

InnerModel solver_model(const GameSpec& game, const SolverConfig& cfg) {
  auto hint = std::make_shared<double>(0.0);
  return [&game, &cfg, hint](double v_delta, double v_low) {
    InnerCandidate c = inner_candidate(v_delta, v_low, game, cfg, *hint);
    *hint = c.Y;
    return c;
  };
}

std::vector<double> deltas_of(const GameSpec& game) {
  std::vector<double> out;
  for (const auto& a : game.agents) out.push_back(a.delta);
  return out;
}

}  // namespace

double step_iii_solve_v_delta(double v_low, const GameSpec& game, const SolverConfig& cfg) {
  const auto deltas = deltas_of(game);
  return largest_v_delta(solver_model(game, cfg), deltas, game.k, v_low, cfg);
}

std::vector<double> step_iv_solve_v_low(const GameSpec& game, const SolverConfig& cfg) {
  game.validate();
  cfg.validate();
  const auto deltas = deltas_of(game);
  auto roots = v_low_roots(solver_model(game, cfg), deltas, game.k, cfg);
  if (cfg.root_selection == RootSelection::Largest) roots.resize(1);
  return roots;
}

Equilibrium complete_equilibrium(const GameSpec& game, std::vector<double> x, std::vector<double> p,
                                 std::vector<double> mu, double v_low, double v_delta,
                                 const SolverConfig& cfg) {
  const std::size_t n = game.size();
  if (x.size() != n || p.size() != n || mu.size() != n) {
    throw Error(ErrorKind::Domain, "equilibrium profile sizes do not match the game");
  }
  Equilibrium eq;
  eq.x = std::move(x);
  eq.p = std::move(p);
  eq.mu = std::move(mu);
  eq.v_low = v_low;
  eq.v_delta = v_delta;
  eq.Y = 0.0;
  for (std::size_t i = 0; i < n; ++i) eq.Y += game.agents[i].effective_impact(eq.x[i]);

  eq.v.resize(n);
  eq.partition.resize(n);
  int cheap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = game.agents[i];
    const double c = a.cost.value(eq.x[i]);
    const double v_cheap = (eq.p[i] * v_low - c) / (1.0 - a.delta);
    const double v_dear = eq.p[i] * (v_low + v_delta) - c;
    if (a.delta * v_cheap < v_delta - cfg.partition_tol) {
      eq.partition[i] = Partition::Cheap;
      eq.v[i] = v_cheap;
      ++cheap;
    } else if (a.delta * v_dear > v_delta + cfg.partition_tol) {
      eq.partition[i] = Partition::Expensive;
      eq.v[i] = v_dear;
    } else {
      eq.partition[i] = Partition::Marginal;
      eq.v[i] = v_delta / a.delta;
    }
  }
  if (cheap > game.k - 1) {
    throw Error(ErrorKind::Classification,
                "partition puts " + std::to_string(cheap) + " agents below V^Delta with k = " +
                    std::to_string(game.k));
  }
  if (v_delta == 0.0) {
    // Free votes: mu of zero-value agents is pinned only by sum mu = k - 1. The
    // shortfall is spread in proportion to spare capacity 1 - p - mu.
    double deficit = game.k - 1.0;
    double capacity = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      deficit -= eq.mu[i];
      if (eq.partition[i] == Partition::Marginal) capacity += std::max(0.0, 1.0 - eq.p[i] - eq.mu[i]);
    }
    if (deficit > 1e-12) {
      if (capacity < deficit - 1e-12) {
        throw Error(ErrorKind::Classification, "too few zero-value agents to fill coalitions at V^Delta = 0");
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (eq.partition[i] == Partition::Marginal) {
          eq.mu[i] += deficit * std::max(0.0, 1.0 - eq.p[i] - eq.mu[i]) / capacity;
        }
      }
    }
  }
  eq.psi = coalition_fill(eq.p, eq.mu, eq.partition, game.k, cfg);
  return eq;
}

Equilibrium assemble_equilibrium(const GameSpec& game, double v_low, const SolverConfig& cfg) {
  const double v_delta = step_iii_solve_v_delta(v_low, game, cfg);
  const InnerCandidate c = inner_candidate(v_delta, v_low, game, cfg);
  Equilibrium eq = complete_equilibrium(game, c.x, c.p, c.mu, v_low, v_delta, cfg);
  eq.Y = c.Y;
  return eq;
}

std::vector<Equilibrium> solve_all(const GameSpec& game, const SolverConfig& cfg) {
  std::vector<Equilibrium> out;
  for (double v_low : step_iv_solve_v_low(game, cfg)) {
    Equilibrium eq = assemble_equilibrium(game, v_low, cfg);
    eq.residuals = verify_equilibrium(game, eq, cfg.verify_tol);
    out.push_back(std::move(eq));
  }
  return out;
}

Equilibrium solve(const GameSpec& game, const SolverConfig& cfg) {
  SolverConfig largest = cfg;
  largest.root_selection = RootSelection::Largest;
  return solve_all(game, largest).front();
}

}  // namespace bargaining
