#include "bargaining/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "roots.hpp"

namespace bargaining {

using detail::bracketed_root;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kClip = 1e-6;  // simplex boundary for the k = 1 search
constexpr double kDominanceSlack = 1e-5;

double l1_gap(std::span<const double> p, const std::vector<double>& target) {
  double gap = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) gap += std::abs(p[i] - target[i]);
  return gap;
}

}  // namespace

double evaluate_objective(const ObjectiveSpec& obj, std::span<const double> x, std::span<const double> p) {
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  return std::visit(
      overloaded{
          [&](const TotalEffort&) { return total; },
          [&](const FairnessPenalized& f) { return total - f.lambda * l1_gap(p, f.target); },
          [&](const ExpectedWinnerEffort&) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * x[i];
            return s;
          },
          [&](const WeightedEffort& w) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += w.weights[i] * x[i];
            return s - w.lambda * l1_gap(p, w.target);
          },
      },
      obj.form);
}

void DesignProblem::validate() const {
  const std::size_t n = base_agents.size();
  if (n < 2) throw Error(ErrorKind::Domain, "design needs at least two agents");
  for (const auto& a : base_agents) {
    if (!(a.delta > 0.0 && a.delta < 1.0)) throw Error(ErrorKind::Domain, "delta must lie in (0, 1)");
  }
  objective.validate(n);
  if (k_candidates.empty()) throw Error(ErrorKind::Domain, "k_candidates is empty");
  for (int k : k_candidates) {
    if (k < 1 || k > static_cast<int>(n)) throw Error(ErrorKind::Domain, "k candidate out of range");
  }
  if (locked && (locked->alpha.size() != n || locked->beta.size() != n)) {
    throw Error(ErrorKind::Domain, "locked mechanism size does not match the agents");
  }
  if (starts < 1 || max_probes < 1) throw Error(ErrorKind::Domain, "search budgets must be positive");
  solver.validate();
}

GameSpec DesignProblem::game(int k, const Mechanism& m) const {
  GameSpec g;
  g.agents = base_agents;
  g.k = k;
  return g.with_mechanism(m.alpha, m.beta);
}

Reduction reduce_to_dictatorship(const GameSpec& game, const Equilibrium& eq, double tol) {
  const std::size_t n = game.size();
  Reduction out;
  out.mechanism.alpha.assign(n, 0.0);
  out.mechanism.beta.assign(n, 0.0);
  out.theta.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = game.agents[i];
    const double p = eq.p[i];
    const double x = eq.x[i];
    if (x <= 0.0) {
      out.mechanism.beta[i] = p;
      continue;
    }
    const double f = a.impact.value(x);
    // left slopes: at a kink they give the smallest bias consistent with the FOC
    double theta = p * (1.0 - p) * a.impact.left_derivative(x) / a.cost.left_derivative(x) - f;
    if (theta < -tol * std::max(1.0, f)) {
      throw Error(ErrorKind::Inconsistency, "theta for agent " + std::to_string(i + 1) + " is " +
                                                std::to_string(theta) + " < 0");
    }
    out.theta[i] = theta;
    theta = std::max(theta, 0.0);
    out.mechanism.alpha[i] = p / (f + theta);
    out.mechanism.beta[i] = out.mechanism.alpha[i] * theta;
  }
  return out;
}

double effort_for_probability(const AgentSpec& agent, double p, double spread) {
  const double target = spread * p * (1.0 - p);
  if (!(target > 0.0)) return 0.0;
  auto g = [&](double x) {
    if (x <= 0.0) return -target;
    return agent.cost.derivative(x) * agent.impact.value(x) / agent.impact.derivative(x) - target;
  };
  double hi = 1.0;
  double g_hi = g(hi);
  while (g_hi < 0.0) {
    hi *= 2.0;
    if (hi > 1e30) throw Error(ErrorKind::Divergence, "effort bracket exceeded 1e30");
    g_hi = g(hi);
  }
  return bracketed_root(g, 0.0, hi, -target, g_hi, 200);
}

namespace {

std::vector<double> project(std::vector<double> p) {
  for (int pass = 0; pass < 4; ++pass) {
    double s = 0.0;
    for (double& q : p) {
      q = std::max(q, kClip);
      s += q;
    }
    for (double& q : p) q /= s;
  }
  return p;
}

class K1Search {
 public:
  explicit K1Search(const DesignProblem& prob) : prob_(prob) {}

  std::vector<double> efforts(const std::vector<double>& p) const {
    std::vector<double> x(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) x[i] = effort_for_probability(prob_.base_agents[i], p[i]);
    return x;
  }

  double value(const std::vector<double>& p) const {
    for (double q : p) {
      if (q < kClip * (1.0 - 1e-12)) return -std::numeric_limits<double>::infinity();
    }
    return evaluate_objective(prob_.objective, efforts(p), p);
  }

  // Moves mass between pairs of agents, halving the step when no move helps.
  void exchange(std::vector<double>& p, double& best, double step) const {
    const std::size_t n = p.size();
    while (step > 1e-12) {
      bool improved = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const double t = std::min(step, p[j] - kClip);
          if (t <= 0.0) continue;
          auto q = p;
          q[i] += t;
          q[j] -= t;
          const double v = value(q);
          if (v > best) {
            best = v;
            p = std::move(q);
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }

  // Nelder-Mead over the first n - 1 coordinates; the last one closes the simplex.
  void reflect(std::vector<double>& p, double& best) const {
    const std::size_t n = p.size();
    const std::size_t d = n - 1;
    auto full = [&](const std::vector<double>& z) {
      std::vector<double> q(z);
      q.push_back(1.0 - std::accumulate(z.begin(), z.end(), 0.0));
      return q;
    };
    auto f = [&](const std::vector<double>& z) { return -value(full(z)); };
    std::vector<std::vector<double>> pts(d + 1, std::vector<double>(p.begin(), p.begin() + d));
    for (std::size_t j = 0; j < d; ++j) pts[j + 1][j] += 0.05 * std::max(p[j], 0.01);
    std::vector<double> fv(d + 1);
    for (std::size_t j = 0; j <= d; ++j) fv[j] = f(pts[j]);
    for (int it = 0; it < 400 * static_cast<int>(n); ++it) {
      std::vector<std::size_t> idx(d + 1);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      const auto lo = idx.front();
      const auto hi = idx.back();
      if (std::abs(fv[hi] - fv[lo]) < 1e-14 && it > 10) break;
      std::vector<double> centroid(d, 0.0);
      for (std::size_t j = 0; j <= d; ++j) {
        if (j == hi) continue;
        for (std::size_t c = 0; c < d; ++c) centroid[c] += pts[j][c] / d;
      }
      auto along = [&](double t) {
        std::vector<double> z(d);
        for (std::size_t c = 0; c < d; ++c) z[c] = centroid[c] + t * (pts[hi][c] - centroid[c]);
        return z;
      };
      auto r = along(-1.0);
      const double fr = f(r);
      if (fr < fv[lo]) {
        auto e = along(-2.0);
        const double fe = f(e);
        if (fe < fr) {
          pts[hi] = e;
          fv[hi] = fe;
        } else {
          pts[hi] = r;
          fv[hi] = fr;
        }
        continue;
      }
      if (fr < fv[idx[d - 1]]) {
        pts[hi] = r;
        fv[hi] = fr;
        continue;
      }
      auto c = along(0.5);
      const double fc = f(c);
      if (fc < fv[hi]) {
        pts[hi] = c;
        fv[hi] = fc;
        continue;
      }
      for (std::size_t j = 0; j <= d; ++j) {
        if (j == lo) continue;
        for (std::size_t q = 0; q < d; ++q) pts[j][q] = pts[lo][q] + 0.5 * (pts[j][q] - pts[lo][q]);
        fv[j] = f(pts[j]);
      }
    }
    const auto arg = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    if (-fv[arg] > best) {
      best = -fv[arg];
      p = full(pts[arg]);
    }
  }

 private:
  const DesignProblem& prob_;
};

std::vector<std::vector<double>> spread_starts(std::size_t n, int count, const ObjectiveSpec& obj) {
  std::vector<std::vector<double>> out;
  out.emplace_back(n, 1.0 / n);
  std::visit(overloaded{[&](const FairnessPenalized& f) { out.push_back(f.target); },
                        [&](const WeightedEffort& w) { out.push_back(w.target); },
                        [](const auto&) {}},
             obj.form);
  for (int s = 0; static_cast<int>(out.size()) < count; ++s) {
    std::vector<double> p(n, 1.0);
    p[s % n] += 1.0 + static_cast<double>(s / n);
    if (s >= static_cast<int>(n)) p[(s + 1) % n] += 0.5;
    out.push_back(project(p));
  }
  return out;
}

}  // namespace

DesignResult optimize_biases_k1(const DesignProblem& problem,
                                const std::vector<std::vector<double>>& extra_starts) {
  problem.validate();
  const std::size_t n = problem.base_agents.size();
  K1Search search(problem);
  auto starts = spread_starts(n, problem.starts, problem.objective);
  for (const auto& s : extra_starts) starts.push_back(s);

  std::vector<double> best_p;
  double best = -std::numeric_limits<double>::infinity();
  for (auto p : starts) {
    p = project(p);
    double v = search.value(p);
    search.exchange(p, v, 0.1);
    search.reflect(p, v);
    search.exchange(p, v, 1e-3);
    if (v > best) {
      best = v;
      best_p = p;
    }
  }

  const auto x = search.efforts(best_p);
  DesignResult out;
  out.k = 1;
  out.mechanism.alpha.resize(n);
  out.mechanism.beta.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.mechanism.alpha[i] = best_p[i] / problem.base_agents[i].impact.value(x[i]);
  }
  const GameSpec g = problem.game(1, out.mechanism);
  out.equilibrium = solve(g, problem.solver);
  out.verified = out.equilibrium.residuals.pass;
  out.lambda_value = evaluate_objective(problem.objective, out.equilibrium.x, out.equilibrium.p);
  out.log.push_back("k=1 search value " + std::to_string(best) + ", re-solved value " +
                    std::to_string(out.lambda_value));
  return out;
}

DesignResult heuristic_biases_k(const DesignProblem& problem, int k, const Mechanism& init) {
  problem.validate();
  const std::size_t n = problem.base_agents.size();
  DesignResult out;
  out.k = k;
  out.heuristic = true;

  int probes = 0;
  auto probe = [&](const Mechanism& m, Equilibrium& eq) -> double {
    ++probes;
    try {
      eq = solve(problem.game(k, m), problem.solver);
    } catch (const Error& e) {
      out.log.push_back(std::string("probe skipped: ") + e.what());
      return -std::numeric_limits<double>::infinity();
    }
    if (!eq.residuals.pass) {
      out.log.push_back("probe skipped: verification residual " + std::to_string(eq.residuals.max_residual));
      return -std::numeric_limits<double>::infinity();
    }
    return evaluate_objective(problem.objective, eq.x, eq.p);
  };

  Mechanism cur = init;
  Equilibrium cur_eq;
  double cur_val = probe(cur, cur_eq);
  if (!std::isfinite(cur_val)) throw Error(ErrorKind::NoCandidate, "initial mechanism does not solve");

  double log_step = 0.2;
  double beta_step = 0.1 * cur_eq.Y / static_cast<double>(n);
  for (int halvings = 0; halvings < 8 && probes < problem.max_probes;) {
    bool improved = false;
    for (std::size_t i = 0; i < n && probes < problem.max_probes; ++i) {
      for (int coord = 0; coord < 2 && probes < problem.max_probes; ++coord) {
        for (double sign : {1.0, -1.0}) {
          Mechanism m = cur;
          if (coord == 0) {
            if (m.alpha[i] <= 0.0) continue;
            m.alpha[i] *= std::exp(sign * log_step);
          } else {
            m.beta[i] = std::max(0.0, m.beta[i] + sign * beta_step);
            if (m.beta[i] == cur.beta[i]) continue;
          }
          Equilibrium eq;
          const double v = probe(m, eq);
          if (v > cur_val + 1e-12) {
            cur = std::move(m);
            cur_eq = std::move(eq);
            cur_val = v;
            improved = true;
            break;
          }
          if (probes >= problem.max_probes) break;
        }
      }
    }
    if (!improved) {
      log_step *= 0.5;
      beta_step *= 0.5;
      ++halvings;
    }
  }
  out.mechanism = cur;
  out.equilibrium = cur_eq;
  out.lambda_value = cur_val;
  out.verified = cur_eq.residuals.pass;
  out.log.push_back("k=" + std::to_string(k) + " heuristic used " + std::to_string(probes) + " solves");
  return out;
}

SpreadQuantities spread_quantities(const Equilibrium& eq, const GameSpec& game) {
  SpreadQuantities t;
  t.A = 1.0;
  int cheap = 0;
  bool low_patience = true;
  for (std::size_t i = 0; i < game.size(); ++i) {
    const double d = game.agents[i].delta;
    const double p = eq.p[i];
    low_patience = low_patience && d <= 0.5;
    if (eq.partition[i] == Partition::Cheap) {
      ++cheap;
      t.A += p * d / (1.0 - d);
      t.D += 1.0 - p;
    } else if (eq.partition[i] == Partition::Marginal) {
      t.C += p;
      t.D += 1.0 / d - p;
    }
  }
  t.B = game.k - cheap;
  t.D -= game.k - 1;
  const double den = t.A * t.D + t.B * t.C;
  t.dvl_dk = -(t.B + t.D) * eq.v_delta / den;
  t.dvdelta_dk = -(t.C - t.A) * eq.v_delta / den;
  // C = 0 happens when every N2 agent has p = 0
  t.signs_hold = t.A > 0.0 && t.B > 0.0 && t.C >= 0.0 && t.D > 0.0;
  if (low_patience) t.signs_hold = t.signs_hold && t.dvl_dk <= 0.0 && t.dvdelta_dk >= 0.0;
  return t;
}

Implementation implement_profile(const AgentSpec& agent, double x, double p, double spread) {
  Implementation out;
  if (x <= 0.0) {
    // zero effort is optimal once effort cannot move recognition
    out.feasible = true;
    out.beta = p;
    return out;
  }
  if (!(p > 0.0) || !(p < 1.0) || !(spread > 0.0)) return out;
  const double f = agent.impact.value(x);
  const double lo_ratio = agent.cost.left_derivative(x) / agent.impact.left_derivative(x);
  const double hi_ratio = agent.cost.derivative(x) / agent.impact.derivative(x);
  const double q = (1.0 - p) * spread;
  const double alpha_lo = lo_ratio / q;
  const double alpha_hi = hi_ratio / q;
  const double cap = p / f;
  out.required_spread = lo_ratio * f / (p * (1.0 - p));
  out.alpha = std::min(alpha_hi, cap);
  out.feasible = out.alpha >= alpha_lo * (1.0 - 1e-9);
  if (out.feasible) {
    out.alpha = std::max(out.alpha, alpha_lo);
    out.beta = std::max(0.0, p - out.alpha * f);
  }
  return out;
}

ProfileAnalysis analyze_fixed_profile(const std::vector<AgentSpec>& agents, std::span<const double> x,
                                      std::span<const double> p, int k, const SolverConfig& cfg) {
  const std::size_t n = agents.size();
  if (x.size() != n || p.size() != n) throw Error(ErrorKind::Domain, "profile size does not match the agents");
  std::vector<double> deltas(n);
  std::vector<double> cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    deltas[i] = agents[i].delta;
    cost[i] = agents[i].cost.value(x[i]);
  }
  const InnerModel model = [&](double vd, double vl) {
    InnerCandidate c;
    c.Y = 1.0;
    c.v_delta = vd;
    c.v_low = vl;
    c.p.assign(p.begin(), p.end());
    c.x.assign(x.begin(), x.end());
    c.cost = cost;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [mu, branch] = inclusion_from_median(p[i], cost[i], deltas[i], vl, vd);
      c.mu.push_back(mu);
      c.branch.push_back(branch);
    }
    return c;
  };

  ProfileAnalysis out;
  out.k = k;
  out.v_low = v_low_roots(model, deltas, k, cfg).front();
  out.v_delta = largest_v_delta(model, deltas, k, out.v_low, cfg);
  out.mu = model(out.v_delta, out.v_low).mu;
  out.implementable = true;
  Mechanism mech;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = 1.0 - p[i];
    out.spread.push_back(q > 0.0 ? out.v_low + (q - out.mu[i]) * out.v_delta / q : out.v_low + out.v_delta);
    out.implementation.push_back(implement_profile(agents[i], x[i], p[i], out.spread.back()));
    out.implementable = out.implementable && out.implementation.back().feasible;
    mech.alpha.push_back(out.implementation.back().alpha);
    mech.beta.push_back(out.implementation.back().beta);
  }
  if (out.implementable) {
    GameSpec g;
    g.agents = agents;
    g.k = k;
    g = g.with_mechanism(mech.alpha, mech.beta);
    Equilibrium eq = complete_equilibrium(g, {x.begin(), x.end()}, {p.begin(), p.end()}, out.mu, out.v_low,
                                          out.v_delta, cfg);
    eq.residuals = verify_equilibrium(g, eq, cfg.verify_tol);
    out.equilibrium = std::move(eq);
    out.mechanism = std::move(mech);
  }
  return out;
}

SweepReport sweep_k(const DesignProblem& problem) {
  problem.validate();
  const std::size_t n = problem.base_agents.size();
  SweepReport rep;
  std::vector<int> ks = problem.k_candidates;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::vector<std::vector<double>> seeds;  // recognition profiles found at k >= 2
  auto run = [&](int k) {
    SweepRow row;
    row.k = k;
    try {
      DesignResult r;
      if (problem.locked) {
        r.k = k;
        r.mechanism = *problem.locked;
        r.equilibrium = solve(problem.game(k, r.mechanism), problem.solver);
        r.verified = r.equilibrium.residuals.pass;
        r.lambda_value = evaluate_objective(problem.objective, r.equilibrium.x, r.equilibrium.p);
      } else if (k == 1) {
        r = optimize_biases_k1(problem, seeds);
      } else {
        Mechanism neutral{std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
        r = heuristic_biases_k(problem, k, neutral);
        seeds.push_back(r.equilibrium.p);
      }
      row.ok = r.verified;
      row.lambda_value = r.lambda_value;
      row.heuristic = r.heuristic;
      if (!r.verified) row.note = "verification failed";
      row.result = std::move(r);
    } catch (const Error& e) {
      row.note = e.what();
    }
    return row;
  };

  // k >= 2 first so the k = 1 search can start from their recognition profiles.
  for (int k : ks) {
    if (k != 1) rep.rows.push_back(run(k));
  }
  if (ks.front() == 1) rep.rows.insert(rep.rows.begin(), run(1));

  double best = -std::numeric_limits<double>::infinity();
  double best_k1 = -std::numeric_limits<double>::infinity();
  double best_other = -std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    if (!row.ok) continue;
    if (row.lambda_value > best) {
      best = row.lambda_value;
      rep.best_k = row.k;
    }
    (row.k == 1 ? best_k1 : best_other) = std::max(row.k == 1 ? best_k1 : best_other, row.lambda_value);
  }
  if (!problem.locked && ks.front() == 1) {
    rep.k1_dominates = best_k1 >= best_other - kDominanceSlack;
  }
  return rep;
}

}  // namespace bargaining
