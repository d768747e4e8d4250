// Residuals of every equilibrium condition, evaluated independently of the solve path.
#include <algorithm>
#include <cmath>
#include <limits>

#include "bargaining/solver.hpp"

namespace bargaining {
namespace {

double safe(double r) { return std::isfinite(r) ? r : std::numeric_limits<double>::infinity(); }

}  // namespace

ResidualReport verify_equilibrium(const GameSpec& game, const Equilibrium& eq, double tol) {
  ResidualReport rep;
  rep.tolerance = tol;
  const std::size_t n = game.size();
  const int k = game.k;
  auto add = [&](const char* name, double value) { rep.conditions.push_back({name, safe(value)}); };

  if (eq.x.size() != n || eq.p.size() != n || eq.mu.size() != n || eq.v.size() != n ||
      eq.partition.size() != n || eq.psi.size() != n) {
    add("shape", std::numeric_limits<double>::infinity());
    rep.max_residual = std::numeric_limits<double>::infinity();
    rep.pass = false;
    return rep;
  }

  const double VL = eq.v_low;
  const double VD = eq.v_delta;
  std::vector<double> cost(n);
  for (std::size_t i = 0; i < n; ++i) cost[i] = game.agents[i].cost.value(eq.x[i]);

  double sum_p = 0.0;
  double sum_mu = 0.0;
  double p_bounds = 0.0;
  double mu_bounds = 0.0;
  double output = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_p += eq.p[i];
    sum_mu += eq.mu[i];
    output += game.agents[i].effective_impact(eq.x[i]);
    const double floor = eq.Y > 0.0 ? game.agents[i].beta / eq.Y : 0.0;
    p_bounds = std::max({p_bounds, floor - eq.p[i], eq.p[i] - 1.0});
    mu_bounds = std::max({mu_bounds, -eq.mu[i], eq.mu[i] - (1.0 - eq.p[i])});
  }
  add("sum_p", std::abs(sum_p - 1.0));
  add("p_bounds", p_bounds);
  add("sum_mu", std::abs(sum_mu - static_cast<double>(k - 1)));
  add("mu_bounds", mu_bounds);

  // p_i = f~_i(x_i) / Y with Y the realised aggregate output
  double impact = eq.Y > 0.0 ? std::abs(output - eq.Y) / eq.Y : std::numeric_limits<double>::infinity();
  const auto recog = recognition_probabilities(eq.x, game.agents);
  for (std::size_t i = 0; i < n; ++i) impact = std::max(impact, std::abs(recog[i] - eq.p[i]));
  add("impact_consistency", impact);

  // FOC: the marginal-cost ratio must bracket the prize spread at interior points
  // and dominate it at corners.
  double foc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = game.agents[i];
    if (a.alpha == 0.0) continue;  // effort has no effect on recognition
    const double rhs = (1.0 - eq.p[i]) * (VL + VD) - eq.mu[i] * VD;
    const double right = eq.Y * a.marginal_ratio(eq.x[i]);
    if (eq.x[i] <= 0.0) {
      foc = std::max(foc, rhs - right);
    } else {
      const double left = eq.Y * a.marginal_ratio_left(eq.x[i]);
      foc = std::max({foc, rhs - std::max(left, right), std::min(left, right) - rhs});
    }
  }
  add("foc", foc);

  double median = 0.0;
  // at V^Delta = 0 the condition mu V^Delta = med{...} holds for every mu
  for (std::size_t i = 0; i < n && VD > 0.0; ++i) {
    const double expect = inclusion_from_median(eq.p[i], cost[i], game.agents[i].delta, VL, VD).first;
    median = std::max(median, std::abs(eq.mu[i] - expect));
  }
  add("mu_median", median);

  int cheap = 0;
  double budget = VL;
  for (std::size_t i = 0; i < n; ++i) {
    if (eq.partition[i] == Partition::Cheap) {
      ++cheap;
      budget += game.agents[i].delta * eq.v[i];
    }
  }
  budget += static_cast<double>(k - cheap) * VD;
  add("budget", std::abs(budget - 1.0));

  // Partition must agree with the ordering of discounted values, and V^Delta is the
  // k-th lowest of them.
  double part = cheap > k - 1 ? 1.0 : 0.0;
  std::vector<double> discounted(n);
  double branch = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = game.agents[i];
    discounted[i] = a.delta * eq.v[i];
    switch (eq.partition[i]) {
      case Partition::Cheap:
        part = std::max(part, discounted[i] - VD);
        branch = std::max(branch, std::abs(eq.v[i] - (eq.p[i] * VL - cost[i]) / (1.0 - a.delta)));
        break;
      case Partition::Marginal:
        part = std::max(part, std::abs(discounted[i] - VD));
        branch = std::max(branch, std::abs(eq.v[i] - VD / a.delta));
        break;
      case Partition::Expensive:
        part = std::max(part, VD - discounted[i]);
        branch = std::max(branch, std::abs(eq.v[i] - (eq.p[i] * (VL + VD) - cost[i])));
        break;
    }
  }
  std::vector<double> sorted = discounted;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  part = std::max(part, std::abs(sorted[k - 1] - VD));
  add("partition", part);
  add("value_branch", branch);

  double psi_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (eq.psi[i].size() != n) {
      psi_res = std::numeric_limits<double>::infinity();
      break;
    }
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double q = eq.psi[i][j];
      psi_res = std::max({psi_res, -q, q - 1.0});
      if (j == i) {
        psi_res = std::max(psi_res, std::abs(q));
        continue;
      }
      if (eq.partition[j] == Partition::Cheap) psi_res = std::max(psi_res, std::abs(1.0 - q));
      if (eq.partition[j] == Partition::Expensive) psi_res = std::max(psi_res, std::abs(q));
      row += q;
    }
    psi_res = std::max(psi_res, std::abs(row - static_cast<double>(k - 1)));
  }
  if (std::isfinite(psi_res)) {
    for (std::size_t j = 0; j < n; ++j) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != j) mass += eq.psi[i][j] * eq.p[i];
      }
      psi_res = std::max(psi_res, std::abs(mass - eq.mu[j]));
    }
  }
  add("psi_marginals", psi_res);

  // v_i = p_i (1 - w_i) + mu_i delta_i v_i - c_i(x_i), w_i = sum_j psi_ij delta_j v_j
  double bellman = 0.0;
  if (std::isfinite(psi_res)) {
    for (std::size_t i = 0; i < n; ++i) {
      double w = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) w += eq.psi[i][j] * discounted[j];
      }
      const double rhs = eq.p[i] * (1.0 - w) + eq.mu[i] * discounted[i] - cost[i];
      bellman = std::max(bellman, std::abs(eq.v[i] - rhs));
    }
  } else {
    bellman = std::numeric_limits<double>::infinity();
  }
  add("bellman", bellman);

  double negative = 0.0;
  for (double v : eq.v) negative = std::max(negative, -v);
  add("nonnegative_v", negative);

  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (eq.p[i] >= 1.0) continue;
    const double s = eq.effective_spread(i);
    spread = std::max({spread, VL - s, s - (VL + VD)});
    if (eq.partition[i] == Partition::Cheap) spread = std::max(spread, std::abs(s - VL));
    if (eq.partition[i] == Partition::Expensive) spread = std::max(spread, std::abs(s - VL - VD));
  }
  add("spread_order", spread);

  rep.max_residual = 0.0;
  for (const auto& c : rep.conditions) rep.max_residual = std::max(rep.max_residual, c.value);
  rep.pass = rep.max_residual <= tol;
  return rep;
}

}  // namespace bargaining
