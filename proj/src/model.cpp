#include "bargaining/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace bargaining {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Bracket: return "bracket";
    case ErrorKind::NoCandidate: return "no-candidate";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Classification: return "classification";
    case ErrorKind::Fill: return "fill";
    case ErrorKind::Inconsistency: return "inconsistency";
    case ErrorKind::Oracle: return "oracle";
    case ErrorKind::Input: return "input";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::Domain, std::string(what) + " must be finite and > 0");
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

FunctionSpec FunctionSpec::linear(double slope, FunctionRole role) {
  require_positive(slope, "linear slope");
  return FunctionSpec(Linear{slope}, role, true);
}

FunctionSpec FunctionSpec::power(double coefficient, double exponent, FunctionRole role) {
  require_positive(coefficient, "power coefficient");
  require_positive(exponent, "power exponent");
  if (role == FunctionRole::Impact && exponent > 1.0) {
    throw Error(ErrorKind::Domain, "impact function must be concave (power exponent <= 1)");
  }
  if (role == FunctionRole::Cost && exponent < 1.0) {
    throw Error(ErrorKind::Domain, "cost function must be convex (power exponent >= 1)");
  }
  return FunctionSpec(Power{coefficient, exponent}, role, true);
}

FunctionSpec FunctionSpec::kinked(const FunctionSpec& inner, double threshold, double outer_slope,
                                  FunctionRole role) {
  require_positive(threshold, "kink threshold");
  require_positive(outer_slope, "kink outer slope");
  if (inner.role() != role) {
    throw Error(ErrorKind::Domain, "kinked inner function must share the outer role");
  }
  const double slope_before = inner.left_derivative(threshold);
  bool shape_ok = inner.shape_ok();
  if (role == FunctionRole::Impact) {
    if (outer_slope > slope_before) {
      throw Error(ErrorKind::Domain, "kinked impact function must stay concave at the threshold");
    }
  } else {
    shape_ok = shape_ok && outer_slope >= slope_before;
  }
  return FunctionSpec(Kinked{std::make_shared<const FunctionSpec>(inner), threshold, outer_slope},
                      role, shape_ok);
}

double FunctionSpec::value(double x) const {
  return std::visit(overloaded{
                        [x](const Linear& f) { return f.slope * x; },
                        [x](const Power& f) { return f.coefficient * std::pow(x, f.exponent); },
                        [x](const Kinked& f) {
                          if (x <= f.threshold) return f.inner->value(x);
                          return f.inner->value(f.threshold) + f.outer_slope * (x - f.threshold);
                        },
                    },
                    family_);
}

double FunctionSpec::derivative(double x) const {
  return std::visit(overloaded{
                        [](const Linear& f) { return f.slope; },
                        [x](const Power& f) {
                          if (x == 0.0) {
                            if (f.exponent < 1.0) return kInf;
                            return f.exponent == 1.0 ? f.coefficient : 0.0;
                          }
                          return f.coefficient * f.exponent * std::pow(x, f.exponent - 1.0);
                        },
                        [x](const Kinked& f) {
                          return x < f.threshold ? f.inner->derivative(x) : f.outer_slope;
                        },
                    },
                    family_);
}

double FunctionSpec::left_derivative(double x) const {
  if (const auto* k = std::get_if<Kinked>(&family_)) {
    return x <= k->threshold ? k->inner->left_derivative(x) : k->outer_slope;
  }
  return derivative(x);
}

double FunctionSpec::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  return std::visit(overloaded{
                        [y](const Linear& f) { return y / f.slope; },
                        [y](const Power& f) { return std::pow(y / f.coefficient, 1.0 / f.exponent); },
                        [y](const Kinked& f) {
                          const double at_kink = f.inner->value(f.threshold);
                          if (y <= at_kink) return std::min(f.inner->inverse(y), f.threshold);
                          return f.threshold + (y - at_kink) / f.outer_slope;
                        },
                    },
                    family_);
}

std::string FunctionSpec::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Linear& f) { out << "linear(" << f.slope << ")"; },
                 [&](const Power& f) { out << "power(" << f.coefficient << ", " << f.exponent << ")"; },
                 [&](const Kinked& f) {
                   out << "kinked(" << f.inner->describe() << ", " << f.threshold << ", "
                       << f.outer_slope << ")";
                 },
             },
             family_);
  return out.str();
}

double eval_function(const FunctionSpec& spec, double x, Order order) {
  if (!(x >= 0.0)) throw Error(ErrorKind::Domain, "function argument must be >= 0");
  const double out = order == Order::Value ? spec.value(x) : spec.derivative(x);
  if (!std::isfinite(out)) {
    throw Error(ErrorKind::Numeric, "non-finite evaluation of " + spec.describe());
  }
  return out;
}

void AgentSpec::validate() const {
  if (impact.role() != FunctionRole::Impact) throw Error(ErrorKind::Domain, "impact has cost role");
  if (cost.role() != FunctionRole::Cost) throw Error(ErrorKind::Domain, "cost has impact role");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Domain, "delta must lie in (0, 1)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::Domain, "alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::Domain, "beta must be >= 0");
}

namespace {

double ratio_of(double cost_slope, double impact_slope, double alpha) {
  if (alpha == 0.0) return kInf;
  if (std::isinf(impact_slope)) return 0.0;
  if (cost_slope == 0.0) return 0.0;
  return cost_slope / (alpha * impact_slope);
}

}  // namespace

double AgentSpec::marginal_ratio(double x) const {
  return ratio_of(cost.derivative(x), impact.derivative(x), alpha);
}

double AgentSpec::marginal_ratio_left(double x) const {
  return ratio_of(cost.left_derivative(x), impact.left_derivative(x), alpha);
}

AgentSpec make_agent(FunctionSpec impact, FunctionSpec cost, double delta, double alpha,
                     double beta) {
  AgentSpec agent{std::move(impact), std::move(cost), delta, alpha, beta};
  agent.validate();
  return agent;
}

void GameSpec::validate() const {
  if (agents.size() < 2) throw Error(ErrorKind::Domain, "a game needs at least two agents");
  if (k < 1 || k > static_cast<int>(agents.size())) {
    throw Error(ErrorKind::Domain, "voting rule k must satisfy 1 <= k <= n");
  }
  bool any_active = false;
  for (const auto& agent : agents) {
    agent.validate();
    any_active = any_active || agent.alpha > 0.0 || agent.beta > 0.0;
  }
  if (!any_active) throw Error(ErrorKind::Domain, "at least one agent needs alpha > 0 or beta > 0");
  bool any_alpha = std::any_of(agents.begin(), agents.end(), [](const AgentSpec& a) { return a.alpha > 0.0; });
  if (!any_alpha) throw Error(ErrorKind::Domain, "alpha must not be the zero vector");
}

GameSpec GameSpec::with_k(int new_k) const {
  GameSpec out = *this;
  out.k = new_k;
  return out;
}

GameSpec GameSpec::with_mechanism(std::span<const double> alpha, std::span<const double> beta) const {
  if (alpha.size() != agents.size() || beta.size() != agents.size()) {
    throw Error(ErrorKind::Domain, "mechanism size does not match the number of agents");
  }
  GameSpec out = *this;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    out.agents[i].alpha = alpha[i];
    out.agents[i].beta = beta[i];
  }
  return out;
}

bool GameSpec::all_costs_convex() const {
  return std::all_of(agents.begin(), agents.end(),
                     [](const AgentSpec& a) { return a.cost.shape_ok(); });
}

double invert_effective_impact(const AgentSpec& agent, double target) {
  // Tolerate round-off when the target was produced as Y * (beta / Y).
  const double slack = 1e-12 * std::max(1.0, std::abs(agent.beta));
  if (target < agent.beta - slack) {
    throw Error(ErrorKind::Infeasible, "effective-impact target below the headstart");
  }
  if (agent.alpha == 0.0) {
    if (std::abs(target - agent.beta) > slack) {
      throw Error(ErrorKind::Infeasible, "agent with alpha = 0 cannot reach the target");
    }
    return 0.0;
  }
  return agent.impact.inverse(std::max(0.0, target - agent.beta) / agent.alpha);
}

std::vector<double> recognition_probabilities(std::span<const double> efforts,
                                              std::span<const AgentSpec> agents) {
  if (efforts.size() != agents.size()) {
    throw Error(ErrorKind::Domain, "effort profile size does not match the agents");
  }
  std::vector<double> out(agents.size());
  double total = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!(efforts[i] >= 0.0)) throw Error(ErrorKind::Domain, "efforts must be >= 0");
    out[i] = agents[i].effective_impact(efforts[i]);
    total += out[i];
  }
  if (total > 0.0) {
    for (double& p : out) p /= total;
  } else {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
  return out;
}

char partition_label(Partition part) noexcept {
  switch (part) {
    case Partition::Cheap: return '1';
    case Partition::Marginal: return '2';
    case Partition::Expensive: return '3';
  }
  return '?';
}

double ResidualReport::get(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c.value;
  }
  throw Error(ErrorKind::Domain, "no residual named " + name);
}

double Equilibrium::total_effort() const { return std::accumulate(x.begin(), x.end(), 0.0); }

double Equilibrium::effective_spread(std::size_t i) const {
  const double q = 1.0 - p[i];
  if (q <= 0.0) return v_low + v_delta;
  return v_low + (q - mu[i]) * v_delta / q;
}

void ObjectiveSpec::validate(std::size_t n) const {
  auto check_target = [n](const std::vector<double>& target, double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::Domain, "lambda must be >= 0");
    if (target.size() != n) throw Error(ErrorKind::Domain, "target profile size mismatch");
    double total = 0.0;
    for (double t : target) {
      if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "target profile must be nonnegative");
      total += t;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::Domain, "target profile must sum to 1");
  };
  std::visit(overloaded{
                 [](const TotalEffort&) {},
                 [](const ExpectedWinnerEffort&) {},
                 [&](const FairnessPenalized& f) { check_target(f.target, f.lambda); },
                 [&](const WeightedEffort& f) {
                   check_target(f.target, f.lambda);
                   if (f.weights.size() != n) throw Error(ErrorKind::Domain, "weights size mismatch");
                   for (double w : f.weights) {
                     if (!(w >= 0.0)) throw Error(ErrorKind::Domain, "weights must be >= 0");
                   }
                 },
             },
             form);
}

std::string ObjectiveSpec::name() const {
  return std::visit(overloaded{
                        [](const TotalEffort&) { return std::string("total_effort"); },
                        [](const FairnessPenalized&) { return std::string("fairness_penalized"); },
                        [](const ExpectedWinnerEffort&) { return std::string("expected_winner_effort"); },
                        [](const WeightedEffort&) { return std::string("weighted_effort"); },
                    },
                    form);
}

}  // namespace bargaining
