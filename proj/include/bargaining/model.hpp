#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bargaining/error.hpp"

namespace bargaining {

enum class FunctionRole { Impact, Cost };
enum class Order { Value, Derivative };

// Parametric impact / cost functions. All families satisfy g(0) = 0 and are
// strictly increasing on [0, inf). Values are immutable after construction.
class FunctionSpec {
 public:
  struct Linear {
    double slope;
  };
  struct Power {
    double coefficient;
    double exponent;
  };
  struct Kinked {
    std::shared_ptr<const FunctionSpec> inner;
    double threshold;
    double outer_slope;
  };
  using Family = std::variant<Linear, Power, Kinked>;

  static FunctionSpec linear(double slope, FunctionRole role);
  static FunctionSpec power(double coefficient, double exponent, FunctionRole role);
  static FunctionSpec kinked(const FunctionSpec& inner, double threshold, double outer_slope,
                             FunctionRole role);

  const Family& family() const noexcept { return family_; }
  FunctionRole role() const noexcept { return role_; }

  // Cost role: whether the composite is convex everywhere (kinks may break it).
  // Impact role: always true (concavity is enforced at construction).
  bool shape_ok() const noexcept { return shape_ok_; }

  double value(double x) const;
  // Right derivative. May be +inf at x = 0 (Power with exponent < 1).
  double derivative(double x) const;
  double left_derivative(double x) const;
  // Unique x >= 0 with value(x) == y, for y >= 0.
  double inverse(double y) const;

  std::string describe() const;

 private:
  FunctionSpec(Family family, FunctionRole role, bool shape_ok)
      : family_(std::move(family)), role_(role), shape_ok_(shape_ok) {}

  Family family_;
  FunctionRole role_;
  bool shape_ok_;
};

// Checked evaluation: negative x is a domain error, non-finite output a numeric error.
double eval_function(const FunctionSpec& spec, double x, Order order);

struct AgentSpec {
  FunctionSpec impact;  // f_i
  FunctionSpec cost;    // c_i
  double delta;         // discount factor in (0, 1)
  double alpha;         // multiplicative bias >= 0
  double beta;          // additive headstart >= 0

  void validate() const;

  // f~_i(x) = alpha f_i(x) + beta
  double effective_impact(double x) const { return alpha * impact.value(x) + beta; }
  double effective_slope(double x) const { return alpha * impact.derivative(x); }

  // c_i'(x) / f~_i'(x) with the x -> 0 limits resolved (0 when f'(0) = inf or c'(0) = 0).
  double marginal_ratio(double x) const;
  double marginal_ratio_left(double x) const;
};

AgentSpec make_agent(FunctionSpec impact, FunctionSpec cost, double delta, double alpha = 1.0,
                     double beta = 0.0);

struct GameSpec {
  std::vector<AgentSpec> agents;
  int k = 1;

  std::size_t size() const noexcept { return agents.size(); }
  void validate() const;
  // Copy with a different voting rule and/or mechanism.
  GameSpec with_k(int new_k) const;
  GameSpec with_mechanism(std::span<const double> alpha, std::span<const double> beta) const;
  bool all_costs_convex() const;
};

// x >= 0 with alpha f(x) + beta = target.
double invert_effective_impact(const AgentSpec& agent, double target);

std::vector<double> recognition_probabilities(std::span<const double> efforts,
                                              std::span<const AgentSpec> agents);

enum class Partition { Cheap, Marginal, Expensive };  // N1, N2, N3
char partition_label(Partition part) noexcept;

struct ConditionResidual {
  std::string name;
  double value = 0.0;
};

struct ResidualReport {
  std::vector<ConditionResidual> conditions;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  double get(const std::string& name) const;
};

struct Equilibrium {
  std::vector<double> x;
  std::vector<double> p;
  std::vector<double> mu;
  std::vector<std::vector<double>> psi;
  std::vector<double> v;
  double Y = 0.0;
  double v_delta = 0.0;
  double v_low = 0.0;
  std::vector<Partition> partition;
  ResidualReport residuals;

  std::size_t size() const noexcept { return x.size(); }
  double total_effort() const;
  // V_L + (1 - p_i - mu_i) V^Delta / (1 - p_i)
  double effective_spread(std::size_t i) const;
};

struct TotalEffort {};
struct FairnessPenalized {
  double lambda;
  std::vector<double> target;
};
struct ExpectedWinnerEffort {};
struct WeightedEffort {
  std::vector<double> weights;
  double lambda;
  std::vector<double> target;
};

struct ObjectiveSpec {
  std::variant<TotalEffort, FairnessPenalized, ExpectedWinnerEffort, WeightedEffort> form;

  void validate(std::size_t n) const;
  std::string name() const;
};

}  // namespace bargaining
