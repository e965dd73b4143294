#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fdr {

struct ConstantStep {
  double gamma;
};
// gamma_k = (1 + 1/k^exponent) * base
struct PowerDecayStep {
  double base, exponent;
};
// gamma_k = (1 + ratio^k) * base
struct GeometricStep {
  double base, ratio;
};
using StepRule = std::variant<ConstantStep, PowerDecayStep, GeometricStep>;

struct ConstantRelaxation {
  double lambda;
};
// arbitrary lambda_k; `limit` is what the sequence tends to
struct SequenceRelaxation {
  std::function<double(std::size_t)> at;
  double limit;
  std::string label;
};
using RelaxationRule = std::variant<ConstantRelaxation, SequenceRelaxation>;

// Step sizes and relaxation parameters indexed from k = 1. The transition that
// produces iterate k uses gamma(k) and lambda(k).
class Schedule {
public:
  Schedule(StepRule step, RelaxationRule relax) : step_(std::move(step)), relax_(std::move(relax)) {}

  static Schedule constant(double gamma, double lambda = 1.0);
  static Schedule power_decay(double base, double exponent, double lambda = 1.0);
  static Schedule geometric(double base, double ratio, double lambda = 1.0);

  double gamma(std::size_t k) const;
  double lambda(std::size_t k) const;
  double limit_gamma() const;
  double limit_lambda() const;
  bool constant_step() const { return std::holds_alternative<ConstantStep>(step_); }
  bool constant_relaxation() const { return std::holds_alternative<ConstantRelaxation>(relax_); }
  bool stationary() const { return constant_step() && constant_relaxation(); }
  // lambda_k = 1 for all k
  bool unrelaxed() const;

  const StepRule& step_rule() const { return step_; }
  const RelaxationRule& relaxation_rule() const { return relax_; }
  std::string describe() const;

private:
  StepRule step_;
  RelaxationRule relax_;
};

// stationary | case1 | case2 | case3 | case4, all scaled by `base` with lambda = 1
//   case1: (1 + 1/k^1.1) base     case2: (1 + 1/k^2) base
//   case3: (1 + 0.999^k) base     case4: (1 + 0.5^k) base
Schedule schedule_preset(std::string_view name, double base);
// same steps with a constant relaxation lambda
Schedule schedule_preset(std::string_view name, double base, double lambda);
const std::vector<std::string>& schedule_preset_names();

struct ConditionCheck {
  std::string name;
  bool pass;
  std::string reason;
};

struct ValidationReport {
  std::vector<ConditionCheck> checks;
  double gamma_min = 0.0, gamma_max = 0.0;
  bool ok() const;
  std::string summary() const;
};

// Checks the step/relaxation conditions against the gradient modulus `beta_v`
// (pass beta for schemes without a subspace). Bounds are scanned over k = 1..horizon
// together with the limit; divergence and summability are decided per family.
ValidationReport validate_schedule(const Schedule& s, double beta_v, std::size_t horizon);

}  // namespace fdr
