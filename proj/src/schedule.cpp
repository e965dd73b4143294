#include "fdr/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdr/error.hpp"

namespace fdr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Schedule Schedule::constant(double gamma, double lambda) { return {ConstantStep{gamma}, ConstantRelaxation{lambda}}; }

Schedule Schedule::power_decay(double base, double exponent, double lambda) {
  return {PowerDecayStep{base, exponent}, ConstantRelaxation{lambda}};
}

Schedule Schedule::geometric(double base, double ratio, double lambda) {
  return {GeometricStep{base, ratio}, ConstantRelaxation{lambda}};
}

double Schedule::gamma(std::size_t k) const {
  const double kk = static_cast<double>(std::max<std::size_t>(k, 1));
  return std::visit(overloaded{[](const ConstantStep& c) { return c.gamma; },
                               [&](const PowerDecayStep& p) { return (1.0 + 1.0 / std::pow(kk, p.exponent)) * p.base; },
                               [&](const GeometricStep& g) { return (1.0 + std::pow(g.ratio, kk)) * g.base; }},
                    step_);
}

double Schedule::lambda(std::size_t k) const {
  const std::size_t kk = std::max<std::size_t>(k, 1);
  return std::visit(overloaded{[](const ConstantRelaxation& c) { return c.lambda; },
                               [&](const SequenceRelaxation& s) { return s.at(kk); }},
                    relax_);
}

double Schedule::limit_gamma() const {
  return std::visit(overloaded{[](const ConstantStep& c) { return c.gamma; },
                               [](const PowerDecayStep& p) { return p.base; },
                               [](const GeometricStep& g) { return g.base; }},
                    step_);
}

double Schedule::limit_lambda() const {
  return std::visit(overloaded{[](const ConstantRelaxation& c) { return c.lambda; },
                               [](const SequenceRelaxation& s) { return s.limit; }},
                    relax_);
}

bool Schedule::unrelaxed() const {
  const auto* c = std::get_if<ConstantRelaxation>(&relax_);
  return c && c->lambda == 1.0;
}

std::string Schedule::describe() const {
  std::string g = std::visit(
      overloaded{[](const ConstantStep& c) { return "constant(" + fmt(c.gamma) + ")"; },
                 [](const PowerDecayStep& p) { return "power_decay(" + fmt(p.base) + ", q=" + fmt(p.exponent) + ")"; },
                 [](const GeometricStep& s) { return "geometric(" + fmt(s.base) + ", r=" + fmt(s.ratio) + ")"; }},
      step_);
  std::string l = std::visit(overloaded{[](const ConstantRelaxation& c) { return "lambda=" + fmt(c.lambda); },
                                        [](const SequenceRelaxation& s) { return "lambda=" + s.label; }},
                             relax_);
  return "gamma " + g + ", " + l;
}

const std::vector<std::string>& schedule_preset_names() {
  static const std::vector<std::string> names{"stationary", "case1", "case2", "case3", "case4"};
  return names;
}

Schedule schedule_preset(std::string_view name, double base) { return schedule_preset(name, base, 1.0); }

Schedule schedule_preset(std::string_view name, double base, double lambda) {
  if (!(base > 0.0) || !std::isfinite(base)) throw InvalidInput("schedule preset: base step must be positive");
  if (name == "stationary") return Schedule::constant(base, lambda);
  if (name == "case1") return Schedule::power_decay(base, 1.1, lambda);
  if (name == "case2") return Schedule::power_decay(base, 2.0, lambda);
  if (name == "case3") return Schedule::geometric(base, 0.999, lambda);
  if (name == "case4") return Schedule::geometric(base, 0.5, lambda);
  throw InvalidInput("unknown schedule preset '" + std::string(name) + "'");
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.pass; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) os << c.name << ": " << (c.pass ? "pass" : "FAIL") << " (" << c.reason << ")\n";
  return os.str();
}

ValidationReport validate_schedule(const Schedule& s, double beta_v, std::size_t horizon) {
  if (!(beta_v > 0.0)) throw InvalidInput("validate_schedule: modulus must be positive");
  ValidationReport rep;
  const std::size_t h = std::max<std::size_t>(horizon, 1);
  const double upper = 2.0 * beta_v;

  // (i) step bounds
  double gmin = s.limit_gamma(), gmax = s.limit_gamma();
  for (std::size_t k = 1; k <= h; ++k) {
    const double g = s.gamma(k);
    gmin = std::min(gmin, g);
    gmax = std::max(gmax, g);
  }
  rep.gamma_min = gmin;
  rep.gamma_max = gmax;
  {
    const bool pass = gmin > 0.0 && gmax < upper && std::isfinite(gmax);
    rep.checks.push_back({"step bounds", pass,
                          "gamma in [" + fmt(gmin) + ", " + fmt(gmax) + "], need 0 < gamma_min and gamma_max < " +
                              fmt(upper)});
  }

  // (ii) relaxation interval
  {
    bool pass = true;
    std::string why = "lambda_k in (0, (4 beta_v - gamma_k) / (2 beta_v)) for k <= " + std::to_string(h);
    for (std::size_t k = 1; k <= h && pass; ++k) {
      const double l = s.lambda(k);
      const double hi = (4.0 * beta_v - s.gamma(k)) / (2.0 * beta_v);
      if (!(l > 0.0 && l < hi)) {
        pass = false;
        why = "lambda_" + std::to_string(k) + " = " + fmt(l) + " outside (0, " + fmt(hi) + ")";
      }
    }
    rep.checks.push_back({"relaxation interval", pass, why});
  }

  // (iii) divergence of sum lambda_k ((4 beta_v - gamma_k)/(2 beta_v) - lambda_k):
  // decided from the limit term, which is positive iff the series diverges for these families
  {
    const double l = s.limit_lambda();
    const double term = l * ((4.0 * beta_v - s.limit_gamma()) / (2.0 * beta_v) - l);
    const bool pass = term > 0.0;
    rep.checks.push_back({"relaxation divergence", pass,
                          pass ? "limit term " + fmt(term) + " > 0, series diverges"
                               : "limit term " + fmt(term) + " <= 0, divergence not certified"});
  }

  // (iv) summability of lambda_k |gamma_k - gamma|
  {
    bool pass = true;
    std::string why;
    std::visit(overloaded{[&](const ConstantStep&) { why = "constant step, terms vanish"; },
                          [&](const PowerDecayStep& p) {
                            pass = p.exponent > 1.0;
                            why = "power decay with q = " + fmt(p.exponent) + (pass ? " > 1, summable" : " <= 1, not summable");
                          },
                          [&](const GeometricStep& g) {
                            pass = std::fabs(g.ratio) < 1.0;
                            why = "geometric with r = " + fmt(g.ratio) + (pass ? ", summable" : ", |r| >= 1 not summable");
                          }},
               s.step_rule());
    rep.checks.push_back({"step summability", pass, why});
  }
  return rep;
}

}  // namespace fdr
