#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fdr/solvers.hpp"

namespace fdr {

// Limit point of a reference run. v_star = (x_star - z_star) / gamma.
struct Anchor {
  Vector z_star, x_star, v_star;
  double gamma = 0.0;
  double residual = 0.0;     // terminal residual of the reference run
  bool approximate = false;  // reference accepted under a gate looser than 1e-12
};

// Requires the reference to have terminal residual <= residual_gate; the
// default gate is the strict one. Checks x* = P_V z* and v* in V-perp.
Anchor make_anchor(const Trajectory& reference, double gamma, const Subspace& v, double residual_gate = 1e-12);
// no subspace: TOS and GFB references
Anchor make_anchor(const Trajectory& reference, double gamma, double residual_gate = 1e-12);

// Phi(y) - Phi(x*) - <v*, P_{V-perp} y> with Phi = R + G
double bregman(const Anchor& a, const FdrProblem& p, const Vector& y);

struct BregmanSeries {
  std::vector<std::size_t> k;
  std::vector<double> value, best, ergodic;
  std::vector<double> scaled_best, scaled_ergodic;  // multiplied by (k + 1)
  bool ergodic_approximate = false;                 // stride > 1
};
BregmanSeries bregman_series(const Anchor& a, const FdrProblem& p, const Trajectory& t);

struct AuditRow {
  std::size_t k;  // the row checks the transition k -> k+1
  double bregman_next, phi, phi_next, step_term;
  double xi_text, xi_proof, zeta_proof, zeta_text;
  double slack;  // lhs - rhs with the larger xi and zeta_proof; > 0 is a violation
};

struct AuditReport {
  std::vector<AuditRow> rows;
  double max_violation = 0.0;
  double gamma_lower = 0.0;  // infimum of the steps used
};

// Per-iteration check of the energy inequality for unrelaxed FDR.
AuditReport audit_energy_inequality(const Anchor& a, const FdrProblem& p, const Trajectory& t, const Schedule& s);

enum class IterateField { U, X };

struct IdentificationReport {
  std::optional<std::size_t> k;             // iteration number
  std::optional<std::size_t> record_index;  // position in the trajectory
  double margin;                            // nondegeneracy margin at the anchor (NaN if not computed)
};

// earliest record from which every later record matches `target`
IdentificationReport detect_identification(const std::vector<ManifoldSignature>& sigs,
                                           const std::vector<std::size_t>& ks, const ManifoldSignature& target);
// tol < 0 selects the scale-aware default per iterate
IdentificationReport detect_identification(const Trajectory& t, const Regularizer& r, const ManifoldSignature& target,
                                           double tol = -1.0, IterateField field = IterateField::U);

// least-squares slope of log(value) against k over k_lo <= k <= k_hi; returns exp(slope)
double fit_log_slope(const std::vector<std::pair<std::size_t, double>>& series, std::size_t k_lo, std::size_t k_hi);

}  // namespace fdr
