#pragma once

#include "fdr/diagnostics.hpp"

namespace fdr {

// Linearized FDR fixed-point map at the anchor.
struct LinearizationFDR {
  Matrix tangent;         // projector onto the tangent space of R's manifold at x*
  Matrix h_g;             // P_V grad^2 F P_V
  Matrix h_rbar;          // gamma * Riemannian Hessian of R, conjugated by the tangent projector
  Matrix w_rbar;          // (Id + h_rbar)^{-1}
  Matrix m_rbar;          // tangent * w_rbar * tangent
  Matrix m_gamma;         // Id + 2 m_rbar P_V - m_rbar - P_V - gamma m_rbar h_g
  Matrix m_gamma_lambda;  // (1 - lambda) Id + lambda m_gamma
  Matrix m_inf;           // spectral projector of m_gamma_lambda onto eigenvalue 1
  double gamma = 0.0, lambda = 1.0;
  bool polyhedral = false;
};

LinearizationFDR build_fdr_linearization(const Anchor& a, const FdrProblem& p, double gamma, double lambda);

// Linearized TOS map.
struct LinearizationTOS {
  Matrix h_f, h_jtilde, h_rtilde, w_jtilde, w_rtilde, m_jtilde, m_rtilde;
  Matrix l_gamma;         // Id + 2 M_R M_J - M_R - M_J - gamma M_R H_F M_J
  Matrix l_gamma_lambda;  // (1 - lambda) Id + lambda l_gamma
  Matrix l_inf;
  double gamma = 0.0, lambda = 1.0;
  bool polyhedral = false;
};

LinearizationTOS build_tos_linearization(const Anchor& a, const TosProblem& p, double gamma, double lambda);

// Product-space anchor of a converged GFB reference and the matching linearization
// (FDR on the product space with step m * gamma).
Anchor make_gfb_product_anchor(const Trajectory& reference, const GfbProblem& p, double gamma,
                               double residual_gate = 1e-12);
LinearizationFDR build_gfb_linearization(const Anchor& product_anchor, const GfbProblem& p, double gamma,
                                         double lambda);

// rho(M - M_inf)
double predicted_rate(const Matrix& m, const Matrix& m_inf);
double predicted_rate(const LinearizationFDR& lin);
double predicted_rate(const LinearizationTOS& lin);

enum class TheoremCase { PolyhedralQuadraticExact, ProjectedSequence };
const char* theorem_case_name(TheoremCase c);

struct RateCertificate {
  double predicted_rho = 0.0;
  double observed_factor = 0.0;
  std::size_t window_lo = 0, window_hi = 0;  // iteration numbers
  std::size_t window_records = 0;
  bool match = false;
  TheoremCase theorem_case = TheoremCase::ProjectedSequence;
  bool dominated_by_schedule = false;  // non-constant steps and observed decay slower than predicted
  double tol_rel = 0.0;
};

// Minimum number of usable post-identification records for a slope fit.
inline constexpr std::size_t kMinRateWindow = 30;

// Exact case (polyhedral terms, constant parameters): fits the decay of ||z_k - z*||.
// Otherwise fits ||(Id - M_inf)(z_k - z*)||. The window starts at identification
// and ends before the distance first drops under floor_rel * max(1, ||z*||).
RateCertificate certify(const Matrix& m_gamma_lambda, const Matrix& m_inf, bool polyhedral, const Anchor& a,
                        const Trajectory& t, const IdentificationReport& ident, double tol_rel,
                        double floor_rel = 1e-10);
RateCertificate certify(const LinearizationFDR& lin, const Anchor& a, const Trajectory& t,
                        const IdentificationReport& ident, double tol_rel, double floor_rel = 1e-10);
RateCertificate certify(const LinearizationTOS& lin, const Anchor& a, const Trajectory& t,
                        const IdentificationReport& ident, double tol_rel, double floor_rel = 1e-10);

}  // namespace fdr
