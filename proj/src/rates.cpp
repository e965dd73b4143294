#include "fdr/rates.hpp"

#include <cmath>
#include <limits>

#include "fdr/error.hpp"

namespace fdr {

namespace {

struct ManifoldBlock {
  Matrix tangent, h, w, m;
};

// gamma-scaled Hessian on the tangent space, its resolvent and the conjugated resolvent.
// Every supported kind has a linear-subspace manifold, so a zero margin needs no
// rejection here; the curved one (nuclear) is refused by tangent_projector.
ManifoldBlock manifold_block(const Regularizer& r, const Vector& x_star, double gamma) {
  const ManifoldSignature sig = r.signature(x_star);
  ManifoldBlock b;
  b.tangent = r.tangent_projector(sig).matrix;
  b.h = gamma * (b.tangent * r.riemannian_hessian(x_star, sig) * b.tangent);
  const std::size_t n = r.dim();
  b.w = inverse_spd(Matrix::identity(n) + b.h);
  b.m = b.tangent * b.w * b.tangent;
  return b;
}

Matrix relaxed(const Matrix& m, double lambda) {
  Matrix out = lambda * m;
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) out(i, i) += 1.0 - lambda;
  return out;
}

void check_params(double gamma, double lambda) {
  if (!(gamma > 0.0)) throw InvalidInput("linearization: step must be positive");
  if (!(lambda > 0.0)) throw InvalidInput("linearization: relaxation must be positive");
}

}  // namespace

LinearizationFDR build_fdr_linearization(const Anchor& a, const FdrProblem& p, double gamma, double lambda) {
  check_params(gamma, lambda);
  const std::size_t n = p.smooth.dim();
  require_dim(a.x_star, n, "build_fdr_linearization");
  const ManifoldBlock b = manifold_block(p.r, a.x_star, gamma);
  LinearizationFDR lin;
  lin.gamma = gamma;
  lin.lambda = lambda;
  lin.polyhedral = p.r.polyhedral();
  lin.tangent = b.tangent;
  lin.h_rbar = b.h;
  lin.w_rbar = b.w;
  lin.m_rbar = b.m;
  lin.h_g = p.smooth.hessian();
  const Matrix pv = p.v().projector();
  Matrix mg = Matrix::identity(n);
  mg += 2.0 * (b.m * pv);
  mg -= b.m;
  mg -= pv;
  mg -= gamma * (b.m * lin.h_g);
  lin.m_gamma = std::move(mg);
  lin.m_gamma_lambda = relaxed(lin.m_gamma, lambda);
  lin.m_inf = unit_eigen_projector(lin.m_gamma_lambda);
  return lin;
}

LinearizationTOS build_tos_linearization(const Anchor& a, const TosProblem& p, double gamma, double lambda) {
  check_params(gamma, lambda);
  const std::size_t n = p.smooth.dim();
  require_dim(a.x_star, n, "build_tos_linearization");
  const ManifoldBlock br = manifold_block(p.r, a.x_star, gamma);
  const ManifoldBlock bj = manifold_block(p.j, a.x_star, gamma);
  LinearizationTOS lin;
  lin.gamma = gamma;
  lin.lambda = lambda;
  lin.polyhedral = p.r.polyhedral() && p.j.polyhedral();
  lin.h_f = p.smooth.gram();
  lin.h_rtilde = br.h;
  lin.w_rtilde = br.w;
  lin.m_rtilde = br.m;
  lin.h_jtilde = bj.h;
  lin.w_jtilde = bj.w;
  lin.m_jtilde = bj.m;
  const Matrix mrmj = br.m * bj.m;
  Matrix l = Matrix::identity(n);
  l += 2.0 * mrmj;
  l -= br.m;
  l -= bj.m;
  l -= gamma * (br.m * lin.h_f * bj.m);
  lin.l_gamma = std::move(l);
  lin.l_gamma_lambda = relaxed(lin.l_gamma, lambda);
  lin.l_inf = unit_eigen_projector(lin.l_gamma_lambda);
  return lin;
}

Anchor make_gfb_product_anchor(const Trajectory& reference, const GfbProblem& p, double gamma, double residual_gate) {
  const std::size_t m = p.rs.size();
  Anchor a = make_anchor(reference, gamma, residual_gate);
  a.x_star = replicate(a.x_star, m);
  a.gamma = static_cast<double>(m) * gamma;
  a.v_star = (a.x_star - a.z_star) / a.gamma;
  return a;
}

LinearizationFDR build_gfb_linearization(const Anchor& product_anchor, const GfbProblem& p, double gamma,
                                         double lambda) {
  return build_fdr_linearization(product_anchor, gfb_as_fdr(p), static_cast<double>(p.rs.size()) * gamma, lambda);
}

double predicted_rate(const Matrix& m, const Matrix& m_inf) { return spectral_radius(m - m_inf); }
double predicted_rate(const LinearizationFDR& lin) { return predicted_rate(lin.m_gamma_lambda, lin.m_inf); }
double predicted_rate(const LinearizationTOS& lin) { return predicted_rate(lin.l_gamma_lambda, lin.l_inf); }

const char* theorem_case_name(TheoremCase c) {
  return c == TheoremCase::PolyhedralQuadraticExact ? "polyhedral_quadratic_exact" : "projected_sequence";
}

RateCertificate certify(const Matrix& m_gl, const Matrix& m_inf, bool polyhedral, const Anchor& a, const Trajectory& t,
                        const IdentificationReport& ident, double tol_rel, double floor_rel) {
  if (!(tol_rel > 0.0)) throw InvalidInput("certify: tolerance must be positive");
  if (!ident.record_index) throw InsufficientData("certify: no identification in the trajectory");
  if (t.records.empty()) throw InsufficientData("certify: empty trajectory");

  bool constant = true;
  for (const Record& r : t.records)
    if (r.gamma != t.records.front().gamma || r.lambda != t.records.front().lambda) constant = false;
  // the k = 0 record carries the first step's parameters, so it is representative

  RateCertificate c;
  c.tol_rel = tol_rel;
  c.predicted_rho = predicted_rate(m_gl, m_inf);
  c.theorem_case = (polyhedral && constant) ? TheoremCase::PolyhedralQuadraticExact : TheoremCase::ProjectedSequence;

  const std::size_t n = a.z_star.size();
  const Matrix comp = Matrix::identity(n) - m_inf;
  const double floor = floor_rel * std::max(1.0, norm(a.z_star));
  std::vector<std::pair<std::size_t, double>> series;
  for (std::size_t i = *ident.record_index; i < t.records.size(); ++i) {
    const Vector d = t.records[i].z - a.z_star;
    const double v = c.theorem_case == TheoremCase::PolyhedralQuadraticExact ? norm(d) : norm(comp * d);
    if (!(v > floor)) break;
    series.emplace_back(t.records[i].k, v);
  }
  if (series.size() < kMinRateWindow)
    throw InsufficientData("certify: only " + std::to_string(series.size()) +
                           " usable records after identification (need " + std::to_string(kMinRateWindow) + ")");
  c.window_lo = series.front().first;
  c.window_hi = series.back().first;
  c.window_records = series.size();
  c.observed_factor = fit_log_slope(series, c.window_lo, c.window_hi);
  c.match = std::fabs(c.observed_factor - c.predicted_rho) <= tol_rel * c.predicted_rho;
  c.dominated_by_schedule = !constant && c.observed_factor > c.predicted_rho * (1.0 + tol_rel);
  return c;
}

RateCertificate certify(const LinearizationFDR& lin, const Anchor& a, const Trajectory& t,
                        const IdentificationReport& ident, double tol_rel, double floor_rel) {
  return certify(lin.m_gamma_lambda, lin.m_inf, lin.polyhedral, a, t, ident, tol_rel, floor_rel);
}

RateCertificate certify(const LinearizationTOS& lin, const Anchor& a, const Trajectory& t,
                        const IdentificationReport& ident, double tol_rel, double floor_rel) {
  return certify(lin.l_gamma_lambda, lin.l_inf, lin.polyhedral, a, t, ident, tol_rel, floor_rel);
}

}  // namespace fdr
