#include "fdr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fdr/error.hpp"

namespace fdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Anchor anchor_from(const Trajectory& ref, double gamma, double gate) {
  if (!(gamma > 0.0)) throw InvalidInput("make_anchor: step must be positive");
  if (ref.records.size() < 2) throw InvalidInput("make_anchor: reference run has no iterations");
  const Record& last = ref.final();
  if (!(last.residual <= gate))
    throw InvalidInput("make_anchor: reference run not converged (residual " + std::to_string(last.residual) +
                       " > " + std::to_string(gate) + ")");
  Anchor a;
  a.z_star = last.z;
  a.x_star = last.x;
  a.gamma = gamma;
  a.residual = last.residual;
  a.approximate = gate > 1e-12;
  // GFB references carry product-space z and an averaged x; the caller completes v*
  if (a.x_star.size() == a.z_star.size()) a.v_star = (a.x_star - a.z_star) / gamma;
  return a;
}

}  // namespace

Anchor make_anchor(const Trajectory& reference, double gamma, const Subspace& v, double residual_gate) {
  Anchor a = anchor_from(reference, gamma, residual_gate);
  const double scale = 1.0 + norm(a.z_star);
  if (distance(a.x_star, v.project(a.z_star)) > 1e-9 * scale)
    throw InvalidInput("make_anchor: x* is not the projection of z*");
  if (norm(v.project(a.v_star)) > 1e-9 * (1.0 + norm(a.v_star)))
    throw InvalidInput("make_anchor: v* not in the orthogonal complement of V");
  return a;
}

Anchor make_anchor(const Trajectory& reference, double gamma, double residual_gate) {
  return anchor_from(reference, gamma, residual_gate);
}

double bregman(const Anchor& a, const FdrProblem& p, const Vector& y) {
  const double ry = p.r.eval(y);
  if (!std::isfinite(ry)) return std::numeric_limits<double>::infinity();
  const double phi_y = ry + p.smooth.value(y);
  const double phi_s = p.r.eval(a.x_star) + p.smooth.value(a.x_star);
  return phi_y - phi_s - dot(a.v_star, p.v().project_complement(y));
}

BregmanSeries bregman_series(const Anchor& a, const FdrProblem& p, const Trajectory& t) {
  BregmanSeries s;
  s.ergodic_approximate = t.stride > 1;
  const double phi_s = p.r.eval(a.x_star) + p.smooth.value(a.x_star);
  auto div = [&](const Vector& y) {
    const double ry = p.r.eval(y);
    if (!std::isfinite(ry)) return std::numeric_limits<double>::infinity();
    return ry + p.smooth.value(y) - phi_s - dot(a.v_star, p.v().project_complement(y));
  };
  Vector sum(p.smooth.dim());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const Record& r = t.records[i];
    const double d = div(r.u);
    best = std::min(best, d);
    sum += r.u;
    const double e = div(sum / static_cast<double>(i + 1));
    const double w = static_cast<double>(r.k + 1);
    s.k.push_back(r.k);
    s.value.push_back(d);
    s.best.push_back(best);
    s.ergodic.push_back(e);
    s.scaled_best.push_back(w * best);
    s.scaled_ergodic.push_back(w * e);
  }
  return s;
}

AuditReport audit_energy_inequality(const Anchor& a, const FdrProblem& p, const Trajectory& t, const Schedule& s) {
  if (!s.unrelaxed()) throw InvalidInput("audit: the inequality holds for lambda_k = 1 only");
  if (t.stride != 1) throw InvalidInput("audit: needs every iterate (stride 1)");
  const double bv = p.smooth.beta_v();
  const Subspace& v = p.v();
  // step of the transition leaving iterate k
  auto step = [&](std::size_t k) { return s.gamma(k + 1); };

  AuditReport rep;
  double glow = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 <= t.iterations + 1; ++k) glow = std::min(glow, step(k));
  rep.gamma_lower = glow;
  const double vs2 = norm_sq(a.v_star);
  const double phi_s = p.r.eval(a.x_star) + p.smooth.value(a.x_star);

  auto phi = [&](const Record& r, double g) {
    Vector w = v.project_complement(r.z);
    w.add_scaled(g, a.v_star);
    return (norm_sq(w) + norm_sq(r.x - a.x_star)) / (2.0 * g);
  };

  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < t.records.size(); ++i) {
    const Record& cur = t.records[i];
    const Record& nxt = t.records[i + 1];
    if (nxt.k != cur.k + 1) throw InvalidInput("audit: records are not consecutive");
    const double gk = step(cur.k), gk1 = step(cur.k + 1);
    AuditRow row;
    row.k = cur.k;
    row.bregman_next = p.r.eval(nxt.u) + p.smooth.value(nxt.u) - phi_s - dot(a.v_star, v.project_complement(nxt.u));
    row.phi = phi(cur, gk);
    row.phi_next = phi(nxt, gk1);
    row.step_term = 0.5 * (gk1 - gk) * vs2;
    const double dz2 = norm_sq(nxt.z - cur.z);
    row.xi_text = std::isfinite(bv) ? std::fabs(glow - bv) / (2.0 * glow * bv) * dz2 : dz2 / (2.0 * glow);
    row.xi_proof = std::isfinite(bv) ? std::fabs(gk - bv) / (2.0 * gk * bv) * dz2 : dz2 / (2.0 * gk);
    const double dg = std::fabs(gk1 - gk) / (2.0 * glow * glow);
    row.zeta_proof = dg * norm_sq(nxt.z - a.x_star);
    row.zeta_text = std::fabs(gk - (cur.k == 0 ? gk : step(cur.k - 1))) / (2.0 * glow * glow) * norm_sq(cur.z - a.x_star);
    const double lhs = row.bregman_next + row.phi_next;
    const double rhs = row.phi + row.step_term + std::max(row.xi_text, row.xi_proof) + row.zeta_proof;
    row.slack = lhs - rhs;
    worst = std::max(worst, row.slack);
    rep.rows.push_back(row);
  }
  rep.max_violation = worst;
  return rep;
}

IdentificationReport detect_identification(const std::vector<ManifoldSignature>& sigs,
                                           const std::vector<std::size_t>& ks, const ManifoldSignature& target) {
  if (sigs.size() != ks.size()) throw InvalidInput("detect_identification: signature/index length mismatch");
  IdentificationReport rep{std::nullopt, std::nullopt, kNaN};
  std::size_t first = sigs.size();
  while (first > 0 && sigs[first - 1] == target) --first;
  if (first < sigs.size()) {
    rep.record_index = first;
    rep.k = ks[first];
  }
  return rep;
}

IdentificationReport detect_identification(const Trajectory& t, const Regularizer& r, const ManifoldSignature& target,
                                           double tol, IterateField field) {
  std::vector<ManifoldSignature> sigs;
  std::vector<std::size_t> ks;
  for (const Record& rec : t.records) {
    const Vector& y = field == IterateField::U ? rec.u : rec.x;
    sigs.push_back(tol < 0.0 ? r.signature(y) : r.signature(y, tol));
    ks.push_back(rec.k);
  }
  return detect_identification(sigs, ks, target);
}

double fit_log_slope(const std::vector<std::pair<std::size_t, double>>& series, std::size_t k_lo, std::size_t k_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& [k, v] : series) {
    if (k < k_lo || k > k_hi) continue;
    if (!(v > 0.0)) throw InvalidInput("fit_log_slope: nonpositive value in window");
    const double x = static_cast<double>(k - k_lo), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw InsufficientData("fit_log_slope: fewer than two points in window");
  const double md = static_cast<double>(m);
  const double den = md * sxx - sx * sx;
  if (den == 0.0) throw InsufficientData("fit_log_slope: degenerate window");
  return std::exp((md * sxy - sx * sy) / den);
}

}  // namespace fdr
