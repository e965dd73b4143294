#include "fdr/solvers.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fdr/error.hpp"
#include "fdr/simd.hpp"

namespace fdr {

namespace {

Vector reflect(const Vector& x, const Vector& z, const Vector& g, double gamma) {
  Vector out(x.size());
  simd::active().reflect(x.data(), z.data(), g.data(), gamma, out.data(), x.size());
  return out;
}

// z + lambda (u - x)
Vector relax(const Vector& z, const Vector& u, const Vector& x, double lambda) {
  Vector out = u - x;
  out *= lambda;
  out += z;
  return out;
}

void check_options(const RunOptions& o) {
  if (o.max_iter < 1) throw InvalidInput("max_iter must be at least 1");
  if (!(o.residual_tol >= 0.0)) throw InvalidInput("residual_tol must be nonnegative");
  if (o.record_stride < 1) throw InvalidInput("record stride must be at least 1");
}

void require_valid(const ValidationReport& rep, const char* who) {
  if (!rep.ok()) throw InvalidInput(std::string(who) + ": schedule rejected\n" + rep.summary());
}

template <class Step>
Trajectory run_loop(const Schedule& s, const RunOptions& o, SolverState st, Step step) {
  Trajectory t;
  t.stride = o.record_stride;
  t.records.push_back({0, s.gamma(1), s.lambda(1), st.z, st.x, st.u, 0.0});
  for (std::size_t k = 1; k <= o.max_iter; ++k) {
    const double g = s.gamma(k), l = s.lambda(k);
    SolverState nx = step(st, g, l);
    if (!nx.z.all_finite() || !nx.x.all_finite() || !nx.u.all_finite())
      throw NumericalFailure("non-finite iterate at k = " + std::to_string(k) + "; last finite state is k = " +
                                 std::to_string(k - 1),
                             static_cast<double>(k - 1));
    const double res = distance(nx.z, st.z);
    st = std::move(nx);
    st.k = k;
    const bool converged = res <= o.residual_tol;
    if (k % o.record_stride == 0 || converged || k == o.max_iter)
      t.records.push_back({k, g, l, st.z, st.x, st.u, res});
    if (converged) {
      t.stop = StopReason::ResidualTolerance;
      break;
    }
  }
  t.iterations = st.k;
  return t;
}

Vector initial_z(const RunOptions& o, std::size_t n) {
  if (!o.z0) return Vector(n);
  require_dim(*o.z0, n, "initial point");
  if (!o.z0->all_finite()) throw InvalidInput("initial point has non-finite entries");
  return *o.z0;
}

double modulus_of(const SmoothQuadratic& f) { return lipschitz_moduli(f, Subspace::whole(f.dim())).beta; }

void require_constant_step(const Schedule& s, double beta, std::size_t horizon, const char* who) {
  if (!s.constant_step()) throw InvalidInput(std::string(who) + ": constant step size required");
  require_valid(validate_schedule(s, beta, horizon), who);
}

}  // namespace

const char* stop_reason_name(StopReason s) {
  return s == StopReason::ResidualTolerance ? "residual_tol" : "max_iter";
}

FbProblem make_fb_problem(SmoothQuadratic f, Regularizer r) {
  if (r.dim() != f.dim()) throw InvalidInput("FB problem: regularizer dimension mismatch");
  const double beta = modulus_of(f);
  return {std::move(f), std::move(r), beta};
}

GfbProblem make_gfb_problem(SmoothQuadratic f, std::vector<Regularizer> rs, std::vector<double> weights) {
  if (rs.empty()) throw InvalidInput("GFB problem: no regularizers");
  for (const auto& r : rs)
    if (r.dim() != f.dim()) throw InvalidInput("GFB problem: regularizer dimension mismatch");
  if (weights.empty()) weights.assign(rs.size(), 1.0 / static_cast<double>(rs.size()));
  if (weights.size() != rs.size()) throw InvalidInput("GFB problem: one weight per regularizer required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0 && w <= 1.0)) throw InvalidInput("GFB problem: weights must lie in (0, 1]");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InvalidInput("GFB problem: weights must sum to 1");
  const double beta = modulus_of(f);
  return {std::move(f), std::move(rs), std::move(weights), beta};
}

TosProblem make_tos_problem(SmoothQuadratic f, Regularizer r, Regularizer j) {
  if (r.dim() != f.dim() || j.dim() != f.dim()) throw InvalidInput("TOS problem: regularizer dimension mismatch");
  const double beta = modulus_of(f);
  return {std::move(f), std::move(r), std::move(j), beta};
}

// ---- FDR

SolverState fdr_step(const SolverState& s, double gamma, double lambda, const FdrProblem& p) {
  const Vector g = p.smooth.gradient_on_v(s.x);
  SolverState out;
  out.u = p.r.prox(gamma, reflect(s.x, s.z, g, gamma));
  out.z = relax(s.z, out.u, s.x, lambda);
  out.x = p.v().project(out.z);
  out.k = s.k + 1;
  return out;
}

Trajectory fdr_run(const FdrProblem& p, const Schedule& s, const RunOptions& opts) {
  check_options(opts);
  if (p.r.dim() != p.smooth.dim()) throw InvalidInput("FDR problem: regularizer dimension mismatch");
  require_valid(validate_schedule(s, p.smooth.beta_v(), opts.max_iter), "fdr_run");
  SolverState st;
  st.z = initial_z(opts, p.smooth.dim());
  st.x = p.v().project(st.z);
  st.u = st.x;
  return run_loop(s, opts, std::move(st),
                  [&](const SolverState& cur, double g, double l) { return fdr_step(cur, g, l, p); });
}

// ---- FB

Trajectory fb_run(const FbProblem& p, const Schedule& s, const RunOptions& opts) {
  check_options(opts);
  require_valid(validate_schedule(s, p.beta, opts.max_iter), "fb_run");
  SolverState st;
  st.z = initial_z(opts, p.smooth.dim());
  st.x = st.z;
  st.u = st.x;
  return run_loop(s, opts, std::move(st), [&](const SolverState& cur, double g, double l) {
    SolverState out;
    // same arithmetic path as FDR with V the whole space, where x = z
    out.u = p.r.prox(g, reflect(cur.x, cur.x, p.smooth.gradient(cur.x), g));
    out.z = relax(cur.x, out.u, cur.x, l);
    out.x = out.z;
    return out;
  });
}

// ---- GFB

Trajectory gfb_run(const GfbProblem& p, const Schedule& s, const RunOptions& opts) {
  check_options(opts);
  require_constant_step(s, p.beta, opts.max_iter, "gfb_run");
  const std::size_t n = p.smooth.dim(), m = p.rs.size();
  SolverState st;
  st.z = initial_z(opts, m * n);
  st.x = Vector(n);
  for (std::size_t i = 0; i < m; ++i) st.x.add_scaled(p.weights[i], st.z.segment(i * n, n));
  st.u = replicate(st.x, m);
  return run_loop(s, opts, std::move(st), [&](const SolverState& cur, double g, double l) {
    const Vector grad = p.smooth.gradient(cur.x);
    SolverState out;
    out.z = Vector(m * n);
    out.u = Vector(m * n);
    out.x = Vector(n);
    for (std::size_t i = 0; i < m; ++i) {
      const Vector zi = cur.z.segment(i * n, n);
      const Vector ui = p.rs[i].prox(g / p.weights[i], reflect(cur.x, zi, grad, g));
      const Vector zn = relax(zi, ui, cur.x, l);
      out.u.set_segment(i * n, ui);
      out.z.set_segment(i * n, zn);
      out.x.add_scaled(p.weights[i], zn);
    }
    return out;
  });
}

// ---- TOS

Trajectory tos_run(const TosProblem& p, const Schedule& s, const RunOptions& opts) {
  check_options(opts);
  require_constant_step(s, p.beta, opts.max_iter, "tos_run");
  const double gamma = s.gamma(1);
  SolverState st;
  st.z = initial_z(opts, p.smooth.dim());
  st.x = p.j.prox(gamma, st.z);
  st.u = st.x;
  return run_loop(s, opts, std::move(st), [&](const SolverState& cur, double g, double l) {
    SolverState out;
    out.u = p.r.prox(g, reflect(cur.x, cur.z, p.smooth.gradient(cur.x), g));
    out.z = relax(cur.z, out.u, cur.x, l);
    out.x = p.j.prox(g, out.z);
    return out;
  });
}

// ---- fixed-point operators

Vector apply_fixed_point_fdr(double gamma, const FdrProblem& p, const Vector& z) {
  if (!(gamma > 0.0)) throw InvalidInput("apply_fixed_point_fdr: step must be positive");
  require_dim(z, p.smooth.dim(), "apply_fixed_point_fdr");
  Vector w = z - gamma * p.smooth.gradient(z);
  Vector rv = 2.0 * p.v().project(w) - w;
  Vector rr = 2.0 * p.r.prox(gamma, rv) - rv;
  return 0.5 * (w + rr);
}

Vector apply_fixed_point_tos(double gamma, const TosProblem& p, const Vector& z) {
  if (!(gamma > 0.0)) throw InvalidInput("apply_fixed_point_tos: step must be positive");
  require_dim(z, p.smooth.dim(), "apply_fixed_point_tos");
  const Vector x = p.j.prox(gamma, z);
  const Vector u = p.r.prox(gamma, reflect(x, z, p.smooth.gradient(x), gamma));
  return z + u - x;
}

// ---- product space

Vector replicate(const Vector& x, std::size_t copies) {
  Vector out(x.size() * copies);
  for (std::size_t i = 0; i < copies; ++i) out.set_segment(i * x.size(), x);
  return out;
}

FdrProblem gfb_as_fdr(const GfbProblem& p) {
  const std::size_t m = p.rs.size(), n = p.smooth.dim(), rows = p.smooth.rows();
  for (double w : p.weights)
    if (std::fabs(w - 1.0 / static_cast<double>(m)) > 1e-14)
      throw InvalidInput("gfb_as_fdr: product-space form needs equal weights");
  const Matrix& k = p.smooth.k();
  Matrix kt(rows, m * n);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) kt(r, i * n + j) = k(r, j) * inv_m;
  Matrix diag(m * n, n);
  const double c = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) diag(i * n + j, j) = c;
  return {RestrictedSmooth(SmoothQuadratic(std::move(kt), p.smooth.f()), Subspace::span(diag)),
          Regularizer::separable(p.rs)};
}

}  // namespace fdr
