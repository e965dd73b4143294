#include "fdr/functions.hpp"

#include "fdr/error.hpp"

namespace fdr {

SmoothQuadratic::SmoothQuadratic(Matrix k, Vector f) : k_(std::move(k)), f_(std::move(f)) {
  if (k_.rows() == 0 || k_.cols() == 0) throw InvalidInput("SmoothQuadratic: empty operator");
  require_dim(f_, k_.rows(), "SmoothQuadratic target");
  if (!k_.all_finite() || !f_.all_finite()) throw InvalidInput("SmoothQuadratic: non-finite data");
  gram_ = k_.transpose() * k_;
}

double SmoothQuadratic::value(const Vector& x) const {
  require_dim(x, dim(), "SmoothQuadratic::value");
  return 0.5 * norm_sq(k_ * x - f_);
}

Vector SmoothQuadratic::gradient(const Vector& x) const {
  require_dim(x, dim(), "SmoothQuadratic::gradient");
  return k_.transpose_times(k_ * x - f_);
}

Matrix SmoothQuadratic::hessian(const Vector& x) const {
  require_dim(x, dim(), "SmoothQuadratic::hessian");
  return gram_;
}

namespace {

// power iteration first; a nearly repeated top singular value can exhaust its
// iteration cap, and then the dense SVD settles it
double largest_singular_value(const Matrix& m) {
  try {
    return spectral_norm(m);
  } catch (const NumericalFailure&) {
    return singular_values(m).front();
  }
}

}  // namespace

LipschitzModuli lipschitz_moduli(const SmoothQuadratic& q, const Subspace& v) {
  if (v.ambient_dim() != q.dim()) throw InvalidInput("lipschitz_moduli: subspace dimension mismatch");
  const double nf = largest_singular_value(q.k());
  if (nf == 0.0) throw InvalidInput("lipschitz_moduli: K is zero");
  LipschitzModuli out{1.0 / (nf * nf), 0.0};
  if (v.is_whole()) {
    out.beta_v = out.beta;
    return out;
  }
  if (v.dim() == 0) {
    out.beta_v = std::numeric_limits<double>::infinity();
    return out;
  }
  // ||P_V K^T K P_V|| = ||K B||^2 for an orthonormal basis B of V
  const double ng = largest_singular_value(q.k() * v.basis());
  out.beta_v = ng == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (ng * ng);
  return out;
}

RestrictedSmooth::RestrictedSmooth(SmoothQuadratic base, Subspace v)
    : base_(std::move(base)), v_(std::move(v)), moduli_(lipschitz_moduli(base_, v_)) {
  const Matrix p = v_.projector();
  hessian_g_ = v_.is_whole() ? base_.gram() : p * base_.gram() * p;
}

Vector RestrictedSmooth::gradient(const Vector& x) const {
  return v_.project(base_.gradient(v_.project(x)));
}

Vector RestrictedSmooth::gradient_on_v(const Vector& x_in_v) const {
  return v_.project(base_.gradient(x_in_v));
}

}  // namespace fdr
