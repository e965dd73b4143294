#pragma once

#include <limits>

#include "fdr/linalg.hpp"

namespace fdr {

// Hooks for a twice differentiable smooth term. Only the least-squares term
// below is implemented.
class SmoothTerm {
public:
  virtual ~SmoothTerm() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
};

// F(x) = 1/2 ||K x - f||^2
class SmoothQuadratic final : public SmoothTerm {
public:
  SmoothQuadratic(Matrix k, Vector f);

  std::size_t dim() const override { return k_.cols(); }
  std::size_t rows() const { return k_.rows(); }
  double value(const Vector& x) const override;
  // K^T (K x - f)
  Vector gradient(const Vector& x) const override;
  // K^T K, constant
  Matrix hessian(const Vector& x) const override;
  const Matrix& gram() const { return gram_; }

  const Matrix& k() const { return k_; }
  const Vector& f() const { return f_; }

private:
  Matrix k_;
  Vector f_;
  Matrix gram_;
};

struct LipschitzModuli {
  double beta;    // 1 / ||K^T K||
  double beta_v;  // 1 / ||P_V K^T K P_V||, +inf when that is zero
};

LipschitzModuli lipschitz_moduli(const SmoothQuadratic& q, const Subspace& v);

// G = F o P_V, gradient P_V grad F(P_V x)
class RestrictedSmooth {
public:
  RestrictedSmooth(SmoothQuadratic base, Subspace v);

  std::size_t dim() const { return base_.dim(); }
  const SmoothQuadratic& base() const { return base_; }
  const Subspace& subspace() const { return v_; }
  double beta() const { return moduli_.beta; }
  double beta_v() const { return moduli_.beta_v; }

  double value(const Vector& x) const { return base_.value(v_.project(x)); }
  Vector gradient(const Vector& x) const;
  // gradient at a point already known to lie in V (skips one projection)
  Vector gradient_on_v(const Vector& x_in_v) const;
  // P_V K^T K P_V
  const Matrix& hessian() const { return hessian_g_; }

private:
  SmoothQuadratic base_;
  Subspace v_;
  LipschitzModuli moduli_;
  Matrix hessian_g_;
};

}  // namespace fdr
