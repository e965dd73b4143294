#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fdr/linalg.hpp"

namespace fdr {

enum class RegularizerKind { L1, GroupL12, LInf, TV1D, Nuclear, SubspaceIndicator, Separable };

const char* kind_name(RegularizerKind k);

// Discrete activity pattern of a point. Indices are 0-based.
//   L1: support; GroupL12: active block ids; LInf: saturation set + signs;
//   TV1D: jump positions i meaning x[i+1] != x[i]; Nuclear: rank;
//   SubspaceIndicator: empty; Separable: one entry per part.
struct ManifoldSignature {
  RegularizerKind kind = RegularizerKind::L1;
  std::vector<std::size_t> indices;
  std::vector<int> signs;
  std::size_t rank = 0;
  std::vector<ManifoldSignature> parts;

  bool operator==(const ManifoldSignature&) const = default;
  // number of active entries (summed over parts)
  std::size_t size() const;
  std::string to_string() const;
};

struct TangentProjector {
  Matrix matrix;  // symmetric idempotent, n x n
};

// Partly smooth penalty or subspace indicator. Cheap to copy (shared immutable state).
class Regularizer {
public:
  static Regularizer l1(double mu, std::size_t n);
  // blocks must be nonempty, disjoint and cover 0..n-1
  static Regularizer group_l12(double mu, std::vector<std::vector<std::size_t>> blocks);
  static Regularizer group_l12_uniform(double mu, std::size_t n, std::size_t block_size);
  static Regularizer linf(double mu, std::size_t n);
  static Regularizer tv1d(double mu, std::size_t n);
  // acts on a rows x cols matrix stored row-major
  static Regularizer nuclear(double mu, std::size_t rows, std::size_t cols);
  static Regularizer indicator(Subspace v);
  // R = 0, represented as the indicator of the whole space
  static Regularizer zero(std::size_t n);
  // sum of parts acting on consecutive segments of the argument
  static Regularizer separable(std::vector<Regularizer> parts);

  RegularizerKind kind() const;
  std::size_t dim() const;
  double mu() const;
  const std::vector<std::vector<std::size_t>>& blocks() const;
  const Subspace& subspace() const;
  const std::vector<Regularizer>& parts() const;
  std::size_t matrix_rows() const;
  std::size_t matrix_cols() const;

  // polyhedral kinds have zero Riemannian Hessian on their manifolds
  bool polyhedral() const;

  double eval(const Vector& x) const;
  Vector prox(double gamma, const Vector& x) const;

  ManifoldSignature signature(const Vector& x, double tol) const;
  // tol = 1e-10 (1 + ||x||_inf)
  ManifoldSignature signature(const Vector& x) const;

  TangentProjector tangent_projector(const ManifoldSignature& sig) const;
  // Hessian of R along its (flat) manifold at x, zero off the tangent space
  Matrix riemannian_hessian(const Vector& x, const ManifoldSignature& sig) const;
  // > 0 iff g lies in the relative interior of the subdifferential at x_star
  double nondegeneracy_margin(const Vector& x_star, const Vector& g) const;

  struct Data;

private:
  explicit Regularizer(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  std::shared_ptr<const Data> d_;
};

double default_signature_tol(const Vector& x);

namespace prox {
// Euclidean projection onto {w : ||w||_1 <= radius}; sort-based, ties by index
Vector project_l1_ball(const Vector& x, double radius);
// argmin_u lambda * sum |u[i+1] - u[i]| + 1/2 ||u - y||^2, exact
Vector tv1d(const Vector& y, double lambda);
}  // namespace prox

}  // namespace fdr
