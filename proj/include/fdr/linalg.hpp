#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fdr {

// Dense real vector. Arithmetic routes through the active SIMD kernel table.
class Vector {
public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : v_(n, fill) {}
  Vector(std::initializer_list<double> init) : v_(init) {}
  explicit Vector(std::vector<double> v) : v_(std::move(v)) {}

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }
  std::span<const double> view() const noexcept { return v_; }
  const std::vector<double>& values() const noexcept { return v_; }

  Vector& operator+=(const Vector& o);
  Vector& operator-=(const Vector& o);
  Vector& operator*=(double s);
  // this += a * x
  Vector& add_scaled(double a, const Vector& x);

  bool all_finite() const noexcept;
  bool operator==(const Vector&) const = default;

  // entries [offset, offset + len)
  Vector segment(std::size_t offset, std::size_t len) const;
  void set_segment(std::size_t offset, const Vector& src);

private:
  std::vector<double> v_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);
Vector operator*(Vector a, double s);
Vector operator/(Vector a, double s);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double norm_sq(const Vector& a);
double norm1(const Vector& a);
double norm_inf(const Vector& a);
double distance(const Vector& a, const Vector& b);
Vector concat(const std::vector<Vector>& parts);

// throws InvalidInput naming `where`
void require_dim(const Vector& x, std::size_t n, const char* where);

// Row-major dense matrix.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diag(const Vector& d);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  // columns given as vectors of equal length
  static Matrix from_cols(const std::vector<Vector>& cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  double* data() noexcept { return a_.data(); }
  const double* data() const noexcept { return a_.data(); }
  const double* row(std::size_t i) const noexcept { return a_.data() + i * cols_; }

  Vector col(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);
  Matrix transpose() const;

  Vector operator*(const Vector& x) const;
  // A^T x without forming the transpose
  Vector transpose_times(const Vector& x) const;
  Matrix operator*(const Matrix& b) const;
  Matrix& operator+=(const Matrix& b);
  Matrix& operator-=(const Matrix& b);
  Matrix& operator*=(double s);

  double max_abs() const noexcept;
  bool all_finite() const noexcept;
  bool is_symmetric(double tol) const;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix outer(const Vector& a, const Vector& b);
// largest entrywise difference
double max_abs_diff(const Matrix& a, const Matrix& b);

// Linear subspace of R^n stored by an orthonormal basis (n x d, columns).
class Subspace {
public:
  static Subspace whole(std::size_t n);
  static Subspace trivial(std::size_t n);
  // Orthonormalizes the columns of `spanning` (modified Gram-Schmidt, two passes).
  // Columns that are numerically dependent are dropped.
  static Subspace span(const Matrix& spanning);
  static Subspace coordinates(std::size_t n, const std::vector<std::size_t>& idx);

  std::size_t ambient_dim() const noexcept { return n_; }
  std::size_t dim() const noexcept { return whole_ ? n_ : basis_.cols(); }
  bool is_whole() const noexcept { return whole_; }
  // n x d; for whole() this is materialized on request
  Matrix basis() const;

  Vector project(const Vector& x) const;
  Vector project_complement(const Vector& x) const;
  Matrix projector() const;
  bool contains(const Vector& x, double tol) const;

private:
  std::size_t n_ = 0;
  bool whole_ = false;
  Matrix basis_;
};

// Largest singular value via power iteration on m^T m from the all-ones start.
double spectral_norm(const Matrix& m, double tol = 1e-12);

// max |eigenvalue| from a dense nonsymmetric eigensolve.
double spectral_radius(const Matrix& m);
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

// Cholesky solve. Rejects matrices that are not symmetric positive definite.
Vector solve_spd(const Matrix& a, const Vector& b);
Matrix inverse_spd(const Matrix& a);

// Spectral projector onto the eigenvalue-1 eigenspace of m, along the sum of
// the other generalized eigenspaces. Eigenvalues within `tol` of 1 count as 1.
// Zero matrix when 1 is not an eigenvalue. When the null spaces of Id - m are
// too ill-conditioned to build it (nearly defective unit eigenvalue), falls back
// to lim m^(2^j) by repeated squaring.
Matrix unit_eigen_projector(const Matrix& m, double tol = 1e-10);

// Singular values in decreasing order.
std::vector<double> singular_values(const Matrix& m);

}  // namespace fdr
