#include "fdr/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "fdr/error.hpp"
#include "fdr/simd.hpp"

namespace fdr {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EMat> as_eigen(const Matrix& m) {
  return Eigen::Map<const EMat>(m.data(), static_cast<Eigen::Index>(m.rows()),
                                static_cast<Eigen::Index>(m.cols()));
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

void same_dim(const Vector& a, const Vector& b, const char* where) {
  if (a.size() != b.size())
    throw InvalidInput(std::string(where) + ": dimension mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
}

}  // namespace

// ---- Vector

Vector& Vector::operator+=(const Vector& o) {
  same_dim(*this, o, "vector +=");
  simd::active().axpy(1.0, o.data(), data(), size());
  return *this;
}

Vector& Vector::operator-=(const Vector& o) {
  same_dim(*this, o, "vector -=");
  simd::active().axpy(-1.0, o.data(), data(), size());
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

Vector& Vector::add_scaled(double a, const Vector& x) {
  same_dim(*this, x, "add_scaled");
  simd::active().axpy(a, x.data(), data(), size());
  return *this;
}

bool Vector::all_finite() const noexcept {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

Vector Vector::segment(std::size_t offset, std::size_t len) const {
  if (offset + len > size()) throw InvalidInput("segment out of range");
  return Vector(std::vector<double>(v_.begin() + offset, v_.begin() + offset + len));
}

void Vector::set_segment(std::size_t offset, const Vector& src) {
  if (offset + src.size() > size()) throw InvalidInput("set_segment out of range");
  std::copy(src.begin(), src.end(), v_.begin() + offset);
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator*(Vector a, double s) { return a *= s; }
Vector operator/(Vector a, double s) { return a *= 1.0 / s; }

double dot(const Vector& a, const Vector& b) {
  same_dim(a, b, "dot");
  return simd::active().dot(a.data(), b.data(), a.size());
}

double norm_sq(const Vector& a) { return simd::active().sum_sq(a.data(), a.size()); }
double norm(const Vector& a) { return std::sqrt(norm_sq(a)); }
double norm1(const Vector& a) { return simd::active().sum_abs(a.data(), a.size()); }

double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

double distance(const Vector& a, const Vector& b) { return norm(a - b); }

Vector concat(const std::vector<Vector>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return Vector(std::move(out));
}

void require_dim(const Vector& x, std::size_t n, const char* where) {
  if (x.size() != n)
    throw InvalidInput(std::string(where) + ": expected dimension " + std::to_string(n) + ", got " +
                       std::to_string(x.size()));
}

// ---- Matrix

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidInput("from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::from_cols(const std::vector<Vector>& cols) {
  if (cols.empty()) return Matrix();
  Matrix m(cols.front().size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) m.set_col(j, cols[j]);
  return m;
}

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  require_dim(v, rows_, "set_col");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector Matrix::operator*(const Vector& x) const {
  require_dim(x, cols_, "matrix-vector product");
  Vector y(rows_);
  simd::active().gemv(data(), rows_, cols_, x.data(), y.data());
  return y;
}

Vector Matrix::transpose_times(const Vector& x) const {
  require_dim(x, rows_, "transposed matrix-vector product");
  Vector y(cols_);
  simd::active().gemv_t(data(), rows_, cols_, x.data(), y.data());
  return y;
}

Matrix Matrix::operator*(const Matrix& b) const {
  if (cols_ != b.rows_) throw InvalidInput("matrix product: inner dimension mismatch");
  Matrix c(rows_, b.cols_);
  const auto& k = simd::active();
  for (std::size_t i = 0; i < rows_; ++i) {
    double* ci = c.data() + i * b.cols_;
    for (std::size_t p = 0; p < cols_; ++p) {
      const double a = (*this)(i, p);
      if (a != 0.0) k.axpy(a, b.row(p), ci, b.cols_);
    }
  }
  return c;
}

Matrix& Matrix::operator+=(const Matrix& b) {
  if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("matrix +=: shape mismatch");
  simd::active().axpy(1.0, b.data(), data(), a_.size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& b) {
  if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("matrix -=: shape mismatch");
  simd::active().axpy(-1.0, b.data(), data(), a_.size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : a_) x *= s;
  return *this;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : a_) m = std::max(m, std::fabs(x));
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(a_.begin(), a_.end(), [](double x) { return std::isfinite(x); });
}

bool Matrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
  return true;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix outer(const Vector& a, const Vector& b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

// ---- Subspace

Subspace Subspace::whole(std::size_t n) {
  Subspace s;
  s.n_ = n;
  s.whole_ = true;
  return s;
}

Subspace Subspace::trivial(std::size_t n) {
  Subspace s;
  s.n_ = n;
  s.basis_ = Matrix(n, 0);
  return s;
}

Subspace Subspace::span(const Matrix& spanning) {
  const std::size_t n = spanning.rows();
  std::vector<Vector> q;
  for (std::size_t j = 0; j < spanning.cols(); ++j) {
    Vector v = spanning.col(j);
    const double scale = norm(v);
    if (scale == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : q) v.add_scaled(-dot(b, v), b);
    const double r = norm(v);
    if (r <= 1e-10 * scale) continue;  // dependent column
    q.push_back(v / r);
  }
  if (q.size() == n) return whole(n);
  Subspace s;
  s.n_ = n;
  s.basis_ = q.empty() ? Matrix(n, 0) : Matrix::from_cols(q);
  return s;
}

Subspace Subspace::coordinates(std::size_t n, const std::vector<std::size_t>& idx) {
  Matrix b(n, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= n) throw InvalidInput("Subspace::coordinates: index out of range");
    b(idx[j], j) = 1.0;
  }
  return span(b);
}

Matrix Subspace::basis() const { return whole_ ? Matrix::identity(n_) : basis_; }

Vector Subspace::project(const Vector& x) const {
  require_dim(x, n_, "Subspace::project");
  if (whole_) return x;
  if (basis_.cols() == 0) return Vector(n_);
  return basis_ * basis_.transpose_times(x);
}

Vector Subspace::project_complement(const Vector& x) const { return x - project(x); }

Matrix Subspace::projector() const {
  if (whole_) return Matrix::identity(n_);
  return basis_ * basis_.transpose();
}

bool Subspace::contains(const Vector& x, double tol) const { return norm(project_complement(x)) <= tol; }

// ---- spectral tools

double spectral_norm(const Matrix& m, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("spectral_norm: tol must be positive");
  if (!m.all_finite()) throw InvalidInput("spectral_norm: non-finite entries");
  const std::size_t n = m.cols();
  if (n == 0 || m.rows() == 0 || m.max_abs() == 0.0) return 0.0;
  // 10 n iterations, with a floor so tiny matrices with clustered spectra still converge
  const std::size_t cap = std::max<std::size_t>(10 * n, 200);

  auto run = [&](Vector v) -> double {
    v *= 1.0 / norm(v);
    double est = 0.0;
    for (std::size_t it = 0; it < cap; ++it) {
      Vector w = m.transpose_times(m * v);
      const double rq = dot(v, w);  // Rayleigh quotient of m^T m
      const double wn = norm(w);
      if (wn == 0.0) return 0.0;
      v = w / wn;
      if (it > 0 && std::fabs(rq - est) <= tol * rq) return std::sqrt(rq);
      est = rq;
    }
    throw NumericalFailure("spectral_norm: power iteration did not converge", std::sqrt(est));
  };

  double s = run(Vector(n, 1.0));
  if (s == 0.0) {
    // start vector in the null space; retry from a fixed ramp
    Vector alt(n);
    for (std::size_t i = 0; i < n; ++i) alt[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
    s = run(alt);
  }
  return s;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("eigenvalues: matrix not square");
  if (m.rows() == 0) return {};
  Eigen::MatrixXd e = as_eigen(m);
  Eigen::EigenSolver<Eigen::MatrixXd> es(e, false);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalues: dense eigensolve failed");
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

double spectral_radius(const Matrix& m) {
  double r = 0.0;
  for (const auto& l : eigenvalues(m)) r = std::max(r, std::abs(l));
  return r;
}

namespace {

// lower-triangular Cholesky factor, row-major
Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("solve_spd: matrix not square");
  const double scale = std::max(1.0, a.max_abs());
  if (!a.is_symmetric(1e-8 * scale)) throw InvalidInput("solve_spd: matrix not symmetric");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 1e-14 * scale)) throw InvalidInput("solve_spd: matrix not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector chol_solve(const Matrix& l, const Vector& b) {
  const std::size_t n = l.rows();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

}  // namespace

Vector solve_spd(const Matrix& a, const Vector& b) {
  require_dim(b, a.rows(), "solve_spd");
  const Matrix l = cholesky(a);
  Vector x = chol_solve(l, b);
  // one step of refinement keeps the residual at the 1e-9 contract on moderately conditioned input
  x += chol_solve(l, b - a * x);
  return x;
}

Matrix inverse_spd(const Matrix& a) {
  const Matrix l = cholesky(a);
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n);
    e[j] = 1.0;
    inv.set_col(j, chol_solve(l, e));
  }
  // symmetrize against rounding
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = inv(j, i) = v;
    }
  return inv;
}

namespace {

Matrix limit_by_squaring(const Matrix& m) {
  Eigen::MatrixXd p = as_eigen(m);
  for (int j = 0; j < 64; ++j) {
    Eigen::MatrixXd q = p * p;
    const double change = (q - p).cwiseAbs().maxCoeff();
    p = std::move(q);
    if (!p.allFinite()) break;
    if (change <= 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff())) return from_eigen(p);
  }
  throw NumericalFailure("unit_eigen_projector: powers of the matrix do not settle");
}

}  // namespace

Matrix unit_eigen_projector(const Matrix& m, double tol) {
  const std::size_t n = m.rows();
  if (n != m.cols()) throw InvalidInput("unit_eigen_projector: matrix not square");
  std::size_t p = 0;
  for (const auto& l : eigenvalues(m))
    if (std::abs(l - 1.0) <= tol) ++p;
  if (p == 0) return Matrix(n, n);
  if (p == n) return Matrix::identity(n);

  // right null space N and left null space L of (Id - M); projector N (L^T N)^{-1} L^T.
  // Gram eigenproblems instead of an SVD: the divide-and-conquer SVD breaks down on
  // these heavily deflated matrices and the Jacobi one is too slow at n = 512.
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd(as_eigen(m));
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> right(a.transpose() * a), left(a * a.transpose());
  if (right.info() != Eigen::Success || left.info() != Eigen::Success)
    throw NumericalFailure("unit_eigen_projector: eigensolve failed");
  const double top = std::max(1.0, right.eigenvalues()(static_cast<Eigen::Index>(n) - 1));
  if (right.eigenvalues()(pp - 1) > 1e-12 * top || left.eigenvalues()(pp - 1) > 1e-12 * top)
    return limit_by_squaring(m);
  Eigen::MatrixXd nb = right.eigenvectors().leftCols(pp);
  Eigen::MatrixXd lb = left.eigenvectors().leftCols(pp);
  Eigen::MatrixXd core = lb.transpose() * nb;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(core);
  if (!(lu.rcond() >= 1e-6)) return limit_by_squaring(m);
  Eigen::MatrixXd proj = nb * lu.solve(lb.transpose());
  if (!proj.allFinite()) return limit_by_squaring(m);
  return from_eigen(proj);
}

std::vector<double> singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  Eigen::MatrixXd e = as_eigen(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.push_back(svd.singularValues()(i));
  return out;
}

}  // namespace fdr
