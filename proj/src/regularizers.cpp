#include "fdr/regularizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/simd.hpp"

namespace fdr {

struct Regularizer::Data {
  RegularizerKind kind;
  std::size_t n = 0;
  double mu = 0.0;
  std::vector<std::vector<std::size_t>> blocks;
  std::size_t rows = 0, cols = 0;
  Subspace v;
  std::vector<Regularizer> parts;
  std::vector<std::size_t> offsets;
};

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOnSupportTol = 1e-6;

void check_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidInput("regularizer weight must be positive and finite");
}

double block_norm(const Vector& x, const std::vector<std::size_t>& b) {
  double s = 0.0;
  for (std::size_t i : b) s += x[i] * x[i];
  return std::sqrt(s);
}

// place a part's matrix on the diagonal of a larger one
void put_block(Matrix& dst, const Matrix& src, std::size_t off) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst(off + i, off + j) = src(i, j);
}

void require_kind(const ManifoldSignature& sig, RegularizerKind k) {
  if (sig.kind != k) throw InvalidInput("signature kind does not match regularizer");
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

const char* kind_name(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::L1: return "l1";
    case RegularizerKind::GroupL12: return "group_l12";
    case RegularizerKind::LInf: return "linf";
    case RegularizerKind::TV1D: return "tv1d";
    case RegularizerKind::Nuclear: return "nuclear";
    case RegularizerKind::SubspaceIndicator: return "subspace_indicator";
    case RegularizerKind::Separable: return "separable";
  }
  return "?";
}

std::size_t ManifoldSignature::size() const {
  if (kind == RegularizerKind::Nuclear) return rank;
  if (kind == RegularizerKind::Separable) {
    std::size_t s = 0;
    for (const auto& p : parts) s += p.size();
    return s;
  }
  return indices.size();
}

std::string ManifoldSignature::to_string() const {
  std::ostringstream os;
  os << kind_name(kind);
  if (kind == RegularizerKind::Nuclear) {
    os << " rank " << rank;
  } else if (kind == RegularizerKind::Separable) {
    os << " [";
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? "; " : "") << parts[i].to_string();
    os << "]";
  } else {
    os << " {";
    for (std::size_t i = 0; i < indices.size(); ++i) {
      os << (i ? "," : "") << indices[i];
      if (!signs.empty()) os << (signs[i] > 0 ? "+" : "-");
    }
    os << "}";
  }
  return os.str();
}

double default_signature_tol(const Vector& x) { return 1e-10 * (1.0 + norm_inf(x)); }

// ---- construction

Regularizer Regularizer::l1(double mu, std::size_t n) {
  check_mu(mu);
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::L1;
  d->n = n;
  d->mu = mu;
  return Regularizer(d);
}

Regularizer Regularizer::group_l12(double mu, std::vector<std::vector<std::size_t>> blocks) {
  check_mu(mu);
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (b.empty()) throw InvalidInput("group_l12: empty block");
    n += b.size();
  }
  std::vector<char> seen(n, 0);
  for (const auto& b : blocks)
    for (std::size_t i : b) {
      if (i >= n) throw InvalidInput("group_l12: blocks must cover 0..n-1 exactly");
      if (seen[i]) throw InvalidInput("group_l12: overlapping blocks");
      seen[i] = 1;
    }
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::GroupL12;
  d->n = n;
  d->mu = mu;
  d->blocks = std::move(blocks);
  return Regularizer(d);
}

Regularizer Regularizer::group_l12_uniform(double mu, std::size_t n, std::size_t block_size) {
  if (block_size == 0 || n % block_size != 0) throw InvalidInput("group_l12: block size must divide n");
  std::vector<std::vector<std::size_t>> blocks(n / block_size);
  for (std::size_t i = 0; i < n; ++i) blocks[i / block_size].push_back(i);
  return group_l12(mu, std::move(blocks));
}

Regularizer Regularizer::linf(double mu, std::size_t n) {
  check_mu(mu);
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::LInf;
  d->n = n;
  d->mu = mu;
  return Regularizer(d);
}

Regularizer Regularizer::tv1d(double mu, std::size_t n) {
  check_mu(mu);
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::TV1D;
  d->n = n;
  d->mu = mu;
  return Regularizer(d);
}

Regularizer Regularizer::nuclear(double mu, std::size_t rows, std::size_t cols) {
  check_mu(mu);
  if (rows == 0 || cols == 0) throw InvalidInput("nuclear: empty shape");
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::Nuclear;
  d->n = rows * cols;
  d->mu = mu;
  d->rows = rows;
  d->cols = cols;
  return Regularizer(d);
}

Regularizer Regularizer::indicator(Subspace v) {
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::SubspaceIndicator;
  d->n = v.ambient_dim();
  d->v = std::move(v);
  return Regularizer(d);
}

Regularizer Regularizer::zero(std::size_t n) { return indicator(Subspace::whole(n)); }

Regularizer Regularizer::separable(std::vector<Regularizer> parts) {
  if (parts.empty()) throw InvalidInput("separable: no parts");
  auto d = std::make_shared<Data>();
  d->kind = RegularizerKind::Separable;
  for (const auto& p : parts) {
    d->offsets.push_back(d->n);
    d->n += p.dim();
  }
  d->parts = std::move(parts);
  return Regularizer(d);
}

RegularizerKind Regularizer::kind() const { return d_->kind; }
std::size_t Regularizer::dim() const { return d_->n; }
double Regularizer::mu() const { return d_->mu; }
const std::vector<std::vector<std::size_t>>& Regularizer::blocks() const { return d_->blocks; }
const Subspace& Regularizer::subspace() const { return d_->v; }
const std::vector<Regularizer>& Regularizer::parts() const { return d_->parts; }
std::size_t Regularizer::matrix_rows() const { return d_->rows; }
std::size_t Regularizer::matrix_cols() const { return d_->cols; }

bool Regularizer::polyhedral() const {
  switch (d_->kind) {
    case RegularizerKind::L1:
    case RegularizerKind::LInf:
    case RegularizerKind::TV1D:
    case RegularizerKind::SubspaceIndicator: return true;
    case RegularizerKind::Separable:
      return std::all_of(d_->parts.begin(), d_->parts.end(), [](const Regularizer& r) { return r.polyhedral(); });
    default: return false;
  }
}

// ---- evaluation

double Regularizer::eval(const Vector& x) const {
  require_dim(x, d_->n, "Regularizer::eval");
  const double mu = d_->mu;
  switch (d_->kind) {
    case RegularizerKind::L1: return mu * norm1(x);
    case RegularizerKind::GroupL12: {
      double s = 0.0;
      for (const auto& b : d_->blocks) s += block_norm(x, b);
      return mu * s;
    }
    case RegularizerKind::LInf: return mu * norm_inf(x);
    case RegularizerKind::TV1D: {
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::fabs(x[i + 1] - x[i]);
      return mu * s;
    }
    case RegularizerKind::Nuclear: {
      double s = 0.0;
      Matrix m(d_->rows, d_->cols);
      std::copy(x.begin(), x.end(), m.data());
      for (double sv : singular_values(m)) s += sv;
      return mu * s;
    }
    case RegularizerKind::SubspaceIndicator:
      return norm(d_->v.project_complement(x)) <= 1e-9 * (1.0 + norm(x)) ? 0.0 : kInf;
    case RegularizerKind::Separable: {
      double s = 0.0;
      for (std::size_t p = 0; p < d_->parts.size(); ++p)
        s += d_->parts[p].eval(x.segment(d_->offsets[p], d_->parts[p].dim()));
      return s;
    }
  }
  return 0.0;
}

Vector Regularizer::prox(double gamma, const Vector& x) const {
  if (!(gamma > 0.0)) throw InvalidInput("prox: step must be positive");
  require_dim(x, d_->n, "Regularizer::prox");
  const double t = gamma * d_->mu;
  switch (d_->kind) {
    case RegularizerKind::L1: {
      Vector out(x.size());
      simd::active().soft_threshold(x.data(), t, out.data(), x.size());
      return out;
    }
    case RegularizerKind::GroupL12: {
      Vector out(x.size());
      for (const auto& b : d_->blocks) {
        const double nb = block_norm(x, b);
        const double s = nb > t ? 1.0 - t / nb : 0.0;
        for (std::size_t i : b) out[i] = s * x[i];
      }
      return out;
    }
    case RegularizerKind::LInf: return x - prox::project_l1_ball(x, t);
    case RegularizerKind::TV1D: return prox::tv1d(x, t);
    case RegularizerKind::Nuclear: {
      Eigen::Map<const EMat> m(x.data(), static_cast<Eigen::Index>(d_->rows), static_cast<Eigen::Index>(d_->cols));
      Eigen::MatrixXd e = m;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd s = (svd.singularValues().array() - t).max(0.0).matrix();
      EMat r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
      return Vector(std::vector<double>(r.data(), r.data() + r.size()));
    }
    case RegularizerKind::SubspaceIndicator: return d_->v.project(x);
    case RegularizerKind::Separable: {
      Vector out(x.size());
      for (std::size_t p = 0; p < d_->parts.size(); ++p) {
        const auto& part = d_->parts[p];
        out.set_segment(d_->offsets[p], part.prox(gamma, x.segment(d_->offsets[p], part.dim())));
      }
      return out;
    }
  }
  return x;
}

// ---- manifold machinery

ManifoldSignature Regularizer::signature(const Vector& x) const { return signature(x, default_signature_tol(x)); }

ManifoldSignature Regularizer::signature(const Vector& x, double tol) const {
  if (!(tol >= 0.0)) throw InvalidInput("signature: negative tolerance");
  require_dim(x, d_->n, "Regularizer::signature");
  ManifoldSignature sig;
  sig.kind = d_->kind;
  switch (d_->kind) {
    case RegularizerKind::L1:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::fabs(x[i]) > tol) sig.indices.push_back(i);
      break;
    case RegularizerKind::GroupL12:
      for (std::size_t b = 0; b < d_->blocks.size(); ++b)
        if (block_norm(x, d_->blocks[b]) > tol) sig.indices.push_back(b);
      break;
    case RegularizerKind::LInf: {
      const double m = norm_inf(x);
      if (m <= tol) break;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::fabs(x[i]) >= m - tol) {
          sig.indices.push_back(i);
          sig.signs.push_back(x[i] > 0 ? 1 : -1);
        }
      break;
    }
    case RegularizerKind::TV1D:
      for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (std::fabs(x[i + 1] - x[i]) > tol) sig.indices.push_back(i);
      break;
    case RegularizerKind::Nuclear: {
      Matrix m(d_->rows, d_->cols);
      std::copy(x.begin(), x.end(), m.data());
      for (double s : singular_values(m))
        if (s > tol) ++sig.rank;
      break;
    }
    case RegularizerKind::SubspaceIndicator: break;
    case RegularizerKind::Separable:
      for (std::size_t p = 0; p < d_->parts.size(); ++p)
        sig.parts.push_back(d_->parts[p].signature(x.segment(d_->offsets[p], d_->parts[p].dim()), tol));
      break;
  }
  return sig;
}

TangentProjector Regularizer::tangent_projector(const ManifoldSignature& sig) const {
  require_kind(sig, d_->kind);
  const std::size_t n = d_->n;
  Matrix p(n, n);
  switch (d_->kind) {
    case RegularizerKind::L1:
      for (std::size_t i : sig.indices) {
        if (i >= n) throw InvalidInput("tangent_projector: index out of range");
        p(i, i) = 1.0;
      }
      break;
    case RegularizerKind::GroupL12:
      for (std::size_t b : sig.indices) {
        if (b >= d_->blocks.size()) throw InvalidInput("tangent_projector: block out of range");
        for (std::size_t i : d_->blocks[b]) p(i, i) = 1.0;
      }
      break;
    case RegularizerKind::LInf: {
      // zero vector: the subdifferential is full-dimensional, tangent space {0}
      if (sig.indices.empty()) break;
      if (sig.signs.size() != sig.indices.size()) throw InvalidInput("tangent_projector: missing signs");
      std::vector<char> on(n, 0);
      for (std::size_t i : sig.indices) {
        if (i >= n) throw InvalidInput("tangent_projector: index out of range");
        on[i] = 1;
      }
      for (std::size_t i = 0; i < n; ++i)
        if (!on[i]) p(i, i) = 1.0;
      const double c = 1.0 / static_cast<double>(sig.indices.size());
      for (std::size_t a = 0; a < sig.indices.size(); ++a)
        for (std::size_t b = 0; b < sig.indices.size(); ++b)
          p(sig.indices[a], sig.indices[b]) = c * sig.signs[a] * sig.signs[b];
      break;
    }
    case RegularizerKind::TV1D: {
      // null space of the inactive difference rows: vectors constant between jumps
      std::size_t start = 0;
      std::vector<std::size_t> cuts = sig.indices;
      cuts.push_back(n - 1);
      for (std::size_t c : cuts) {
        if (c >= n) throw InvalidInput("tangent_projector: jump out of range");
        const std::size_t end = c + 1;
        const double w = 1.0 / static_cast<double>(end - start);
        for (std::size_t i = start; i < end; ++i)
          for (std::size_t j = start; j < end; ++j) p(i, j) = w;
        start = end;
      }
      break;
    }
    case RegularizerKind::Nuclear:
      throw UnsupportedFeature("tangent_projector: fixed-rank manifold is curved; not supported for the nuclear norm");
    case RegularizerKind::SubspaceIndicator: p = d_->v.projector(); break;
    case RegularizerKind::Separable:
      if (sig.parts.size() != d_->parts.size()) throw InvalidInput("tangent_projector: part count mismatch");
      for (std::size_t q = 0; q < d_->parts.size(); ++q)
        put_block(p, d_->parts[q].tangent_projector(sig.parts[q]).matrix, d_->offsets[q]);
      break;
  }
  return {p};
}

Matrix Regularizer::riemannian_hessian(const Vector& x, const ManifoldSignature& sig) const {
  require_kind(sig, d_->kind);
  require_dim(x, d_->n, "riemannian_hessian");
  const std::size_t n = d_->n;
  Matrix h(n, n);
  switch (d_->kind) {
    case RegularizerKind::GroupL12:
      for (std::size_t b : sig.indices) {
        const auto& blk = d_->blocks.at(b);
        const double nb = block_norm(x, blk);
        if (!(nb > 0.0)) throw InvalidInput("riemannian_hessian: active block with zero norm");
        const double c = d_->mu / nb;
        for (std::size_t a = 0; a < blk.size(); ++a)
          for (std::size_t e = 0; e < blk.size(); ++e) {
            const double xa = x[blk[a]] / nb, xe = x[blk[e]] / nb;
            h(blk[a], blk[e]) = c * ((a == e ? 1.0 : 0.0) - xa * xe);
          }
      }
      break;
    case RegularizerKind::Nuclear:
      throw UnsupportedFeature("riemannian_hessian: curved manifold; not supported for the nuclear norm");
    case RegularizerKind::Separable:
      if (sig.parts.size() != d_->parts.size()) throw InvalidInput("riemannian_hessian: part count mismatch");
      for (std::size_t q = 0; q < d_->parts.size(); ++q)
        put_block(h, d_->parts[q].riemannian_hessian(x.segment(d_->offsets[q], d_->parts[q].dim()), sig.parts[q]),
                  d_->offsets[q]);
      break;
    default: break;  // polyhedral: zero
  }
  return h;
}

double Regularizer::nondegeneracy_margin(const Vector& x_star, const Vector& g) const {
  require_dim(x_star, d_->n, "nondegeneracy_margin");
  require_dim(g, d_->n, "nondegeneracy_margin");
  const double mu = d_->mu;
  const ManifoldSignature sig = signature(x_star);
  switch (d_->kind) {
    case RegularizerKind::L1: {
      std::vector<char> on(d_->n, 0);
      for (std::size_t i : sig.indices) {
        on[i] = 1;
        if (std::fabs(g[i] - mu * (x_star[i] > 0 ? 1.0 : -1.0)) > kOnSupportTol) return -kInf;
      }
      double m = kInf;
      for (std::size_t i = 0; i < d_->n; ++i)
        if (!on[i]) m = std::min(m, mu - std::fabs(g[i]));
      return m;
    }
    case RegularizerKind::GroupL12: {
      std::vector<char> on(d_->blocks.size(), 0);
      for (std::size_t b : sig.indices) {
        on[b] = 1;
        const auto& blk = d_->blocks[b];
        const double nb = block_norm(x_star, blk);
        double dev = 0.0;
        for (std::size_t i : blk) dev += std::pow(g[i] - mu * x_star[i] / nb, 2);
        if (std::sqrt(dev) > kOnSupportTol) return -kInf;
      }
      double m = kInf;
      for (std::size_t b = 0; b < d_->blocks.size(); ++b)
        if (!on[b]) m = std::min(m, mu - block_norm(g, d_->blocks[b]));
      return m;
    }
    case RegularizerKind::LInf: {
      if (sig.indices.empty()) return mu - norm1(g);
      std::vector<char> on(d_->n, 0);
      double total = 0.0, m = kInf;
      for (std::size_t a = 0; a < sig.indices.size(); ++a) {
        const std::size_t i = sig.indices[a];
        on[i] = 1;
        const double w = g[i] * sig.signs[a];
        total += w;
        m = std::min(m, w);
      }
      for (std::size_t i = 0; i < d_->n; ++i)
        if (!on[i] && std::fabs(g[i]) > kOnSupportTol) return -kInf;
      if (std::fabs(total - mu) > kOnSupportTol) return -kInf;
      return m;
    }
    case RegularizerKind::TV1D: {
      // g = D^T eta with eta_j = -(g_0 + ... + g_j); requires sum g = 0
      const std::size_t n = d_->n;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += g[i];
      if (std::fabs(sum) > kOnSupportTol) return -kInf;
      std::vector<char> jump(n > 0 ? n - 1 : 0, 0);
      for (std::size_t i : sig.indices) jump[i] = 1;
      double eta = 0.0, m = kInf;
      for (std::size_t j = 0; j + 1 < n; ++j) {
        eta -= g[j];
        if (jump[j]) {
          const double s = x_star[j + 1] - x_star[j] > 0 ? 1.0 : -1.0;
          if (std::fabs(eta - mu * s) > kOnSupportTol) return -kInf;
        } else {
          m = std::min(m, mu - std::fabs(eta));
        }
      }
      return m;
    }
    case RegularizerKind::Nuclear:
      throw UnsupportedFeature("nondegeneracy_margin: not supported for the nuclear norm");
    case RegularizerKind::SubspaceIndicator:
      if (norm(d_->v.project_complement(x_star)) > 1e-9 * (1.0 + norm(x_star)))
        throw InvalidInput("nondegeneracy_margin: point not in the subspace");
      // the subdifferential is the whole orthogonal complement
      return norm(d_->v.project(g)) <= kOnSupportTol * (1.0 + norm(g)) ? kInf : -kInf;
    case RegularizerKind::Separable: {
      double m = kInf;
      for (std::size_t p = 0; p < d_->parts.size(); ++p) {
        const auto& part = d_->parts[p];
        m = std::min(m, part.nondegeneracy_margin(x_star.segment(d_->offsets[p], part.dim()),
                                                  g.segment(d_->offsets[p], part.dim())));
      }
      return m;
    }
  }
  return kInf;
}

}  // namespace fdr
