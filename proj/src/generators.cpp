#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/experiments.hpp"

namespace fdr {

const char* family_name(Family f) { return f == Family::LassoConstrained ? "lasso_constrained" : "group_tv"; }

const char* method_name(Method m) {
  switch (m) {
    case Method::Fdr: return "fdr";
    case Method::Fb: return "fb";
    case Method::Gfb: return "gfb";
    case Method::Tos: return "tos";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "lasso_constrained") return Family::LassoConstrained;
  if (s == "group_tv") return Family::GroupTv;
  throw InvalidInput("unknown family '" + s + "' (expected lasso_constrained or group_tv)");
}

Method parse_method(const std::string& s) {
  if (s == "fdr") return Method::Fdr;
  if (s == "fb") return Method::Fb;
  if (s == "gfb") return Method::Gfb;
  if (s == "tos") return Method::Tos;
  throw InvalidInput("unknown method '" + s + "' (expected fdr, fb, gfb or tos)");
}

StepBase parse_step_base(const std::string& s) {
  if (s == "beta") return StepBase::Beta;
  if (s == "beta_v") return StepBase::BetaV;
  throw InvalidInput("unknown step_base '" + s + "' (expected beta or beta_v)");
}

ProblemSpec ProblemSpec::defaults(Family f) {
  ProblemSpec s;
  s.family = f;
  if (f == Family::GroupTv) {
    s.m = 128;
    s.n = 256;
  }
  return s;
}

void ProblemSpec::validate() const {
  if (m == 0 || n == 0) throw InvalidInput("problem dimensions must be positive");
  if (!(noise >= 0.0)) throw InvalidInput("noise must be nonnegative");
  if (family == Family::LassoConstrained) {
    if (!(mu > 0.0)) throw InvalidInput("mu must be positive");
    if (sparsity > n) throw InvalidInput("sparsity exceeds n");
    if (subspace_dim == 0 || subspace_dim > n) throw InvalidInput("subspace_dim must lie in 1..n");
    if (subspace_dim < sparsity) throw InvalidInput("infeasible spec: subspace_dim < sparsity");
  } else {
    if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw InvalidInput("mu1 and mu2 must be positive");
    if (block_size == 0 || n % block_size != 0) throw InvalidInput("block_size must divide n");
    if (active_blocks > n / block_size) throw InvalidInput("more active blocks than blocks");
    if (block_jumps > 1) throw InvalidInput("block_jumps must be 0 or 1");
    if (block_jumps == 1 && block_size < 2) throw InvalidInput("a jump needs block_size >= 2");
  }
}

namespace {

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double random_sign(std::mt19937_64& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

}  // namespace

ProblemInstance generate(const ProblemSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProblemInstance inst;
  inst.spec = spec;
  const std::size_t m = spec.m, n = spec.n;

  inst.k = Matrix(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) inst.k(i, j) = normal(rng) * scale;

  inst.x_truth = Vector(n);
  std::vector<std::size_t> support;
  if (spec.family == Family::LassoConstrained) {
    support = sample_without_replacement(rng, n, spec.sparsity);
    for (std::size_t i : support) inst.x_truth[i] = random_sign(rng);
  } else {
    const std::size_t bs = spec.block_size;
    for (std::size_t b : sample_without_replacement(rng, n / bs, spec.active_blocks)) {
      const double v1 = random_sign(rng);
      std::size_t cut = bs;
      double v2 = v1;
      if (spec.block_jumps == 1) {
        cut = std::uniform_int_distribution<std::size_t>(1, bs - 1)(rng);
        v2 = random_sign(rng);
      }
      for (std::size_t i = 0; i < bs; ++i) inst.x_truth[b * bs + i] = i < cut ? v1 : v2;
    }
  }

  inst.f = inst.k * inst.x_truth;
  for (std::size_t i = 0; i < m; ++i) inst.f[i] += spec.noise * normal(rng);

  if (spec.family == Family::LassoConstrained) {
    // support coordinates first so that x_truth lies in V, then random directions
    Matrix span(n, spec.subspace_dim);
    for (std::size_t j = 0; j < support.size(); ++j) span(support[j], j) = 1.0;
    for (std::size_t j = support.size(); j < spec.subspace_dim; ++j)
      for (std::size_t i = 0; i < n; ++i) span(i, j) = normal(rng);
    inst.v = Subspace::span(span);
    if (inst.v.dim() != spec.subspace_dim) throw NumericalFailure("generate: random subspace lost rank");
  } else {
    inst.v = Subspace::whole(n);
  }
  return inst;
}

FdrProblem lasso_fdr_problem(const ProblemInstance& inst) {
  if (inst.spec.family != Family::LassoConstrained) throw InvalidInput("fdr runs on lasso_constrained instances");
  return {RestrictedSmooth(SmoothQuadratic(inst.k, inst.f), inst.v), Regularizer::l1(inst.spec.mu, inst.spec.n)};
}

FbProblem lasso_fb_problem(const ProblemInstance& inst) {
  if (inst.spec.family != Family::LassoConstrained) throw InvalidInput("fb runs on lasso_constrained instances");
  return make_fb_problem(SmoothQuadratic(inst.k, inst.f), Regularizer::l1(inst.spec.mu, inst.spec.n));
}

GfbProblem group_tv_gfb_problem(const ProblemInstance& inst) {
  if (inst.spec.family != Family::GroupTv) throw InvalidInput("gfb runs on group_tv instances");
  const auto& s = inst.spec;
  return make_gfb_problem(SmoothQuadratic(inst.k, inst.f),
                          {Regularizer::group_l12_uniform(s.mu1, s.n, s.block_size), Regularizer::tv1d(s.mu2, s.n)});
}

TosProblem group_tv_tos_problem(const ProblemInstance& inst) {
  if (inst.spec.family != Family::GroupTv) throw InvalidInput("tos runs on group_tv instances");
  const auto& s = inst.spec;
  return make_tos_problem(SmoothQuadratic(inst.k, inst.f), Regularizer::group_l12_uniform(s.mu1, s.n, s.block_size),
                          Regularizer::tv1d(s.mu2, s.n));
}

// ---- configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidInput("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InvalidInput("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: '" + key + "' expects true or false");
}

Family family_of(Method m) { return (m == Method::Gfb || m == Method::Tos) ? Family::GroupTv : Family::LassoConstrained; }

}  // namespace

ExperimentConfig default_config(Method m) {
  ExperimentConfig c;
  c.method = m;
  c.spec = ProblemSpec::defaults(family_of(m));
  c.options.certify_tol = family_of(m) == Family::GroupTv ? 0.15 : 0.10;
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key=value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  std::optional<Method> method;
  std::optional<Family> family;
  for (const auto& [k, v] : kv) {
    if (k == "method") method = parse_method(v);
    if (k == "family") family = parse_family(v);
  }
  ExperimentConfig c = default_config(method.value_or(family == Family::GroupTv ? Method::Tos : Method::Fdr));
  if (family && *family != c.spec.family) {
    if (method) throw InvalidInput("config: method " + std::string(method_name(*method)) + " does not run on " + family_name(*family));
    c.spec = ProblemSpec::defaults(*family);
  }

  for (const auto& [k, v] : kv) {
    auto& s = c.spec;
    auto& o = c.options;
    if (k == "method" || k == "family") continue;
    else if (k == "m") s.m = to_uint(k, v);
    else if (k == "n") s.n = to_uint(k, v);
    else if (k == "sparsity") s.sparsity = to_uint(k, v);
    else if (k == "subspace_dim") s.subspace_dim = to_uint(k, v);
    else if (k == "block_size") s.block_size = to_uint(k, v);
    else if (k == "active_blocks") s.active_blocks = to_uint(k, v);
    else if (k == "block_jumps") s.block_jumps = to_uint(k, v);
    else if (k == "noise") s.noise = to_double(k, v);
    else if (k == "mu") s.mu = to_double(k, v);
    else if (k == "mu1") s.mu1 = to_double(k, v);
    else if (k == "mu2") s.mu2 = to_double(k, v);
    else if (k == "seed") s.seed = to_uint(k, v);
    else if (k == "preset") c.preset = v;
    else if (k == "step_base") o.step_base = parse_step_base(v);
    else if (k == "lambda") o.lambda = to_double(k, v);
    else if (k == "max_iter") o.run.max_iter = to_uint(k, v);
    else if (k == "tol") o.run.residual_tol = to_double(k, v);
    else if (k == "stride") o.run.record_stride = to_uint(k, v);
    else if (k == "reference_factor") o.reference_factor = to_uint(k, v);
    else if (k == "reference_tol") o.reference_tol = to_double(k, v);
    else if (k == "certify_tol") o.certify_tol = to_double(k, v);
    else if (k == "plots") o.write_plots = to_bool(k, v);
    else throw InvalidInput("config: unknown key '" + k + "'");
  }
  c.spec.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace fdr
