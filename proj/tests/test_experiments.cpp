#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fdr/error.hpp"
#include "fdr/experiments.hpp"

using namespace fdr;
namespace fs = std::filesystem;

namespace {

ProblemSpec tiny_lasso(std::uint64_t seed = 0) {
  ProblemSpec s;
  s.m = 40;
  s.n = 60;
  s.subspace_dim = 16;
  s.sparsity = 4;
  s.seed = seed;
  return s;
}

ExperimentOptions short_run(std::size_t max_iter = 500, std::size_t stride = 1) {
  ExperimentOptions o;
  o.run.max_iter = max_iter;
  o.run.record_stride = stride;
  o.write_plots = false;
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdr_test_experiments_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("generate: same seed gives bit-identical data") {
  const auto a = generate(tiny_lasso(3));
  const auto b = generate(tiny_lasso(3));
  CHECK(max_abs_diff(a.k, b.k) == 0.0);
  CHECK(norm_inf(a.f - b.f) == 0.0);
  CHECK(norm_inf(a.x_truth - b.x_truth) == 0.0);
  CHECK(max_abs_diff(a.v.basis(), b.v.basis()) == 0.0);
  const auto c = generate(tiny_lasso(4));
  CHECK(max_abs_diff(a.k, c.k) > 0.0);
}

TEST_CASE("generate: lasso ground truth is s-sparse, +-1 and inside V") {
  ProblemSpec s = tiny_lasso(1);
  s.noise = 0.0;
  const auto inst = generate(s);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < s.n; ++i) {
    const double v = inst.x_truth[i];
    if (v != 0.0) {
      ++nnz;
      CHECK(std::fabs(v) == 1.0);
    }
  }
  CHECK(nnz == s.sparsity);
  CHECK(inst.v.dim() == s.subspace_dim);
  CHECK(inst.v.contains(inst.x_truth, 1e-12));
  CHECK(norm_inf(inst.k * inst.x_truth - inst.f) == 0.0);
  // entries scaled by 1/sqrt(m): mean square about 1/m
  double ss = 0.0;
  for (std::size_t i = 0; i < s.m; ++i)
    for (std::size_t j = 0; j < s.n; ++j) ss += inst.k(i, j) * inst.k(i, j);
  const double mean_sq = ss / static_cast<double>(s.m * s.n);
  CHECK(std::fabs(mean_sq * static_cast<double>(s.m) - 1.0) < 0.1);
}

TEST_CASE("generate: invalid specs") {
  ProblemSpec s = tiny_lasso();
  s.subspace_dim = 3;  // below sparsity 4
  CHECK_THROWS_AS(generate(s), InvalidInput);
  s = tiny_lasso();
  s.subspace_dim = 0;
  CHECK_THROWS_AS(generate(s), InvalidInput);
  s = tiny_lasso();
  s.mu = 0.0;
  CHECK_THROWS_AS(generate(s), InvalidInput);
  ProblemSpec g = ProblemSpec::defaults(Family::GroupTv);
  g.block_size = 7;  // does not divide 256
  CHECK_THROWS_AS(generate(g), InvalidInput);
  g = ProblemSpec::defaults(Family::GroupTv);
  g.block_jumps = 2;
  CHECK_THROWS_AS(generate(g), InvalidInput);
  g = ProblemSpec::defaults(Family::GroupTv);
  g.active_blocks = 33;
  CHECK_THROWS_AS(generate(g), InvalidInput);
}

TEST_CASE("generate: group_tv with one constant active block") {
  ProblemSpec s = ProblemSpec::defaults(Family::GroupTv);
  s.m = 32;
  s.n = 64;
  s.active_blocks = 1;
  s.block_jumps = 0;
  s.seed = 5;
  const auto inst = generate(s);
  const auto group = Regularizer::group_l12_uniform(s.mu1, s.n, s.block_size);
  const auto tv = Regularizer::tv1d(s.mu2, s.n);
  const auto gsig = group.signature(inst.x_truth);
  REQUIRE(gsig.indices.size() == 1);
  const std::size_t b = gsig.indices[0];
  // jumps only at the block edges, none inside
  const auto tsig = tv.signature(inst.x_truth);
  CHECK(!tsig.indices.empty());
  for (std::size_t i : tsig.indices) {
    const bool inside = i >= b * s.block_size && i + 1 < (b + 1) * s.block_size;
    CHECK_FALSE(inside);
  }
  for (std::size_t i = 0; i < s.block_size; ++i) CHECK(std::fabs(inst.x_truth[b * s.block_size + i]) == 1.0);
}

TEST_CASE("generate: group_tv blocks with one jump are piecewise constant +-1") {
  ProblemSpec s = ProblemSpec::defaults(Family::GroupTv);
  s.m = 32;
  s.n = 64;
  s.active_blocks = 3;
  s.seed = 2;
  const auto inst = generate(s);
  std::size_t active = 0;
  for (std::size_t b = 0; b < s.n / s.block_size; ++b) {
    std::size_t changes = 0, nz = 0;
    for (std::size_t i = 0; i < s.block_size; ++i) {
      const double v = inst.x_truth[b * s.block_size + i];
      if (v != 0.0) {
        ++nz;
        CHECK(std::fabs(v) == 1.0);
      }
      if (i > 0 && v != inst.x_truth[b * s.block_size + i - 1]) ++changes;
    }
    CHECK((nz == 0 || nz == s.block_size));
    CHECK(changes <= 1);
    if (nz) ++active;
  }
  CHECK(active == s.active_blocks);
  CHECK(inst.v.is_whole());
}

TEST_CASE("generate: noiseless instance with tiny mu recovers the ground truth") {
  ProblemSpec s = ProblemSpec::defaults(Family::LassoConstrained);
  s.noise = 0.0;
  s.mu = 1e-7;
  s.seed = 1;
  const auto inst = generate(s);
  const auto p = lasso_fdr_problem(inst);
  RunOptions o;
  o.max_iter = 50000;
  o.residual_tol = 1e-14;
  const auto t = fdr_run(p, Schedule::constant(p.smooth.beta_v()), o);
  CHECK(norm_inf(t.final().x - inst.x_truth) <= 1e-4);
}

TEST_CASE("config: parse, defaults and errors") {
  const auto c = parse_config_text(
      "# comment\n"
      "method = gfb\n"
      "m=64\n n = 128 \n"
      "block_size=8\nactive_blocks=2\n"
      "preset=case4   # trailing comment\n"
      "step_base=beta\nlambda=0.9\nmax_iter=300\nstride=3\ntol=1e-9\n"
      "noise=0\nmu1=0.2\nmu2=0.01\nseed=7\nplots=false\ncertify_tol=0.2\n");
  CHECK(c.method == Method::Gfb);
  CHECK(c.spec.family == Family::GroupTv);
  CHECK(c.spec.m == 64);
  CHECK(c.spec.n == 128);
  CHECK(c.spec.active_blocks == 2);
  CHECK(c.preset == "case4");
  CHECK(c.options.lambda == 0.9);
  CHECK(c.options.run.max_iter == 300);
  CHECK(c.options.run.record_stride == 3);
  CHECK(c.options.run.residual_tol == 1e-9);
  CHECK(c.spec.noise == 0.0);
  CHECK(c.spec.mu1 == 0.2);
  CHECK(c.spec.seed == 7);
  CHECK_FALSE(c.options.write_plots);
  CHECK(c.options.certify_tol == 0.2);

  const auto fam = parse_config_text("family=group_tv\n");
  CHECK(fam.method == Method::Tos);
  CHECK(fam.spec.n == 256);
  CHECK(fam.options.certify_tol == 0.15);
  const auto dflt = parse_config_text("");
  CHECK(dflt.method == Method::Fdr);
  CHECK(dflt.spec == ProblemSpec::defaults(Family::LassoConstrained));
  CHECK(dflt.options.certify_tol == 0.10);
  CHECK(default_config(Method::Fb).spec.family == Family::LassoConstrained);
  CHECK(default_config(Method::Tos).spec.family == Family::GroupTv);

  CHECK_THROWS_AS(parse_config_text("colour=red\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("m 40\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("m=-3\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("noise=abc\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("plots=maybe\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("method=tos\nfamily=lasso_constrained\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("method=sgd\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("step_base=gamma\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config_text("sparsity=10\nsubspace_dim=5\n"), InvalidInput);
  CHECK_THROWS_AS(load_config("/nonexistent/dir/cfg.txt"), InvalidInput);
}

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("run_experiment: method and family must match") {
  CHECK_THROWS_AS(run_experiment(tiny_lasso(), Method::Tos, "stationary", short_run()), InvalidInput);
  CHECK_THROWS_AS(run_experiment(ProblemSpec::defaults(Family::GroupTv), Method::Fdr, "stationary", short_run()),
                  InvalidInput);
  CHECK_THROWS_AS(run_experiment(tiny_lasso(), Method::Fdr, "case9", short_run()), InvalidInput);
  CHECK_THROWS_AS(run_experiment(tiny_lasso(), Method::Fdr, "stationary", short_run(500, 0)), InvalidInput);
}

TEST_CASE("run_experiment: outputs exist, CSV is deterministic with the fixed header") {
  const fs::path d1 = scratch("a"), d2 = scratch("b");
  ExperimentOptions o = short_run(500);
  o.write_plots = true;
  o.out_dir = d1;
  const RunReport r1 = run_experiment(tiny_lasso(2), Method::Fdr, "stationary", o);
  o.out_dir = d2;
  const RunReport r2 = run_experiment(tiny_lasso(2), Method::Fdr, "stationary", o);
  REQUIRE(r1.csv_path);
  REQUIRE(r1.json_path);
  REQUIRE(r1.plot_bregman_path);
  REQUIRE(r1.plot_distance_path);
  for (const auto& p : {*r1.csv_path, *r1.json_path, *r1.plot_bregman_path, *r1.plot_distance_path})
    CHECK(fs::exists(p));
  CHECK(slurp(*r1.csv_path) == slurp(*r2.csv_path));
  const auto rows = lines_of(*r1.csv_path);
  REQUIRE(!rows.empty());
  CHECK(rows.front() == kTrajectoryCsvHeader);
  CHECK(rows.size() == r1.trajectory.records.size() + 1);
  CHECK(r1.bregman.has_value());
  CHECK(r1.validation.ok());
  CHECK(r1.dist_z.size() == r1.trajectory.records.size());
  CHECK(slurp(*r1.plot_bregman_path).find("<svg") != std::string::npos);
  const std::string json = slurp(*r1.json_path);
  CHECK(json.find("\"identification\"") != std::string::npos);
  CHECK(json.find("\"validation\"") != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("run_experiment: row count follows the stride") {
  const fs::path d = scratch("stride");
  ExperimentOptions o = short_run(1000, 7);
  o.out_dir = d;
  const RunReport r = run_experiment(tiny_lasso(0), Method::Fb, "stationary", o);
  const auto rows = lines_of(*r.csv_path);
  const std::size_t data_rows = rows.size() - 1;
  if (r.trajectory.stop == StopReason::MaxIterations) {
    CHECK(data_rows == 144);  // ceil(1000 / 7) + 1
  } else {
    CHECK(r.trajectory.final().k == r.trajectory.iterations);
  }
  // every row's k is a multiple of the stride except possibly the last
  for (std::size_t i = 0; i + 1 < r.trajectory.records.size(); ++i) CHECK(r.trajectory.records[i].k % 7 == 0);
  CHECK(r.trajectory.final().k == r.trajectory.iterations);
  fs::remove_all(d);
}

TEST_CASE("run_experiment: stationary FDR at beta_V certifies a rate") {
  ExperimentOptions o = short_run(3000);
  o.step_base = StepBase::BetaV;
  const RunReport r = run_experiment(tiny_lasso(0), Method::Fdr, "stationary", o);
  REQUIRE(r.identification.k.has_value());
  if (r.certificate) {
    CHECK(r.certificate->predicted_rho < 1.0);
    CHECK(r.certificate->observed_factor < 1.0);
  } else {
    CHECK_FALSE(r.certificate_note.empty());
  }
}

TEST_CASE("compare_runs: identical runs, alignment and mismatches") {
  const ExperimentOptions o = short_run(300, 5);
  const RunReport a = run_experiment(tiny_lasso(1), Method::Fdr, "stationary", o);
  const RunReport b = run_experiment(tiny_lasso(1), Method::Fdr, "stationary", o);
  const auto t = compare_runs({a, b});
  REQUIRE(t.dist_z.size() == 2);
  CHECK(t.labels[0] == "fdr:stationary");
  CHECK(t.k.size() == a.trajectory.records.size());
  for (std::size_t row = 0; row < t.k.size(); ++row) {
    CHECK(t.dist_z[0][row] == t.dist_z[1][row]);
    CHECK(t.dist_x[0][row] == t.dist_x[1][row]);
  }
  CHECK(t.summary[0].terminal_dist_z == t.summary[1].terminal_dist_z);

  // different strides: union of rows, NaN where a run has no record
  const RunReport c = run_experiment(tiny_lasso(1), Method::Fdr, "case4", short_run(300, 7));
  const auto u = compare_runs({a, c});
  CHECK(u.k.size() > a.trajectory.records.size());
  std::size_t gaps = 0;
  for (double v : u.dist_z[1]) gaps += std::isnan(v) ? 1 : 0;
  CHECK(gaps > 0);
  const auto lk = last_common_resolved_k(u, {a, c});
  REQUIRE(lk.has_value());
  CHECK(*lk % 35 == 0);  // both strides record it
  CHECK_THROWS_AS(last_common_resolved_k(u, {a}), InvalidInput);

  CHECK_THROWS_AS(compare_runs({a}), InvalidInput);
  const RunReport other = run_experiment(tiny_lasso(2), Method::Fdr, "stationary", o);
  CHECK_THROWS_AS(compare_runs({a, other}), InvalidInput);
}

TEST_CASE("run_audit: unrelaxed only, reports a small violation") {
  ExperimentOptions o = short_run(400);
  o.lambda = 0.8;
  CHECK_THROWS_AS(run_audit(tiny_lasso(0), "stationary", o), InvalidInput);
  o.lambda = 1.0;
  const fs::path d = scratch("audit");
  o.out_dir = d;
  const auto a = run_audit(tiny_lasso(0), "case4", o);
  CHECK(a.audit.max_violation <= 1e-8);
  CHECK(fs::exists(d / "audit.csv"));
  fs::remove_all(d);
}

TEST_CASE("write_instance writes K, f, ground truth and V") {
  const fs::path d = scratch("inst");
  const auto inst = generate(tiny_lasso(0));
  write_instance(inst, d);
  CHECK(lines_of(d / "K.csv").size() == 40);
  CHECK(lines_of(d / "f.csv").size() == 40);
  CHECK(lines_of(d / "x_truth.csv").size() == 60);
  CHECK(lines_of(d / "V_basis.csv").size() == 60);
  fs::remove_all(d);
}
