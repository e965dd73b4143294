#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fdr/functions.hpp"
#include "fdr/regularizers.hpp"
#include "fdr/schedule.hpp"

namespace fdr {

// min F(P_V x) + R(x) + indicator of V
struct FdrProblem {
  RestrictedSmooth smooth;
  Regularizer r;
  const Subspace& v() const { return smooth.subspace(); }
};

// min F(x) + R(x)
struct FbProblem {
  SmoothQuadratic smooth;
  Regularizer r;
  double beta;  // 1 / ||K^T K||
};
FbProblem make_fb_problem(SmoothQuadratic f, Regularizer r);

// min F(x) + sum_i R_i(x), one shadow variable per R_i
struct GfbProblem {
  SmoothQuadratic smooth;
  std::vector<Regularizer> rs;
  std::vector<double> weights;
  double beta;
};
GfbProblem make_gfb_problem(SmoothQuadratic f, std::vector<Regularizer> rs, std::vector<double> weights = {});

// min F(x) + R(x) + J(x)
struct TosProblem {
  SmoothQuadratic smooth;
  Regularizer r;
  Regularizer j;
  double beta;
};
TosProblem make_tos_problem(SmoothQuadratic f, Regularizer r, Regularizer j);

struct SolverState {
  Vector z, x, u;
  std::size_t k = 0;
};

struct RunOptions {
  std::size_t max_iter = 1000;
  double residual_tol = 0.0;  // stop once ||z_k - z_{k-1}|| <= residual_tol
  std::size_t record_stride = 1;
  std::uint64_t seed = 0;
  std::optional<Vector> z0;  // zero vector when absent
};

enum class StopReason { ResidualTolerance, MaxIterations };
const char* stop_reason_name(StopReason s);

struct Record {
  std::size_t k;
  double gamma, lambda;  // parameters of the transition that produced this record
  Vector z, x, u;
  double residual;  // ||z_k - z_{k-1}||, 0 for k = 0
};

// Records at k = 0, every multiple of the stride, and the terminal iterate.
// GFB records hold the concatenated shadow variables in z and u, and the
// weighted average in x.
struct Trajectory {
  std::vector<Record> records;
  std::size_t stride = 1;
  StopReason stop = StopReason::MaxIterations;
  std::size_t iterations = 0;
  const Record& final() const { return records.back(); }
};

// u+ = prox_{gamma R}(2x - z - gamma grad G(x)); z+ = z + lambda (u+ - x); x+ = P_V z+
SolverState fdr_step(const SolverState& s, double gamma, double lambda, const FdrProblem& p);
Trajectory fdr_run(const FdrProblem& p, const Schedule& s, const RunOptions& opts);

// x+ = x + lambda (prox_{gamma R}(x - gamma grad F(x)) - x); z mirrors x
Trajectory fb_run(const FbProblem& p, const Schedule& s, const RunOptions& opts);

// constant step required; relaxation may vary
Trajectory gfb_run(const GfbProblem& p, const Schedule& s, const RunOptions& opts);
Trajectory tos_run(const TosProblem& p, const Schedule& s, const RunOptions& opts);

// 1/2 (Id + R_{gamma R} R_V)(Id - gamma grad G), evaluated through the reflections
Vector apply_fixed_point_fdr(double gamma, const FdrProblem& p, const Vector& z);
// z - prox_{gamma J}(z) + prox_{gamma R}(2 prox_{gamma J}(z) - z - gamma grad F(prox_{gamma J}(z)))
Vector apply_fixed_point_tos(double gamma, const TosProblem& p, const Vector& z);

// Product-space form of an equal-weight GFB problem: FDR on R^{mn} with
// F~(x_1..x_m) = F(mean x_i), R~ = sum R_i(x_i), V = {x_1 = ... = x_m}.
// FDR with step m*gamma reproduces GFB with step gamma.
FdrProblem gfb_as_fdr(const GfbProblem& p);
Vector replicate(const Vector& x, std::size_t copies);

}  // namespace fdr
