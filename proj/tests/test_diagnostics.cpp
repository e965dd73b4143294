#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fdr/diagnostics.hpp"
#include "fdr/error.hpp"
#include "fdr/experiments.hpp"
#include "oracles.hpp"

using namespace fdr;
using doctest::Approx;

namespace {

FdrProblem fdr_problem(SmoothQuadratic f, Regularizer r, Subspace v) {
  return FdrProblem{RestrictedSmooth(std::move(f), std::move(v)), std::move(r)};
}

ProblemInstance lasso(std::uint64_t seed) {
  ProblemSpec s;
  s.m = 40;
  s.n = 60;
  s.subspace_dim = 16;
  s.sparsity = 4;
  s.seed = seed;
  return generate(s);
}

Trajectory converged(const FdrProblem& p, double gamma, std::size_t iters = 100000) {
  RunOptions o;
  o.max_iter = iters;
  o.residual_tol = 1e-14;
  return fdr_run(p, Schedule::constant(gamma), o);
}

ManifoldSignature l1_sig(std::vector<std::size_t> idx) {
  ManifoldSignature s;
  s.kind = RegularizerKind::L1;
  s.indices = std::move(idx);
  return s;
}

}  // namespace

TEST_CASE("make_anchor examples") {
  SUBCASE("1-D soft threshold: x* = 1, v* = 0") {
    const auto p = fdr_problem(SmoothQuadratic(Matrix::identity(1), Vector{2.0}), Regularizer::l1(1.0, 1),
                               Subspace::whole(1));
    const Anchor a = make_anchor(converged(p, 1.0), 1.0, p.v());
    CHECK(a.x_star[0] == Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(a.v_star[0]) <= 1e-12);
    // fixed-point equation: x* = prox(x* - grad F(x*))
    CHECK(p.r.prox(1.0, a.x_star - p.smooth.gradient(a.x_star))[0] == Approx(a.x_star[0]).epsilon(1e-12));
  }
  SUBCASE("R = 0, V a plane in R^3: v* orthogonal to V and x* minimizes F on V") {
    std::mt19937_64 rng(5);
    const Matrix k = oracle::random_matrix(rng, 5, 3);
    const Vector f = oracle::random_vector(rng, 5);
    const Matrix span = oracle::random_matrix(rng, 3, 2);
    const auto p = fdr_problem(SmoothQuadratic(k, f), Regularizer::zero(3), Subspace::span(span));
    const double g = p.smooth.beta_v();
    const Anchor a = make_anchor(converged(p, g), g, p.v());
    CHECK(norm(p.v().project(a.v_star)) <= 1e-10);
    // minimizer over V from the normal equations in the coordinates of the spanning set
    const Vector coef = oracle::normal_equations(k * span, f);
    CHECK(distance(a.x_star, span * coef) <= 1e-8);
  }
  SUBCASE("V whole: v* = 0") {
    const auto inst = lasso(1);
    const auto fb = lasso_fb_problem(inst);
    const auto p = fdr_problem(fb.smooth, fb.r, Subspace::whole(inst.spec.n));
    const Anchor a = make_anchor(converged(p, fb.beta), fb.beta, p.v());
    CHECK(norm(a.v_star) <= 1e-12);
  }
  SUBCASE("unconverged reference is rejected") {
    const auto inst = lasso(2);
    const auto p = lasso_fdr_problem(inst);
    RunOptions o;
    o.max_iter = 20;
    const auto t = fdr_run(p, Schedule::constant(p.smooth.beta_v()), o);
    CHECK_THROWS_AS(make_anchor(t, p.smooth.beta_v(), p.v()), InvalidInput);
  }
}

TEST_CASE("bregman examples") {
  const auto p = fdr_problem(SmoothQuadratic(Matrix::identity(1), Vector{0.0}), Regularizer::zero(1),
                             Subspace::whole(1));
  Anchor a;
  a.z_star = a.x_star = a.v_star = Vector{0.0};
  a.gamma = 1.0;
  CHECK(bregman(a, p, Vector{2.0}) == 2.0);
  CHECK(bregman(a, p, a.x_star) == 0.0);

  const auto inst = lasso(3);
  const auto lp = lasso_fdr_problem(inst);
  const double g = lp.smooth.beta_v();
  const Anchor la = make_anchor(converged(lp, g), g, lp.v());
  CHECK(std::fabs(bregman(la, lp, la.x_star)) <= 1e-12);

  // V whole: plain objective gap
  const auto fb = lasso_fb_problem(inst);
  const auto wp = fdr_problem(fb.smooth, fb.r, Subspace::whole(inst.spec.n));
  const Anchor wa = make_anchor(converged(wp, fb.beta), fb.beta, wp.v());
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Vector y = oracle::random_vector(rng, inst.spec.n);
    const double gap = fb.smooth.value(y) + fb.r.eval(y) - fb.smooth.value(wa.x_star) - fb.r.eval(wa.x_star);
    CHECK(bregman(wa, wp, y) == Approx(gap).epsilon(1e-12));
  }
  // nonnegativity at random points
  for (int t = 0; t < 100; ++t) CHECK(bregman(la, lp, oracle::random_vector(rng, inst.spec.n)) >= -1e-9);

  // infinite penalty gives the +inf sentinel
  const auto ip = fdr_problem(SmoothQuadratic(Matrix::identity(2), Vector(2)),
                              Regularizer::indicator(Subspace::coordinates(2, {0})), Subspace::whole(2));
  Anchor ia;
  ia.z_star = ia.x_star = ia.v_star = Vector(2);
  CHECK(bregman(ia, ip, Vector{1.0, 1.0}) == std::numeric_limits<double>::infinity());
}

TEST_CASE("bregman_series") {
  SUBCASE("constant trajectory at x* is identically zero") {
    const auto p = fdr_problem(SmoothQuadratic(Matrix::identity(2), Vector{1.0, 2.0}), Regularizer::zero(2),
                               Subspace::whole(2));
    Anchor a;
    a.z_star = a.x_star = Vector{1.0, 2.0};
    a.v_star = Vector(2);
    a.gamma = 1.0;
    Trajectory t;
    for (std::size_t k = 0; k < 5; ++k) t.records.push_back(Record{k, 1.0, 1.0, a.z_star, a.x_star, a.x_star, 0.0});
    const auto s = bregman_series(a, p, t);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(s.value[i] == 0.0);
      CHECK(s.best[i] == 0.0);
      CHECK(s.ergodic[i] == 0.0);
      CHECK(s.scaled_best[i] == 0.0);
    }
    CHECK_FALSE(s.ergodic_approximate);
  }
  SUBCASE("generated LASSO: prefix minimum, nonnegativity, bounded scaled best") {
    for (std::uint64_t seed : {0u, 4u}) {
      const auto inst = lasso(seed);
      const auto p = lasso_fdr_problem(inst);
      const double g = p.smooth.beta_v();
      const Anchor a = make_anchor(converged(p, g), g, p.v());
      RunOptions o;
      o.max_iter = 3000;
      const auto t = fdr_run(p, Schedule::constant(g), o);
      const auto s = bregman_series(a, p, t);
      double running = std::numeric_limits<double>::infinity();
      double at10 = 0.0;
      for (std::size_t i = 0; i < s.k.size(); ++i) {
        running = std::min(running, s.value[i]);
        CHECK(s.best[i] == running);
        CHECK(s.value[i] >= -1e-9);
        CHECK(s.scaled_best[i] == static_cast<double>(s.k[i] + 1) * s.best[i]);
        if (s.k[i] == 10) at10 = s.scaled_best[i];
        if (s.k[i] >= 10) CHECK(s.scaled_best[i] <= at10 * (1 + 1e-12) + 1e-12);
      }
    }
  }
  SUBCASE("stride > 1 flags the ergodic mean") {
    const auto inst = lasso(5);
    const auto p = lasso_fdr_problem(inst);
    const double g = p.smooth.beta_v();
    const Anchor a = make_anchor(converged(p, g), g, p.v());
    RunOptions o;
    o.max_iter = 100;
    o.record_stride = 7;
    CHECK(bregman_series(a, p, fdr_run(p, Schedule::constant(g), o)).ergodic_approximate);
  }
  SUBCASE("FB runs: the series is the objective gap") {
    const auto inst = lasso(6);
    const auto fb = lasso_fb_problem(inst);
    const auto p = fdr_problem(fb.smooth, fb.r, Subspace::whole(inst.spec.n));
    const Anchor a = make_anchor(converged(p, fb.beta), fb.beta, p.v());
    RunOptions o;
    o.max_iter = 200;
    const auto t = fb_run(fb, Schedule::constant(fb.beta), o);
    const auto s = bregman_series(a, p, t);
    const double phis = fb.smooth.value(a.x_star) + fb.r.eval(a.x_star);
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      const Vector& x = t.records[i].u;
      CHECK(s.value[i] == Approx(fb.r.eval(x) + fb.smooth.value(x) - phis).epsilon(1e-14));
    }
  }
}

TEST_CASE("energy inequality audit") {
  const auto inst = lasso(7);
  const auto p = lasso_fdr_problem(inst);
  const double g = p.smooth.beta_v();
  const Anchor a = make_anchor(converged(p, g), g, p.v());
  SUBCASE("at the fixed point every slack is zero") {
    Trajectory t;
    for (std::size_t k = 0; k < 6; ++k) t.records.push_back(Record{k, g, 1.0, a.z_star, a.x_star, a.x_star, 0.0});
    t.iterations = 5;
    const auto rep = audit_energy_inequality(a, p, t, Schedule::constant(g));
    REQUIRE(rep.rows.size() == 5);
    for (const auto& r : rep.rows) {
      CHECK(std::fabs(r.slack) <= 1e-12);
      CHECK(std::fabs(r.bregman_next) <= 1e-12);
      CHECK(r.xi_text == 0.0);
      CHECK(r.zeta_proof == 0.0);
      CHECK(r.phi == r.phi_next);
    }
  }
  SUBCASE("stationary and geometric schedules on a seeded instance") {
    RunOptions o;
    o.max_iter = 1500;
    for (const char* preset : {"stationary", "case4"}) {
      const auto s = schedule_preset(preset, p.smooth.beta());
      const auto t = fdr_run(p, s, o);
      const auto rep = audit_energy_inequality(a, p, t, s);
      CHECK(rep.rows.size() == t.records.size() - 1);
      CHECK(rep.max_violation <= 1e-8);
      for (const auto& r : rep.rows) {
        CHECK(std::isfinite(r.slack));
        if (std::string(preset) == "stationary") {
          CHECK(r.zeta_proof == 0.0);
          CHECK(r.zeta_text == 0.0);
          CHECK(r.step_term == 0.0);
        }
      }
    }
  }
  SUBCASE("rejects relaxation and strided trajectories") {
    RunOptions o;
    o.max_iter = 10;
    const auto relaxed = Schedule::constant(g, 0.8);
    CHECK_THROWS_AS(audit_energy_inequality(a, p, fdr_run(p, relaxed, o), relaxed), InvalidInput);
    o.record_stride = 2;
    const auto st = Schedule::constant(g);
    CHECK_THROWS_AS(audit_energy_inequality(a, p, fdr_run(p, st, o), st), InvalidInput);
  }
}

TEST_CASE("detect_identification examples") {
  const std::vector<std::size_t> ks{0, 10, 20, 30};
  const auto r = detect_identification({l1_sig({1, 2}), l1_sig({1}), l1_sig({1}), l1_sig({1})}, ks, l1_sig({1}));
  REQUIRE(r.record_index.has_value());
  CHECK(*r.record_index == 1);
  CHECK(*r.k == 10);
  const auto none = detect_identification({l1_sig({2}), l1_sig({2}), l1_sig({0}), l1_sig({2})}, ks, l1_sig({1}));
  CHECK_FALSE(none.record_index.has_value());
  CHECK_FALSE(none.k.has_value());
  // a later departure resets K
  const auto late = detect_identification({l1_sig({1}), l1_sig({1, 2}), l1_sig({1}), l1_sig({1})}, ks, l1_sig({1}));
  CHECK(*late.record_index == 2);
  CHECK_THROWS_AS(detect_identification({l1_sig({1})}, ks, l1_sig({1})), InvalidInput);
}

TEST_CASE("identification on a seeded LASSO run is permanent") {
  const auto inst = lasso(8);
  const auto p = lasso_fdr_problem(inst);
  const double g = p.smooth.beta_v();
  const Anchor a = make_anchor(converged(p, g), g, p.v());
  const Vector grad_part = a.v_star - p.smooth.gradient(a.x_star);
  const double margin = p.r.nondegeneracy_margin(a.x_star, grad_part);
  RunOptions o;
  o.max_iter = 4000;
  const auto t = fdr_run(p, Schedule::constant(g), o);
  const auto target = p.r.signature(a.x_star);
  const auto id = detect_identification(t, p.r, target);
  if (margin > 1e-6) {
    REQUIRE(id.record_index.has_value());
    CHECK(*id.k < o.max_iter / 2);
    for (std::size_t i = *id.record_index; i < t.records.size(); ++i)
      CHECK(p.r.signature(t.records[i].u) == target);
  } else {
    MESSAGE("seed 8 is degenerate at this size; permanence checked only if identified");
    if (id.record_index)
      for (std::size_t i = *id.record_index; i < t.records.size(); ++i)
        CHECK(p.r.signature(t.records[i].u) == target);
  }
}

TEST_CASE("fit_log_slope examples") {
  std::vector<std::pair<std::size_t, double>> exact, constant, noisy;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> jitter(-1e-3, 1e-3);
  for (std::size_t k = 0; k <= 200; ++k) {
    exact.emplace_back(k, std::pow(0.9, static_cast<double>(k)));
    constant.emplace_back(k, 3.0);
    noisy.emplace_back(k, 2.5 * std::pow(0.95, static_cast<double>(k)) * (1.0 + jitter(rng)));
  }
  CHECK(std::fabs(fit_log_slope(exact, 10, 150) - 0.9) <= 1e-12);
  CHECK(fit_log_slope(constant, 0, 200) == Approx(1.0).epsilon(1e-15));
  CHECK(std::fabs(fit_log_slope(noisy, 0, 200) - 0.95) <= 1e-3);
  auto bad = exact;
  bad[20].second = 0.0;
  CHECK_THROWS_AS(fit_log_slope(bad, 10, 30), InvalidInput);
  CHECK_THROWS_AS(fit_log_slope(exact, 300, 400), InsufficientData);
}
