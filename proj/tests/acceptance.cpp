// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fdr/error.hpp"
#include "fdr/experiments.hpp"
#include "oracles.hpp"

using namespace fdr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

ProblemSpec lasso_spec(std::uint64_t seed) {
  ProblemSpec s = ProblemSpec::defaults(Family::LassoConstrained);
  s.seed = seed;
  return s;
}

ProblemSpec group_tv_spec(std::uint64_t seed) {
  ProblemSpec s = ProblemSpec::defaults(Family::GroupTv);
  s.seed = seed;
  return s;
}

ExperimentOptions options_for(Method m, std::size_t max_iter = 5000) {
  ExperimentOptions o = default_config(m).options;
  o.run.max_iter = max_iter;
  o.write_plots = false;
  return o;
}

// stationary FDR at gamma = beta_V, shared by criteria 3, 7 and 11
const RunReport& fdr_beta_v_run(std::uint64_t seed) {
  static std::map<std::uint64_t, RunReport> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) {
    ExperimentOptions o = options_for(Method::Fdr);
    o.step_base = StepBase::BetaV;
    it = cache.emplace(seed, run_experiment(lasso_spec(seed), Method::Fdr, "stationary", o)).first;
  }
  return it->second;
}

// index of the last record with k <= target
std::size_t record_at(const std::vector<std::size_t>& ks, std::size_t target) {
  std::size_t i = 0;
  while (i + 1 < ks.size() && ks[i + 1] <= target) ++i;
  return i;
}

Outcome prox_oracle() {
  const Matrix span = Matrix::from_cols({Vector{1, 2, 0}, Vector{0, 1, -1}});
  const std::vector<Regularizer> kinds{
      Regularizer::l1(0.7, 4),
      Regularizer::group_l12(0.8, {{0, 1}, {2, 3}}),
      Regularizer::linf(0.9, 3),
      Regularizer::tv1d(0.6, 4),
      Regularizer::nuclear(0.5, 2, 2),
      Regularizer::indicator(Subspace::span(span)),
      Regularizer::separable({Regularizer::l1(0.4, 2), Regularizer::tv1d(0.3, 2)})};
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> step(0.2, 2.0);
  double worst = 0.0;
  std::string worst_kind;
  for (const auto& r : kinds) {
    for (int t = 0; t < 25; ++t) {
      const Vector x = oracle::random_vector(rng, r.dim(), 1.5);
      const double gamma = step(rng);
      Vector want;
      if (r.kind() == RegularizerKind::SubspaceIndicator) {
        auto obj = [&](const Vector& c) { return 0.5 * norm_sq(span * c - x); };
        want = span * oracle::grid_minimize(obj, Vector(2), 5.0, 1e-8);
      } else {
        want = oracle::brute_force_prox(r, gamma, x);
      }
      const double err = distance(r.prox(gamma, x), want);
      if (err > worst) {
        worst = err;
        worst_kind = kind_name(r.kind());
      }
    }
  }
  return {worst <= 1e-4, "7 kinds x 25 inputs, worst error " + fmt(worst) + " (" + worst_kind + ")"};
}

Outcome averagedness() {
  std::mt19937_64 rng(202);
  double worst = -INFINITY;
  std::size_t pairs = 0;
  auto probe = [&](const std::function<Vector(const Vector&)>& op, std::size_t n) {
    for (int t = 0; t < 100; ++t) {
      const double scale = t < 50 ? 1.0 : 1e-3;
      const Vector a = oracle::random_vector(rng, n, 2.0);
      const Vector b = a + oracle::random_vector(rng, n, scale);
      worst = std::max(worst, distance(op(a), op(b)) - distance(a, b));
      ++pairs;
    }
  };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = lasso_fdr_problem(generate(lasso_spec(seed)));
    for (double frac : {1.0, 1.9}) {
      const double g = frac * p.smooth.beta_v();
      probe([&](const Vector& z) { return apply_fixed_point_fdr(g, p, z); }, p.v().ambient_dim());
    }
    const auto q = group_tv_tos_problem(generate(group_tv_spec(seed)));
    for (double frac : {1.0, 1.9}) {
      const double g = frac * q.beta;
      probe([&](const Vector& z) { return apply_fixed_point_tos(g, q, z); }, q.smooth.dim());
    }
  }
  return {worst <= 1e-9, std::to_string(pairs) + " pairs, max ||Ta-Tb|| - ||a-b|| = " + fmt(worst)};
}

Outcome bregman_rate() {
  bool ok = true;
  double min_d = INFINITY, worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunReport& r = fdr_beta_v_run(seed);
    const BregmanSeries& b = *r.bregman;
    for (double v : b.value) min_d = std::min(min_d, v);
    const double at50 = b.scaled_best[record_at(b.k, 50)];
    const double at5000 = b.scaled_best[record_at(b.k, 5000)];
    const double ratio = at5000 / at50;
    worst_ratio = std::max(worst_ratio, ratio);
    if (!(at5000 <= at50)) ok = false;
  }
  ok = ok && min_d >= -1e-9;
  return {ok, "seeds 0-9, max scaled-best(5000)/scaled-best(50) = " + fmt(worst_ratio) + ", min D = " + fmt(min_d)};
}

Outcome inequality_audit() {
  double worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const char* preset : {"stationary", "case4"}) {
      const auto a = run_audit(lasso_spec(seed), preset, options_for(Method::Fdr));
      worst = std::max(worst, a.audit.max_violation);
    }
  return {worst <= 1e-8, "seeds 0-9 x {stationary, case4}, max violation " + fmt(worst)};
}

Outcome fb_objective_rate() {
  bool ok = true;
  double worst_rise = -INFINITY, worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunReport r = run_experiment(lasso_spec(seed), Method::Fb, "stationary", options_for(Method::Fb));
    const auto p = lasso_fb_problem(generate(lasso_spec(seed)));
    const double phi_star = p.smooth.value(r.x_star) + p.r.eval(r.x_star);
    std::vector<std::size_t> ks;
    for (const Record& rec : r.trajectory.records) ks.push_back(rec.k);
    std::vector<double> gap;
    for (double v : r.objective) gap.push_back(v - phi_star);
    for (std::size_t i = 1; i < gap.size(); ++i) worst_rise = std::max(worst_rise, gap[i] - gap[i - 1]);
    double peak = 0.0;
    for (std::size_t i = 0; i < gap.size() && ks[i] <= 100; ++i)
      peak = std::max(peak, static_cast<double>(ks[i] + 1) * gap[i]);
    const std::size_t last = record_at(ks, 5000);
    const double end = 5001.0 * gap[last];
    worst_ratio = std::max(worst_ratio, end / peak);
    if (!(end <= 0.01 * peak)) ok = false;
  }
  ok = ok && worst_rise <= 1e-10;
  return {ok, "seeds 0-9, max gap increase " + fmt(worst_rise) + ", max (k+1)gap(5000)/peak(k<=100) = " +
                  fmt(worst_ratio)};
}

Outcome finite_identification() {
  std::size_t included = 0, early = 0;
  bool permanent = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RunReport r = run_experiment(lasso_spec(seed), Method::Fdr, "stationary", options_for(Method::Fdr));
    if (!(r.identification.margin > 1e-6)) continue;
    ++included;
    if (!r.identification.k) {
      permanent = false;
      continue;
    }
    // recheck permanence from the raw iterates
    const auto p = lasso_fdr_problem(generate(lasso_spec(seed)));
    const auto target = p.r.signature(r.anchor.x_star);
    for (std::size_t i = *r.identification.record_index; i < r.trajectory.records.size(); ++i)
      if (!(p.r.signature(r.trajectory.records[i].u) == target)) permanent = false;
    if (*r.identification.k < 2000) ++early;
  }
  const std::size_t need = (9 * included + 9) / 10;
  return {permanent && included > 0 && early >= need,
          std::to_string(included) + "/20 seeds pass the margin check, " + std::to_string(early) +
              " identify before k = 2000 (need " + std::to_string(need) + "), permanent: " + (permanent ? "yes" : "no")};
}

Outcome exact_local_rate() {
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RunReport& r = fdr_beta_v_run(seed);
    if (!r.certificate) {
      ok = false;
      os << " s" << seed << ": no certificate (" << r.certificate_note << ")";
      continue;
    }
    const auto& c = *r.certificate;
    const double rel = std::fabs(c.observed_factor - c.predicted_rho) / c.predicted_rho;
    if (!(rel <= 0.10)) ok = false;
    os << " s" << seed << ": " << fmt(c.observed_factor, 5) << "/" << fmt(c.predicted_rho, 5) << " (" << fmt(rel, 2)
       << ")";
  }
  return {ok, "observed/predicted" + os.str()};
}

Outcome schedule_dominance() {
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::map<std::string, double> err;
    for (const char* preset : {"case1", "case3", "case4", "stationary"}) {
      const RunReport r = run_experiment(lasso_spec(seed), Method::Fdr, preset, options_for(Method::Fdr));
      err[preset] = r.dist_z[record_at([&] {
        std::vector<std::size_t> ks;
        for (const Record& rec : r.trajectory.records) ks.push_back(rec.k);
        return ks;
      }(), 5000)];
    }
    const double ratio = err["case4"] / err["stationary"];
    const bool s_ok = err["case1"] >= err["case3"] && err["case3"] >= err["case4"] && ratio <= 2.0 && ratio >= 0.5;
    ok = ok && s_ok;
    os << " s" << seed << ":" << fmt(err["case1"], 2) << "," << fmt(err["case3"], 2) << "," << fmt(err["case4"], 2)
       << "," << fmt(err["stationary"], 2) << (s_ok ? "" : "!");
  }
  return {ok, "||z_5000 - z*|| case1,case3,case4,stationary" + os.str()};
}

Outcome tos_rate() {
  bool ok = true;
  std::ostringstream os;
  double worst_ratio = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RunReport tos = run_experiment(group_tv_spec(seed), Method::Tos, "stationary", options_for(Method::Tos));
    const RunReport gfb = run_experiment(group_tv_spec(seed), Method::Gfb, "stationary", options_for(Method::Gfb));
    if (!tos.certificate) {
      ok = false;
      os << " s" << seed << ": no certificate (" << tos.certificate_note << ")";
    } else {
      const auto& c = *tos.certificate;
      const double rel = std::fabs(c.observed_factor - c.predicted_rho) / c.predicted_rho;
      if (!(rel <= 0.15)) ok = false;
      os << " s" << seed << ": " << fmt(c.observed_factor, 5) << "/" << fmt(c.predicted_rho, 5) << " (" << fmt(rel, 2)
         << ")";
    }
    // terminal errors compared at the last iteration both runs still resolve above the rounding floor
    const std::vector<RunReport> pair{gfb, tos};
    const auto table = compare_runs(pair);
    const auto k = last_common_resolved_k(table, pair);
    if (!k) {
      ok = false;
      os << " no common resolved k";
      continue;
    }
    const std::size_t row = std::find(table.k.begin(), table.k.end(), *k) - table.k.begin();
    const double ratio = table.dist_x[0][row] / table.dist_x[1][row];
    worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
    if (!(ratio <= 2.0 && ratio >= 0.5)) ok = false;
    os << " gfb/tos@" << *k << "=" << fmt(ratio, 3);
  }
  return {ok, "observed/predicted" + os.str() + "; worst error ratio " + fmt(worst_ratio)};
}

Outcome gfb_product_space() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = group_tv_gfb_problem(generate(group_tv_spec(seed)));
    const auto prod = gfb_as_fdr(g);
    RunOptions o;
    o.max_iter = 500;
    const auto a = gfb_run(g, Schedule::constant(g.beta), o);
    const auto b = fdr_run(prod, Schedule::constant(2.0 * g.beta), o);
    if (a.records.size() != b.records.size()) return {false, "record counts differ"};
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      worst = std::max(worst, distance(a.records[i].z, b.records[i].z));
      worst = std::max(worst, distance(replicate(a.records[i].x, 2), b.records[i].x));
    }
  }
  return {worst <= 1e-10, "seeds 0-4, 500 iterations, max deviation " + fmt(worst)};
}

Outcome linearization_fidelity() {
  std::mt19937_64 rng(1111);
  double worst = 0.0;
  std::size_t used = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RunReport& r = fdr_beta_v_run(seed);
    if (!r.identification.k) continue;
    ++used;
    const auto p = lasso_fdr_problem(generate(lasso_spec(seed)));
    const double g = r.schedule.limit_gamma();
    const auto lin = build_fdr_linearization(r.anchor, p, g, 1.0);
    for (int t = 0; t < 20; ++t) {
      Vector d = oracle::random_vector(rng, r.anchor.z_star.size());
      d *= 1e-5 / norm(d);
      const Vector step = apply_fixed_point_fdr(g, p, r.anchor.z_star + d);
      worst = std::max(worst, norm(step - r.anchor.z_star - lin.m_gamma_lambda * d) / norm(d));
    }
  }
  return {used > 0 && worst <= 1e-3,
          std::to_string(used) + " identified seeds x 20 directions, max error/||d|| = " + fmt(worst)};
}

Outcome riemannian_hessian() {
  std::mt19937_64 rng(1212);
  const double w = 0.7;
  const std::vector<std::vector<std::size_t>> blocks{{0, 1, 2}, {3, 4}, {5, 6, 7}};
  const auto g = Regularizer::group_l12(w, blocks);
  double worst = 0.0;
  for (int t = 0; t < 25; ++t) {
    Vector x = oracle::random_vector(rng, 8);
    x[3] = x[4] = 0.0;
    const auto sig = g.signature(x);
    const Matrix tp = g.tangent_projector(sig).matrix;
    // smooth representative: weighted sum of the active block norms of the tangent part
    auto smooth = [&](const Vector& y) {
      const Vector ty = tp * y;
      double s = 0.0;
      for (const auto& b : {blocks[0], blocks[2]}) {
        double q = 0.0;
        for (std::size_t i : b) q += ty[i] * ty[i];
        s += std::sqrt(q);
      }
      return w * s;
    };
    const Matrix fd = tp * oracle::fd_hessian(smooth, x) * tp;
    const Matrix h = g.riemannian_hessian(x, sig);
    worst = std::max(worst, max_abs_diff(h, fd) / std::max(1.0, h.max_abs()));
  }
  return {worst <= 1e-5, "25 points, max relative error " + fmt(worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"prox oracle equivalence", prox_oracle},
      {"operator averagedness", averagedness},
      {"Bregman best-iterate rate", bregman_rate},
      {"energy inequality audit", inequality_audit},
      {"FB objective rate", fb_objective_rate},
      {"finite identification", finite_identification},
      {"local linear rate, exact case", exact_local_rate},
      {"schedule dominance", schedule_dominance},
      {"TOS rate and GFB/TOS parity", tos_rate},
      {"GFB as product-space FDR", gfb_product_space},
      {"linearization fidelity", linearization_fidelity},
      {"Riemannian Hessian", riemannian_hessian}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
