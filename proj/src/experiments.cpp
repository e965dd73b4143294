#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "fdr/error.hpp"
#include "fdr/experiments.hpp"

namespace fdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Family family_for(Method m) { return (m == Method::Gfb || m == Method::Tos) ? Family::GroupTv : Family::LassoConstrained; }

// everything except the parameters that differ between methods
struct Solved {
  Trajectory traj, reference;
  double gate = 1e-12;
};

Solved solve(const Schedule& s, const ExperimentOptions& o, auto&& runner) {
  Solved out;
  out.traj = runner(s, o.run);
  RunOptions ref = o.run;
  ref.max_iter = std::max<std::size_t>(1, o.reference_factor) * o.run.max_iter;
  ref.residual_tol = o.reference_tol;
  ref.record_stride = ref.max_iter + 1;  // first and last record only
  out.reference = runner(Schedule::constant(s.limit_gamma(), s.limit_lambda()), ref);
  out.gate = s.stationary() ? 1e-12 : o.reference_gate_nonstationary;
  return out;
}

void fill_distances(RunReport& rep, const Vector& z_star, const Vector& u_star, const Vector& x_star) {
  for (const Record& r : rep.trajectory.records) {
    rep.dist_z.push_back(distance(r.z, z_star));
    rep.dist_x.push_back(distance(r.x, x_star));
    rep.dist_u.push_back(distance(r.u, u_star));
  }
}

// FDR identification and margin; also used for FB (V whole) and GFB (product space)
void fdr_diagnostics(RunReport& rep, const FdrProblem& p) {
  const Anchor& a = rep.anchor;
  rep.bregman = bregman_series(a, p, rep.trajectory);
  const ManifoldSignature target = p.r.signature(a.x_star);
  rep.identification = detect_identification(rep.trajectory, p.r, target);
  for (const Record& r : rep.trajectory.records) rep.signature_size.push_back(p.r.signature(r.u).size());
  // (x* - z*)/gamma - grad G(x*) is the subgradient of R picked by the fixed point
  Vector g = a.v_star - p.smooth.gradient(a.x_star);
  rep.identification.margin = p.r.nondegeneracy_margin(a.x_star, g);
}

template <class Build>
void try_certify(RunReport& rep, Build&& build) {
  try {
    rep.certificate = build();
  } catch (const InsufficientData& e) {
    rep.certificate_note = e.what();
  } catch (const UnsupportedFeature& e) {
    rep.certificate_note = e.what();
  }
}

}  // namespace

RunReport run_experiment(const ProblemSpec& spec, Method method, const std::string& preset,
                         const ExperimentOptions& opts) {
  if (spec.family != family_for(method))
    throw InvalidInput(std::string("method ") + method_name(method) + " does not run on " + family_name(spec.family) +
                       " instances");
  if (opts.run.record_stride == 0) throw InvalidInput("stride must be positive");
  if (opts.run.max_iter == 0) throw InvalidInput("max_iter must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemInstance inst = generate(spec);

  RunReport rep;
  rep.spec = spec;
  rep.method = method;
  rep.preset = preset;

  if (method == Method::Fdr) {
    const FdrProblem p = lasso_fdr_problem(inst);
    rep.beta = p.smooth.beta();
    rep.beta_v = p.smooth.beta_v();
    const double base = opts.step_base == StepBase::BetaV ? rep.beta_v : rep.beta;
    rep.schedule = schedule_preset(preset, base, opts.lambda);
    rep.validation = validate_schedule(rep.schedule, rep.beta_v, opts.run.max_iter);
    if (!rep.validation.ok()) throw InvalidInput("schedule rejected:\n" + rep.validation.summary());
    Solved s = solve(rep.schedule, opts, [&](const Schedule& sc, const RunOptions& ro) { return fdr_run(p, sc, ro); });
    rep.trajectory = std::move(s.traj);
    const double gamma = rep.schedule.limit_gamma();
    rep.anchor = make_anchor(s.reference, gamma, p.v(), s.gate);
    rep.x_star = rep.anchor.x_star;
    for (const Record& r : rep.trajectory.records) rep.objective.push_back(p.smooth.value(r.x) + p.r.eval(r.x));
    fill_distances(rep, rep.anchor.z_star, rep.anchor.x_star, rep.anchor.x_star);
    fdr_diagnostics(rep, p);
    try_certify(rep, [&] {
      const auto lin = build_fdr_linearization(rep.anchor, p, gamma, rep.schedule.limit_lambda());
      return certify(lin, rep.anchor, rep.trajectory, rep.identification, opts.certify_tol);
    });
  } else if (method == Method::Fb) {
    const FbProblem p = lasso_fb_problem(inst);
    const FdrProblem as_fdr{RestrictedSmooth(p.smooth, Subspace::whole(spec.n)), p.r};
    rep.beta = rep.beta_v = p.beta;
    rep.schedule = schedule_preset(preset, p.beta, opts.lambda);
    rep.validation = validate_schedule(rep.schedule, p.beta, opts.run.max_iter);
    if (!rep.validation.ok()) throw InvalidInput("schedule rejected:\n" + rep.validation.summary());
    Solved s = solve(rep.schedule, opts, [&](const Schedule& sc, const RunOptions& ro) { return fb_run(p, sc, ro); });
    rep.trajectory = std::move(s.traj);
    const double gamma = rep.schedule.limit_gamma();
    rep.anchor = make_anchor(s.reference, gamma, as_fdr.v(), s.gate);
    rep.x_star = rep.anchor.x_star;
    for (const Record& r : rep.trajectory.records) rep.objective.push_back(p.smooth.value(r.x) + p.r.eval(r.x));
    fill_distances(rep, rep.anchor.z_star, rep.anchor.x_star, rep.anchor.x_star);
    fdr_diagnostics(rep, as_fdr);
    try_certify(rep, [&] {
      const auto lin = build_fdr_linearization(rep.anchor, as_fdr, gamma, rep.schedule.limit_lambda());
      return certify(lin, rep.anchor, rep.trajectory, rep.identification, opts.certify_tol);
    });
  } else if (method == Method::Gfb) {
    const GfbProblem p = group_tv_gfb_problem(inst);
    const FdrProblem product = gfb_as_fdr(p);
    rep.beta = rep.beta_v = p.beta;
    rep.schedule = schedule_preset(preset, p.beta, opts.lambda);
    rep.validation = validate_schedule(rep.schedule, p.beta, opts.run.max_iter);
    if (!rep.validation.ok()) throw InvalidInput("schedule rejected:\n" + rep.validation.summary());
    Solved s = solve(rep.schedule, opts, [&](const Schedule& sc, const RunOptions& ro) { return gfb_run(p, sc, ro); });
    rep.trajectory = std::move(s.traj);
    const double gamma = rep.schedule.limit_gamma();
    rep.anchor = make_gfb_product_anchor(s.reference, p, gamma, s.gate);
    rep.x_star = s.reference.final().x;
    for (const Record& r : rep.trajectory.records) {
      double v = p.smooth.value(r.x);
      for (const Regularizer& ri : p.rs) v += ri.eval(r.x);
      rep.objective.push_back(v);
    }
    for (const Record& r : rep.trajectory.records) {
      rep.dist_z.push_back(distance(r.z, rep.anchor.z_star));
      rep.dist_x.push_back(distance(r.x, rep.x_star));
      rep.dist_u.push_back(distance(r.u, rep.anchor.x_star));
    }
    fdr_diagnostics(rep, product);
    try_certify(rep, [&] {
      const auto lin = build_gfb_linearization(rep.anchor, p, gamma, rep.schedule.limit_lambda());
      return certify(lin, rep.anchor, rep.trajectory, rep.identification, opts.certify_tol);
    });
  } else {
    const TosProblem p = group_tv_tos_problem(inst);
    rep.beta = rep.beta_v = p.beta;
    rep.schedule = schedule_preset(preset, p.beta, opts.lambda);
    rep.validation = validate_schedule(rep.schedule, p.beta, opts.run.max_iter);
    if (!rep.validation.ok()) throw InvalidInput("schedule rejected:\n" + rep.validation.summary());
    Solved s = solve(rep.schedule, opts, [&](const Schedule& sc, const RunOptions& ro) { return tos_run(p, sc, ro); });
    rep.trajectory = std::move(s.traj);
    const double gamma = rep.schedule.limit_gamma();
    rep.anchor = make_anchor(s.reference, gamma, s.gate);
    rep.x_star = rep.anchor.x_star;
    const Anchor& a = rep.anchor;
    for (const Record& r : rep.trajectory.records)
      rep.objective.push_back(p.smooth.value(r.x) + p.r.eval(r.x) + p.j.eval(r.x));
    fill_distances(rep, a.z_star, a.x_star, a.x_star);
    // u follows R's manifold, x = prox_J(z) follows J's
    const auto id_r = detect_identification(rep.trajectory, p.r, p.r.signature(a.x_star), -1.0, IterateField::U);
    const auto id_j = detect_identification(rep.trajectory, p.j, p.j.signature(a.x_star), -1.0, IterateField::X);
    if (id_r.record_index && id_j.record_index)
      rep.identification = *id_r.record_index >= *id_j.record_index ? id_r : id_j;
    for (const Record& r : rep.trajectory.records)
      rep.signature_size.push_back(p.r.signature(r.u).size() + p.j.signature(r.x).size());
    Vector g_r = (a.x_star - a.z_star - gamma * p.smooth.gradient(a.x_star)) / gamma;
    Vector g_j = (a.z_star - a.x_star) / gamma;
    rep.identification.margin =
        std::min(p.r.nondegeneracy_margin(a.x_star, g_r), p.j.nondegeneracy_margin(a.x_star, g_j));
    try_certify(rep, [&] {
      const auto lin = build_tos_linearization(a, p, gamma, rep.schedule.limit_lambda());
      return certify(lin, a, rep.trajectory, rep.identification, opts.certify_tol);
    });
  }

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    rep.csv_path = *opts.out_dir / "trajectory.csv";
    write_trajectory_csv(rep, *rep.csv_path);
    if (opts.write_plots) {
      if (rep.bregman) {
        rep.plot_bregman_path = *opts.out_dir / "bregman.svg";
        write_bregman_svg(rep, *rep.plot_bregman_path);
      }
      rep.plot_distance_path = *opts.out_dir / "distance.svg";
      write_distance_svg(rep, *rep.plot_distance_path);
    }
    rep.json_path = *opts.out_dir / "report.json";
    write_report_json(rep, *rep.json_path);
  }
  return rep;
}

AuditRun run_audit(const ProblemSpec& spec, const std::string& preset, const ExperimentOptions& opts) {
  ExperimentOptions o = opts;
  o.run.record_stride = 1;
  if (o.lambda != 1.0) throw InvalidInput("audit: the energy inequality is stated for lambda = 1");
  AuditRun out;
  out.report = run_experiment(spec, Method::Fdr, preset, o);
  const FdrProblem p = lasso_fdr_problem(generate(spec));
  out.audit = audit_energy_inequality(out.report.anchor, p, out.report.trajectory, out.report.schedule);
  if (opts.out_dir) write_audit_csv(out.audit, *opts.out_dir / "audit.csv");
  return out;
}

ComparisonTable compare_runs(const std::vector<RunReport>& reports) {
  if (reports.size() < 2) throw InvalidInput("compare_runs: need at least two reports");
  for (const RunReport& r : reports)
    if (!(r.spec == reports.front().spec)) throw InvalidInput("compare_runs: reports come from different instances");

  ComparisonTable t;
  std::map<std::size_t, std::size_t> rows;
  for (const RunReport& r : reports)
    for (const Record& rec : r.trajectory.records) rows.emplace(rec.k, 0);
  std::size_t idx = 0;
  for (auto& [k, row] : rows) {
    row = idx++;
    t.k.push_back(k);
  }
  for (const RunReport& r : reports) {
    const std::string label = std::string(method_name(r.method)) + ":" + r.preset;
    t.labels.push_back(label);
    std::vector<double> dz(rows.size(), kNaN), dx(rows.size(), kNaN);
    for (std::size_t i = 0; i < r.trajectory.records.size(); ++i) {
      const std::size_t row = rows.at(r.trajectory.records[i].k);
      dz[row] = r.dist_z[i];
      dx[row] = r.dist_x[i];
    }
    t.dist_z.push_back(std::move(dz));
    t.dist_x.push_back(std::move(dx));

    ComparisonSummary s;
    s.label = label;
    s.terminal_k = r.trajectory.final().k;
    s.terminal_dist_z = r.dist_z.back();
    s.terminal_dist_x = r.dist_x.back();
    s.identification_k = r.identification.k;
    if (r.certificate) {
      s.observed_factor = r.certificate->observed_factor;
      s.predicted_rho = r.certificate->predicted_rho;
    }
    t.summary.push_back(std::move(s));
  }
  return t;
}

std::optional<std::size_t> last_common_resolved_k(const ComparisonTable& t, const std::vector<RunReport>& reports,
                                                  double floor_rel) {
  if (reports.size() != t.dist_x.size()) throw InvalidInput("last_common_resolved_k: report count mismatch");
  std::optional<std::size_t> best;
  for (std::size_t row = 0; row < t.k.size(); ++row) {
    bool all = true;
    for (std::size_t i = 0; i < reports.size() && all; ++i) {
      const double floor = floor_rel * std::max(1.0, norm(reports[i].x_star));
      all = t.dist_x[i][row] > floor;  // NaN fails
    }
    if (all) best = t.k[row];
  }
  return best;
}

}  // namespace fdr
