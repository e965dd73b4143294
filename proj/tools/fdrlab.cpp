// fdrlab: generate instances, run splitting schemes, certify local rates.
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fdr/error.hpp"
#include "fdr/experiments.hpp"

namespace {

struct Flags {
  std::string config, out_dir, preset, method, family;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iter, stride;
  std::optional<double> tol;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "key=value configuration file");
  app->add_option("--out-dir", f.out_dir, "directory for CSV, plots and report.json");
  app->add_option("--seed", f.seed, "instance seed");
  app->add_option("--max-iter", f.max_iter, "iteration budget");
  app->add_option("--tol", f.tol, "stop once ||z_k - z_{k-1}|| <= tol (0 runs the full budget)");
  app->add_option("--stride", f.stride, "record every stride-th iterate");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

fdr::ExperimentConfig resolve(const Flags& f, const std::string& method) {
  fdr::ExperimentConfig c;
  if (!f.config.empty()) {
    c = fdr::load_config(f.config);
    if (!method.empty()) {
      const fdr::Method m = fdr::parse_method(method);
      if (fdr::default_config(m).spec.family != c.spec.family)
        throw fdr::InvalidInput(std::string("method ") + method + " does not run on " + fdr::family_name(c.spec.family));
      c.method = m;
    }
  } else if (!f.family.empty() && method.empty()) {
    c = fdr::default_config(fdr::parse_family(f.family) == fdr::Family::GroupTv ? fdr::Method::Tos : fdr::Method::Fdr);
  } else {
    c = fdr::default_config(method.empty() ? fdr::Method::Fdr : fdr::parse_method(method));
  }
  if (!f.preset.empty()) c.preset = f.preset;
  if (f.seed) c.spec.seed = *f.seed;
  if (f.max_iter) c.options.run.max_iter = *f.max_iter;
  if (f.stride) c.options.run.record_stride = *f.stride;
  if (f.tol) c.options.run.residual_tol = *f.tol;
  if (!f.out_dir.empty()) c.options.out_dir = f.out_dir;
  c.spec.validate();
  return c;
}

void print_report(const fdr::RunReport& r) {
  std::printf("%s/%s seed=%llu: %zu iterations (%s), ||z-z*|| = %.3e, ||x-x*|| = %.3e\n", fdr::method_name(r.method),
              r.preset.c_str(), static_cast<unsigned long long>(r.spec.seed), r.trajectory.iterations,
              fdr::stop_reason_name(r.trajectory.stop), r.dist_z.back(), r.dist_x.back());
  std::printf("  schedule: %s\n", r.schedule.describe().c_str());
  if (r.bregman) std::printf("  best Bregman divergence: %.3e\n", r.bregman->best.back());
  if (r.identification.k)
    std::printf("  identified at k = %zu (margin %.3e)\n", *r.identification.k, r.identification.margin);
  else
    std::printf("  not identified (margin %.3e)\n", r.identification.margin);
  if (r.certificate) {
    const auto& c = *r.certificate;
    std::printf("  rate: predicted %.6f, observed %.6f over k in [%zu, %zu] -> %s (%s%s)\n", c.predicted_rho,
                c.observed_factor, c.window_lo, c.window_hi, c.match ? "match" : "mismatch",
                fdr::theorem_case_name(c.theorem_case), c.dominated_by_schedule ? ", dominated by schedule" : "");
  } else {
    std::printf("  rate: not certified (%s)\n", r.certificate_note.c_str());
  }
  if (r.csv_path) std::printf("  wrote %s\n", r.csv_path->string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward-Douglas-Rachford experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "write a problem instance (K, f, ground truth, V basis)");
  add_common(gen, f);
  gen->add_option("--method", f.method, "fdr | fb | gfb | tos (selects the family)");
  gen->add_option("--family", f.family, "lasso_constrained | group_tv");

  auto* run = app.add_subcommand("run", "run one scheme with diagnostics");
  auto* rate = app.add_subcommand("rate", "run and require a local rate certificate");
  for (auto* sc : {run, rate}) {
    add_common(sc, f);
    sc->add_option("--method", f.method, "fdr | fb | gfb | tos");
    sc->add_option("--preset", f.preset, "stationary | case1 | case2 | case3 | case4");
  }

  auto* cmp = app.add_subcommand("compare", "run several methods/presets on one instance");
  add_common(cmp, f);
  cmp->add_option("--method", f.method, "comma-separated methods");
  cmp->add_option("--preset", f.preset, "comma-separated presets");

  auto* aud = app.add_subcommand("audit", "per-iteration energy-inequality audit of unrelaxed FDR");
  add_common(aud, f);
  aud->add_option("--preset", f.preset, "stationary | case1 | case2 | case3 | case4");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto c = resolve(f, f.method);
      const auto inst = fdr::generate(c.spec);
      const std::filesystem::path dir = f.out_dir.empty() ? "." : f.out_dir;
      fdr::write_instance(inst, dir);
      std::printf("%s instance m=%zu n=%zu seed=%llu written to %s\n", fdr::family_name(c.spec.family), c.spec.m,
                  c.spec.n, static_cast<unsigned long long>(c.spec.seed), dir.string().c_str());
    } else if (*run || *rate) {
      const auto c = resolve(f, f.method);
      const auto r = fdr::run_experiment(c.spec, c.method, c.preset, c.options);
      print_report(r);
      if (*rate && !r.certificate) throw fdr::InsufficientData(r.certificate_note);
    } else if (*cmp) {
      const auto methods = split_list(f.method.empty() ? "fdr" : f.method);
      const auto presets = split_list(f.preset.empty() ? "stationary" : f.preset);
      const auto base = resolve(f, methods.front());
      std::vector<fdr::RunReport> reports;
      for (const auto& m : methods)
        for (const auto& p : presets) {
          auto o = base.options;
          if (base.options.out_dir) o.out_dir = *base.options.out_dir / (m + "_" + p);
          reports.push_back(fdr::run_experiment(base.spec, fdr::parse_method(m), p, o));
          print_report(reports.back());
        }
      const auto table = fdr::compare_runs(reports);
      for (const auto& s : table.summary)
        std::printf("%-20s terminal k=%zu ||z-z*||=%.3e ||x-x*||=%.3e\n", s.label.c_str(), s.terminal_k,
                    s.terminal_dist_z, s.terminal_dist_x);
      if (base.options.out_dir) {
        fdr::write_comparison_csv(table, *base.options.out_dir / "comparison.csv");
        std::printf("wrote %s\n", (*base.options.out_dir / "comparison.csv").string().c_str());
      }
    } else if (*aud) {
      const auto c = resolve(f, "fdr");
      const auto a = fdr::run_audit(c.spec, c.preset, c.options);
      std::printf("audit %s seed=%llu: %zu transitions, max violation %.3e, gamma_lower %.6g\n", c.preset.c_str(),
                  static_cast<unsigned long long>(c.spec.seed), a.audit.rows.size(), a.audit.max_violation,
                  a.audit.gamma_lower);
    }
  } catch (const fdr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
