#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/experiments.hpp"
#include "json.hpp"

namespace fdr {

const char* const kTrajectoryCsvHeader =
    "k,gamma_k,lambda_k,objective,bregman,best_bregman,ergodic_bregman,dist_z,dist_x,dist_u,signature_size,identified";

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN/inf; emit null
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_trajectory_csv(const RunReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kTrajectoryCsvHeader << '\n';
  const auto& recs = r.trajectory.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const Record& rec = recs[i];
    const bool has_b = r.bregman.has_value();
    const bool ident = r.identification.record_index && i >= *r.identification.record_index;
    out << rec.k << ',' << format_double(rec.gamma) << ',' << format_double(rec.lambda) << ','
        << format_double(r.objective[i]) << ',' << format_double(has_b ? r.bregman->value[i] : kNaN) << ','
        << format_double(has_b ? r.bregman->best[i] : kNaN) << ','
        << format_double(has_b ? r.bregman->ergodic[i] : kNaN) << ',' << format_double(r.dist_z[i]) << ','
        << format_double(r.dist_x[i]) << ',' << format_double(r.dist_u[i]) << ',' << r.signature_size[i] << ','
        << (ident ? 1 : 0) << '\n';
  }
}

void write_comparison_csv(const ComparisonTable& t, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "k";
  for (const auto& l : t.labels) out << ",dist_z[" << l << "],dist_x[" << l << "]";
  out << '\n';
  for (std::size_t row = 0; row < t.k.size(); ++row) {
    out << t.k[row];
    for (std::size_t i = 0; i < t.labels.size(); ++i)
      out << ',' << format_double(t.dist_z[i][row]) << ',' << format_double(t.dist_x[i][row]);
    out << '\n';
  }
}

void write_audit_csv(const AuditReport& a, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "k,bregman_next,phi,phi_next,step_term,xi_text,xi_proof,zeta_proof,zeta_text,slack\n";
  for (const AuditRow& r : a.rows)
    out << r.k << ',' << format_double(r.bregman_next) << ',' << format_double(r.phi) << ','
        << format_double(r.phi_next) << ',' << format_double(r.step_term) << ',' << format_double(r.xi_text) << ','
        << format_double(r.xi_proof) << ',' << format_double(r.zeta_proof) << ',' << format_double(r.zeta_text)
        << ',' << format_double(r.slack) << '\n';
}

void write_report_json(const RunReport& r, const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  const ProblemSpec& s = r.spec;
  j["spec"] = {{"family", family_name(s.family)}, {"m", s.m}, {"n", s.n}, {"sparsity", s.sparsity},
               {"subspace_dim", s.subspace_dim}, {"block_size", s.block_size}, {"active_blocks", s.active_blocks},
               {"block_jumps", s.block_jumps}, {"noise", s.noise}, {"mu", s.mu}, {"mu1", s.mu1}, {"mu2", s.mu2},
               {"seed", s.seed}};
  j["method"] = method_name(r.method);
  j["preset"] = r.preset;
  j["schedule"] = r.schedule.describe();
  j["beta"] = num(r.beta);
  j["beta_v"] = num(r.beta_v);
  json checks = json::array();
  for (const auto& c : r.validation.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"reason", c.reason}});
  j["validation"] = {{"ok", r.validation.ok()}, {"checks", checks}};
  j["iterations"] = r.trajectory.iterations;
  j["stop_reason"] = stop_reason_name(r.trajectory.stop);
  j["records"] = r.trajectory.records.size();
  j["anchor"] = {{"gamma", r.anchor.gamma}, {"residual", num(r.anchor.residual)}, {"approximate", r.anchor.approximate}};
  j["terminal"] = {{"dist_z", num(r.dist_z.back())}, {"dist_x", num(r.dist_x.back())},
                   {"objective", num(r.objective.back())}};
  if (r.bregman) j["terminal"]["best_bregman"] = num(r.bregman->best.back());
  json ident;
  ident["k"] = r.identification.k ? json(*r.identification.k) : json(nullptr);
  ident["margin"] = num(r.identification.margin);
  j["identification"] = ident;
  if (r.certificate) {
    const RateCertificate& c = *r.certificate;
    j["certificate"] = {{"predicted_rho", num(c.predicted_rho)},
                        {"observed_factor", num(c.observed_factor)},
                        {"window", {c.window_lo, c.window_hi}},
                        {"window_records", c.window_records},
                        {"match", c.match},
                        {"tol_rel", c.tol_rel},
                        {"theorem_case", theorem_case_name(c.theorem_case)},
                        {"dominated_by_schedule", c.dominated_by_schedule}};
  } else {
    j["certificate"] = nullptr;
    j["certificate_note"] = r.certificate_note;
  }
  json files;
  if (r.csv_path) files["csv"] = r.csv_path->string();
  if (r.plot_bregman_path) files["bregman_plot"] = r.plot_bregman_path->string();
  if (r.plot_distance_path) files["distance_plot"] = r.plot_distance_path->string();
  j["files"] = files;
  j["wall_seconds"] = r.wall_seconds;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ---- plots

namespace {

struct Series {
  std::string label, color;
  std::vector<double> x, y;
  bool dashed = false;
};

// log10 y always; log10 x when log_x. Non-positive points are skipped.
void write_svg(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
               const std::vector<Series>& series, bool log_x) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i]) || (log_x && !(s.x[i] > 0.0))) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::floor(y0);
  y1 = std::ceil(y1);
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return T + (y1 - std::log10(v)) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ystep = std::max(1, static_cast<int>((y1 - y0) / 8));
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); e += ystep) {
    const double y = T + (y1 - e) / (y1 - y0) * (H - T - B);
    o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << y << "\" y2=\"" << y << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double x = L + (W - L - R) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, log_x ? "%.3g" : "%.0f", log_x ? std::pow(10.0, xv) : xv);
    o << "<text x=\"" << x << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i]) || (log_x && !(s.x[i] > 0.0))) continue;
      o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    o << "\"/>\n";
    const double ly = T + 16 + 16 * static_cast<double>(si);
    o << "<line x1=\"" << W - R - 170 << "\" x2=\"" << W - R - 145 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    o << "<text x=\"" << W - R - 140 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  auto out = open_out(path);
  out << o.str();
}

}  // namespace

void write_bregman_svg(const RunReport& r, const std::filesystem::path& path) {
  if (!r.bregman) throw InvalidInput("no Bregman series for this run");
  Series best{"best D(u_i), i<=k", "#1f77b4", {}, {}}, erg{"D(ergodic mean)", "#ff7f0e", {}, {}};
  for (std::size_t i = 0; i < r.bregman->k.size(); ++i) {
    const double k1 = static_cast<double>(r.bregman->k[i] + 1);
    best.x.push_back(k1);
    best.y.push_back(r.bregman->best[i]);
    erg.x.push_back(k1);
    erg.y.push_back(r.bregman->ergodic[i]);
  }
  write_svg(path, std::string(method_name(r.method)) + " / " + r.preset + ": Bregman divergence", "k + 1", {best, erg},
            true);
}

void write_distance_svg(const RunReport& r, const std::filesystem::path& path) {
  Series dz{"||z_k - z*||", "#1f77b4", {}, {}};
  for (std::size_t i = 0; i < r.trajectory.records.size(); ++i) {
    dz.x.push_back(static_cast<double>(r.trajectory.records[i].k));
    dz.y.push_back(r.dist_z[i]);
  }
  std::vector<Series> all{dz};
  if (r.certificate && r.identification.record_index) {
    // predicted rate line anchored at the identification iteration
    Series pred{"predicted rho^(k-K)", "#d62728", {}, {}, true};
    const std::size_t i0 = *r.identification.record_index;
    const double k0 = static_cast<double>(r.trajectory.records[i0].k), d0 = r.dist_z[i0];
    const double floor = 1e-16 * std::max(1.0, norm(r.anchor.z_star));
    for (std::size_t i = i0; i < r.trajectory.records.size(); ++i) {
      const double k = static_cast<double>(r.trajectory.records[i].k);
      const double v = d0 * std::pow(r.certificate->predicted_rho, k - k0);
      if (v < floor) break;
      pred.x.push_back(k);
      pred.y.push_back(v);
    }
    all.push_back(pred);
  }
  write_svg(path, std::string(method_name(r.method)) + " / " + r.preset + ": distance to the fixed point", "k", all,
            false);
}

void write_instance(const ProblemInstance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "K.csv");
    for (std::size_t i = 0; i < inst.k.rows(); ++i) {
      for (std::size_t j = 0; j < inst.k.cols(); ++j) out << (j ? "," : "") << format_double(inst.k(i, j));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "f.csv");
    for (std::size_t i = 0; i < inst.f.size(); ++i) out << format_double(inst.f[i]) << '\n';
  }
  {
    auto out = open_out(dir / "x_truth.csv");
    for (std::size_t i = 0; i < inst.x_truth.size(); ++i) out << format_double(inst.x_truth[i]) << '\n';
  }
  if (!inst.v.is_whole()) {
    auto out = open_out(dir / "V_basis.csv");
    const Matrix& b = inst.v.basis();
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) out << (j ? "," : "") << format_double(b(i, j));
      out << '\n';
    }
  }
}

}  // namespace fdr
