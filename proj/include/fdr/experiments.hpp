#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdr/rates.hpp"

namespace fdr {

enum class Family { LassoConstrained, GroupTv };
enum class Method { Fdr, Fb, Gfb, Tos };
enum class StepBase { Beta, BetaV };

const char* family_name(Family f);
const char* method_name(Method m);
Family parse_family(const std::string& s);
Method parse_method(const std::string& s);
StepBase parse_step_base(const std::string& s);

struct ProblemSpec {
  Family family = Family::LassoConstrained;
  std::size_t m = 100, n = 200;
  std::size_t sparsity = 8;       // lasso: nonzeros of the ground truth
  std::size_t subspace_dim = 40;  // lasso: dimension of V
  std::size_t block_size = 8;     // group_tv
  std::size_t active_blocks = 4;  // group_tv
  std::size_t block_jumps = 1;    // group_tv: 0 or 1 jump inside each active block
  double noise = 0.01;
  double mu = 0.1;    // lasso weight
  double mu1 = 0.1;   // group weight
  double mu2 = 0.05;  // TV weight
  std::uint64_t seed = 0;

  static ProblemSpec defaults(Family f);
  void validate() const;
  bool operator==(const ProblemSpec&) const = default;
};

struct ProblemInstance {
  ProblemSpec spec;
  Matrix k;
  Vector f;
  Vector x_truth;
  Subspace v;  // whole space for group_tv
};

ProblemInstance generate(const ProblemSpec& spec);

FdrProblem lasso_fdr_problem(const ProblemInstance& inst);
FbProblem lasso_fb_problem(const ProblemInstance& inst);  // drops the subspace constraint
GfbProblem group_tv_gfb_problem(const ProblemInstance& inst);
TosProblem group_tv_tos_problem(const ProblemInstance& inst);

struct ExperimentOptions {
  RunOptions run{5000, 0.0, 1, 0, std::nullopt};
  StepBase step_base = StepBase::Beta;
  double lambda = 1.0;
  std::size_t reference_factor = 10;
  double reference_tol = 1e-14;
  double reference_gate_nonstationary = 1e-8;
  double certify_tol = 0.10;
  std::optional<std::filesystem::path> out_dir;  // nothing written when absent
  bool write_plots = true;
};

// Flat key=value configuration (see README for the key list).
struct ExperimentConfig {
  ProblemSpec spec;
  Method method = Method::Fdr;
  std::string preset = "stationary";
  ExperimentOptions options;
};
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// ExperimentConfig with defaults for a method's family
ExperimentConfig default_config(Method m);

struct RunReport {
  ProblemSpec spec;
  Method method = Method::Fdr;
  std::string preset;
  Schedule schedule = Schedule::constant(1.0);
  ValidationReport validation;
  double beta = 0.0, beta_v = 0.0;
  Trajectory trajectory;
  Anchor anchor;  // product space for GFB
  Vector x_star;  // minimizer in R^n
  std::optional<BregmanSeries> bregman;  // FDR, FB and GFB (product space)
  std::vector<double> objective, dist_z, dist_x, dist_u;
  std::vector<std::size_t> signature_size;
  IdentificationReport identification{std::nullopt, std::nullopt, 0.0};
  std::optional<RateCertificate> certificate;
  std::string certificate_note;  // why the certificate is absent
  std::optional<std::filesystem::path> csv_path, plot_bregman_path, plot_distance_path, json_path;
  double wall_seconds = 0.0;
};

RunReport run_experiment(const ProblemSpec& spec, Method method, const std::string& preset,
                         const ExperimentOptions& opts);

// Energy-inequality audit of unrelaxed FDR under a preset.
struct AuditRun {
  RunReport report;
  AuditReport audit;
};
AuditRun run_audit(const ProblemSpec& spec, const std::string& preset, const ExperimentOptions& opts);

struct ComparisonSummary {
  std::string label;
  std::size_t terminal_k = 0;
  double terminal_dist_z = 0.0, terminal_dist_x = 0.0;
  std::optional<std::size_t> identification_k;
  std::optional<double> observed_factor, predicted_rho;
};

struct ComparisonTable {
  std::vector<std::string> labels;
  std::vector<std::size_t> k;
  std::vector<std::vector<double>> dist_z;  // [report][row], NaN where a run has no record
  std::vector<std::vector<double>> dist_x;
  std::vector<ComparisonSummary> summary;
};

ComparisonTable compare_runs(const std::vector<RunReport>& reports);

// Last iteration at which every run's ||x_k - x*|| is still above
// floor_rel * max(1, ||x*||); -1 style absence when none qualifies.
std::optional<std::size_t> last_common_resolved_k(const ComparisonTable& t, const std::vector<RunReport>& reports,
                                                  double floor_rel = 1e-10);

// ---- output

extern const char* const kTrajectoryCsvHeader;
void write_trajectory_csv(const RunReport& r, const std::filesystem::path& path);
void write_comparison_csv(const ComparisonTable& t, const std::filesystem::path& path);
void write_audit_csv(const AuditReport& a, const std::filesystem::path& path);
void write_report_json(const RunReport& r, const std::filesystem::path& path);
void write_bregman_svg(const RunReport& r, const std::filesystem::path& path);
void write_distance_svg(const RunReport& r, const std::filesystem::path& path);
void write_instance(const ProblemInstance& inst, const std::filesystem::path& dir);

// shortest round-trip-safe text for a double (17 significant digits)
std::string format_double(double v);

}  // namespace fdr
