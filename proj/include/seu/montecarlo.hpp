#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seu/accumulators.hpp"
#include "seu/asymptotics.hpp"
#include "seu/design.hpp"
#include "seu/matrix.hpp"
#include "seu/response.hpp"
#include "seu/urn.hpp"

namespace seu {

struct BatchConfig {
  Design design;
  ResponseModel model;
  std::int64_t horizon = 2000;
  std::int64_t replications = 1;
  std::uint64_t master_seed = 0;
  std::vector<std::int64_t> checkpoints;
  Vec initial_composition;  // empty -> all ones
  int threads = 0;          // 0 -> hardware count, capped by SEU_THREADS
};

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

struct CheckpointStats {
  std::int64_t stage = 0;
  std::int64_t replications = 0;
  Vec mean_N_over_n;
  Vec mean_Y_over_n;
  Vec mean_theta_hat;
  bool covariance_defined = false;
  Mat cov_N;      // of sqrt(n)(N/n - v)
  Mat cov_Y;      // of sqrt(n)(Y/n - gamma v), natural units
  Mat cov_theta;  // of sqrt(n)(theta_hat - theta)
  MomentSummary first_N;      // first coordinate of the scaled N deviation
  MomentSummary first_theta;  // first coordinate of the scaled estimate deviation
  Vec se_mean_N;              // standard error of mean_N_over_n
  double se_variance_rel = 0.0;  // ~ sqrt(2/(R-1)), sampling error of a variance
};

struct EnsembleStats {
  Vec predicted_v;
  double predicted_gamma = 1.0;
  std::vector<CheckpointStats> checkpoints;
  const CheckpointStats& terminal() const { return checkpoints.back(); }
};

/// Runs R independent trials on streams 0..R-1 and aggregates per-checkpoint
/// moments. Replications are processed in fixed-size chunks whose partial
/// accumulators merge in chunk order, so the result is a pure function of
/// the config no matter how many workers run.
EnsembleStats run_batch(const BatchConfig& config);

struct LlnDiagnostic {
  std::vector<std::pair<std::int64_t, double>> series;  // (stage, max_k |N/m - v|)
  double slope = 0.0;  // least-squares slope on log-log axes
  bool reliable = false;  // checkpoints span >= 2 decades and >= 3 points
};

/// Deviation-decay diagnostic along one trajectory. Healthy designs show
/// slope <= -0.4 at desk scale; the flag marks series too short to judge.
LlnDiagnostic lln_diagnostic(const std::vector<Snapshot>& snapshots, const Vec& v);

struct CltRow {
  std::string statistic;  // cov_N | cov_Y | cov_theta
  int i = 0, j = 0;       // one-based coordinates
  double predicted = 0.0;
  double empirical = 0.0;
  double error = 0.0;
  bool relative = false;
};

struct CltComparison {
  std::vector<CltRow> rows;
  MomentSummary first_N;
  bool moment_gates_checked = false;
  bool moments_pass = false;
};

/// Entry-wise comparison of the terminal empirical covariances against the
/// predicted ones. Errors are relative (scaled by the predicted diagonal)
/// where that diagonal is meaningful, absolute otherwise. Skew/kurtosis
/// gates are evaluated when the batch is large enough (R >= 20000). Throws
/// CltInvalid when the report says the normal limit does not exist.
CltComparison clt_check(const EnsembleStats& stats, const AsymptoticReport& report);

struct CompareRow {
  std::string design_id;
  bool clt_valid = false;
  Vec v;
  Vec lambda_sharp_diag;  // empty when clt invalid
  Vec empirical_var_N;    // empty when replications < 2
  std::optional<double> rpw_reference_var_N;  // literature value, when applicable
};

/// Side-by-side summary of several designs sharing one response model.
std::vector<CompareRow> compare_designs(const std::vector<BatchConfig>& configs,
                                        const ReportOptions& opts = {});

void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats,
                        const AsymptoticReport* report);
std::string ensemble_to_json(const EnsembleStats& stats);
void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows);
void write_compare_text(std::ostream& os, const std::vector<CompareRow>& rows);

}  // namespace seu
