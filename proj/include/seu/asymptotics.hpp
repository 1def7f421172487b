#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seu/design.hpp"
#include "seu/matrix.hpp"
#include "seu/response.hpp"

namespace seu {

struct StationaryResult {
  Vec v;
  double gamma = 1.0;
};

/// Left principal eigenvector of a non-negative matrix with constant row
/// sums gamma, normalized to sum 1. Power iteration on the transpose with
/// tolerance 1e-12 and a direct linear-solve fallback; the result must
/// satisfy ||vH - gamma v||_inf < 1e-10.
StationaryResult stationary_proportion(const Mat& H);

struct SpectralGapResult {
  double lambda = 0.0;
  bool defective_warning = false;
};

/// Largest real part among the non-principal eigenvalues of H/gamma.
/// Flags possible defectiveness when an eigenvalue cluster (pairwise
/// distance < 1e-8) attains the gap.
SpectralGapResult spectral_gap(const Mat& H, double gamma);

/// Noise components of the normal limits, in gamma-normalized units
/// (additions divided by the common row sum):
///   sigma1  = diag(v) - v'v                      draw multinomial noise
///   sigma2  = E[(D-H)' diag(v) (D-H)]            addition noise around its mean
///   sigma3  = diag(v_k sigma_k^2)                response noise
///   sigma23 = E[(D-H)' diag(v) diag(xi - theta)] addition/response coupling
struct SigmaSet {
  Mat sigma1, sigma2, sigma3, sigma23;
  double mc_standard_error = 0.0;  // nonzero only for the sampled (continuous) path
};

struct SigmaOptions {
  /// Sample count for the seeded Monte Carlo expectation used with
  /// continuous response models. Must be positive for such models.
  std::int64_t mc_samples = 1'000'000;
  std::uint64_t master_seed = 0;
};

SigmaSet sigma_matrices(const Design& design, const ResponseModel& model, const Vec& v,
                        const SigmaOptions& opts = {});

/// Sensitivity of the stationary flow to the estimated parameters, in
/// natural units: row k is (v dH/dx_k at theta) / v_k.
Mat f_matrix(const Design& design, const Vec& v, const Vec& theta,
             bool* one_sided_warning = nullptr);

/// Which kernel the mixed addition/response term uses. Consistent follows
/// the martingale covariance structure; LiteralPrinted keeps an extra
/// left sensitivity factor for comparison.
enum class MixedTermForm { Consistent, LiteralPrinted };

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_segments = 4000;
  MixedTermForm mixed_term = MixedTermForm::Consistent;
};

/// The seven covariance integrals, gamma-normalized. dagger1/2 are the
/// plain exponential-kernel integrals, dagger3/23 and the sharp pieces
/// involve the first and second running integrals of exp(t*Hbar).
struct LambdaIntegrals {
  Mat dagger1, dagger2, dagger3, dagger23;
  Mat sharp2, sharp3, sharp23;
  double quad_error = 0.0;
  int segments = 0;
};

/// Evaluates all integrals over the substituted variable t = -ln x in one
/// adaptive pass. Requires lambda < 1/2 (throws CltInvalid otherwise).
LambdaIntegrals lambda_integrals(const Mat& Hbar, const Mat& F_normalized,
                                 const SigmaSet& sigmas, double lambda,
                                 const QuadratureOptions& opts = {});

/// Covariance of sqrt(n)(Y_n/(n gamma) - v):
///   Hn' L1 Hn + L2 + L3 + L23 + L23'   with Hn = H/gamma.
Mat assemble_lambda_dagger(const Mat& H_normalized, const LambdaIntegrals& li);

/// Covariance of sqrt(n)(N_n/n - v):
///   L1 + (I - v'1)(S2 + S3 + S23 + S23')(I - 1'v).
Mat assemble_lambda_sharp(const Vec& v, const LambdaIntegrals& li);

/// Residual of the Lyapunov identity the first integral must satisfy:
///   (Hbar' - I/2) L1 + L1 (Hbar - I/2) + Sigma1.
Mat lyapunov_residual(const Mat& Hbar, const Mat& L1, const Mat& Sigma1);

struct TargetFormVariances {
  double gamma = 0.0;
  Vec v;
  Mat sigma_rho;
  Mat sigma_v;
  Mat lambda_dagger;          // gamma-normalized units, = 2 sigma_rho / gamma^2
  Mat lambda_dagger_natural;  // natural units, = 2 sigma_rho
  Mat lambda_sharp;           // diag(v) - v'v + 6 sigma_v
};

/// Closed forms for designs whose addition matrix has every row equal to
/// rho(theta_hat). The Jacobian may be empty, in which case central
/// finite differences are used.
TargetFormVariances target_form_variances(const std::function<Vec(const Vec&)>& rho,
                                          const std::function<Mat(const Vec&)>& rho_jacobian,
                                          const ResponseModel& model);

/// diag(sigma_k^2 / v_k): limit covariance of sqrt(n)(theta_hat - theta).
Mat theta_clt_variance(const ResponseModel& model, const Vec& v);

/// Literature variances of Y_1/n and N_1/n for the classic two-arm
/// play-the-winner urn; only defined when q1 + q2 > 1/2.
std::optional<std::pair<double, double>> rpw_reference_variances(double p1, double p2);

struct ClosedFormExample {
  Vec v;
  double var_Y1 = 0.0;  // natural units
  double var_N1 = 0.0;
  Vec lambda_dagger_diag;  // natural units
};

/// Direct evaluations of the printed two-arm formulas, used as oracles.
ClosedFormExample opt_alloc_closed_form(double p1, double p2);
ClosedFormExample rpw_target_closed_form(double p1, double p2);

struct AsymptoticReport {
  std::string design_id;
  int K = 0;
  Vec v;
  double gamma = 1.0;
  double lambda = 0.0;
  bool clt_valid = false;
  bool lln_valid = false;
  bool defective_warning = false;
  ValidationReport validation;
  Mat F;             // natural units
  SigmaSet sigmas;   // gamma-normalized
  std::optional<Mat> lambda_dagger;          // gamma-normalized units
  std::optional<Mat> lambda_dagger_natural;  // natural units (gamma^2 scaled)
  std::optional<Mat> lambda_sharp;
  Mat theta_clt;
  std::optional<TargetFormVariances> closed_form;
  std::optional<double> discrepancy;  // quadrature vs closed form, relative
  std::string method = "quadrature";
  MixedTermForm mixed_term = MixedTermForm::Consistent;
  double quad_error = 0.0;
};

struct ReportOptions {
  QuadratureOptions quadrature;
  SigmaOptions sigma;
};

/// Runs the whole pipeline: validation, stationary proportion, spectral
/// gap, noise matrices, sensitivity matrix, covariance integrals, and the
/// closed forms with their discrepancy when the design has target form.
/// A design outside the normal-limit regime yields a report with the
/// covariance fields absent and clt_valid = false.
AsymptoticReport full_report(const Design& design, const ResponseModel& model,
                             const ReportOptions& opts = {});

/// Fixed-field JSON document; byte-stable for identical inputs.
std::string report_to_json(const AsymptoticReport& report);

}  // namespace seu
