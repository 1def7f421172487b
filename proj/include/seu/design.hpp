#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seu/matrix.hpp"
#include "seu/response.hpp"

namespace seu {

/// An addition rule together with its generating-matrix function.
///
/// addition_rule(theta_hat, arm, xi) is the particle vector added after a
/// draw of `arm` with observed response `xi`, computed from the estimates
/// as they stood *before* that response was folded in. H_fn(x) is the
/// conditional expectation of the addition matrix given estimates x, with
/// the response distribution fixed at the true parameter.
struct Design {
  std::string id;
  int K = 0;
  double gamma = 1.0;  // common row sum of H at the true parameter
  bool estimate_dependent = true;
  /// True when every row of the addition matrix equals rho(theta_hat),
  /// i.e. the rule targets a pre-specified proportion; closed-form
  /// covariances exist for this shape.
  bool target_form = false;
  double clamp_epsilon = 1e-3;
  /// Clamp estimates into [eps, 1-eps] before they reach the rule. On for
  /// probability-domain rules; harmless identity elsewhere.
  bool clamp_to_unit = true;

  std::function<Vec(const Vec& theta_hat, int arm, double xi)> addition_rule;
  std::function<Mat(const Vec& x)> H_fn;
  /// Analytic partials dH/dx_k, when available; otherwise empty and the
  /// finite-difference fallback is used.
  std::function<std::vector<Mat>(const Vec& x)> H_jacobian;
  /// Target proportion generator, set only for target_form designs.
  std::function<Vec(const Vec& x)> rho;
  std::function<Mat(const Vec& x)> rho_jacobian;  // entry (i,j) = d rho_j / d x_i

  Vec clamp(const Vec& x) const;
};

/// Success-driven multi-arm rule: a success on arm k returns one particle
/// of type k; a failure spreads particles over the other arms in
/// proportion to their estimated success rates.
Design bhs_design(int K, const Vec& theta, double clamp_epsilon = 1e-3);

/// Two-arm rule targeting sqrt(p1):sqrt(p2); adds (sqrt(p1_hat), sqrt(p2_hat))
/// regardless of the drawn arm and response.
Design optimal_allocation_design(const Vec& theta, double clamp_epsilon = 1e-3);

/// Two-arm rule targeting the play-the-winner proportion
/// (q2/(q1+q2), q1/(q1+q2)) through the estimates, response-free.
Design rpw_target_design(const Vec& theta, double clamp_epsilon = 1e-3);

/// Classic randomized play-the-winner comparator: estimate-free, success
/// on arm k adds a type-k particle, failure adds one of the other type.
Design classic_rpw_design(const Vec& theta);

/// General target design: every row of the addition matrix is rho(theta_hat).
/// The limiting allocation is rho(theta)/sum(rho(theta)).
Design generic_target_design(int K, std::function<Vec(const Vec&)> rho_fn,
                             std::function<Mat(const Vec&)> rho_jac, const Vec& theta,
                             std::string id = "generic", double clamp_epsilon = 1e-3);

/// Evaluates H_fn with domain checks.
Mat generating_matrix(const Design& design, const Vec& x);

struct JacobianResult {
  std::vector<Mat> dH;     // one K x K matrix per coordinate
  bool analytic = false;
  bool one_sided = false;  // finite differences had to fall back near a boundary
};

/// Analytic Jacobian when the design provides one, otherwise central
/// finite differences with step 1e-5 * max(1, |x_k|); one-sided (with a
/// warning flag) when x_k sits within a step of the clamped boundary.
JacobianResult generating_matrix_jacobian(const Design& design, const Vec& x);

struct ValidationCheck {
  std::string name;
  bool pass = false;
  bool informational = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  Vec v;
  double gamma = 0.0;
  double lambda = 0.0;
  bool defective_warning = false;
  bool lln_valid = false;
  bool clt_valid = false;
  bool all_required_pass() const;
};

/// Structural checks: constant row sums, positive limiting proportions,
/// spectral-gap regimes, non-negative additions over the support, moment
/// bounds (informational for finite support). Reports, never throws.
ValidationReport validate_design(const Design& design, const ResponseModel& model);

}  // namespace seu
