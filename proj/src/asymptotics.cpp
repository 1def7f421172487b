#include "seu/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "seu/errors.hpp"
#include "seu/quadrature.hpp"
#include "seu/rng.hpp"

namespace seu {

namespace {

constexpr std::uint64_t kSigmaSamplerStream = 0x4000000000000000ULL;

Mat projector_right(const Vec& v) {
  // I - 1'v : annihilates the all-ones column on the left spectrum side.
  const std::size_t K = v.size();
  Mat p = Mat::identity(K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) p(i, j) -= v[j];
  return p;
}

}  // namespace

StationaryResult stationary_proportion(const Mat& H) {
  if (H.rows() != H.cols() || H.rows() < 2)
    throw InvalidArgument("stationary_proportion: need a square matrix, K >= 2");
  const std::size_t K = H.rows();

  double gamma = 0.0;
  for (std::size_t k = 0; k < K; ++k) gamma += vec_sum(H.row(k));
  gamma /= static_cast<double>(K);
  if (!(gamma > 0.0)) throw AssumptionViolation("stationary_proportion: row sum is not positive");
  for (std::size_t k = 0; k < K; ++k) {
    if (std::abs(vec_sum(H.row(k)) - gamma) > 1e-8 * std::max(1.0, std::abs(gamma)))
      throw AssumptionViolation("stationary_proportion: row sums are not constant");
  }

  Mat Hn = H;
  Hn *= 1.0 / gamma;

  // Power iteration on the transpose; v is a fixed point of x -> x Hn.
  Vec x(K, 1.0 / static_cast<double>(K));
  bool converged = false;
  for (int it = 0; it < 50000; ++it) {
    Vec y = vec_mat(x, Hn);
    const double s = vec_sum(y);
    for (double& yi : y) yi /= s;
    const double delta = max_abs_diff(x, y);
    x = std::move(y);
    if (delta < 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // Direct solve of x (Hn - I) = 0 with the normalization sum(x) = 1
    // replacing the redundant last equation.
    Mat A(K, K);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) A(i, j) = Hn(j, i) - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < K; ++j) A(K - 1, j) = 1.0;
    Vec b(K, 0.0);
    b[K - 1] = 1.0;
    x = lu_solve(A, b);
  }

  const double s = vec_sum(x);
  for (double& xi : x) xi /= s;

  Vec residual = vec_mat(x, H);
  for (std::size_t k = 0; k < K; ++k) residual[k] -= gamma * x[k];
  double rnorm = 0.0;
  for (double r : residual) rnorm = std::max(rnorm, std::abs(r));
  if (rnorm > 1e-10 * std::max(1.0, std::abs(gamma))) {
    std::ostringstream os;
    os << "stationary_proportion: eigen residual " << rnorm
       << " exceeds tolerance; principal eigenvalue may not be simple";
    throw AssumptionViolation(os.str());
  }

  // Simplicity of the principal eigenvalue.
  int near_one = 0;
  for (const auto& e : eigenvalues(Hn))
    if (std::abs(e - std::complex<double>(1.0, 0.0)) < 1e-8) ++near_one;
  if (near_one != 1)
    throw AssumptionViolation(
        "stationary_proportion: principal eigenvalue is not simple (defective warning)");

  return {std::move(x), gamma};
}

SpectralGapResult spectral_gap(const Mat& H, double gamma) {
  Mat Hn = H;
  Hn *= 1.0 / gamma;
  auto eigs = eigenvalues(Hn);

  // Drop one copy of the principal eigenvalue (the one closest to 1).
  std::size_t principal = 0;
  double best = 1e300;
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    const double d = std::abs(eigs[i] - std::complex<double>(1.0, 0.0));
    if (d < best) {
      best = d;
      principal = i;
    }
  }
  eigs.erase(eigs.begin() + principal);

  SpectralGapResult res;
  if (eigs.empty()) return res;
  double lambda = -1e300;
  for (const auto& e : eigs) lambda = std::max(lambda, e.real());
  res.lambda = lambda;

  std::vector<std::complex<double>> attaining;
  for (const auto& e : eigs)
    if (e.real() > lambda - 1e-8) attaining.push_back(e);
  for (std::size_t i = 0; i < attaining.size() && !res.defective_warning; ++i)
    for (std::size_t j = i + 1; j < attaining.size(); ++j)
      if (std::abs(attaining[i] - attaining[j]) < 1e-8) {
        res.defective_warning = true;
        break;
      }
  return res;
}

SigmaSet sigma_matrices(const Design& design, const ResponseModel& model, const Vec& v,
                        const SigmaOptions& opts) {
  const int K = design.K;
  const Vec& theta = model.theta();
  SigmaSet s;
  s.sigma1 = diag(v) - outer(v, v);
  s.sigma3 = Mat(K, K);
  for (int k = 0; k < K; ++k) s.sigma3(k, k) = v[k] * model.sigma2()[k];
  s.sigma2 = Mat(K, K);
  s.sigma23 = Mat(K, K);

  const double g = design.gamma;

  if (model.finite_support()) {
    // Row k of the addition matrix depends only on arm k's own response,
    // so the expectations reduce to exact per-arm outcome sums.
    for (int k = 0; k < K; ++k) {
      const auto& sup = model.support()[k];
      const std::size_t m = sup.outcomes.size();
      std::vector<Vec> rows(m);
      Vec hrow(K, 0.0);
      for (std::size_t o = 0; o < m; ++o) {
        rows[o] = design.addition_rule(theta, k, sup.outcomes[o]);
        for (int j = 0; j < K; ++j) hrow[j] += sup.probs[o] * rows[o][j];
      }
      for (std::size_t o = 0; o < m; ++o) {
        Vec dev(K);
        for (int j = 0; j < K; ++j) dev[j] = rows[o][j] - hrow[j];
        const double w2 = v[k] * sup.probs[o];
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < K; ++j) s.sigma2(i, j) += w2 * dev[i] * dev[j];
        const double w23 = w2 * (sup.outcomes[o] - theta[k]);
        for (int i = 0; i < K; ++i) s.sigma23(i, k) += w23 * dev[i];
      }
    }
  } else {
    if (opts.mc_samples <= 0)
      throw ConfigError("sigma_matrices: continuous model needs a positive expectation sample size");
    // Seeded expectation on a reserved stream, two passes per arm (mean,
    // then central moments) for stability.
    double max_se = 0.0;
    for (int k = 0; k < K; ++k) {
      RngStream rng(opts.master_seed, kSigmaSamplerStream + static_cast<std::uint64_t>(k));
      Vec hrow(K, 0.0);
      std::vector<double> draws(static_cast<std::size_t>(opts.mc_samples));
      for (auto& d : draws) d = model.sample(k, rng);
      for (double d : draws) {
        const Vec row = design.addition_rule(theta, k, d);
        for (int j = 0; j < K; ++j) hrow[j] += row[j];
      }
      for (int j = 0; j < K; ++j) hrow[j] /= static_cast<double>(opts.mc_samples);
      Mat acc2(K, K);
      Vec acc23(K, 0.0);
      Mat acc2_sq(K, K);  // for the standard error of the dominant entry
      for (double d : draws) {
        const Vec row = design.addition_rule(theta, k, d);
        Vec dev(K);
        for (int j = 0; j < K; ++j) dev[j] = row[j] - hrow[j];
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < K; ++j) {
            const double t = dev[i] * dev[j];
            acc2(i, j) += t;
            acc2_sq(i, j) += t * t;
          }
        for (int i = 0; i < K; ++i) acc23[i] += dev[i] * (d - theta[k]);
      }
      const double inv_n = 1.0 / static_cast<double>(opts.mc_samples);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
          const double mean = acc2(i, j) * inv_n;
          s.sigma2(i, j) += v[k] * mean;
          const double var = std::max(0.0, acc2_sq(i, j) * inv_n - mean * mean);
          max_se = std::max(max_se, v[k] * std::sqrt(var * inv_n));
        }
      for (int i = 0; i < K; ++i) s.sigma23(i, k) += v[k] * acc23[i] * inv_n;
    }
    s.mc_standard_error = max_se;
  }

  // Additions enter the limit theory divided by the common row sum.
  s.sigma2 *= 1.0 / (g * g);
  s.sigma23 *= 1.0 / g;
  return s;
}

Mat f_matrix(const Design& design, const Vec& v, const Vec& theta, bool* one_sided_warning) {
  const int K = design.K;
  for (double vk : v)
    if (!(vk > 0.0)) throw AssumptionViolation("f_matrix: limiting proportions must be positive");
  JacobianResult jac = generating_matrix_jacobian(design, theta);
  if (one_sided_warning) *one_sided_warning = jac.one_sided;
  Mat F(K, K);
  for (int k = 0; k < K; ++k) {
    const Vec fk = vec_mat(v, jac.dH[k]);
    for (int j = 0; j < K; ++j) F(k, j) = fk[j] / v[k];
  }
  return F;
}

LambdaIntegrals lambda_integrals(const Mat& Hbar, const Mat& F_normalized,
                                 const SigmaSet& sigmas, double lambda,
                                 const QuadratureOptions& opts) {
  if (!(lambda < 0.5)) {
    std::ostringstream os;
    os << "covariance integrals undefined: spectral gap " << lambda << " >= 1/2";
    throw CltInvalid(os.str());
  }
  const std::size_t K = Hbar.rows();

  const Mat f_sig3_f = transpose(F_normalized) * sigmas.sigma3 * F_normalized;
  const Mat sig23_f = sigmas.sigma23 * F_normalized;
  const Mat mixed_left = opts.mixed_term == MixedTermForm::Consistent
                             ? sig23_f
                             : transpose(F_normalized) * sig23_f;

  // Everything is integrated in the shifted frame: with
  //   E(t)  = exp(t(Hbar - I/2)),
  //   G1(t) = exp(-t/2) * int_0^t exp(s Hbar) ds,
  //   G2(t) = exp(-t/2) * int_0^t int_0^s exp(u Hbar) du ds,
  // each kernel is a plain product of two factors and the e^{-t} weight is
  // already absorbed, so factors stay bounded all the way to the cutoff
  // even when lambda is close to 1/2.
  Mat aug(3 * K, 3 * K);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) aug(i, j) = Hbar(i, j);
    aug(i, i) -= 0.5;
    aug(K + i, K + i) = -0.5;
    aug(2 * K + i, 2 * K + i) = -0.5;
    aug(i, K + i) = 1.0;
    aug(K + i, 2 * K + i) = 1.0;
  }

  double input_scale = std::max({max_abs(sigmas.sigma1), max_abs(sigmas.sigma2),
                                 max_abs(sigmas.sigma3), max_abs(sigmas.sigma23),
                                 max_abs(F_normalized), 1.0});
  const double T =
      std::max(60.0, (40.0 + 8.0 * std::log1p(input_scale)) / (1.0 - 2.0 * lambda));

  auto integrand = [&](double t) -> MatStack {
    Mat E = expm(t * aug);
    Mat e1(K, K), g1(K, K), g2(K, K);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) {
        e1(i, j) = E(i, j);
        g1(i, j) = E(i, K + j);
        g2(i, j) = E(i, 2 * K + j);
      }
    const Mat e1t = transpose(e1);
    const Mat g1t = transpose(g1);
    return MatStack{
        e1t * sigmas.sigma1 * e1,  // -> dagger1
        e1t * sigmas.sigma2 * e1,  // -> dagger2
        g1t * f_sig3_f * g1,       // -> dagger3
        e1t * mixed_left * g1,     // -> dagger23
        g1t * sigmas.sigma2 * g1,  // -> sharp2
        transpose(g2) * f_sig3_f * g2,  // -> sharp3
        g1t * mixed_left * g2,     // -> sharp23
    };
  };

  QuadratureResult q = adaptive_gauss_kronrod(integrand, 0.0, T, opts.abs_tol, opts.max_segments);
  LambdaIntegrals li;
  li.dagger1 = q.value[0];
  li.dagger2 = q.value[1];
  li.dagger3 = q.value[2];
  li.dagger23 = q.value[3];
  li.sharp2 = q.value[4];
  li.sharp3 = q.value[5];
  li.sharp23 = q.value[6];
  li.quad_error = q.error_estimate;
  li.segments = q.segments;
  return li;
}

Mat assemble_lambda_dagger(const Mat& H_normalized, const LambdaIntegrals& li) {
  return transpose(H_normalized) * li.dagger1 * H_normalized + li.dagger2 + li.dagger3 +
         li.dagger23 + transpose(li.dagger23);
}

Mat assemble_lambda_sharp(const Vec& v, const LambdaIntegrals& li) {
  const Mat R = projector_right(v);
  const Mat inner = li.sharp2 + li.sharp3 + li.sharp23 + transpose(li.sharp23);
  return li.dagger1 + transpose(R) * inner * R;
}

Mat lyapunov_residual(const Mat& Hbar, const Mat& L1, const Mat& Sigma1) {
  const Mat A = Hbar - 0.5 * Mat::identity(Hbar.rows());
  return transpose(A) * L1 + L1 * A + Sigma1;
}

TargetFormVariances target_form_variances(const std::function<Vec(const Vec&)>& rho,
                                          const std::function<Mat(const Vec&)>& rho_jacobian,
                                          const ResponseModel& model) {
  const Vec& theta = model.theta();
  const int K = model.arms();
  const Vec r = rho(theta);
  if (static_cast<int>(r.size()) != K)
    throw InvalidArgument("target_form_variances: rho arity mismatch");
  for (double rk : r)
    if (!(rk > 0.0)) throw DesignDomainError("target_form_variances: rho must be positive at theta");

  TargetFormVariances out;
  out.gamma = vec_sum(r);
  out.v.resize(K);
  for (int k = 0; k < K; ++k) out.v[k] = r[k] / out.gamma;

  Mat J(K, K);
  if (rho_jacobian) {
    J = rho_jacobian(theta);
  } else {
    for (int k = 0; k < K; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
      Vec xp = theta, xm = theta;
      xp[k] += h;
      xm[k] -= h;
      const Vec rp = rho(xp), rm = rho(xm);
      for (int j = 0; j < K; ++j) J(k, j) = (rp[j] - rm[j]) / (2.0 * h);
    }
  }

  Mat fisher_inv(K, K);
  for (int k = 0; k < K; ++k) {
    if (!(out.v[k] > 0.0))
      throw AssumptionViolation("target_form_variances: zero limiting proportion");
    fisher_inv(k, k) = model.sigma2()[k] / out.v[k];
  }

  out.sigma_rho = transpose(J) * fisher_inv * J;
  const Mat Jv = (1.0 / out.gamma) * (J * projector_right(out.v));
  out.sigma_v = transpose(Jv) * fisher_inv * Jv;

  out.lambda_dagger_natural = 2.0 * out.sigma_rho;
  out.lambda_dagger = (1.0 / (out.gamma * out.gamma)) * out.lambda_dagger_natural;
  out.lambda_sharp = diag(out.v) - outer(out.v, out.v) + 6.0 * out.sigma_v;
  return out;
}

Mat theta_clt_variance(const ResponseModel& model, const Vec& v) {
  const int K = model.arms();
  Mat m(K, K);
  for (int k = 0; k < K; ++k) {
    if (!(v[k] > 0.0))
      throw AssumptionViolation("theta_clt_variance: limiting proportions must be positive");
    m(k, k) = model.sigma2()[k] / v[k];
  }
  return m;
}

std::optional<std::pair<double, double>> rpw_reference_variances(double p1, double p2) {
  if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0))
    throw InvalidArgument("rpw_reference_variances: probabilities must lie in (0,1)");
  const double q1 = 1.0 - p1;
  const double q2 = 1.0 - p2;
  const double s = q1 + q2;
  if (!(s > 0.5)) return std::nullopt;
  const double denom = (2.0 * s - 1.0) * s * s;
  const double var_y = q1 * q2 / denom;
  const double var_n = q1 * q2 * (1.0 + 2.0 * (p1 + p2)) / denom;
  return std::make_pair(var_y, var_n);
}

ClosedFormExample opt_alloc_closed_form(double p1, double p2) {
  const double q1 = 1.0 - p1;
  const double q2 = 1.0 - p2;
  const double s = std::sqrt(p1) + std::sqrt(p2);
  ClosedFormExample out;
  out.v = {std::sqrt(p1) / s, std::sqrt(p2) / s};
  out.lambda_dagger_diag = {q1 * std::sqrt(p1) / (2.0 * s), q2 * std::sqrt(p2) / (2.0 * s)};
  out.var_Y1 = out.lambda_dagger_diag[0];
  out.var_N1 = std::sqrt(p1 * p2) / (s * s) +
               1.5 / (s * s * s) * (p2 * q1 / std::sqrt(p1) + p1 * q2 / std::sqrt(p2));
  return out;
}

ClosedFormExample rpw_target_closed_form(double p1, double p2) {
  const double q1 = 1.0 - p1;
  const double q2 = 1.0 - p2;
  const double s = q1 + q2;
  const double s3 = s * s * s;
  ClosedFormExample out;
  out.v = {q2 / s, q1 / s};
  out.var_Y1 = 2.0 * q1 * q2 * (p1 + p2) / s3;
  out.var_N1 = q1 * q2 * (2.0 + 5.0 * (p1 + p2)) / s3;
  out.lambda_dagger_diag = {out.var_Y1, out.var_Y1};
  return out;
}

AsymptoticReport full_report(const Design& design, const ResponseModel& model,
                             const ReportOptions& opts) {
  AsymptoticReport rep;
  rep.design_id = design.id;
  rep.K = design.K;
  rep.mixed_term = opts.quadrature.mixed_term;
  rep.validation = validate_design(design, model);

  const Mat H = generating_matrix(design, model.theta());
  const StationaryResult st = stationary_proportion(H);
  rep.v = st.v;
  rep.gamma = st.gamma;
  const SpectralGapResult gap = spectral_gap(H, st.gamma);
  rep.lambda = gap.lambda;
  rep.defective_warning = gap.defective_warning;
  rep.lln_valid = gap.lambda < 1.0;
  rep.clt_valid = gap.lambda < 0.5;

  SigmaOptions sopts = opts.sigma;
  rep.sigmas = sigma_matrices(design, model, st.v, sopts);
  rep.F = f_matrix(design, st.v, model.theta());
  rep.theta_clt = theta_clt_variance(model, st.v);

  if (rep.clt_valid) {
    Mat Hn = H;
    Hn *= 1.0 / st.gamma;
    const Mat Hbar = Hn - outer(Vec(design.K, 1.0), st.v);
    Mat Fn = rep.F;
    Fn *= 1.0 / st.gamma;
    const LambdaIntegrals li =
        lambda_integrals(Hbar, Fn, rep.sigmas, gap.lambda, opts.quadrature);
    rep.quad_error = li.quad_error;
    Mat ld = assemble_lambda_dagger(Hn, li);
    rep.lambda_dagger = ld;
    rep.lambda_dagger_natural = (st.gamma * st.gamma) * ld;
    rep.lambda_sharp = assemble_lambda_sharp(st.v, li);
  }

  if (design.target_form && design.rho) {
    const TargetFormVariances cf =
        target_form_variances(design.rho, design.rho_jacobian, model);
    rep.closed_form = cf;
    if (rep.lambda_dagger && rep.lambda_sharp) {
      const double scale =
          std::max({max_abs(cf.lambda_dagger), max_abs(cf.lambda_sharp), 1e-300});
      const double d1 = max_abs(*rep.lambda_dagger - cf.lambda_dagger);
      const double d2 = max_abs(*rep.lambda_sharp - cf.lambda_sharp);
      rep.discrepancy = std::max(d1, d2) / scale;
    }
  }
  return rep;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string report_to_json(const AsymptoticReport& rep) {
  nlohmann::json j;
  j["design"] = rep.design_id;
  j["arms"] = rep.K;
  j["v"] = rep.v;
  j["gamma"] = rep.gamma;
  j["lambda"] = rep.lambda;
  j["clt_valid"] = rep.clt_valid;
  j["lln_valid"] = rep.lln_valid;
  j["defective_warning"] = rep.defective_warning;
  j["sigma1"] = mat_to_json(rep.sigmas.sigma1);
  j["sigma2"] = mat_to_json(rep.sigmas.sigma2);
  j["sigma3"] = mat_to_json(rep.sigmas.sigma3);
  j["sigma23"] = mat_to_json(rep.sigmas.sigma23);
  if (rep.sigmas.mc_standard_error > 0.0)
    j["sigma_mc_standard_error"] = rep.sigmas.mc_standard_error;
  j["F"] = mat_to_json(rep.F);
  j["theta_clt"] = mat_to_json(rep.theta_clt);
  j["method"] = rep.method;
  j["mixed_term"] =
      rep.mixed_term == MixedTermForm::Consistent ? "consistent" : "literal";
  j["units"] = {{"lambda_dagger", "Y/(n*gamma) around v"},
                {"lambda_dagger_natural", "Y/n around gamma*v"},
                {"lambda_sharp", "N/n around v"}};
  if (rep.lambda_dagger) {
    j["lambda_dagger"] = mat_to_json(*rep.lambda_dagger);
    j["lambda_dagger_natural"] = mat_to_json(*rep.lambda_dagger_natural);
    j["lambda_sharp"] = mat_to_json(*rep.lambda_sharp);
    j["quad_error"] = rep.quad_error;
  }
  if (rep.closed_form) {
    nlohmann::json cf;
    cf["sigma_rho"] = mat_to_json(rep.closed_form->sigma_rho);
    cf["sigma_v"] = mat_to_json(rep.closed_form->sigma_v);
    cf["lambda_dagger"] = mat_to_json(rep.closed_form->lambda_dagger);
    cf["lambda_dagger_natural"] = mat_to_json(rep.closed_form->lambda_dagger_natural);
    cf["lambda_sharp"] = mat_to_json(rep.closed_form->lambda_sharp);
    j["closed_form"] = std::move(cf);
  }
  if (rep.discrepancy) j["discrepancy"] = *rep.discrepancy;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.validation.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"informational", c.informational},
                      {"detail", c.detail}});
  }
  j["validation"] = std::move(checks);
  return j.dump(2) + "\n";
}

}  // namespace seu
