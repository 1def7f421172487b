#include "seu/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "seu/asymptotics.hpp"
#include "seu/errors.hpp"

namespace seu {

namespace {

Vec clamp_unit(const Vec& x, double eps) {
  Vec y = x;
  for (double& v : y) v = std::min(std::max(v, eps), 1.0 - eps);
  return y;
}

void check_arity(const Design& d, const Vec& x) {
  if (static_cast<int>(x.size()) != d.K)
    throw InvalidArgument("estimate vector size does not match design arm count");
}

}  // namespace

Vec Design::clamp(const Vec& x) const {
  return clamp_to_unit ? clamp_unit(x, clamp_epsilon) : x;
}

Design bhs_design(int K, const Vec& theta, double clamp_epsilon) {
  if (K < 2) throw InvalidArgument("bhs design needs K >= 2");
  if (static_cast<int>(theta.size()) != K)
    throw InvalidArgument("bhs design parameter size mismatch");
  Design d;
  d.id = "bhs";
  d.K = K;
  d.estimate_dependent = true;
  d.target_form = false;
  d.clamp_epsilon = clamp_epsilon;

  const double eps = d.clamp_epsilon;
  d.addition_rule = [K, eps](const Vec& th, int arm, double xi) {
    Vec p = clamp_unit(th, eps);
    Vec add(K, 0.0);
    if (xi > 0.5) {
      add[arm] = 1.0;
    } else {
      double m = vec_sum(p);
      const double denom = m - p[arm];  // >= (K-1)*eps, never zero
      for (int j = 0; j < K; ++j)
        if (j != arm) add[j] = p[j] / denom;
    }
    return add;
  };
  d.H_fn = [K, theta, eps](const Vec& x) {
    Vec p = clamp_unit(x, eps);
    Mat h(K, K);
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int i = 0; i < K; ++i)
        if (i != k) s += p[i];
      const double qk = 1.0 - theta[k];
      for (int j = 0; j < K; ++j) h(k, j) = (j == k) ? theta[k] : qk * p[j] / s;
    }
    return h;
  };
  d.H_jacobian = [K, theta](const Vec& x) {
    // d h_{kj} / d x_m = q_k (delta_{jm} S_k - x_j) / S_k^2 for j != k, m != k.
    std::vector<Mat> out(K, Mat(K, K));
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int i = 0; i < K; ++i)
        if (i != k) s += x[i];
      const double qk = 1.0 - theta[k];
      for (int m = 0; m < K; ++m) {
        if (m == k) continue;
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          out[m](k, j) = qk * (((j == m) ? s : 0.0) - x[j]) / (s * s);
        }
      }
    }
    return out;
  };
  d.gamma = 1.0;
  return d;
}

Design optimal_allocation_design(const Vec& theta, double clamp_epsilon) {
  if (theta.size() != 2) throw InvalidArgument("optimal allocation design is two-arm");
  auto rho = [](const Vec& x) { return Vec{std::sqrt(x[0]), std::sqrt(x[1])}; };
  auto jac = [](const Vec& x) {
    Mat j(2, 2);
    j(0, 0) = 0.5 / std::sqrt(x[0]);
    j(1, 1) = 0.5 / std::sqrt(x[1]);
    return j;
  };
  return generic_target_design(2, rho, jac, theta, "opt-alloc", clamp_epsilon);
}

Design rpw_target_design(const Vec& theta, double clamp_epsilon) {
  if (theta.size() != 2) throw InvalidArgument("rpw target design is two-arm");
  auto rho = [](const Vec& x) {
    const double q1 = 1.0 - x[0];
    const double q2 = 1.0 - x[1];
    const double s = q1 + q2;
    return Vec{q2 / s, q1 / s};
  };
  auto jac = [](const Vec& x) {
    const double q1 = 1.0 - x[0];
    const double q2 = 1.0 - x[1];
    const double s2 = (q1 + q2) * (q1 + q2);
    Mat j(2, 2);
    j(0, 0) = q2 / s2;
    j(0, 1) = -q2 / s2;
    j(1, 0) = -q1 / s2;
    j(1, 1) = q1 / s2;
    return j;
  };
  return generic_target_design(2, rho, jac, theta, "rpw-target", clamp_epsilon);
}

Design classic_rpw_design(const Vec& theta) {
  if (theta.size() != 2) throw InvalidArgument("classic rpw design is two-arm");
  Design d;
  d.id = "rpw-classic";
  d.K = 2;
  d.estimate_dependent = false;
  d.target_form = false;
  d.addition_rule = [](const Vec&, int arm, double xi) {
    Vec add(2, 0.0);
    add[xi > 0.5 ? arm : 1 - arm] = 1.0;
    return add;
  };
  const double p1 = theta[0];
  const double p2 = theta[1];
  d.H_fn = [p1, p2](const Vec&) {
    return Mat::from_rows({{p1, 1.0 - p1}, {1.0 - p2, p2}});
  };
  d.H_jacobian = [](const Vec&) { return std::vector<Mat>{Mat(2, 2), Mat(2, 2)}; };
  d.gamma = 1.0;
  return d;
}

Design generic_target_design(int K, std::function<Vec(const Vec&)> rho_fn,
                             std::function<Mat(const Vec&)> rho_jac, const Vec& theta,
                             std::string id, double clamp_epsilon) {
  if (K < 2) throw InvalidArgument("target design needs K >= 2");
  if (static_cast<int>(theta.size()) != K)
    throw InvalidArgument("target design parameter size mismatch");
  Design d;
  d.id = std::move(id);
  d.K = K;
  d.estimate_dependent = true;
  d.target_form = true;
  d.clamp_epsilon = clamp_epsilon;

  const double eps = d.clamp_epsilon;
  auto eval_rho = [rho_fn, K, eps](const Vec& x) {
    Vec r = rho_fn(clamp_unit(x, eps));
    if (static_cast<int>(r.size()) != K)
      throw DesignDomainError("rho returned wrong arity");
    for (double v : r)
      if (!(v > 0.0) || !std::isfinite(v))
        throw DesignDomainError("rho must be strictly positive on the clamped domain");
    return r;
  };
  d.rho = eval_rho;
  if (rho_jac) {
    d.rho_jacobian = [rho_jac, eps](const Vec& x) { return rho_jac(clamp_unit(x, eps)); };
  }
  d.addition_rule = [eval_rho](const Vec& th, int, double) { return eval_rho(th); };
  d.H_fn = [eval_rho, K](const Vec& x) {
    const Vec r = eval_rho(x);
    Mat h(K, K);
    for (int k = 0; k < K; ++k) h.set_row(k, r);
    return h;
  };
  if (rho_jac) {
    d.H_jacobian = [rho_jac, K, eps](const Vec& x) {
      const Mat j = rho_jac(clamp_unit(x, eps));
      std::vector<Mat> out(K, Mat(K, K));
      for (int m = 0; m < K; ++m)
        for (int k = 0; k < K; ++k)
          for (int c = 0; c < K; ++c) out[m](k, c) = j(m, c);
      return out;
    };
  }
  const Vec r0 = eval_rho(theta);
  d.gamma = vec_sum(r0);
  return d;
}

Mat generating_matrix(const Design& design, const Vec& x) {
  check_arity(design, x);
  Mat h = design.H_fn(x);
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j)
      if (!std::isfinite(h(i, j)))
        throw DesignDomainError("generating matrix is not finite at the given estimates");
  return h;
}

JacobianResult generating_matrix_jacobian(const Design& design, const Vec& x) {
  check_arity(design, x);
  JacobianResult res;
  if (design.H_jacobian) {
    res.dH = design.H_jacobian(design.clamp(x));
    res.analytic = true;
    return res;
  }
  const int K = design.K;
  res.dH.reserve(K);
  const double lo = design.clamp_to_unit ? design.clamp_epsilon : -1e300;
  const double hi = design.clamp_to_unit ? 1.0 - design.clamp_epsilon : 1e300;
  for (int k = 0; k < K; ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
    Vec xp = x, xm = x;
    if (x[k] + h <= hi && x[k] - h >= lo) {
      xp[k] += h;
      xm[k] -= h;
      Mat dp = design.H_fn(xp);
      Mat dm = design.H_fn(xm);
      res.dH.push_back((1.0 / (2.0 * h)) * (dp - dm));
    } else {
      // second-order one-sided stencil pointing into the domain
      res.one_sided = true;
      const double dir = (x[k] + h > hi) ? -1.0 : 1.0;
      Vec x1 = x, x2 = x;
      x1[k] += dir * h;
      x2[k] += dir * 2.0 * h;
      Mat f0 = design.H_fn(x);
      Mat f1 = design.H_fn(x1);
      Mat f2 = design.H_fn(x2);
      res.dH.push_back((dir / (2.0 * h)) * (-3.0 * f0 + 4.0 * f1 - 1.0 * f2));
    }
  }
  return res;
}

bool ValidationReport::all_required_pass() const {
  for (const auto& c : checks)
    if (!c.informational && !c.pass) return false;
  return true;
}

ValidationReport validate_design(const Design& design, const ResponseModel& model) {
  ValidationReport rep;
  const Vec& theta = model.theta();
  const Mat h = generating_matrix(design, theta);
  const int K = design.K;

  // (a) constant row sums equal to gamma
  {
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < K; ++k) {
      const double s = vec_sum(h.row(k));
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    std::ostringstream os;
    os << "row sums in [" << lo << ", " << hi << "]";
    rep.checks.push_back({"constant_row_sums", hi - lo <= 1e-10, false, os.str()});
  }

  StationaryResult st;
  try {
    st = stationary_proportion(h);
  } catch (const SeuError& e) {
    rep.checks.push_back({"stationary_proportion", false, false, e.what()});
    return rep;
  }
  rep.v = st.v;
  rep.gamma = st.gamma;

  // (b) strictly positive limiting proportions
  {
    double vmin = 1e300;
    for (double vk : st.v) vmin = std::min(vmin, vk);
    std::ostringstream os;
    os << "min v_k = " << vmin;
    rep.checks.push_back({"positive_proportions", vmin > 0.0, false, os.str()});
  }

  const SpectralGapResult gap = spectral_gap(h, st.gamma);
  rep.lambda = gap.lambda;
  rep.defective_warning = gap.defective_warning;
  rep.lln_valid = gap.lambda < 1.0;
  rep.clt_valid = gap.lambda < 0.5;
  {
    std::ostringstream os;
    os << "lambda = " << gap.lambda;
    rep.checks.push_back({"strong_law_regime (lambda < 1)", rep.lln_valid, false, os.str()});
    rep.checks.push_back({"normal_limit_regime (lambda < 1/2)", rep.clt_valid, false, os.str()});
    if (gap.defective_warning)
      rep.checks.push_back({"gap_eigenvalue_simple", false, true,
                            "repeated eigenvalue at the spectral gap; log factors possible"});
  }

  // (d) non-negative additions over the support, at theta and perturbed estimates
  {
    bool ok = true;
    std::string where;
    std::vector<Vec> probes{theta};
    for (int k = 0; k < K; ++k) {
      Vec p = theta;
      p[k] = std::min(0.999, p[k] + 0.05);
      probes.push_back(p);
      p = theta;
      p[k] = std::max(0.001, p[k] - 0.05);
      probes.push_back(p);
    }
    if (model.finite_support()) {
      for (const Vec& probe : probes) {
        for (int arm = 0; arm < K && ok; ++arm) {
          for (double o : model.support()[arm].outcomes) {
            const Vec add = design.addition_rule(probe, arm, o);
            for (double a : add)
              if (a < 0.0 || !std::isfinite(a)) {
                ok = false;
                where = "arm " + std::to_string(arm + 1);
                break;
              }
          }
        }
      }
    }
    rep.checks.push_back({"nonnegative_additions", ok, false, where});
  }

  // (e) moment bounds: automatic for finite support
  rep.checks.push_back({"bounded_addition_moments", true, true,
                        model.finite_support()
                            ? "finite support: all moments finite"
                            : "continuous responses: verify moment growth of the rule separately"});
  return rep;
}

}  // namespace seu
