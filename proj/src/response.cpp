#include "seu/response.hpp"

#include <cmath>
#include <sstream>

#include "seu/errors.hpp"

namespace seu {

ResponseModel ResponseModel::bernoulli(const Vec& p) {
  if (p.size() < 2) throw InvalidArgument("bernoulli model needs at least 2 arms");
  ResponseModel m;
  m.kind_ = Kind::Bernoulli;
  m.theta_ = p;
  m.sigma2_.resize(p.size());
  m.support_.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] > 0.0 && p[k] < 1.0))
      throw InvalidArgument("bernoulli success probability must lie strictly in (0,1)");
    m.sigma2_[k] = p[k] * (1.0 - p[k]);
    m.support_[k] = ArmSupport{{1.0, 0.0}, {p[k], 1.0 - p[k]}};
  }
  return m;
}

ResponseModel ResponseModel::finite(std::vector<ArmSupport> arms) {
  if (arms.size() < 2) throw InvalidArgument("finite model needs at least 2 arms");
  ResponseModel m;
  m.kind_ = Kind::Finite;
  m.theta_.resize(arms.size());
  m.sigma2_.resize(arms.size());
  for (std::size_t k = 0; k < arms.size(); ++k) {
    const auto& a = arms[k];
    if (a.outcomes.empty() || a.outcomes.size() != a.probs.size())
      throw InvalidArgument("finite model arm has malformed outcome table");
    double total = 0.0;
    for (double q : a.probs) {
      if (q < 0.0) throw InvalidArgument("finite model probabilities must be non-negative");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw InvalidArgument("finite model arm probabilities must sum to 1");
    double mean = 0.0;
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) mean += a.probs[i] * a.outcomes[i];
    double var = 0.0;
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
      const double d = a.outcomes[i] - mean;
      var += a.probs[i] * d * d;
    }
    m.theta_[k] = mean;
    m.sigma2_[k] = var;
  }
  m.support_ = std::move(arms);
  return m;
}

ResponseModel ResponseModel::normal(const Vec& mean, const Vec& sd) {
  if (mean.size() < 2) throw InvalidArgument("normal model needs at least 2 arms");
  if (mean.size() != sd.size()) throw InvalidArgument("normal model mean/sd size mismatch");
  ResponseModel m;
  m.kind_ = Kind::Normal;
  m.theta_ = mean;
  m.sd_ = sd;
  m.sigma2_.resize(sd.size());
  for (std::size_t k = 0; k < sd.size(); ++k) {
    if (sd[k] < 0.0) throw InvalidArgument("normal model sd must be non-negative");
    m.sigma2_[k] = sd[k] * sd[k];
  }
  return m;
}

const std::vector<ArmSupport>& ResponseModel::support() const {
  if (!finite_support()) throw InvalidArgument("continuous model has no finite support table");
  return support_;
}

double ResponseModel::sample(int arm, RngStream& rng) const {
  switch (kind_) {
    case Kind::Bernoulli:
      return rng.next_uniform() < theta_[arm] ? 1.0 : 0.0;
    case Kind::Finite: {
      const auto& a = support_[arm];
      const double u = rng.next_uniform();
      double cum = 0.0;
      for (std::size_t i = 0; i < a.probs.size(); ++i) {
        cum += a.probs[i];
        if (u < cum) return a.outcomes[i];
      }
      return a.outcomes.back();
    }
    case Kind::Normal:
      return theta_[arm] + sd_[arm] * normal_quantile(rng.next_uniform_open());
  }
  return 0.0;  // unreachable
}

std::string ResponseModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Bernoulli:
      os << "bernoulli(";
      break;
    case Kind::Finite:
      os << "finite(";
      break;
    case Kind::Normal:
      os << "normal(";
      break;
  }
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    if (k) os << ",";
    os << theta_[k];
  }
  os << ")";
  return os.str();
}

}  // namespace seu
