#pragma once

#include <string>
#include <vector>

#include "seu/matrix.hpp"
#include "seu/rng.hpp"

namespace seu {

/// Finite outcome table for one arm.
struct ArmSupport {
  Vec outcomes;
  Vec probs;
};

/// Per-arm response distributions. Means and variances are derived from
/// the distribution parameters, so they are consistent by construction.
/// Every sample consumes exactly one uniform variate, which keeps
/// parallel streams aligned across designs and models.
class ResponseModel {
 public:
  enum class Kind { Bernoulli, Finite, Normal };

  /// Default-constructed models are empty placeholders; build real ones
  /// through the named factories.
  ResponseModel() = default;

  static ResponseModel bernoulli(const Vec& p);
  static ResponseModel finite(std::vector<ArmSupport> arms);
  static ResponseModel normal(const Vec& mean, const Vec& sd);

  Kind kind() const { return kind_; }
  int arms() const { return static_cast<int>(theta_.size()); }
  bool finite_support() const { return kind_ != Kind::Normal; }

  const Vec& theta() const { return theta_; }
  const Vec& sigma2() const { return sigma2_; }
  /// Outcome tables; only valid for finite-support models.
  const std::vector<ArmSupport>& support() const;

  double sample(int arm, RngStream& rng) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Bernoulli;
  Vec theta_;
  Vec sigma2_;
  Vec sd_;
  std::vector<ArmSupport> support_;
};

}  // namespace seu
