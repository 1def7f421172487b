#pragma once

#include <cmath>
#include <cstdint>

#include "seu/matrix.hpp"

namespace seu {

/// One-pass mean/covariance of K-vectors (Welford update) with an exact
/// pairwise merge, so chunked parallel accumulation gives the same result
/// regardless of worker count as long as the chunk layout is fixed.
class MeanCovAccumulator {
 public:
  MeanCovAccumulator() = default;
  explicit MeanCovAccumulator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, dim) {}

  void add(const Vec& x) {
    count_ += 1;
    const double inv = 1.0 / static_cast<double>(count_);
    Vec delta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) delta[i] = x[i] - mean_[i];
    for (std::size_t i = 0; i < x.size(); ++i) mean_[i] += delta[i] * inv;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j)
        m2_(i, j) += delta[i] * (x[j] - mean_[j]);
  }

  void merge(const MeanCovAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(o.count_);
    const double n = na + nb;
    Vec delta(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i) delta[i] = o.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < mean_.size(); ++i) mean_[i] += delta[i] * nb / n;
    const double w = na * nb / n;
    for (std::size_t i = 0; i < mean_.size(); ++i)
      for (std::size_t j = 0; j < mean_.size(); ++j)
        m2_(i, j) += o.m2_(i, j) + w * delta[i] * delta[j];
    count_ += o.count_;
  }

  std::int64_t count() const { return count_; }
  const Vec& mean() const { return mean_; }
  /// Unbiased sample covariance; caller must check count() >= 2.
  Mat covariance() const {
    Mat c = m2_;
    c *= 1.0 / static_cast<double>(count_ - 1);
    return c;
  }

 private:
  std::int64_t count_ = 0;
  Vec mean_;
  Mat m2_;
};

/// Scalar central moments up to order four, one-pass with merge.
class MomentAccumulator {
 public:
  void add(double x) {
    const double n1 = static_cast<double>(count_);
    count_ += 1;
    const double n = static_cast<double>(count_);
    const double delta = x - mean_;
    const double dn = delta / n;
    const double dn2 = dn * dn;
    const double t1 = delta * dn * n1;
    mean_ += dn;
    m4_ += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * m2_ - 4.0 * dn * m3_;
    m3_ += t1 * dn * (n - 2.0) - 3.0 * dn * m2_;
    m2_ += t1;
  }

  void merge(const MomentAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(o.count_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    const double d2 = d * d;
    const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * d * (na * o.m3_ - nb * m3_) / n;
    const double m3 = m3_ + o.m3_ + d * d2 * na * nb * (na - nb) / (n * n) +
                      3.0 * d * (na * o.m2_ - nb * m2_) / n;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    mean_ += d * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    count_ += o.count_;
  }

  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double skewness() const {
    if (count_ < 2 || m2_ <= 0.0) return 0.0;
    const double n = static_cast<double>(count_);
    return std::sqrt(n) * m3_ / std::pow(m2_, 1.5);
  }
  double excess_kurtosis() const {
    if (count_ < 2 || m2_ <= 0.0) return 0.0;
    const double n = static_cast<double>(count_);
    return n * m4_ / (m2_ * m2_) - 3.0;
  }

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

}  // namespace seu
