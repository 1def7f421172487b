#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "seu/errors.hpp"

namespace seu {

using Vec = std::vector<double>;

/// Dense row-major matrix. Everything in this library is tiny (K <= 10
/// arms, augmented systems up to 3K), so no effort is spent on blocking
/// or expression templates; clarity and exactness win.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Mat identity(std::size_t n);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vec row(std::size_t i) const;
  void set_row(std::size_t i, const Vec& r);

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(double s, Mat a);

Mat transpose(const Mat& a);
Mat diag(const Vec& d);
/// Column vector u times row vector v (K x K outer product).
Mat outer(const Vec& u, const Vec& v);

/// Row vector x times matrix a.
Vec vec_mat(const Vec& x, const Mat& a);
/// Matrix a times column vector x.
Vec mat_vec(const Mat& a, const Vec& x);

double max_abs(const Mat& a);
double one_norm(const Mat& a);  // max column sum of |a|
double trace(const Mat& a);

double vec_sum(const Vec& x);
double dot(const Vec& a, const Vec& b);
double max_abs_diff(const Vec& a, const Vec& b);

/// Solves A X = B by LU with partial pivoting. Throws NumericalFailure
/// when A is singular to working precision.
Mat lu_solve(Mat a, Mat b);
Vec lu_solve(const Mat& a, const Vec& b);
double determinant(Mat a);

/// All eigenvalues of a real square matrix: Hessenberg reduction followed
/// by the Francis double-shift QR iteration. Fine for the n <= 30 systems
/// here; not meant for large or badly scaled inputs.
std::vector<std::complex<double>> eigenvalues(Mat a);

/// Matrix exponential via scaling-and-squaring with the degree-13 Pade
/// approximant. Relative accuracy ~1e-14 in the operator norm at these sizes.
Mat expm(Mat a);

/// Smallest eigenvalue of a symmetric matrix (input is symmetrized first).
double min_symmetric_eigenvalue(const Mat& a);

}  // namespace seu
