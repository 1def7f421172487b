#include <algorithm>
#include <cmath>
#include <complex>

#include <doctest.h>

#include "seu/matrix.hpp"
#include "seu/rng.hpp"

using namespace seu;

namespace {

Mat random_matrix(RngStream& rng, int n, double scale = 1.0) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * (2.0 * rng.next_uniform() - 1.0);
  return m;
}

std::vector<double> sorted_real_parts(std::vector<std::complex<double>> eigs) {
  std::vector<double> re;
  for (const auto& e : eigs) re.push_back(e.real());
  std::sort(re.begin(), re.end());
  return re;
}

}  // namespace

TEST_CASE("lu_solve recovers known solutions") {
  Mat a = Mat::from_rows({{2, 1, 0}, {1, 3, 1}, {0, 1, 4}});
  Vec x_true{1.0, -2.0, 0.5};
  Vec b = mat_vec(a, x_true);
  Vec x = lu_solve(a, b);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-12));
}

TEST_CASE("lu_solve rejects singular systems") {
  Mat a = Mat::from_rows({{1, 2}, {2, 4}});
  CHECK_THROWS_AS(lu_solve(a, Vec{1.0, 1.0}), NumericalFailure);
}

TEST_CASE("lu_solve matches inverse action on random systems") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 7);
    Mat a = random_matrix(rng, n);
    for (int i = 0; i < n; ++i) a(i, i) += n;  // diagonally dominant, well conditioned
    Mat x = lu_solve(a, Mat::identity(n));
    Mat residual = a * x - Mat::identity(n);
    CHECK(max_abs(residual) < 1e-11);
  }
}

TEST_CASE("eigenvalues of diagonal and rotation blocks") {
  auto eigs = eigenvalues(Mat::from_rows({{3, 0}, {0, -1}}));
  auto re = sorted_real_parts(eigs);
  CHECK(re[0] == doctest::Approx(-1.0));
  CHECK(re[1] == doctest::Approx(3.0));

  // pure rotation: +-i
  eigs = eigenvalues(Mat::from_rows({{0, -1}, {1, 0}}));
  REQUIRE(eigs.size() == 2);
  CHECK(std::abs(eigs[0].real()) < 1e-12);
  CHECK(std::abs(std::abs(eigs[0].imag()) - 1.0) < 1e-12);
}

TEST_CASE("eigenvalues of a companion matrix recover the roots") {
  // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
  Mat c = Mat::from_rows({{6, -11, 6}, {1, 0, 0}, {0, 1, 0}});
  auto re = sorted_real_parts(eigenvalues(c));
  CHECK(re[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(re[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(re[2] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("eigenvalue sums and products match trace and determinant") {
  RngStream rng(17, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 7);
    Mat a = random_matrix(rng, n, 2.0);
    auto eigs = eigenvalues(a);
    std::complex<double> sum = 0.0, prod = 1.0;
    for (const auto& e : eigs) {
      sum += e;
      prod *= e;
    }
    CHECK(sum.real() == doctest::Approx(trace(a)).epsilon(1e-8));
    CHECK(std::abs(sum.imag()) < 1e-8);
    CHECK(prod.real() == doctest::Approx(determinant(a)).epsilon(1e-6));
  }
}

TEST_CASE("expm on analytic cases") {
  // exp(0) = I
  CHECK(max_abs(expm(Mat(3, 3)) - Mat::identity(3)) < 1e-15);

  // diagonal
  Mat d = expm(diag(Vec{1.0, -2.0, 0.25}));
  CHECK(d(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(d(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(d(2, 2) == doctest::Approx(std::exp(0.25)).epsilon(1e-14));
  CHECK(std::abs(d(0, 1)) < 1e-16);

  // nilpotent
  Mat n = expm(Mat::from_rows({{0, 1}, {0, 0}}));
  CHECK(n(0, 0) == doctest::Approx(1.0));
  CHECK(n(0, 1) == doctest::Approx(1.0));
  CHECK(n(1, 0) == doctest::Approx(0.0));

  // rotation by 1 radian
  Mat r = expm(Mat::from_rows({{0, -1}, {1, 0}}));
  CHECK(r(0, 0) == doctest::Approx(std::cos(1.0)).epsilon(1e-14));
  CHECK(r(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-14));

  // a large-norm case exercising the squaring phase
  Mat big = expm(diag(Vec{40.0, -40.0}));
  CHECK(big(0, 0) == doctest::Approx(std::exp(40.0)).epsilon(1e-12));
  CHECK(big(1, 1) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}

TEST_CASE("expm semigroup property on random matrices") {
  RngStream rng(23, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 4);
    Mat a = random_matrix(rng, n, 1.5);
    Mat whole = expm(a);
    Mat half = expm(0.5 * a);
    CHECK(max_abs(whole - half * half) < 1e-11 * std::max(1.0, max_abs(whole)));
  }
}

TEST_CASE("augmented block exponential produces running integrals") {
  // exp(t [[A, I],[0, 0]]) = [[e^{tA}, int_0^t e^{sA} ds],[0, I]]
  RngStream rng(29, 3);
  const int n = 3;
  Mat a = random_matrix(rng, n, 0.8);
  const double t = 1.7;
  Mat aug(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug(i, j) = t * a(i, j);
    aug(i, n + i) = t;
  }
  Mat e = expm(aug);

  // Simpson integration of e^{sA} as the oracle
  const int steps = 400;
  Mat integral(n, n);
  const double h = t / steps;
  for (int s = 0; s <= steps; ++s) {
    const double w = (s == 0 || s == steps) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
    integral += (w * h / 3.0) * expm((s * h) * a);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(e(i, n + j) == doctest::Approx(integral(i, j)).epsilon(1e-8));
}

TEST_CASE("min_symmetric_eigenvalue") {
  Mat a = Mat::from_rows({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}});
  CHECK(min_symmetric_eigenvalue(a) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-10));
}
