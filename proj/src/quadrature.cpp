#include "seu/quadrature.hpp"

#include <cmath>
#include <queue>
#include <sstream>

#include "seu/errors.hpp"

namespace seu {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule (positive half).
const double kXgk[8] = {0.991455371120812639206854697526329,
                        0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926,
                        0.741531185599394439863864773280788,
                        0.586087235467691130294144838258730,
                        0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245,
                        0.0};
const double kWgk[8] = {0.022935322010529224963732008058970,
                        0.063092092629978553290700663189204,
                        0.104790010322250183839876322541518,
                        0.140653259715525918745189590510238,
                        0.169004726639267902826583426598550,
                        0.190350578064785409913256402421014,
                        0.204432940075298892414161999234649,
                        0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082,
                       0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975,
                       0.417959183673469387755102040816327};

struct Segment {
  double a, b;
  MatStack value;
  double error;
};

struct SegmentOrder {
  bool operator()(const Segment& x, const Segment& y) const { return x.error < y.error; }
};

void axpy(MatStack& acc, double w, const MatStack& x) {
  if (acc.empty()) {
    acc = x;
    for (Mat& m : acc) m *= w;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * x[i];
}

Segment evaluate(const std::function<MatStack(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  MatStack kron, gauss;
  for (int i = 0; i < 8; ++i) {
    const double xi = kXgk[i];
    MatStack sum = f(c + h * xi);
    if (xi != 0.0) axpy(sum, 1.0, f(c - h * xi));
    axpy(kron, kWgk[i], sum);
    if (i % 2 == 1) axpy(gauss, kWg[i / 2], sum);
  }
  for (Mat& m : kron) m *= h;
  for (Mat& m : gauss) m *= h;
  double err = 0.0;
  for (std::size_t i = 0; i < kron.size(); ++i) err = std::max(err, max_abs(kron[i] - gauss[i]));
  return Segment{a, b, std::move(kron), err};
}

}  // namespace

QuadratureResult adaptive_gauss_kronrod(const std::function<MatStack(double)>& f, double a,
                                        double b, double abs_tol, int max_segments) {
  std::priority_queue<Segment, std::vector<Segment>, SegmentOrder> queue;
  queue.push(evaluate(f, a, b));
  double total_error = queue.top().error;
  int segments = 1;

  while (total_error > abs_tol && segments < max_segments) {
    Segment worst = queue.top();
    queue.pop();
    total_error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Segment left = evaluate(f, worst.a, mid);
    Segment right = evaluate(f, mid, worst.b);
    total_error += left.error + right.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++segments;
  }
  if (total_error > abs_tol * 100.0) {
    std::ostringstream os;
    os << "adaptive quadrature stalled: error estimate " << total_error << " > tolerance "
       << abs_tol << " after " << segments << " segments on [" << a << ", " << b << "]";
    throw NumericalFailure(os.str());
  }

  QuadratureResult res;
  res.error_estimate = total_error;
  res.segments = segments;
  while (!queue.empty()) {
    axpy(res.value, 1.0, queue.top().value);
    queue.pop();
  }
  return res;
}

}  // namespace seu
