#pragma once

#include <cstddef>
#include <vector>

#include "fockdpp/errors.hpp"

namespace fockdpp {

/// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson limiter).
/// Monotone data yields a monotone interpolant, which is what both the
/// ρ-table and the sampler's radial CDF inversion rely on.
class PchipSpline {
 public:
  PchipSpline() = default;
  PchipSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_, y_, d_;  // nodes, values, node derivatives
};

inline PchipSpline::PchipSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw Error(ErrorKind::Config, "PchipSpline: need >= 2 nodes, matching sizes");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(x_[i] < x_[i + 1]))
      throw Error(ErrorKind::Config, "PchipSpline: abscissae must increase strictly");
  std::vector<double> h(n - 1), s(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    s[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (s[i - 1] * s[i] <= 0.0) {
      d_[i] = 0.0;  // local extremum: flat derivative preserves shape
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) d = 0.0;
    else if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0)) d = 3.0 * s0;
    return d;
  };
  if (n == 2) {
    d_[0] = d_[1] = s[0];
  } else {
    d_[0] = end_slope(h[0], h[1], s[0], s[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }
}

inline double PchipSpline::operator()(double t) const {
  const std::size_t n = x_.size();
  if (t <= x_.front()) return y_.front() + d_.front() * (t - x_.front());
  if (t >= x_.back()) return y_.back() + d_.back() * (t - x_.back());
  std::size_t lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (x_[mid] <= t ? lo : hi) = mid;
  }
  const double h = x_[lo + 1] - x_[lo];
  const double u = (t - x_[lo]) / h;
  const double u2 = u * u, u3 = u2 * u;
  return y_[lo] * (2 * u3 - 3 * u2 + 1) + y_[lo + 1] * (3 * u2 - 2 * u3) +
         d_[lo] * h * (u3 - 2 * u2 + u) + d_[lo + 1] * h * (u3 - u2);
}

}  // namespace fockdpp
