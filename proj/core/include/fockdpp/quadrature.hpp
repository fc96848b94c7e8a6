#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace fockdpp {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadNodes {
  std::vector<double> x;
  std::vector<double> w;
};

/// Returns cached Gauss-Legendre nodes of order n (Newton iteration on P_n).
const QuadNodes& gauss_legendre(int n);

/// ln(e^a + e^b) without overflow; tolerates -inf arguments.
inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

double log_sum_exp(const std::vector<double>& terms);

/// Adaptive panel-bisection integral of f over [a, b] to relative tolerance
/// rel_tol (with an absolute floor for integrals near zero).  Panels compare
/// GL-16 against GL-32; throws ErrorKind::Numeric if the budget is exhausted.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, int max_depth = 32);

/// Same engine, but the integrand is split at the given interior breakpoints
/// (kinks, table knots) before any adaptive work happens.
double integrate_breakpoints(const std::function<double(double)>& f, double a,
                             double b, const std::vector<double>& breakpoints,
                             double rel_tol = 1e-10, int max_depth = 32);

/// Computes ln of the integral of e^{g(x)} over [a, b] entirely in the log
/// domain: every panel is evaluated as a shifted exponential sum, so the
/// integrand may span thousands of nats without overflow.  Returns -inf for
/// an identically vanishing integrand.
double integrate_log(const std::function<double(double)>& g, double a,
                     double b, double rel_tol = 1e-10, int max_depth = 32);

}  // namespace fockdpp
