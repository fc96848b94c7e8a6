#include "fockdpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fockdpp/errors.hpp"

namespace fockdpp {

namespace {

QuadNodes compute_gauss_legendre(int n) {
  QuadNodes q;
  q.x.resize(n);
  q.w.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.x[i] = -x;
    q.x[n - 1 - i] = x;
    q.w[i] = q.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  if (n % 2 == 1) q.x[n / 2] = 0.0;
  return q;
}

struct Panel {
  double a, b;
  int depth;
};

double panel_value(const std::function<double(double)>& f, double a, double b,
                   const QuadNodes& q) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * f(c + h * q.x[i]);
  return s * h;
}

/// ln of the panel integral of e^g, as a max-shifted exponential sum.
double panel_value_log(const std::function<double(double)>& g, double a,
                       double b, const QuadNodes& q) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> t(q.x.size());
  double m = neg_inf;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    t[i] = g(c + h * q.x[i]) + std::log(q.w[i]);
    m = std::max(m, t[i]);
  }
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s) + std::log(h);
}

}  // namespace

const QuadNodes& gauss_legendre(int n) {
  static std::map<int, QuadNodes> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

double log_sum_exp(const std::vector<double>& terms) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double m = neg_inf;
  for (double t : terms) m = std::max(m, t);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  const QuadNodes& lo = gauss_legendre(16);
  const QuadNodes& hi = gauss_legendre(32);

  // First sweep with a coarse estimate sets the absolute error floor.
  const double rough = std::abs(panel_value(f, a, b, hi));
  const double floor = rough * rel_tol + 1e-300;

  double total = 0.0;
  std::vector<Panel> stack{{a, b, 0}};
  long evals = 0;
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double coarse = panel_value(f, p.a, p.b, lo);
    const double fine = panel_value(f, p.a, p.b, hi);
    evals += 48;
    if (evals > 4'000'000)
      throw Error(ErrorKind::Numeric, "integrate: evaluation budget exhausted");
    const double err = std::abs(fine - coarse);
    const double scale = std::max(std::abs(total) + std::abs(fine), rough);
    if (err <= std::max(scale * rel_tol, floor) * 0.5 || p.depth >= max_depth) {
      if (p.depth >= max_depth && err > std::max(scale * rel_tol, floor))
        throw Error(ErrorKind::Numeric, "integrate: panel did not converge");
      total += fine;
    } else {
      const double m = 0.5 * (p.a + p.b);
      stack.push_back({p.a, m, p.depth + 1});
      stack.push_back({m, p.b, p.depth + 1});
    }
  }
  return total;
}

double integrate_breakpoints(const std::function<double(double)>& f, double a,
                             double b, const std::vector<double>& breakpoints,
                             double rel_tol, int max_depth) {
  std::vector<double> pts{a, b};
  for (double p : breakpoints)
    if (p > a && p < b) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += integrate(f, pts[i], pts[i + 1], rel_tol, max_depth);
  return total;
}

double integrate_log(const std::function<double(double)>& g, double a,
                     double b, double rel_tol, int max_depth) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (a == b) return neg_inf;
  const QuadNodes& lo = gauss_legendre(16);
  const QuadNodes& hi = gauss_legendre(32);

  double total = neg_inf;
  std::vector<Panel> stack{{a, b, 0}};
  long evals = 0;
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double coarse = panel_value_log(g, p.a, p.b, lo);
    const double fine = panel_value_log(g, p.a, p.b, hi);
    evals += 48;
    if (evals > 4'000'000)
      throw Error(ErrorKind::Numeric,
                  "integrate_log: evaluation budget exhausted");
    bool ok;
    if (fine == neg_inf && coarse == neg_inf) {
      ok = true;  // panel carries no mass
    } else if (fine == neg_inf || coarse == neg_inf) {
      ok = p.depth >= 4;  // one order sees mass the other misses: refine
    } else {
      // |e^c/e^f - 1| <= tol, expressed on the log scale.
      ok = std::abs(std::expm1(coarse - fine)) <= rel_tol * 0.5;
    }
    // A panel whose mass is negligible against the running total is accepted
    // as is; this keeps far tails from forcing pointless subdivisions.
    if (!ok && fine != neg_inf && fine < total + std::log(rel_tol) - 8.0)
      ok = true;
    if (ok || p.depth >= max_depth) {
      if (!ok && p.depth >= max_depth)
        throw Error(ErrorKind::Numeric, "integrate_log: panel did not converge");
      total = log_add(total, fine);
    } else {
      const double m = 0.5 * (p.a + p.b);
      stack.push_back({p.a, m, p.depth + 1});
      stack.push_back({m, p.b, p.depth + 1});
    }
  }
  return total;
}

}  // namespace fockdpp
