#include "fockdpp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fockdpp/quadrature.hpp"

namespace fockdpp {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Least squares fit y = a + b x; returns (b, rms residual).
std::pair<double, double> ols_slope_rms(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - a - b * x[i];
    ss += r * r;
  }
  return {b, std::sqrt(ss / n)};
}

}  // namespace

Weight Weight::power(double alpha) {
  if (!(alpha > 0.0))
    throw Error(ErrorKind::Config, "Weight::power: alpha must be positive");
  Weight w;
  w.family_ = WeightFamily::PowerAlpha;
  w.alpha_ = alpha;
  std::ostringstream os;
  os << "|z|^" << alpha;
  w.description_ = os.str();
  return w;
}

/*
 * TabulatedRadial construction.  Work in t = ln r, psi(t) = phi(e^t).  The
 * radial Laplacian is psi''(t)/r^2, so nonnegativity of the Laplacian is
 * exactly convexity of psi.  The interpolant is the C^1 shape-preserving
 * quadratic spline: node slopes m_i are chosen inside [d_{i-1}, d_i] (secant
 * slopes d), and each data interval gets one interior knot where needed so
 * that psi' is continuous piecewise linear and nondecreasing.  psi'' is then
 * piecewise constant >= 0 and integrates exactly.
 */
Weight Weight::tabulated(std::vector<double> r, std::vector<double> phi,
                         std::string description) {
  const std::size_t n = r.size();
  if (n < 3 || phi.size() != n)
    throw Error(ErrorKind::Config,
                "Weight::tabulated: need >= 3 samples with matching sizes");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r[i] > 0.0))
      throw Error(ErrorKind::Config, "Weight::tabulated: radii must be positive");
    if (i + 1 < n && !(r[i] < r[i + 1]))
      throw Error(ErrorKind::Config,
                  "Weight::tabulated: radii must increase strictly");
  }

  std::vector<double> t(n), psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = std::log(r[i]);
    psi[i] = phi[i];
  }
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = t[i + 1] - t[i];
    d[i] = (psi[i + 1] - psi[i]) / h[i];
  }
  double dscale = 1.0;
  for (double v : d) dscale = std::max(dscale, std::abs(v));
  const double eps = 1e-12 * dscale;
  for (std::size_t i = 0; i + 2 < n; ++i)
    if (d[i + 1] < d[i] - 1e-7 * dscale)
      throw Error(ErrorKind::Config,
                  "Weight::tabulated: samples are not convex in ln r "
                  "(Laplacian would be negative)");

  // Node slopes: secant-weighted averages, pinned to the secant on locally
  // linear stretches so the two-piece construction below stays feasible.
  std::vector<double> m(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i] - d[i - 1] <= eps)
      m[i] = 0.5 * (d[i - 1] + d[i]);
    else if (i + 1 < n - 1 && d[i + 1] - d[i] <= eps)
      m[i] = d[i];
    else if (d[i] - d[i - 1] <= eps)
      m[i] = d[i - 1];
    else
      m[i] = (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i - 1] + h[i]);
  }
  m[0] = 0.5 * (3.0 * d[0] - m[1]);
  m[n - 1] = 0.5 * (3.0 * d[n - 2] - m[n - 2]);

  Weight w;
  w.family_ = WeightFamily::TabulatedRadial;
  w.description_ = std::move(description);
  auto push_knot = [&w](double tau, double value, double slope) {
    if (!w.tau_.empty() && tau <= w.tau_.back() + 1e-15) return;
    w.tau_.push_back(tau);
    w.psi_.push_back(value);
    w.dpsi_.push_back(std::max(slope, w.dpsi_.empty() ? slope : w.dpsi_.back()));
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    push_knot(t[i], psi[i], m[i]);
    if (std::abs(m[i] + m[i + 1] - 2.0 * d[i]) <= eps + 1e-14) continue;
    const double dm = m[i + 1] - m[i];
    if (dm <= eps)
      throw Error(ErrorKind::Config,
                  "Weight::tabulated: infeasible convex interpolation stretch");
    // Interior knot at t_i + u h: slope there is s = 2d - u m_i - (1-u) m_{i+1};
    // u must keep s within [m_i, m_{i+1}] (the feasible u-window has width 1).
    const double u_min = (m[i] + m[i + 1] - 2.0 * d[i]) / dm;
    const double u_max = 2.0 * (m[i + 1] - d[i]) / dm;
    const double u = std::clamp(0.5 * (u_min + u_max),
                                std::max(u_min, 1e-3), std::min(u_max, 1.0 - 1e-3));
    if (u <= 0.0 || u >= 1.0 || u < u_min - 1e-12 || u > u_max + 1e-12)
      throw Error(ErrorKind::Config,
                  "Weight::tabulated: infeasible convex interpolation stretch");
    const double s = 2.0 * d[i] - u * m[i] - (1.0 - u) * m[i + 1];
    const double xi = t[i] + u * h[i];
    const double psi_xi = psi[i] + u * h[i] * 0.5 * (m[i] + s);
    push_knot(xi, psi_xi, s);
  }
  push_knot(t[n - 1], psi[n - 1], m[n - 1]);
  return w;
}

Weight Weight::tabulated_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Config, "cannot open weight table: " + path);
  std::vector<double> r, phi;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, b;
    if (ls >> a >> b) {
      r.push_back(a);
      phi.push_back(b);
    } else if (!first && line.find_first_not_of(" \t\r\n") != std::string::npos) {
      throw Error(ErrorKind::Config, "malformed weight table line: " + line);
    }
    first = false;  // a single leading non-numeric header line is tolerated
  }
  return tabulated(std::move(r), std::move(phi), "table:" + path);
}

double Weight::alpha() const {
  if (!is_power())
    throw Error(ErrorKind::Config, "Weight::alpha: not a PowerAlpha weight");
  return alpha_;
}

double Weight::value(double r) const {
  if (is_power()) return std::pow(r, alpha_);
  if (r <= 0.0) return psi_.front() - 50.0 * dpsi_.front();  // clamped linear tail
  const double t = std::log(r);
  if (t <= tau_.front()) return psi_.front() + dpsi_.front() * (t - tau_.front());
  if (t >= tau_.back()) return psi_.back() + dpsi_.back() * (t - tau_.back());
  std::size_t lo = 0, hi = tau_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (tau_[mid] <= t ? lo : hi) = mid;
  }
  const double ht = tau_[lo + 1] - tau_[lo];
  const double u = t - tau_[lo];
  const double slope_t = dpsi_[lo] + (dpsi_[lo + 1] - dpsi_[lo]) * (u / ht);
  return psi_[lo] + u * 0.5 * (dpsi_[lo] + slope_t);
}

double Weight::laplacian_radial(double r) const {
  if (is_power()) {
    if (r <= 0.0) {
      if (alpha_ == 2.0) return 4.0;
      if (alpha_ > 2.0) return 0.0;
      throw Error(ErrorKind::Domain,
                  "laplacian_density: singular at the origin for alpha < 2; "
                  "use disk_mass for integrated values");
    }
    return alpha_ * alpha_ * std::pow(r, alpha_ - 2.0);
  }
  if (r <= 0.0) return 0.0;
  const double t = std::log(r);
  if (t <= tau_.front() || t >= tau_.back()) return 0.0;
  std::size_t lo = 0, hi = tau_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (tau_[mid] <= t ? lo : hi) = mid;
  }
  const double curv = (dpsi_[lo + 1] - dpsi_[lo]) / (tau_[lo + 1] - tau_[lo]);
  return std::max(curv, 0.0) / (r * r);
}

std::vector<double> Weight::laplacian_breakpoints(double lo, double hi) const {
  std::vector<double> pts;
  if (!is_power()) {
    for (double t : tau_) {
      const double r = std::exp(t);
      if (r > lo && r < hi) pts.push_back(r);
    }
  }
  return pts;
}

double laplacian_density(const Weight& w, cplx z) {
  return w.laplacian_radial(std::abs(z));
}

namespace {

/// Fixed-order composite quadrature over sorted panel boundaries; the caller
/// grades the panels so that each one is analytic at GL-24 accuracy.
double composite_gl(const std::function<double(double)>& f,
                    std::vector<double>& pts) {
  std::sort(pts.begin(), pts.end());
  const QuadNodes& q = gauss_legendre(24);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t j = 0; j < q.x.size(); ++j)
      s += q.w[j] * f(mid + half * q.x[j]);
    total += s * half;
  }
  return total;
}

/// Panel set for [a, b] with geometric 4^-k grading toward both ends,
/// bounding the error of endpoint square-root kinks.
std::vector<double> graded_panels(double a, double b,
                                  std::vector<double> extra) {
  std::vector<double> pts{a, b};
  const double span = b - a;
  for (int k = 1; k <= 20; ++k) {
    const double g = span * std::pow(0.25, k);
    pts.push_back(a + g);
    pts.push_back(b - g);
  }
  for (double p : extra)
    if (p > a && p < b) pts.push_back(p);
  return pts;
}

}  // namespace

double disk_mass(const Weight& w, cplx z, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::Config, "disk_mass: radius must be positive");
  const double d = std::abs(z);

  if (d <= 1e-14 * std::max(1.0, r)) {
    if (w.is_power()) return 2.0 * kPi * w.alpha() * std::pow(r, w.alpha());
    auto f = [&](double s) { return w.laplacian_radial(s) * 2.0 * kPi * s; };
    std::vector<double> pts =
        graded_panels(0.0, r, w.laplacian_breakpoints(0.0, r));
    return composite_gl(f, pts);
  }

  // Off-center disks: integrate the density over circles |w| = s against the
  // arc length inside D(z,r).  The half-angle atan2 form of acos((s²+d²-r²)
  // /(2sd)) avoids the cancellation that s²+d²-r² suffers when r << d, and
  // covers fully-contained circles (s < r - d) automatically with angle pi.
  const double lo = std::abs(d - r), hi = d + r;
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double sd = s - d;
    const double u = std::max(0.0, (r - sd) * (r + sd)) / (2.0 * s * d);
    const double v =
        std::max(0.0, (s + d - r) * (s + d + r)) / (2.0 * s * d);
    const double half = std::atan2(std::sqrt(u), std::sqrt(v));
    return w.laplacian_radial(s) * s * 4.0 * half;
  };
  double inner = 0.0;
  double start = lo;
  if (lo <= 1e-14 * hi) {
    // d = r: the integrand additionally has an integrable s^{alpha-1}
    // singularity at 0 (handled by the same end grading).
    start = 0.0;
  } else if (r > d) {
    // Disk covers the origin: split off the fully-covered core exactly.
    start = r - d;
    if (w.is_power())
      inner = 2.0 * kPi * w.alpha() * std::pow(r - d, w.alpha());
    else {
      auto g = [&](double s) { return w.laplacian_radial(s) * 2.0 * kPi * s; };
      std::vector<double> core =
          graded_panels(0.0, r - d, w.laplacian_breakpoints(0.0, r - d));
      inner = composite_gl(g, core);
    }
  }
  // acos has inverse-square-root derivative blowups where circles become
  // tangent (both ends of the arc range); the geometric end grading keeps
  // every panel analytic at fixed order.
  std::vector<double> pts =
      graded_panels(start, hi, w.laplacian_breakpoints(start, hi));
  if (lo > start && lo < hi) pts.push_back(lo);
  return inner + composite_gl(f, pts);
}

DoublingReport doubling_check(const Weight& w, const std::vector<cplx>& points,
                              const std::vector<double>& radii) {
  if (points.empty() || radii.empty())
    throw Error(ErrorKind::Config, "doubling_check: empty samples");
  std::vector<double> ratios;
  ratios.reserve(points.size() * radii.size());
  for (cplx z : points) {
    for (double r : radii) {
      const double m1 = disk_mass(w, z, r);
      if (!(m1 > 1e-300))
        throw Error(ErrorKind::Domain,
                    "doubling_check: degenerate disk with zero Laplacian mass");
      ratios.push_back(disk_mass(w, z, 2.0 * r) / m1);
    }
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  DoublingReport rep;
  rep.median_ratio = sorted[sorted.size() / 2];
  rep.max_ratio = sorted.back();
  bool finite = true;
  for (double v : ratios) finite = finite && std::isfinite(v);
  rep.pass = finite && rep.max_ratio <= 10.0 * rep.median_ratio;
  return rep;
}

RadiusField::RadiusField(Weight w, double bisection_tol)
    : weight_(std::move(w)), tol_(bisection_tol) {
  if (!(tol_ > 0.0))
    throw Error(ErrorKind::Config, "RadiusField: tolerance must be positive");
}

double RadiusField::asymptotic_guess(double r) const {
  if (weight_.is_power()) {
    const double a = weight_.alpha();
    if (r <= 0.0) return std::pow(2.0 * kPi * a, -1.0 / a);
    const double lap = a * a * std::pow(r, a - 2.0);
    return lap > 0.0 ? 1.0 / std::sqrt(kPi * lap) : 1.0;
  }
  const double lap = weight_.laplacian_radial(std::max(r, 1e-6));
  return lap > 0.0 ? 1.0 / std::sqrt(kPi * lap) : 1.0 + 0.01 * r;
}

double RadiusField::rho_bisect(double r, double hint) const {
  auto mass = [&](double rad) { return disk_mass(weight_, cplx(r, 0.0), rad); };
  const double guess = hint > 0.0 ? hint : asymptotic_guess(r);
  double lo = hint > 0.0 ? 0.9 * hint : std::min(1e-6, 1e-3 * guess);
  double hi = hint > 0.0 ? 1.1 * hint : 2.0 * guess + 1.0;
  int guard = 0;
  while (mass(lo) >= 1.0) {
    lo *= 0.25;
    if (++guard > 300)
      throw Error(ErrorKind::Numeric, "rho: inner bracket collapsed");
  }
  while (mass(hi) < 1.0) {
    hi *= 2.0;
    if (hi > 1e12)
      throw Error(ErrorKind::Numeric,
                  "rho: unbounded radius, Laplacian mass never reaches 1");
  }
  // Illinois variant of regula falsi on mass - 1; falls back to plain
  // bisection steps whenever the secant step leaves the bracket.
  double flo = mass(lo) - 1.0, fhi = mass(hi) - 1.0;
  while (hi - lo > tol_) {
    double mid = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double fm = mass(mid) - 1.0;
    if (fm < 0.0) {
      if (flo < 0.0) fhi *= 0.5;  // Illinois weighting keeps convergence superlinear
      lo = mid;
      flo = fm;
    } else {
      if (fhi > 0.0) flo *= 0.5;
      hi = mid;
      fhi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

double RadiusField::rho_radial(double r) const {
  const long long key = std::llround(r * 1e10);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const double v = rho_bisect(r);
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, v);
  return v;
}

void RadiusField::ensure_table(double r_max) const {
  std::shared_ptr<const PchipSpline> old;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (table_ && table_rmax_ >= r_max) return;
    old = table_;
  }
  const int m = 4096;
  // Quadruple on growth: rebuild cost is fixed by the point count, so a
  // geometric schedule keeps the total across a growing-support build at a
  // small multiple of one rebuild.
  double top = r_max * 1.25;
  if (old) top = std::max(top, old->max_x() * 4.0);
  std::vector<double> xs(m + 1), ys(m + 1);
  double prev = -1.0;
  for (int k = 0; k <= m; ++k) {
    const double x = static_cast<double>(k) / m;
    xs[k] = top * x * x;  // quadratic grading resolves rho ~ r^beta near 0
    // Warm bracket from the previous table where it covers, else from the
    // neighbour below (rho is 1-Lipschitz).
    const double hint = old && xs[k] <= old->max_x() ? (*old)(xs[k]) : prev;
    ys[k] = rho_bisect(xs[k], hint);
    prev = ys[k];
  }
  auto spline = std::make_shared<const PchipSpline>(std::move(xs), std::move(ys));
  std::lock_guard<std::mutex> lock(mu_);
  table_ = std::move(spline);
  table_rmax_ = std::max(r_max, top / 1.25);
}

double RadiusField::rho_fast(double r) const {
  std::shared_ptr<const PchipSpline> t;
  {
    std::lock_guard<std::mutex> lock(mu_);
    t = table_;
  }
  if (t && r <= t->max_x()) return (*t)(r);
  return rho_radial(r);
}

RhoPowerResult integral_rho_power(const RadiusField& rf, double gamma,
                                  double r_max) {
  if (!(gamma > 0.0))
    throw Error(ErrorKind::Config, "integral_rho_power: gamma must be positive");
  if (!(r_max >= 10.0))
    throw Error(ErrorKind::Config, "integral_rho_power: R_max must be >= 10");
  rf.ensure_table(r_max);

  auto f = [&](double r) {
    return 2.0 * kPi * r * std::pow(rf.rho_fast(r), -gamma);
  };
  RhoPowerResult res;
  res.partial_integral = integrate(f, 0.0, r_max, 1e-8);

  // Tail exponent over the outer decade, 64 log-spaced samples.
  const int ns = 64;
  std::vector<double> lx, ly;
  int resolved = 0;
  const bool power = rf.weight().is_power();
  const auto bps = rf.weight().laplacian_breakpoints(0.0, 1e300);
  const double table_end = power || bps.empty() ? 1e300 : bps.back();
  for (int i = 0; i < ns; ++i) {
    const double r = (r_max / 10.0) * std::pow(10.0, static_cast<double>(i) / (ns - 1));
    if (r <= table_end) ++resolved;
    lx.push_back(std::log(r));
    ly.push_back(std::log(rf.rho_fast(r)));
  }
  if (resolved < 10)
    throw Error(ErrorKind::InsufficientData,
                "integral_rho_power: weight table does not resolve the outer decade");
  const auto [beta, rms] = ols_slope_rms(lx, ly);
  res.fitted_tail_exponent = beta;

  const double e = -gamma * beta + 1.0;
  const double margin = 0.05;
  if (rms > 0.05)
    res.verdict = IntegralVerdict::Inconclusive;
  else if (e < -1.0 - margin)
    res.verdict = IntegralVerdict::Finite;
  else
    res.verdict = IntegralVerdict::Divergent;
  return res;
}

SeparationVerdict classify_separation(const RadiusField& rf, Process process,
                                      double r_max) {
  const double gamma = process == Process::Determinantal ? 6.0 : 4.0;
  const RhoPowerResult num = integral_rho_power(rf, gamma, r_max);

  SeparationVerdict sv;
  sv.process = process;
  sv.tail_exponent = num.fitted_tail_exponent;
  sv.numeric_verdict = num.verdict;
  if (num.verdict == IntegralVerdict::Finite)
    sv.integral_estimate = num.partial_integral;

  if (rf.weight().is_power()) {
    const double a = rf.weight().alpha();
    sv.closed_form_separated =
        process == Process::Determinantal ? a < 4.0 / 3.0 : a < 1.0;
  }

  if (num.verdict == IntegralVerdict::Inconclusive) {
    if (!sv.closed_form_separated)
      throw Error(ErrorKind::Inconclusive,
                  "classify_separation: numeric verdict inconclusive and no "
                  "closed form available");
    sv.verdict = *sv.closed_form_separated ? Verdict::AlmostSurelySeparated
                                           : Verdict::AlmostSurelyNotSeparated;
    return sv;
  }

  const bool sep_numeric = num.verdict == IntegralVerdict::Finite;
  sv.verdict = sep_numeric ? Verdict::AlmostSurelySeparated
                           : Verdict::AlmostSurelyNotSeparated;
  if (sv.closed_form_separated && *sv.closed_form_separated != sep_numeric) {
    sv.conflict = true;
    sv.verdict = *sv.closed_form_separated ? Verdict::AlmostSurelySeparated
                                           : Verdict::AlmostSurelyNotSeparated;
  }
  return sv;
}

}  // namespace fockdpp
