#include "fockdpp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fockdpp/quadrature.hpp"

namespace fockdpp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln of the integrand of the raw moment 2π ∫ r^{2n+1} e^{-2φ} ρ^{-2} dr.
double moment_exponent(const Weight& w, const RadiusField& rf, int n, double r,
                       bool fast_rho) {
  const double rho = fast_rho ? rf.rho_fast(r) : rf.rho_radial(r);
  return (2.0 * n + 1.0) * std::log(r) - 2.0 * w.value(r) -
         2.0 * std::log(rho) + std::log(2.0 * kPi);
}

/// Radius past which the n-th moment integrand has dropped ~80 nats below its
/// peak.  Diverging probes signal a weight growing too slowly for this n.
double probe_integrand_end(const Weight& w, const RadiusField& rf, int n) {
  double r = 1.0;
  if (w.is_power())
    r = std::max(1.0, std::pow((2.0 * n + 1.0) / (2.0 * w.alpha()), 1.0 / w.alpha()));
  double gmax = kNegInf;
  for (int it = 0; it < 600; ++it) {
    const double g = moment_exponent(w, rf, n, r, false);
    gmax = std::max(gmax, g);
    if (g < gmax - 80.0) return r;
    r *= 1.25;
    if (r > 1e9) {
      std::ostringstream os;
      os << "compute_moments: tail divergence at n = " << n
         << " (weight grows too slowly)";
      throw Error(ErrorKind::Numeric, os.str());
    }
  }
  throw Error(ErrorKind::Numeric, "compute_moments: integrand end not found");
}

/// Unnormalized ln ∫ r^{2n} e^{-2φ} ρ^{-2} 2πr dr for n = 0..count-1.
std::vector<double> raw_log_moments(const Weight& w, const RadiusField& rf,
                                    int count) {
  if (count < 1)
    throw Error(ErrorKind::Config, "compute_moments: rank must be >= 1");
  const double r_end = probe_integrand_end(w, rf, count - 1) * 1.05;
  rf.ensure_table(r_end);
  std::vector<double> raw(count);
  for (int n = 0; n < count; ++n) {
    auto g = [&](double r) { return moment_exponent(w, rf, n, r, true); };
    raw[n] = integrate_log(g, 0.0, r_end, 1e-10);
    if (!std::isfinite(raw[n])) {
      std::ostringstream os;
      os << "compute_moments: moment " << n << " did not converge";
      throw Error(ErrorKind::Numeric, os.str());
    }
  }
  return raw;
}

void check_log_convexity(const std::vector<double>& lm) {
  for (std::size_t n = 1; n + 1 < lm.size(); ++n) {
    if (lm[n - 1] + lm[n + 1] - 2.0 * lm[n] < -1e-7) {
      std::ostringstream os;
      os << "compute_moments: log-convexity violated at n = " << n
         << " (quadrature inconsistency)";
      throw Error(ErrorKind::Numeric, os.str());
    }
  }
}

KernelBasis normalize(const Weight& w, std::vector<double> raw, int rank) {
  KernelBasis b{w, rank, {}, -raw[0]};
  b.log_moments.resize(rank);
  for (int n = 0; n < rank; ++n) b.log_moments[n] = raw[n] - raw[0];
  check_log_convexity(b.log_moments);
  return b;
}

/// Relative diagonal tail at radius r: lse(a_N..) - lse(a_0..a_{N-1}) with
/// a_n = 2n ln r - ln c_n.  Returns +inf if the terms never decay within the
/// provided sequence.
double diag_tail_ratio(const std::vector<double>& raw, int rank, double r) {
  const double l2r = 2.0 * std::log(r);
  double amax = kNegInf;
  std::vector<double> a(raw.size());
  for (std::size_t n = 0; n < raw.size(); ++n) {
    a[n] = l2r * static_cast<double>(n) - raw[n];
    amax = std::max(amax, a[n]);
  }
  if (a.back() > amax - 60.0) return std::numeric_limits<double>::infinity();
  double head = kNegInf, tail = kNegInf;
  for (std::size_t n = 0; n < raw.size(); ++n)
    (static_cast<int>(n) < rank ? head : tail) = log_add(
        static_cast<int>(n) < rank ? head : tail, a[n]);
  if (tail == kNegInf) return 0.0;
  return std::exp(tail - head);
}

/// Moments extended until the diagonal terms at radius r have decayed, so the
/// tail estimate above is meaningful.  Hard stop keeps runaway requests loud.
std::vector<double> raw_moments_until_decay(const Weight& w,
                                            const RadiusField& rf, int min_count,
                                            double r, int hard_cap) {
  int count = min_count;
  std::vector<double> raw = raw_log_moments(w, rf, count);
  const double l2r = 2.0 * std::log(r);
  auto decayed = [&]() {
    double amax = kNegInf;
    for (std::size_t n = 0; n < raw.size(); ++n)
      amax = std::max(amax, l2r * static_cast<double>(n) - raw[n]);
    return l2r * static_cast<double>(raw.size() - 1) - raw.back() < amax - 60.0;
  };
  while (!decayed()) {
    if (count >= hard_cap) return raw;  // caller sees an infinite tail ratio
    count = std::min(hard_cap, count + std::max(64, count / 2));
    raw = raw_log_moments(w, rf, count);
  }
  return raw;
}

}  // namespace

KernelBasis compute_moments(const Weight& w, const RadiusField& rf, int n) {
  return normalize(w, raw_log_moments(w, rf, n), n);
}

int truncation_rank_for_window(const Weight& w, const RadiusField& rf, double r,
                               double tol, int cap) {
  if (!(tol > 0.0 && tol <= 1e-2))
    throw Error(ErrorKind::Config,
                "truncation_rank_for_window: tol must be in (0, 1e-2]");
  if (!(r > 0.0))
    throw Error(ErrorKind::Config, "truncation_rank_for_window: window radius "
                                   "must be positive");
  const std::vector<double> raw =
      raw_moments_until_decay(w, rf, std::min(64, cap), r, cap + cap / 4 + 64);
  for (int n = 1; n <= cap; ++n) {
    if (static_cast<std::size_t>(n) >= raw.size()) break;
    if (diag_tail_ratio(raw, n, r) <= tol) return n;
  }
  std::ostringstream os;
  os << "truncation_rank_for_window: rank cap " << cap
     << " insufficient for window radius " << r << "; use a smaller window";
  throw Error(ErrorKind::Config, os.str());
}

TruncatedKernel::TruncatedKernel(KernelBasis basis,
                                 std::shared_ptr<const RadiusField> rf,
                                 double window_radius, double diag_error_bound)
    : basis_(std::move(basis)),
      rf_(std::move(rf)),
      window_radius_(window_radius),
      diag_error_bound_(diag_error_bound) {
  if (!rf_) throw Error(ErrorKind::Config, "TruncatedKernel: null RadiusField");
  if (!(window_radius_ > 0.0))
    throw Error(ErrorKind::Config, "TruncatedKernel: window radius must be positive");
}

TruncatedKernel build_kernel_for_window(const Weight& w,
                                        std::shared_ptr<const RadiusField> rf,
                                        double window_radius, double tol,
                                        int cap) {
  const int rank = truncation_rank_for_window(w, *rf, window_radius, tol, cap);
  const std::vector<double> raw =
      raw_moments_until_decay(w, *rf, rank, window_radius, cap + cap / 4 + 64);
  const double bound = diag_tail_ratio(raw, rank, window_radius);
  return TruncatedKernel(normalize(w, raw, rank), std::move(rf), window_radius,
                         bound);
}

TruncatedKernel build_kernel_with_rank(const Weight& w,
                                       std::shared_ptr<const RadiusField> rf,
                                       int rank, double window_radius) {
  if (rank < 1) throw Error(ErrorKind::Config, "kernel rank must be >= 1");
  const std::vector<double> raw = raw_moments_until_decay(
      w, *rf, rank, window_radius, rank + 16384);
  const double bound = diag_tail_ratio(raw, rank, window_radius);
  return TruncatedKernel(normalize(w, raw, rank), std::move(rf), window_radius,
                         bound);
}

void TruncatedKernel::check_window(cplx z) const {
  if (std::abs(z) > window_radius_ * (1.0 + 1e-12) + 1e-12) {
    std::ostringstream os;
    os << "kernel evaluated at |z| = " << std::abs(z)
       << " outside validity window R = " << window_radius_
       << " (diag_error_bound at rim: " << diag_error_bound_ << ")";
    throw Error(ErrorKind::Window, os.str());
  }
}

LogComplex TruncatedKernel::eval_log(cplx z, cplx zeta) const {
  check_window(z);
  check_window(zeta);
  const double mag = std::abs(z) * std::abs(zeta);
  if (mag == 0.0) return {0.0, 0.0};  // K(·,0) = 1/c_0 = 1
  const double lw = std::log(mag);
  const double psi = std::arg(z) + std::arg(std::conj(zeta));
  const auto& lm = basis_.log_moments;
  const int n = basis_.rank;

  // t_k = k·lw - ln c_k is concave in k; locate the peak by bisecting the
  // sign change of the increments, then sum a ±46-nat band around it.
  auto incr = [&](int k) { return lw - (lm[k + 1] - lm[k]); };
  int peak = 0;
  if (n > 1) {
    if (incr(0) <= 0.0)
      peak = 0;
    else if (incr(n - 2) >= 0.0)
      peak = n - 1;
    else {
      int lo = 0, hi = n - 2;  // incr(lo) > 0 >= incr(hi)
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (incr(mid) > 0.0 ? lo : hi) = mid;
      }
      peak = hi;
    }
  }
  auto term = [&](int k) { return k * lw - lm[k]; };
  const double tmax = term(peak);
  int k_lo = peak, k_hi = peak;
  while (k_lo > 0 && term(k_lo - 1) > tmax - 46.0) --k_lo;
  while (k_hi + 1 < n && term(k_hi + 1) > tmax - 46.0) ++k_hi;

  const cplx rot = std::polar(1.0, psi);
  cplx phase = std::polar(1.0, k_lo * psi);
  cplx acc(0.0, 0.0);
  for (int k = k_lo; k <= k_hi; ++k) {
    acc += std::exp(term(k) - tmax) * phase;
    phase *= rot;
  }
  const double a = std::abs(acc);
  if (a == 0.0) return {kNegInf, 0.0};
  return {tmax + std::log(a), std::arg(acc)};
}

double TruncatedKernel::log_diag(double r) const {
  if (r < 0.0) throw Error(ErrorKind::Domain, "log_diag: negative radius");
  if (r == 0.0) return 0.0;
  check_window(cplx(r, 0.0));
  const double lw = 2.0 * std::log(r);
  const auto& lm = basis_.log_moments;
  double tmax = kNegInf;
  for (int k = 0; k < basis_.rank; ++k)
    tmax = std::max(tmax, k * lw - lm[k]);
  double s = 0.0;
  for (int k = 0; k < basis_.rank; ++k) s += std::exp(k * lw - lm[k] - tmax);
  return tmax + std::log(s);
}

std::pair<double, double> kernel_diag_check(const TruncatedKernel& k,
                                            const std::vector<cplx>& samples) {
  if (samples.empty())
    throw Error(ErrorKind::Config, "kernel_diag_check: empty samples");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (cplx z : samples) {
    const double r = std::abs(z);
    const double v =
        std::exp(k.log_diag(r) - 2.0 * k.basis().weight.value(r));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double metric_dK(const TruncatedKernel& k, cplx z, cplx zeta) {
  if (z == zeta) return 0.0;
  const double log_off = k.eval_log(z, zeta).log_abs;
  const double ratio =
      std::exp(2.0 * log_off - k.log_diag(std::abs(z)) - k.log_diag(std::abs(zeta)));
  return std::sqrt(1.0 - std::clamp(ratio, 0.0, 1.0));
}

namespace {

double polyline_length_rho(const RadiusField& rf, const std::vector<cplx>& pts) {
  const QuadNodes& q = gauss_legendre(32);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const cplx a = pts[i], b = pts[i + 1];
    const double len = std::abs(b - a);
    if (len == 0.0) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < q.x.size(); ++j) {
      const double u = 0.5 * (q.x[j] + 1.0);
      s += q.w[j] / rf.rho_fast(std::abs(a + (b - a) * u));
    }
    total += 0.5 * len * s;
  }
  return total;
}

}  // namespace

double metric_dB_proxy(const RadiusField& rf, cplx z, cplx zeta) {
  const double len = std::abs(z - zeta);
  if (len == 0.0) return 0.0;
  rf.ensure_table(std::max(std::abs(z), std::abs(zeta)) + len + 1.0);
  const cplx mid = 0.5 * (z + zeta);
  const cplx normal = cplx(0.0, 1.0) * (zeta - z) / len;

  auto path_via = [&](double off) {
    if (off == 0.0) return polyline_length_rho(rf, {z, zeta});
    return polyline_length_rho(rf, {z, mid + off * len * normal, zeta});
  };
  static const double offsets[] = {0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0};
  double best = std::numeric_limits<double>::infinity(), best_off = 0.0;
  for (double off : offsets) {
    const double v = path_via(off);
    if (v < best) {
      best = v;
      best_off = off;
    }
  }
  for (double d : {-0.125, 0.125, -0.0625, 0.0625}) {
    const double v = path_via(best_off + d);
    best = std::min(best, v);
  }
  return best;
}

void export_basis(const KernelBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write basis table: " + path);
  out.precision(17);
  out << "# weight " << basis.weight.description() << "\n";
  out << "# rank " << basis.rank << "\n";
  out << "# log_c_phi " << basis.log_c_phi << "\n";
  out << "n,ln_c_n\n";
  for (int n = 0; n < basis.rank; ++n)
    out << n << "," << basis.log_moments[n] << "\n";
}

KernelBasis import_basis(const std::string& path, const Weight& w) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read basis table: " + path);
  KernelBasis b{w, 0, {}, 0.0};
  std::string line;
  bool have_cphi = false;
  while (std::getline(in, line)) {
    if (line.rfind("# log_c_phi", 0) == 0) {
      std::istringstream ls(line.substr(11));
      have_cphi = static_cast<bool>(ls >> b.log_c_phi);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("n,", 0) == 0) continue;  // column header
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    long n;
    double v;
    if (!(ls >> n >> v))
      throw Error(ErrorKind::Config, "malformed basis table line: " + line);
    if (n != static_cast<long>(b.log_moments.size()))
      throw Error(ErrorKind::Config, "basis table rows out of order");
    b.log_moments.push_back(v);
  }
  if (b.log_moments.empty() || !have_cphi)
    throw Error(ErrorKind::Config, "basis table incomplete: " + path);
  b.rank = static_cast<int>(b.log_moments.size());
  check_log_convexity(b.log_moments);
  return b;
}

}  // namespace fockdpp
