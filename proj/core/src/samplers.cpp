#include "fockdpp/samplers.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fockdpp/interp.hpp"
#include "fockdpp/quadrature.hpp"
#include "fockdpp/rng.hpp"

namespace fockdpp {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Indices where n·ln r - ½ ln c_n is within 46 nats of its (concave) peak.
std::pair<int, int> feature_band(const std::vector<double>& lm, int N,
                                 double lr) {
  auto t = [&](int n) { return n * lr - 0.5 * lm[n]; };
  int peak = 0;
  if (N > 1) {
    auto incr = [&](int n) { return lr - 0.5 * (lm[n + 1] - lm[n]); };
    if (incr(0) <= 0.0)
      peak = 0;
    else if (incr(N - 2) >= 0.0)
      peak = N - 1;
    else {
      int lo = 0, hi = N - 2;
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (incr(mid) > 0.0 ? lo : hi) = mid;
      }
      peak = hi;
    }
  }
  const double tmax = t(peak);
  int lo = peak, hi = peak;
  while (lo > 0 && t(lo - 1) > tmax - 46.0) --lo;
  while (hi + 1 < N && t(hi + 1) > tmax - 46.0) ++hi;
  return {lo, hi};
}

/// ‖φ̃(z)‖² = K_N(z,z)·e^{-2φ} for |z| = r: the step-0 conditional diagonal,
/// an upper bound for every later conditional diagonal.
double scaled_diag(const std::vector<double>& lm, int N, const Weight& w,
                   double r) {
  if (r <= 0.0) return std::exp(-2.0 * w.value(r));
  const double lr = std::log(r);
  const auto [lo, hi] = feature_band(lm, N, lr);
  const double phi = w.value(r);
  double tmax = kNegInf;
  for (int n = lo; n <= hi; ++n)
    tmax = std::max(tmax, 2.0 * (n * lr - 0.5 * lm[n]));
  double s = 0.0;
  for (int n = lo; n <= hi; ++n)
    s += std::exp(2.0 * (n * lr - 0.5 * lm[n]) - tmax);
  return s * std::exp(tmax - 2.0 * phi);
}

/// Scatters φ̃_n(z) into `g` (zeros outside the band); returns ‖g‖².
double fill_features(const std::vector<double>& lm, int N, const Weight& w,
                     cplx z, Eigen::VectorXcd& g, int& band_lo,
                     int& band_hi) {
  g.setZero();
  const double r = std::abs(z);
  if (r <= 0.0) {
    band_lo = band_hi = 0;
    g(0) = std::exp(-w.value(0.0));
    return std::norm(g(0));
  }
  const double lr = std::log(r), th = std::arg(z), phi = w.value(r);
  const auto [lo, hi] = feature_band(lm, N, lr);
  band_lo = lo;
  band_hi = hi;
  double s = 0.0;
  for (int n = lo; n <= hi; ++n) {
    const double a = std::exp(n * lr - 0.5 * lm[n] - phi);
    g(n) = std::polar(a, n * th);
    s += a * a;
  }
  return s;
}

struct Envelope {
  std::vector<double> edge;    ///< shell edges, size shells+1
  std::vector<double> height;  ///< envelope of S₀(z)·c_φ·r/ρ² per shell
  std::vector<double> cum;     ///< cumulative shell proposal mass
  double total = 0.0;
};

/// 256 shells of equal reference mass σ_φ on [0, r_sup]; per shell the
/// envelope tops the radial target S₀·c_φ·r/ρ² with a 1.15 probe factor.
/// Proposals are uniform in radius within a shell, so the only correctness
/// requirement is that `height` dominates the target on the shell.
Envelope build_envelope(const TruncatedKernel& k, double r_sup) {
  const Weight& w = k.basis().weight;
  const RadiusField& rf = k.radius_field();
  const auto& lm = k.basis().log_moments;
  const int N = k.rank();
  const double lcphi = k.basis().log_c_phi;
  rf.ensure_table(r_sup);

  auto target = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double rho = rf.rho_fast(r);
    return scaled_diag(lm, N, w, r) * std::exp(lcphi) * r / (rho * rho);
  };

  // Reference-mass quantile edges from a fine cumulative trapezoid table.
  const int fine = 8192;
  std::vector<double> rr(fine + 1), cum(fine + 1, 0.0);
  double prev_dens = 0.0;
  for (int i = 0; i <= fine; ++i) {
    rr[i] = r_sup * static_cast<double>(i) / fine;
    const double rho = i == 0 ? rf.rho_fast(1e-12) : rf.rho_fast(rr[i]);
    const double dens = kTwoPi * rr[i] / (rho * rho);
    if (i > 0)
      cum[i] = cum[i - 1] + 0.5 * (dens + prev_dens) * (rr[i] - rr[i - 1]);
    prev_dens = dens;
  }

  const int shells = 256;
  Envelope env;
  env.edge.resize(shells + 1);
  env.edge[0] = 0.0;
  env.edge[shells] = r_sup;
  int pos = 0;
  for (int s = 1; s < shells; ++s) {
    const double want = cum[fine] * static_cast<double>(s) / shells;
    while (pos < fine && cum[pos + 1] < want) ++pos;
    const double lo = cum[pos], hi_c = cum[pos + 1];
    const double t = hi_c > lo ? (want - lo) / (hi_c - lo) : 0.0;
    env.edge[s] = rr[pos] + t * (rr[pos + 1] - rr[pos]);
  }

  env.height.resize(shells);
  env.cum.resize(shells);
  double acc = 0.0;
  for (int s = 0; s < shells; ++s) {
    const double a = env.edge[s], b = env.edge[s + 1];
    double m = 0.0;
    for (int j = 0; j <= 8; ++j)
      m = std::max(m, target(a + (b - a) * j / 8.0));
    env.height[s] = 1.15 * m;
    acc += env.height[s] * (b - a) * kTwoPi;
    env.cum[s] = acc;
  }
  env.total = acc;
  return env;
}

}  // namespace

Window Window::disk(double radius) {
  if (!(radius >= 0.0))
    throw Error(ErrorKind::Config, "window radius must be >= 0");
  Window w;
  w.kind = WindowKind::Disk;
  w.r_in = 0.0;
  w.r_out = radius;
  return w;
}

Window Window::annulus(double r_in, double r_out) {
  if (!(r_in >= 0.0) || !(r_out >= r_in))
    throw Error(ErrorKind::Config, "annulus window needs 0 <= r_in <= r_out");
  Window w;
  w.kind = WindowKind::Annulus;
  w.r_in = r_in;
  w.r_out = r_out;
  return w;
}

bool Window::contains(cplx z) const {
  const double r = std::abs(z);
  return r >= r_in && r <= r_out;
}

double Window::area() const {
  return 0.5 * kTwoPi * (r_out * r_out - r_in * r_in);
}

std::string to_string(SampleProcess p) {
  switch (p) {
    case SampleProcess::DPP: return "dpp";
    case SampleProcess::Poisson: return "poisson";
    case SampleProcess::GinibreOracle: return "ginibre";
  }
  return "?";
}

double dpp_support_radius(const TruncatedKernel& k) {
  const Weight& w = k.basis().weight;
  const auto& lm = k.basis().log_moments;
  const int N = k.rank();
  double r = 0.25, best = kNegInf, r_best = 0.25;
  for (int it = 0; it < 4000; ++it) {
    const double v = std::log(scaled_diag(lm, N, w, r) + 1e-300);
    if (v > best) {
      best = v;
      r_best = r;
    } else if (r > r_best && v < best - 70.0) {
      return r;
    }
    r *= 1.02;
    if (r > 1e8) break;
  }
  throw Error(ErrorKind::Numeric,
              "dpp_support_radius: diagonal does not decay (weight too flat "
              "for this rank)");
}

PointConfiguration sample_dpp(const TruncatedKernel& k, const Window& window,
                              std::uint64_t seed) {
  if (window.r_out > k.window_radius() * (1.0 + 1e-9) &&
      window.r_out > dpp_support_radius(k) * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "sample window r_out = " << window.r_out
       << " exceeds both kernel validity (" << k.window_radius()
       << ") and sampler support";
    throw Error(ErrorKind::Window, os.str());
  }
  const Weight& w = k.basis().weight;
  const RadiusField& rf = k.radius_field();
  const auto& lm = k.basis().log_moments;
  const int N = k.rank();
  const double lcphi = k.basis().log_c_phi;
  const double r_sup = dpp_support_radius(k);
  rf.ensure_table(r_sup);
  Envelope env = build_envelope(k, r_sup);

  const int shells = static_cast<int>(env.height.size());
  std::vector<cplx> pts;
  Eigen::MatrixXcd basis_u(N, N);
  Eigen::VectorXcd g(N), coeff(N), wvec(N);

  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng rng(seed, static_cast<std::uint64_t>(attempt));
    pts.clear();
    bool violated = false;
    for (int j = 0; j < N && !violated; ++j) {
      long proposals = 0;
      for (;;) {
        ++proposals;
        if (proposals > 2000000) {
          std::ostringstream os;
          os << "rejection acceptance rate below 1e-4 at point " << j
             << " of " << N << " (envelope mass " << env.total
             << ", support radius " << r_sup << ")";
          throw Error(ErrorKind::EnvelopeFailure, os.str());
        }
        // Shell by proposal mass, uniform radius within, uniform angle.
        const double pick = rng.uniform() * env.total;
        const int s = static_cast<int>(
            std::lower_bound(env.cum.begin(), env.cum.end(), pick) -
            env.cum.begin());
        const int sc = std::min(s, shells - 1);
        const double r =
            env.edge[sc] + rng.uniform() * (env.edge[sc + 1] - env.edge[sc]);
        const double theta = rng.uniform() * kTwoPi;
        const double u_acc = rng.uniform();
        const cplx z = std::polar(r, theta);

        int b_lo = 0, b_hi = 0;
        const double s0 = fill_features(lm, N, w, z, g, b_lo, b_hi);
        double proj = 0.0;
        if (j > 0) {
          coeff.head(j).noalias() =
              basis_u.block(b_lo, 0, b_hi - b_lo + 1, j).adjoint() *
              g.segment(b_lo, b_hi - b_lo + 1);
          proj = coeff.head(j).squaredNorm();
        }
        const double cond = std::max(s0 - proj, 0.0);
        const double rho = rf.rho_fast(r);
        const double tgt = cond * std::exp(lcphi) * r / (rho * rho);
        const double ratio = tgt / env.height[sc];
        if (ratio > 1.0 + 1e-9) {
          // The probe-built envelope missed the target maximum: raise the
          // shell and replay the whole sample on the next RNG stream.
          env.total += (ratio * 1.2 - 1.0) * env.height[sc] *
                       (env.edge[sc + 1] - env.edge[sc]) * kTwoPi;
          env.height[sc] *= ratio * 1.2;
          for (int t = sc; t < shells; ++t)
            env.cum[t] = (t == 0 ? 0.0 : env.cum[t - 1]) +
                         env.height[t] * (env.edge[t + 1] - env.edge[t]) *
                             kTwoPi;
          violated = true;
          break;
        }
        if (u_acc >= ratio) continue;

        // Accept: Gram-Schmidt the feature vector into the selected basis,
        // with one re-orthogonalization pass for numerical hygiene.
        wvec = g;
        if (j > 0) {
          wvec.noalias() -= basis_u.leftCols(j) * coeff.head(j);
          coeff.head(j).noalias() = basis_u.leftCols(j).adjoint() * wvec;
          wvec.noalias() -= basis_u.leftCols(j) * coeff.head(j);
        }
        const double nn = wvec.norm();
        if (!(nn > 1e-14))
          throw Error(ErrorKind::Numeric,
                      "conditional density collapsed during Gram-Schmidt");
        basis_u.col(j) = wvec / nn;
        pts.push_back(z);
        break;
      }
    }
    if (!violated) {
      PointConfiguration cfg;
      cfg.points = std::move(pts);
      cfg.process = SampleProcess::DPP;
      cfg.seed = seed;
      cfg.kernel_rank = N;
      bool inside = true;
      for (cplx z : cfg.points) inside = inside && window.contains(z);
      cfg.window = inside ? window : Window::disk(r_sup * (1.0 + 1e-12));
      return cfg;
    }
  }
  throw Error(ErrorKind::EnvelopeFailure,
              "envelope kept failing after 5 rebuild attempts");
}

double sigma_mass(const RadiusField& rf, const Window& window) {
  if (window.r_out <= window.r_in) return 0.0;
  rf.ensure_table(window.r_out);
  auto f = [&](double r) {
    const double rho = rf.rho_fast(r);
    return kTwoPi * r / (rho * rho);
  };
  return integrate(f, window.r_in, window.r_out, 1e-10);
}

namespace detail {

RadialCdf build_radial_cdf(const RadiusField& rf, double r_in, double r_out,
                           int nodes) {
  if (nodes < 8) throw Error(ErrorKind::Config, "radial cdf needs >= 8 nodes");
  rf.ensure_table(r_out);
  const QuadNodes& q = gauss_legendre(4);
  RadialCdf t;
  t.radius.resize(nodes);
  t.mass.resize(nodes);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double r =
        r_in + (r_out - r_in) * static_cast<double>(i) / (nodes - 1);
    t.radius[i] = r;
    if (i > 0) {
      const double a = t.radius[i - 1], b = r;
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      double seg = 0.0;
      for (std::size_t jn = 0; jn < q.x.size(); ++jn) {
        const double rr = mid + half * q.x[jn];
        const double rho = rf.rho_fast(rr);
        seg += q.w[jn] * half * kTwoPi * rr / (rho * rho);
      }
      acc += seg;
    }
    t.mass[i] = acc;
  }
  for (int i = 1; i < nodes; ++i)
    if (!(t.mass[i] > t.mass[i - 1]))
      throw Error(ErrorKind::Numeric,
                  "poisson radial table non-monotone (rho table corrupt?)");
  return t;
}

double invert_radial_cdf(const RadialCdf& table, double u) {
  PchipSpline spline(table.mass, table.radius);
  return spline(u);
}

}  // namespace detail

PointConfiguration sample_poisson(const RadiusField& rf, const Window& window,
                                  std::uint64_t seed) {
  PointConfiguration cfg;
  cfg.window = window;
  cfg.process = SampleProcess::Poisson;
  cfg.seed = seed;
  const double mass = sigma_mass(rf, window);
  if (mass <= 0.0) return cfg;

  const detail::RadialCdf table =
      detail::build_radial_cdf(rf, window.r_in, window.r_out, 4096);
  PchipSpline inverse(table.mass, table.radius);

  Rng rng(seed, 0);
  const long count = rng.poisson(mass);
  cfg.points.reserve(count);
  for (long i = 0; i < count; ++i) {
    const double r =
        std::clamp(inverse(rng.uniform() * table.mass.back()),
                   window.r_in, window.r_out);
    const double theta = rng.uniform() * kTwoPi;
    cfg.points.push_back(std::polar(r, theta));
  }
  return cfg;
}

PointConfiguration ginibre_oracle(int n, std::uint64_t seed) {
  if (n < 1 || n > 4096)
    throw Error(ErrorKind::Config, "ginibre_oracle needs 1 <= N <= 4096");
  Rng rng(seed, 0);
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = 0.5 * cplx(re, im);
    }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(g, false);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::Numeric, "ginibre eigensolver failed");

  PointConfiguration cfg;
  cfg.process = SampleProcess::GinibreOracle;
  cfg.seed = seed;
  cfg.kernel_rank = n;
  cfg.points.assign(es.eigenvalues().data(),
                    es.eigenvalues().data() + es.eigenvalues().size());
  double max_abs = 0.0;
  for (cplx z : cfg.points) max_abs = std::max(max_abs, std::abs(z));
  cfg.window = Window::disk(
      std::max(std::sqrt(0.5 * n) * 1.2, max_abs * (1.0 + 1e-12)));
  return cfg;
}

PointConfiguration restrict_to_window(const PointConfiguration& config,
                                      const Window& window) {
  PointConfiguration out;
  out.window = window;
  out.process = config.process;
  out.seed = config.seed;
  out.kernel_rank = config.kernel_rank;
  for (cplx z : config.points)
    if (window.contains(z)) out.points.push_back(z);
  return out;
}

void export_configuration(const PointConfiguration& config,
                          const std::string& csv_path,
                          const std::string& json_path,
                          const std::string& weight_description) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorKind::Config, "cannot write " + csv_path);
  csv.precision(17);
  csv << "re,im\n";
  for (cplx z : config.points) csv << z.real() << "," << z.imag() << "\n";

  nlohmann::json j;
  j["process"] = to_string(config.process);
  j["seed"] = config.seed;
  j["n_points"] = config.points.size();
  j["window"] = {
      {"kind", config.window.kind == WindowKind::Disk ? "disk" : "annulus"},
      {"r_in", config.window.r_in},
      {"r_out", config.window.r_out}};
  if (config.kernel_rank)
    j["kernel_rank"] = *config.kernel_rank;
  j["weight"] = weight_description;
  std::ofstream js(json_path);
  if (!js) throw Error(ErrorKind::Config, "cannot write " + json_path);
  js << j.dump(2) << "\n";
}

}  // namespace fockdpp
