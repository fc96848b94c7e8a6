#include "fockdpp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fockdpp/quadrature.hpp"

namespace fockdpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.28318530717958647692;

std::vector<std::pair<double, double>> quantiles_of(std::vector<double> v) {
  std::vector<std::pair<double, double>> out;
  if (v.empty()) return out;
  std::sort(v.begin(), v.end());
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    out.emplace_back(q, v[lo] + (pos - lo) * (v[hi] - v[lo]));
  }
  return out;
}

struct GridKeyHash {
  std::size_t operator()(const std::pair<long, long>& k) const {
    return std::hash<long>()(k.first * 2654435761L) ^
           std::hash<long>()(k.second);
  }
};

double mod_two_pi(double x) {
  double m = std::fmod(x, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  return m;
}

/// Half-open arcs [a, a+wa) and [b, b+wb) on the circle overlap iff either
/// start lies inside the other arc (widths <= 2π).
bool arcs_overlap(double a, double wa, double b, double wb) {
  if (wa >= kTwoPi - 1e-15 || wb >= kTwoPi - 1e-15) return true;
  return mod_two_pi(b - a) < wa || mod_two_pi(a - b) < wb;
}

/// True when the check certifies disjointness; throws when it cannot.
bool cells_disjoint(const Cell& a, const Cell& b) {
  auto is_sector = [](const Cell& c) {
    return c.kind == CellKind::AnnularSector ||
           c.kind == CellKind::ShiftedAnnularSector;
  };
  if (a.kind == CellKind::FullPlane || b.kind == CellKind::FullPlane)
    return false;
  if (is_sector(a) && is_sector(b)) {
    if (a.r_hi() <= b.r_lo() || b.r_hi() <= a.r_lo()) return true;
    return !arcs_overlap(a.theta_lo(), a.theta_hi() - a.theta_lo(),
                         b.theta_lo(), b.theta_hi() - b.theta_lo());
  }
  if (a.kind == CellKind::Disk && b.kind == CellKind::Disk)
    return std::abs(a.center - b.center) >= a.radius + b.radius;
  const Cell& d = a.kind == CellKind::Disk ? a : b;
  const Cell& s = a.kind == CellKind::Disk ? b : a;
  const double c = std::abs(d.center);
  if (c + d.radius <= s.r_lo()) return true;
  if (c - d.radius >= s.r_hi()) return true;
  return false;
}

long count_in_cell(const PointConfiguration& cfg, const Cell& cell) {
  long n = 0;
  for (cplx z : cfg.points)
    if (cell.contains(z)) ++n;
  return n;
}

}  // namespace

OlsFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw Error(ErrorKind::InsufficientData,
                "ols_fit needs >= 2 matched points");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0))
    throw Error(ErrorKind::InsufficientData, "ols_fit: zero x spread");
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

std::vector<double> nn_distances(const std::vector<cplx>& points) {
  const std::size_t n = points.size();
  if (n < 2) return {};

  // Seed the grid pitch with an upper bound on the minimum gap: the closest
  // consecutive pair after sorting by real part.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].real() < points[b].real();
  });
  double bound = kInf;
  for (std::size_t i = 1; i < n; ++i)
    bound = std::min(bound, std::abs(points[order[i]] - points[order[i - 1]]));
  double h = bound;
  if (!(h > 0.0)) h = 1e-12;

  std::unordered_map<std::pair<long, long>, std::vector<std::size_t>,
                     GridKeyHash>
      grid;
  auto key_of = [&](cplx z) {
    return std::make_pair(static_cast<long>(std::floor(z.real() / h)),
                          static_cast<long>(std::floor(z.imag() / h)));
  };
  for (std::size_t i = 0; i < n; ++i) grid[key_of(points[i])].push_back(i);

  std::vector<double> out(n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [cx, cy] = key_of(points[i]);
    double best = kInf;
    // Expand Chebyshev rings until every unscanned cell is provably farther.
    for (long radius = 1; radius < 1000000; ++radius) {
      const long lo = -radius, hi = radius;
      for (long dx = lo; dx <= hi; ++dx)
        for (long dy = lo; dy <= hi; ++dy) {
          if (radius > 1 && std::max(std::labs(dx), std::labs(dy)) != radius)
            continue;  // only the new shell after the first 3x3 block
          auto it = grid.find({cx + dx, cy + dy});
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if (j == i) continue;
            best = std::min(best, std::abs(points[i] - points[j]));
          }
        }
      if (best <= static_cast<double>(radius) * h) break;
    }
    out[i] = best;
  }
  return out;
}

SeparationReport min_gap(const PointConfiguration& config, GapMetric metric,
                         const TruncatedKernel* kernel) {
  if (metric == GapMetric::KernelDK && kernel == nullptr)
    throw Error(ErrorKind::Config, "min_gap: KernelDK metric needs a kernel");

  SeparationReport rep;
  rep.window = config.window;
  rep.n_points = static_cast<long>(config.points.size());
  rep.process = config.process;
  rep.metric = metric;
  rep.min_gap_euclidean = kInf;
  rep.min_gap_dk = std::numeric_limits<double>::quiet_NaN();
  if (rep.n_points < 2) {
    rep.min_gap_dk = kernel ? kInf : rep.min_gap_dk;
    return rep;
  }

  const std::vector<double> euc = nn_distances(config.points);
  rep.min_gap_euclidean = *std::min_element(euc.begin(), euc.end());

  std::vector<double> dk_nn;
  if (kernel) {
    const std::size_t n = config.points.size();
    std::vector<double> ld(n);
    for (std::size_t i = 0; i < n; ++i)
      ld[i] = kernel->log_diag(std::abs(config.points[i]));
    dk_nn.assign(n, kInf);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const LogComplex lk =
            kernel->eval_log(config.points[i], config.points[j]);
        const double ratio = std::exp(2.0 * lk.log_abs - ld[i] - ld[j]);
        const double dk = std::sqrt(std::clamp(1.0 - ratio, 0.0, 1.0));
        dk_nn[i] = std::min(dk_nn[i], dk);
        dk_nn[j] = std::min(dk_nn[j], dk);
      }
    rep.min_gap_dk = *std::min_element(dk_nn.begin(), dk_nn.end());
  }

  rep.gap_quantiles =
      quantiles_of(metric == GapMetric::KernelDK ? dk_nn : euc);
  return rep;
}

std::map<std::pair<long, long>, long> cell_counts(
    const PointConfiguration& config, const CellPartition& partition) {
  std::map<std::pair<long, long>, long> counts;
  for (cplx z : config.points) {
    const Cell cell = partition.locate(z);
    if (!cell.contains(z)) {
      std::ostringstream os;
      os << "point (" << z.real() << "," << z.imag()
         << ") not covered by its located cell " << cell.label();
      throw Error(ErrorKind::Coverage, os.str());
    }
    ++counts[{cell.n, cell.k}];
  }
  return counts;
}

ScalingReport scaling_regression(const std::vector<CellRecord>& table,
                                 double gamma_expected,
                                 const RegressionFilter& filter,
                                 bool poissonized) {
  ScalingReport rep;
  for (const CellRecord& rec : table) {
    if (!(rec.trace <= filter.max_trace)) continue;
    const double p = poissonized
                         ? poisson_cell_prob(rec.trace).p_geq2_exact
                         : rec.p_geq2_exact;
    if (!(p >= filter.min_p)) continue;
    if (!(rec.rho_center > 0.0)) continue;
    rep.xs.push_back(std::log(rec.rho_center));
    rep.ys.push_back(std::log(p));
  }
  if (rep.xs.size() < 10)
    throw Error(ErrorKind::InsufficientData,
                "scaling_regression: fewer than 10 cells pass the filter");
  const OlsFit f = ols_fit(rep.xs, rep.ys);
  rep.slope = f.slope;
  rep.intercept = f.intercept;
  rep.r_squared = f.r_squared;
  std::ostringstream os;
  os << "trace <= " << filter.max_trace << " and p >= " << filter.min_p
     << (poissonized ? "; poissonized p from trace" : "; determinantal p")
     << "; expected slope " << -gamma_expected;
  rep.cell_filter = os.str();
  return rep;
}

BorelCantelliResult borel_cantelli_sum(const RadiusField& rf, double gamma,
                                       int n_max) {
  if (n_max < 10)
    throw Error(ErrorKind::Config, "borel_cantelli_sum needs n_max >= 10");
  rf.ensure_table(static_cast<double>(n_max) + 1.0);

  BorelCantelliResult res;
  res.partial_sums.reserve(n_max);
  const QuadNodes& q = gauss_legendre(16);
  double sum = 0.0, integral = 0.0;
  bool ok = true;
  for (int n = 1; n <= n_max; ++n) {
    const double r_c = n - 0.5;
    sum += n * std::pow(rf.rho_fast(r_c), -gamma);
    res.partial_sums.push_back(sum);

    // 2π ∫_{n-1}^{n} r ρ(r)^{-γ} dr, accumulated ring by ring.
    const double a = n - 1.0, b = n;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double seg = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      const double r = mid + half * q.x[i];
      seg += q.w[i] * half * r * std::pow(rf.rho_fast(r), -gamma);
    }
    integral += kTwoPi * seg;
    if (n >= 10) {
      const double ratio = sum / integral;
      ok = ok && ratio >= 0.1 && ratio <= 10.0;
    }
  }
  res.matches_integral = ok;
  return res;
}

DensityEstimate upper_density(const PointConfiguration& config,
                              const std::vector<double>& radii) {
  DensityEstimate est;
  const Window& w = config.window;
  double r_max = 0.0;
  for (double r : radii) r_max = std::max(r_max, r);

  for (double r : radii) {
    if (!(r > 0.0))
      throw Error(ErrorKind::Config, "upper_density needs positive radii");
    if (w.r_out - r < (w.kind == WindowKind::Annulus ? w.r_in + r : 0.0)) {
      std::ostringstream os;
      os << "upper_density: radius " << r << " exceeds window margin (r_out "
         << w.r_out << ")";
      throw Error(ErrorKind::Window, os.str());
    }
    const double h = r / 4.0;
    const double c_max = w.r_out - r;
    const long span = static_cast<long>(std::floor(c_max / h));
    double sup = 0.0;
    for (long i = -span; i <= span; ++i)
      for (long j = -span; j <= span; ++j) {
        const cplx c(i * h, j * h);
        const double cr = std::abs(c);
        if (cr > c_max) continue;
        if (w.kind == WindowKind::Annulus && cr - r < w.r_in) continue;
        long cnt = 0;
        for (cplx z : config.points)
          if (std::abs(z - c) <= r) ++cnt;
        sup = std::max(sup, cnt / (0.5 * kTwoPi * r * r));
      }
    est.radii.push_back(r);
    est.sup_counts_over_area.push_back(sup);
    if (r == r_max) est.extrapolated_upper_density = sup;
  }
  return est;
}

GhoshResult ghosh_test(const std::vector<PointConfiguration>& batches,
                       const std::vector<std::pair<Cell, Cell>>& pairs,
                       long m) {
  if (batches.size() < 1000)
    throw Error(ErrorKind::InsufficientData,
                "ghosh_test needs >= 1000 batches");
  GhoshResult res;
  const double B = static_cast<double>(batches.size());
  for (const auto& [ca, cb] : pairs) {
    if (!cells_disjoint(ca, cb))
      throw Error(ErrorKind::Disjointness,
                  "ghosh_test: cells " + ca.label() + " and " + cb.label() +
                      " are not certifiably disjoint");
    long n1 = 0, n2 = 0, n12 = 0;
    for (const PointConfiguration& cfg : batches) {
      const bool a_ok = count_in_cell(cfg, ca) <= m;
      const bool b_ok = count_in_cell(cfg, cb) <= m;
      n1 += a_ok;
      n2 += b_ok;
      n12 += a_ok && b_ok;
    }
    const double p1 = n1 / B, p2 = n2 / B, p12 = n12 / B;
    const double v1 = p1 * (1.0 - p1), v2 = p2 * (1.0 - p2),
                 v12 = p12 * (1.0 - p12);
    res.excesses.push_back(p12 - p1 * p2);
    res.pooled_se.push_back(std::sqrt((v12 + p2 * p2 * v1 + p1 * p1 * v2) / B));
  }
  res.pass = true;
  for (std::size_t i = 0; i < res.excesses.size(); ++i) {
    res.worst_excess = std::max(res.worst_excess, res.excesses[i]);
    res.pass = res.pass && res.excesses[i] <= 3.0 * res.pooled_se[i] + 1e-15;
  }
  return res;
}

double empirical_p_geq2(const std::vector<PointConfiguration>& batches,
                        const Cell& cell) {
  if (batches.empty())
    throw Error(ErrorKind::InsufficientData, "empirical_p_geq2: no batches");
  long hits = 0;
  for (const PointConfiguration& cfg : batches)
    hits += count_in_cell(cfg, cell) >= 2;
  return hits / static_cast<double>(batches.size());
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw Error(ErrorKind::InsufficientData,
                "ks_statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()),
               nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

namespace {

nlohmann::json window_json(const Window& w) {
  return {{"kind", w.kind == WindowKind::Disk ? "disk" : "annulus"},
          {"r_in", w.r_in},
          {"r_out", w.r_out}};
}

}  // namespace

std::string to_json_string(const SeparationReport& report) {
  nlohmann::json j;
  j["metric"] =
      report.metric == GapMetric::Euclidean ? "euclid" : "dk";
  j["min_gap_euclidean"] = report.min_gap_euclidean;
  j["min_gap_dk"] = report.min_gap_dk;
  nlohmann::json q = nlohmann::json::array();
  for (const auto& [p, v] : report.gap_quantiles) q.push_back({p, v});
  j["gap_quantiles"] = q;
  j["n_points"] = report.n_points;
  j["process"] = to_string(report.process);
  j["window"] = window_json(report.window);
  return j.dump(2);
}

std::string to_json_string(const ScalingReport& report) {
  nlohmann::json j;
  j["slope"] = report.slope;
  j["intercept"] = report.intercept;
  j["r_squared"] = report.r_squared;
  j["cell_filter"] = report.cell_filter;
  j["n_cells"] = report.xs.size();
  j["xs"] = report.xs;
  j["ys"] = report.ys;
  return j.dump(2);
}

std::string to_json_string(const DensityEstimate& report) {
  nlohmann::json j;
  j["radii"] = report.radii;
  j["sup_counts_over_area"] = report.sup_counts_over_area;
  j["extrapolated_upper_density"] = report.extrapolated_upper_density;
  return j.dump(2);
}

std::string to_json_string(const GhoshResult& report) {
  nlohmann::json j;
  j["worst_excess"] = report.worst_excess;
  j["pass"] = report.pass;
  j["excesses"] = report.excesses;
  j["pooled_se"] = report.pooled_se;
  return j.dump(2);
}

void write_scatter_csv(const std::string& path, const ScalingReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
  out.precision(17);
  out << "x,y\n";
  for (std::size_t i = 0; i < report.xs.size(); ++i)
    out << report.xs[i] << "," << report.ys[i] << "\n";
}

}  // namespace fockdpp
