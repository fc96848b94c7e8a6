#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fockdpp/cells.hpp"
#include "fockdpp/kernel.hpp"
#include "fockdpp/samplers.hpp"
#include "fockdpp/spectra.hpp"
#include "fockdpp/weights.hpp"

namespace fockdpp {

enum class GapMetric { Euclidean, KernelDK };

/// Nearest-neighbor separation statistics of one configuration.
/// min_gap fields are +infinity when the configuration has < 2 points;
/// min_gap_dk is NaN when no kernel was supplied to evaluate d_K.
struct SeparationReport {
  double min_gap_euclidean = 0.0;
  double min_gap_dk = 0.0;
  std::vector<std::pair<double, double>> gap_quantiles;  ///< (q, value)
  Window window;
  long n_points = 0;
  SampleProcess process = SampleProcess::DPP;
  GapMetric metric = GapMetric::Euclidean;
};

/// Log-log regression of cell occupancy probabilities against rho.
struct ScalingReport {
  std::vector<double> xs;  ///< ln rho(z_{n,k})
  std::vector<double> ys;  ///< ln p for the selected probability column
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::string cell_filter;
};

/// sup-over-centers counting density at a ladder of radii.
struct DensityEstimate {
  std::vector<double> radii;
  std::vector<double> sup_counts_over_area;
  double extrapolated_upper_density = 0.0;
};

struct BorelCantelliResult {
  std::vector<double> partial_sums;  ///< cumulative ring sums, index n-1
  bool matches_integral = false;
};

struct GhoshResult {
  double worst_excess = 0.0;
  bool pass = false;
  std::vector<double> excesses;   ///< per pair: joint - product
  std::vector<double> pooled_se;  ///< per pair: delta-method SE
};

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x; needs >= 2 points and nonzero x spread.
OlsFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys);

/// Per-point nearest-neighbor Euclidean distances via a spatial hash grid
/// (cell size seeded from an x-sorted consecutive-pair bound, built once).
std::vector<double> nn_distances(const std::vector<cplx>& points);

/// Minimum pairwise gap and nearest-neighbor quantiles under the requested
/// metric. KernelDK needs a kernel and runs the exact O(n^2) evaluation.
SeparationReport min_gap(const PointConfiguration& config, GapMetric metric,
                         const TruncatedKernel* kernel = nullptr);

/// Exact half-open assignment of every point to a partition cell.
std::map<std::pair<long, long>, long> cell_counts(
    const PointConfiguration& config, const CellPartition& partition);

struct RegressionFilter {
  double max_trace = 0.2;
  double min_p = 1e-14;
};

/// OLS of ln p_geq2 on ln rho over the filtered cell table. With
/// `poissonized` the probability column is poisson_cell_prob at p = trace.
ScalingReport scaling_regression(const std::vector<CellRecord>& table,
                                 double gamma_expected,
                                 const RegressionFilter& filter = {},
                                 bool poissonized = false);

/// Partial sums S(n) = sum_{j<=n} j * rho(z_{j,1})^{-gamma} over the
/// standard scale-1 grid, with the sum-vs-integral comparability flag.
BorelCantelliResult borel_cantelli_sum(const RadiusField& rf, double gamma,
                                       int n_max);

/// sup over lattice centers (spacing r/4) of #(points in D(z,r)) / (pi r^2),
/// centers restricted so D(z,r) stays inside the window.
DensityEstimate upper_density(const PointConfiguration& config,
                              const std::vector<double>& radii);

/// Negative-association check: empirical joint P(both counts <= m) minus the
/// product of marginals over disjoint cell pairs, against 3 pooled SE.
GhoshResult ghosh_test(const std::vector<PointConfiguration>& batches,
                       const std::vector<std::pair<Cell, Cell>>& pairs,
                       long m);

/// Fraction of batches whose count in `cell` is >= 2.
double empirical_p_geq2(const std::vector<PointConfiguration>& batches,
                        const Cell& cell);

/// Two-sample Kolmogorov-Smirnov statistic sup_t |F_a(t) - F_b(t)|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// JSON serializations for the report bundle.
std::string to_json_string(const SeparationReport& report);
std::string to_json_string(const ScalingReport& report);
std::string to_json_string(const DensityEstimate& report);
std::string to_json_string(const GhoshResult& report);

/// Two-column scatter CSV (x,y) of a regression report.
void write_scatter_csv(const std::string& path, const ScalingReport& report);

}  // namespace fockdpp
