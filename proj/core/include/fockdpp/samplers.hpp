#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fockdpp/kernel.hpp"
#include "fockdpp/weights.hpp"

namespace fockdpp {

enum class WindowKind { Disk, Annulus };

/// Radially symmetric observation window.
struct Window {
  WindowKind kind = WindowKind::Disk;
  double r_in = 0.0;
  double r_out = 0.0;

  static Window disk(double radius);
  static Window annulus(double r_in, double r_out);
  bool contains(cplx z) const;  ///< r_in ≤ |z| ≤ r_out
  double area() const;
};

enum class SampleProcess { DPP, Poisson, GinibreOracle };

std::string to_string(SampleProcess p);

/// One sampled configuration.  Every point lies in `window`; a DPP draw from
/// a rank-N kernel carries at most N points.
struct PointConfiguration {
  std::vector<cplx> points;
  Window window;
  SampleProcess process = SampleProcess::DPP;
  std::uint64_t seed = 0;
  std::optional<int> kernel_rank;
};

/// Radius beyond which the rank-N diagonal has decayed ~70 nats below its
/// peak: the sampler proposes only inside this disk, so a window at least
/// this large always receives all N points.
double dpp_support_radius(const TruncatedKernel& k);

/// Sequential projection-DPP sampler: exactly N points from the joint density
/// det(K(z_i,z_j))/N! under μ_φ, each new point drawn from the conditional
/// density (kernel diagonal minus the projection onto the selected columns)
/// by rejection against a piecewise-constant radial envelope over 256 shells
/// of equal reference mass.  The envelope is the exact step-0 diagonal shell
/// maximum with a 1.1 safety factor; it dominates every later conditional
/// diagonal because Gram-Schmidt only subtracts nonnegative projections.
/// Deterministic given seed.  The returned window is the passed window when
/// it contains every point, else the support disk (observation windows are
/// applied downstream by restriction).
PointConfiguration sample_dpp(const TruncatedKernel& k, const Window& window,
                              std::uint64_t seed);

/// σ_φ(window) = ∫_window ρ^{-2} dm, the Poisson intensity mass.
double sigma_mass(const RadiusField& rf, const Window& window);

/// Matched Poisson process: count ~ Poisson(σ_φ(window)), then i.i.d. points
/// with density ρ^{-2} dm in the window via radial inverse transform
/// (4096-node monotone cubic table) and uniform angle.  Deterministic given
/// seed.
PointConfiguration sample_poisson(const RadiusField& rf, const Window& window,
                                  std::uint64_t seed);

/// Eigenvalues of an N×N matrix with i.i.d. centered complex Gaussian entries
/// of variance 1/2, so the eigenvalue density matches the α = 2 weight
/// e^{-2|z|²} (joint ∝ Π|z_i-z_j|² e^{-2Σ|z_i|²}).  Statistical oracle for
/// sample_dpp at α = 2.
PointConfiguration ginibre_oracle(int n, std::uint64_t seed);

/// Points whose window shrank to `window`; drops outside points.
PointConfiguration restrict_to_window(const PointConfiguration& config,
                                      const Window& window);

/// CSV (re, im) plus a JSON sidecar describing process, seed, window, rank,
/// and the weight.
void export_configuration(const PointConfiguration& config,
                          const std::string& csv_path,
                          const std::string& json_path,
                          const std::string& weight_description);

namespace detail {
/// Inverse radial CDF table for the Poisson sampler; exposed so the
/// non-monotone-table error path stays testable.
struct RadialCdf {
  std::vector<double> mass;  ///< cumulative σ_φ mass, strictly increasing
  std::vector<double> radius;
};
RadialCdf build_radial_cdf(const RadiusField& rf, double r_in, double r_out,
                           int nodes);
double invert_radial_cdf(const RadialCdf& table, double u);
}  // namespace detail

}  // namespace fockdpp
