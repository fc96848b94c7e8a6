#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "fockdpp/weights.hpp"

namespace fockdpp {

/// Monomial moments of the probability measure μ_φ = c_φ e^{-2φ} dm / ρ².
/// With a radial weight the monomials are orthogonal, so these moments are
/// the whole kernel: K(z,ζ) = Σ (z·conj(ζ))ⁿ / c_n.
struct KernelBasis {
  Weight weight;
  int rank = 0;                      ///< N, moments for n = 0..N-1
  std::vector<double> log_moments;   ///< ln c_n after normalization (c_0 = 1)
  double log_c_phi = 0.0;            ///< ln c_φ with ∫ dμ_φ = 1
};

/// ln c_n by adaptive log-domain radial quadrature; log-convexity of c_n is
/// verified as a quadrature sanity check.
KernelBasis compute_moments(const Weight& w, const RadiusField& rf, int n);

/// Smallest N with Σ_{n≥N} R^{2n}/c_n ≤ tol · Σ_{n<N} R^{2n}/c_n.
int truncation_rank_for_window(const Weight& w, const RadiusField& rf, double r,
                               double tol, int cap = 2048);

/// A kernel value in log/phase form: value = e^{log_abs} · e^{i·arg}.
/// K(z,z) for |z| ~ 100 overflows double, so this is the native format.
struct LogComplex {
  double log_abs = 0.0;
  double arg = 0.0;
  std::complex<double> value() const {
    return std::polar(std::exp(log_abs), arg);
  }
};

/// Rank-N truncation of K_φ, treated as the exact kernel of a rank-N
/// projection DPP.  Fidelity to the infinite-rank kernel inside the window
/// is quantified by diag_error_bound (relative diagonal tail at the rim).
class TruncatedKernel {
 public:
  TruncatedKernel(KernelBasis basis, std::shared_ptr<const RadiusField> rf,
                  double window_radius, double diag_error_bound);

  const KernelBasis& basis() const { return basis_; }
  int rank() const { return basis_.rank; }
  double window_radius() const { return window_radius_; }
  double diag_error_bound() const { return diag_error_bound_; }
  const RadiusField& radius_field() const { return *rf_; }
  const std::shared_ptr<const RadiusField>& radius_field_ptr() const { return rf_; }

  /// Σ_{n<N} (z conj(ζ))ⁿ/c_n as a max-shifted banded sum around the peak
  /// term (the terms are log-concave in n).
  LogComplex eval_log(cplx z, cplx zeta) const;
  cplx eval(cplx z, cplx zeta) const { return eval_log(z, zeta).value(); }
  /// ln K(z,z) for |z| = r (radial, real, positive).
  double log_diag(double r) const;

  void check_window(cplx z) const;

 private:
  KernelBasis basis_;
  std::shared_ptr<const RadiusField> rf_;
  double window_radius_;
  double diag_error_bound_;
};

/// Builds moments and picks the rank by the window/tolerance rule.
TruncatedKernel build_kernel_for_window(const Weight& w,
                                        std::shared_ptr<const RadiusField> rf,
                                        double window_radius, double tol,
                                        int cap = 2048);

/// Fixed-rank construction; diag_error_bound is still estimated by extending
/// the moment sequence past the rank until the tail at the rim decays.
TruncatedKernel build_kernel_with_rank(const Weight& w,
                                       std::shared_ptr<const RadiusField> rf,
                                       int rank, double window_radius);

/// min / max over samples of K(z,z)·e^{-2φ(z)}, the diagonal comparability
/// bracket; for a doubling weight both ends stay within fixed constants.
std::pair<double, double> kernel_diag_check(const TruncatedKernel& k,
                                            const std::vector<cplx>& samples);

/// √(1 − |K(z,ζ)|² / (K(z,z)K(ζ,ζ))), clamped to [0,1].
double metric_dK(const TruncatedKernel& k, cplx z, cplx zeta);

/// Polyline approximation of the distance d_B(z,ζ) = inf_γ ∫ ρ(γ)^{-1} |dγ|:
/// infimum over the straight segment and a small family of one-bend detours
/// (with one refinement pass).  An upper proxy, exact only up to constants;
/// used in diagnostics.
double metric_dB_proxy(const RadiusField& rf, cplx z, cplx zeta);

/// Text table (n, ln c_n) round-trip for reproducibility across runs.
void export_basis(const KernelBasis& basis, const std::string& path);
KernelBasis import_basis(const std::string& path, const Weight& w);

}  // namespace fockdpp
