#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fockdpp/cells.hpp"
#include "fockdpp/kernel.hpp"

namespace fockdpp {

/// Galerkin matrix of the restriction operator Tf = ∫_cell f(ζ) K(·,ζ) dμ_φ
/// in the orthonormal monomial basis e_n = zⁿ/√c_n:
///   M[m][n] = ∫_cell e_m conj(e_n) dμ_φ.
/// Only indices in [band_lo, band_lo + block.rows()) carry non-negligible
/// mass on the cell (the diagonal decays by > 60 nats outside); the
/// represented N×N matrix is `block` on the band and zero elsewhere.
struct RestrictionMatrix {
  int rank = 0;     ///< N of the underlying kernel truncation
  int band_lo = 0;  ///< first basis index of the block
  Eigen::MatrixXcd block;

  Eigen::MatrixXcd full() const;  ///< materialized N×N matrix (small N only)
  double trace_real() const { return block.real().trace(); }
  double frobenius_sq() const { return block.squaredNorm(); }
};

/// Bernoulli parameters of the restricted process on one cell.
struct RestrictionSpectrum {
  Cell cell;
  int matrix_rank = 0;               ///< N of the kernel truncation
  std::vector<double> eigenvalues;   ///< descending, clamped to [0,1]
  double trace = 0.0;                ///< Σλ, recorded from the matrix
  double hs_norm_sq = 0.0;           ///< Σλ², recorded from the matrix
};

/// Count statistics of one cell under the Bernoulli decomposition.
struct CellProbabilities {
  double p0 = 1.0;
  double p1 = 0.0;
  double p_geq2_exact = 0.0;
  double p_geq2_second_order = 0.0;  ///< ½((Σλ)² − Σλ²)
  double pair_intensity = 0.0;       ///< (Σλ)² − Σλ²
  double expected_count = 0.0;       ///< Σλ
};

/// Assembles the Galerkin matrix.  Sector cells reduce exactly in θ to 1-D
/// radial integrals times explicit angular factors; centered disks reduce to
/// a diagonal; the full plane is the identity (orthonormality).  Off-center
/// disks use tensor polar quadrature around the disk center and are limited
/// to modest ranks.
RestrictionMatrix restriction_matrix(const TruncatedKernel& k, const Cell& cell);

/// Hermitian eigendecomposition with PSD guards: Hermiticity within 1e-10,
/// eigenvalues within [-1e-6, 1+1e-6] before clamping to [0,1].
RestrictionSpectrum spectrum(const RestrictionMatrix& m, const Cell& cell);

/// restriction_matrix + spectrum in one call.
RestrictionSpectrum restriction_spectrum(const TruncatedKernel& k,
                                         const Cell& cell);

/// Exact hole/one/two-or-more probabilities of Σ Bernoulli(λ_j), computed in
/// log domain; λ = 1 handled by exclusion.  Second-order and pair-intensity
/// values come from the spectrum's matrix-recorded trace and Σλ².
CellProbabilities cell_probabilities(const RestrictionSpectrum& s);

/// ∬_cell² [K(z,z)K(ζ,ζ) − |K(z,ζ)|²] dμ_φ(z) dμ_φ(ζ) by quadrature paths
/// independent of the Galerkin assembly (adaptive radial trace integral plus
/// a 3-D reduction of the |K|² double integral).  Equals trace² − Σλ².
double pair_intensity_integral(const TruncatedKernel& k, const Cell& cell);

/// ∫_cell K(z,z) dμ_φ by 1-D adaptive quadrature of the kernel diagonal
/// (independent of the per-moment Galerkin integrals).
double trace_integral(const TruncatedKernel& k, const Cell& cell);

/// Certified lower bounds for the two largest Bernoulli parameters via the
/// variational principle: the Rayleigh quotient of the restriction form at
/// the normalized reproducing kernel of the cell center, and the smaller
/// generalized eigenvalue of the 2×2 form pair on span{g₁, g₂} with
/// g₂(z) = ((z − z_c)/ρ(z_c))·g₁(z).
std::pair<double, double> lambda_witnesses(const TruncatedKernel& k,
                                           const Cell& cell);

/// Cell statistics for a Poisson count with mean p: p0 = e^{-p},
/// p1 = p·e^{-p}, p_geq2 = 1 - p0 - p1 (stable for small p),
/// second order p²/2.
CellProbabilities poisson_cell_prob(double p);

/// One row of the per-cell table.  Spectra on an annular-sector grid are
/// invariant in k (rotating the sector conjugates the Galerkin matrix by a
/// diagonal unitary), so a ring is computed once at k = 1 and replicated.
struct CellRecord {
  long n = 0;
  long k = 0;
  double center_abs = 0.0;
  double rho_center = 0.0;
  double trace = 0.0;
  double hs_norm_sq = 0.0;
  double p0 = 1.0;
  double p1 = 0.0;
  double p_geq2_exact = 0.0;
  double p_geq2_second_order = 0.0;
  double lambda1_lb = 0.0;
  double lambda2_lb = 0.0;
};

/// Computes the k = 1 record of ring n on the given grid.
CellRecord sweep_ring(const TruncatedKernel& k, const CellPartition& grid,
                      long n, bool with_witnesses = true);

/// Records for all rings in `rings`, k = 1 each (replicate over k downstream).
std::vector<CellRecord> sweep_rings(const TruncatedKernel& k,
                                    const CellPartition& grid,
                                    const std::vector<long>& rings,
                                    bool with_witnesses = true);

}  // namespace fockdpp
