#pragma once

#include <string>
#include <vector>

#include "fockdpp/weights.hpp"

namespace fockdpp {

enum class CellKind { AnnularSector, ShiftedAnnularSector, Disk, FullPlane };

/// One cell of an annular-sector grid, or a disk, or the whole plane.
///
/// The standard grid (scale 1, angular 1) is
///   T_{n,k} = { re^{iθ} : n-1 ≤ r < n, θ/2π ∈ [(k-1)/n, k/n) },  k = 1..n,
/// with center z_{n,k} = (n-1/2) e^{i·2π(k-1/2)/n}.  The shifted grid is
///   T̃_{n,k} = { re^{iθ} : n-1/2 ≤ r < n+1/2, θ/2π ∈ [(k-1/2)/n, (k+1/2)/n) },
/// with ring 0 degenerating to the disk D(0, 1/2).  `scale` dilates all radii
/// (coarse grids of size N use scale = N, refined grids of size 1/l use
/// scale = 1/l) and `angular` multiplies the sector count per ring (the
/// refined grid of size 1/l carries angular = l, giving l·n sectors).
struct Cell {
  CellKind kind = CellKind::FullPlane;
  long n = 0;          ///< ring index (sectors only)
  long k = 0;          ///< sector index in [1, angular·n] (sectors only)
  int angular = 1;     ///< sectors per ring = angular·n
  double scale = 1.0;  ///< radial dilation of the grid
  cplx center = 0.0;   ///< disk center (Disk only)
  double radius = 0.0; ///< disk radius (Disk only), 0 allowed (empty cell)

  static Cell annular_sector(long n, long k, double scale = 1.0,
                             int angular = 1);
  static Cell shifted_sector(long n, long k, double scale = 1.0,
                             int angular = 1);  ///< n = 0 yields D(0, scale/2)
  static Cell disk(cplx center, double radius);
  static Cell full_plane();

  /// z_{n,k} for sectors, the center for disks; Domain error for FullPlane.
  cplx center_point() const;
  bool contains(cplx z) const;  ///< half-open exactly as the grid is printed
  double area() const;          ///< +inf for FullPlane

  /// Radial interval [r_lo, r_hi) (sectors; disks report [0, 2·radius) bands
  /// around the center via bounding_radius instead).
  double r_lo() const;
  double r_hi() const;
  /// Angular interval of width 2π/(angular·n); theta_hi may exceed 2π for the
  /// shifted wrap sector.  Sectors only.
  double theta_lo() const;
  double theta_hi() const;

  /// sup |z| over the cell: the reach that must sit inside a kernel window.
  double bounding_radius() const;

  std::string label() const;
};

/// A full annular-sector grid: every cell(n, k) plus exact point location.
/// Scale-1 grids tile the plane without overlap; shifted grids additionally
/// contain the central disk as ring 0.
struct CellPartition {
  double scale = 1.0;
  int angular = 1;
  bool shifted = false;

  static CellPartition standard(double scale = 1.0);
  static CellPartition refined(int l);  ///< scale 1/l with l·n sectors per ring
  static CellPartition coarse(double size_n);
  static CellPartition shifted_standard(double scale = 1.0);

  long sectors_in_ring(long n) const;  ///< angular·n; 1 for shifted ring 0
  Cell cell(long n, long k) const;
  /// The unique cell containing z (half-open assignment, grid arithmetic
  /// shared with Cell::contains).
  Cell locate(cplx z) const;
  /// Largest ring index whose cells lie entirely inside D(0, R).
  long rings_within(double R) const;
};

}  // namespace fockdpp
