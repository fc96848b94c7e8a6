#include "fockdpp/cells.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fockdpp/errors.hpp"

namespace fockdpp {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

/// arg(z)/2π folded into [0, 1).
double angle_frac(cplx z) {
  double f = std::arg(z) / kTwoPi;
  if (f < 0.0) f += 1.0;
  if (f >= 1.0) f = 0.0;
  return f;
}

/// Sector index of an angular fraction on the standard grid: k-1 ≤ f·m < k.
long sector_floor(double frac, long m) {
  long k = static_cast<long>(std::floor(frac * static_cast<double>(m))) + 1;
  if (k < 1) k = 1;
  if (k > m) k = m;
  return k;
}

/// Sector index on the shifted grid: k-1/2 ≤ f·m < k+1/2, with the band
/// around 0 wrapping to sector m.
long sector_round(double frac, long m) {
  long k = static_cast<long>(std::floor(frac * static_cast<double>(m) + 0.5));
  if (k <= 0 || k > m) k = m;
  return k;
}

void check_sector_args(long n, long k, double scale, int angular, long min_n) {
  if (n < min_n)
    throw Error(ErrorKind::Config, "cell ring index out of range");
  if (!(scale > 0.0))
    throw Error(ErrorKind::Config, "cell scale must be positive");
  if (angular < 1)
    throw Error(ErrorKind::Config, "cell angular factor must be >= 1");
  const long m = angular * std::max(n, 1L);
  if (k < 1 || k > m)
    throw Error(ErrorKind::Config, "cell sector index must lie in [1, angular*n]");
}

}  // namespace

Cell Cell::annular_sector(long n, long k, double scale, int angular) {
  check_sector_args(n, k, scale, angular, 1);
  Cell c;
  c.kind = CellKind::AnnularSector;
  c.n = n;
  c.k = k;
  c.scale = scale;
  c.angular = angular;
  return c;
}

Cell Cell::shifted_sector(long n, long k, double scale, int angular) {
  if (n == 0) {
    if (!(scale > 0.0))
      throw Error(ErrorKind::Config, "cell scale must be positive");
    return disk(0.0, 0.5 * scale);
  }
  check_sector_args(n, k, scale, angular, 1);
  Cell c;
  c.kind = CellKind::ShiftedAnnularSector;
  c.n = n;
  c.k = k;
  c.scale = scale;
  c.angular = angular;
  return c;
}

Cell Cell::disk(cplx center, double radius) {
  if (radius < 0.0)
    throw Error(ErrorKind::Config, "disk cell radius must be >= 0");
  Cell c;
  c.kind = CellKind::Disk;
  c.center = center;
  c.radius = radius;
  return c;
}

Cell Cell::full_plane() { return Cell{}; }

cplx Cell::center_point() const {
  switch (kind) {
    case CellKind::AnnularSector: {
      const double m = static_cast<double>(angular) * static_cast<double>(n);
      return std::polar(scale * (static_cast<double>(n) - 0.5),
                        kTwoPi * (static_cast<double>(k) - 0.5) / m);
    }
    case CellKind::ShiftedAnnularSector: {
      const double m = static_cast<double>(angular) * static_cast<double>(n);
      return std::polar(scale * static_cast<double>(n),
                        kTwoPi * static_cast<double>(k) / m);
    }
    case CellKind::Disk:
      return center;
    case CellKind::FullPlane:
      throw Error(ErrorKind::Domain, "full plane has no center point");
  }
  throw Error(ErrorKind::Domain, "unreachable cell kind");
}

bool Cell::contains(cplx z) const {
  switch (kind) {
    case CellKind::AnnularSector: {
      const double r = std::abs(z);
      if (!(r >= r_lo() && r < r_hi())) return false;
      return sector_floor(angle_frac(z), angular * n) == k;
    }
    case CellKind::ShiftedAnnularSector: {
      const double r = std::abs(z);
      if (!(r >= r_lo() && r < r_hi())) return false;
      return sector_round(angle_frac(z), angular * n) == k;
    }
    case CellKind::Disk:
      return std::abs(z - center) < radius;
    case CellKind::FullPlane:
      return true;
  }
  return false;
}

double Cell::area() const {
  switch (kind) {
    case CellKind::AnnularSector:
    case CellKind::ShiftedAnnularSector: {
      const double lo = r_lo(), hi = r_hi();
      const double width = kTwoPi / (static_cast<double>(angular) * static_cast<double>(n));
      return 0.5 * width * (hi * hi - lo * lo);
    }
    case CellKind::Disk:
      return kTwoPi * 0.5 * radius * radius;
    case CellKind::FullPlane:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Cell::r_lo() const {
  switch (kind) {
    case CellKind::AnnularSector:
      return scale * (static_cast<double>(n) - 1.0);
    case CellKind::ShiftedAnnularSector:
      return scale * (static_cast<double>(n) - 0.5);
    default:
      throw Error(ErrorKind::Domain, "radial interval defined for sectors only");
  }
}

double Cell::r_hi() const {
  switch (kind) {
    case CellKind::AnnularSector:
      return scale * static_cast<double>(n);
    case CellKind::ShiftedAnnularSector:
      return scale * (static_cast<double>(n) + 0.5);
    default:
      throw Error(ErrorKind::Domain, "radial interval defined for sectors only");
  }
}

double Cell::theta_lo() const {
  const double m = static_cast<double>(angular) * static_cast<double>(n);
  switch (kind) {
    case CellKind::AnnularSector:
      return kTwoPi * (static_cast<double>(k) - 1.0) / m;
    case CellKind::ShiftedAnnularSector:
      return kTwoPi * (static_cast<double>(k) - 0.5) / m;
    default:
      throw Error(ErrorKind::Domain, "angular interval defined for sectors only");
  }
}

double Cell::theta_hi() const {
  const double m = static_cast<double>(angular) * static_cast<double>(n);
  switch (kind) {
    case CellKind::AnnularSector:
      return kTwoPi * static_cast<double>(k) / m;
    case CellKind::ShiftedAnnularSector:
      return kTwoPi * (static_cast<double>(k) + 0.5) / m;
    default:
      throw Error(ErrorKind::Domain, "angular interval defined for sectors only");
  }
}

double Cell::bounding_radius() const {
  switch (kind) {
    case CellKind::AnnularSector:
    case CellKind::ShiftedAnnularSector:
      return r_hi();
    case CellKind::Disk:
      return std::abs(center) + radius;
    case CellKind::FullPlane:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

std::string Cell::label() const {
  std::ostringstream os;
  os.precision(6);
  switch (kind) {
    case CellKind::AnnularSector:
      os << "T[" << n << "," << k << "]";
      if (scale != 1.0) os << "s" << scale;
      if (angular != 1) os << "a" << angular;
      break;
    case CellKind::ShiftedAnnularSector:
      os << "Ts[" << n << "," << k << "]";
      if (scale != 1.0) os << "s" << scale;
      if (angular != 1) os << "a" << angular;
      break;
    case CellKind::Disk:
      os << "D(" << center.real() << (center.imag() < 0 ? "" : "+")
         << center.imag() << "i," << radius << ")";
      break;
    case CellKind::FullPlane:
      os << "plane";
      break;
  }
  return os.str();
}

CellPartition CellPartition::standard(double scale) {
  if (!(scale > 0.0))
    throw Error(ErrorKind::Config, "partition scale must be positive");
  CellPartition p;
  p.scale = scale;
  return p;
}

CellPartition CellPartition::refined(int l) {
  if (l < 1) throw Error(ErrorKind::Config, "refinement factor must be >= 1");
  CellPartition p;
  p.scale = 1.0 / static_cast<double>(l);
  p.angular = l;
  return p;
}

CellPartition CellPartition::coarse(double size_n) {
  if (!(size_n >= 1.0))
    throw Error(ErrorKind::Config, "coarse grid size must be >= 1");
  CellPartition p;
  p.scale = size_n;
  return p;
}

CellPartition CellPartition::shifted_standard(double scale) {
  CellPartition p = standard(scale);
  p.shifted = true;
  return p;
}

long CellPartition::sectors_in_ring(long n) const {
  if (n < 0 || (!shifted && n < 1))
    throw Error(ErrorKind::Config, "ring index out of range");
  if (n == 0) return 1;
  return static_cast<long>(angular) * n;
}

Cell CellPartition::cell(long n, long k) const {
  if (shifted) return Cell::shifted_sector(n, k, scale, angular);
  return Cell::annular_sector(n, k, scale, angular);
}

Cell CellPartition::locate(cplx z) const {
  const double r = std::abs(z);
  if (!std::isfinite(r))
    throw Error(ErrorKind::Domain, "locate: non-finite point");
  if (shifted) {
    if (r < 0.5 * scale) return Cell::shifted_sector(0, 1, scale, angular);
    const long n = static_cast<long>(std::floor(r / scale + 0.5));
    const long m = static_cast<long>(angular) * n;
    return Cell::shifted_sector(n, sector_round(angle_frac(z), m), scale,
                                angular);
  }
  long n = static_cast<long>(std::floor(r / scale)) + 1;
  // r exactly on a ring boundary belongs to the outer ring (half-open).
  if (r < scale * (static_cast<double>(n) - 1.0)) --n;
  if (r >= scale * static_cast<double>(n)) ++n;
  if (n < 1) n = 1;
  const long m = static_cast<long>(angular) * n;
  return Cell::annular_sector(n, sector_floor(angle_frac(z), m), scale,
                              angular);
}

long CellPartition::rings_within(double R) const {
  // Ring n lies inside D(0,R) iff its outer radius is <= R; shifted grids
  // start at ring 0 = D(0, scale/2), so -1 means "nothing fits".
  const long none = shifted ? -1 : 0;
  if (!(R > 0.0)) return none;
  const double q = R / scale;
  long n = static_cast<long>(std::floor(shifted ? q - 0.5 : q));
  const auto outer = [&](long j) {
    return scale * (static_cast<double>(j) + (shifted ? 0.5 : 0.0));
  };
  while (n > none && outer(n) > R) --n;
  while (outer(n + 1) <= R) ++n;
  return std::max(n, none);
}

}  // namespace fockdpp
