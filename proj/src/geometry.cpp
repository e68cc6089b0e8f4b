#include "flare/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flare/error.hpp"
#include "flare/random.hpp"

namespace flare::geometry {

namespace {

constexpr double kRelSlack = 1e-9;
constexpr double kUnitTol = 1e-9;

bool in_ring(double r, const RingSpec& ring) {
  const double slack = kRelSlack * ring.thickness;
  return std::abs(r - ring.center_radius) <= 0.5 * ring.thickness + slack;
}

const RingSpec* ring_for_unit_radius(double r_u, const DomainSpec& d) {
  for (const RingSpec* ring : {&d.outer, &d.inner}) {
    if (r_u >= ring->band_min - kUnitTol && r_u <= ring->band_max + kUnitTol) return ring;
  }
  return nullptr;
}

}  // namespace

void RingSpec::validate() const {
  if (!(thickness > 0.0))
    throw Error(ErrorCode::InvalidArgument, "ring thickness must be positive");
  if (!(band_min > 0.0 && band_min < band_max && band_max <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "ring band must satisfy 0 < min < max <= 1");
  if (!(inner_edge() > 0.0))
    throw Error(ErrorCode::InvalidArgument, "ring inner radius must be positive");
}

DomainSpec DomainSpec::from_dimensions(double r_out, double t_out, double r_in, double t_in,
                                       double height) {
  DomainSpec d{{r_out, t_out, kOuterBandMin, kOuterBandMax},
               {r_in, t_in, kInnerBandMin, kInnerBandMax},
               height};
  d.validate();
  return d;
}

void DomainSpec::validate() const {
  outer.validate();
  inner.validate();
  if (!(height > 0.0)) throw Error(ErrorCode::InvalidArgument, "height must be positive");
  if (!(inner.outer_edge() <= outer.inner_edge()))
    throw Error(ErrorCode::InvalidArgument, "inner and outer rings overlap");
  if (!(inner.band_max <= outer.band_min || outer.band_max <= inner.band_min))
    throw Error(ErrorCode::InvalidArgument, "unit bands overlap");
}

Region classify_point(const PhysPoint& p, const DomainSpec& d) noexcept {
  const double z_slack = kRelSlack * d.height;
  if (!(p.z >= -z_slack && p.z <= d.height + z_slack)) return Region::Outside;
  const double r = std::hypot(p.x, p.y);
  if (in_ring(r, d.outer)) return Region::Outer;
  if (in_ring(r, d.inner)) return Region::Inner;
  if (r > d.inner.outer_edge() && r < d.outer.inner_edge()) return Region::Spoke;
  return Region::Outside;
}

UnitPoint normalize_point(const PhysPoint& p, const DomainSpec& d) {
  const Region region = classify_point(p, d);
  if (region != Region::Outer && region != Region::Inner)
    throw Error(ErrorCode::PointNotInRing,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                    std::to_string(p.z) + ") is not inside either ring");
  const RingSpec& ring = region == Region::Outer ? d.outer : d.inner;
  const double r = std::hypot(p.x, p.y);
  // lambda = (r - (c - t/2)) / t, written about the centerline so the ring
  // edges land exactly on lambda = 0 and 1.
  const double lambda = std::clamp((r - ring.center_radius) / ring.thickness + 0.5, 0.0, 1.0);
  const double r_u = ring.band_min + (ring.band_max - ring.band_min) * lambda;
  const double scale = r_u / r;
  return {p.x * scale, p.y * scale, std::clamp(p.z / d.height, 0.0, 1.0)};
}

PhysPoint denormalize_point(const UnitPoint& u, const DomainSpec& d) {
  const double r_u = std::hypot(u.x, u.y);
  const RingSpec* ring = ring_for_unit_radius(r_u, d);
  if (ring == nullptr)
    throw Error(ErrorCode::UnitRadiusOutOfBand,
                "unit radius " + std::to_string(r_u) + " lies outside both ring bands");
  if (!(u.z >= -kUnitTol && u.z <= 1.0 + kUnitTol))
    throw Error(ErrorCode::InvalidArgument, "unit height must lie in [0, 1]");
  const double lambda =
      std::clamp((r_u - ring->band_min) / (ring->band_max - ring->band_min), 0.0, 1.0);
  const double r = ring->center_radius + (lambda - 0.5) * ring->thickness;
  const double scale = r / r_u;
  return {u.x * scale, u.y * scale, u.z * d.height};
}

Eigen::MatrixXd sample_unit_points(const DomainSpec& d, std::size_t n_per_ring,
                                   std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(2 * n_per_ring), 3);
  Eigen::Index row = 0;
  for (const RingSpec* ring : {&d.outer, &d.inner}) {
    for (std::size_t k = 0; k < n_per_ring; ++k, ++row) {
      const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double r_u = rng.uniform(ring->band_min, ring->band_max);
      const double z_u = rng.uniform();
      out(row, 0) = r_u * std::cos(theta);
      out(row, 1) = r_u * std::sin(theta);
      out(row, 2) = z_u;
    }
  }
  return out;
}

bool unit_points_valid(const Eigen::MatrixXd& coords) noexcept {
  if (coords.cols() != 3) return false;
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double r_u = std::hypot(coords(i, 0), coords(i, 1));
    const bool in_band = (r_u >= kInnerBandMin - kUnitTol && r_u <= kInnerBandMax + kUnitTol) ||
                         (r_u >= kOuterBandMin - kUnitTol && r_u <= kOuterBandMax + kUnitTol);
    const double z = coords(i, 2);
    if (!in_band || !(z >= -kUnitTol && z <= 1.0 + kUnitTol)) return false;
  }
  return true;
}

}  // namespace flare::geometry
