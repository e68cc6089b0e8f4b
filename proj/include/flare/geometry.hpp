#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace flare::geometry {

/// One annulus of the two-ring part and the unit-space radial band it maps to.
struct RingSpec {
  double center_radius = 0.0;  // mm
  double thickness = 0.0;      // mm
  double band_min = 0.0;
  double band_max = 1.0;

  double inner_edge() const { return center_radius - 0.5 * thickness; }
  double outer_edge() const { return center_radius + 0.5 * thickness; }
  void validate() const;
};

inline constexpr double kOuterBandMin = 0.75;
inline constexpr double kOuterBandMax = 1.00;
inline constexpr double kInnerBandMin = 0.25;
inline constexpr double kInnerBandMax = 0.50;

struct DomainSpec {
  RingSpec outer;
  RingSpec inner;
  double height = 1.0;  // mm

  /// Build from raw part parameters (r_out, t_out, r_in, t_in, h) using the
  /// fixed unit bands [0.75, 1.00] and [0.25, 0.50].
  static DomainSpec from_dimensions(double r_out, double t_out, double r_in, double t_in,
                                    double height);
  void validate() const;
};

struct PhysPoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct UnitPoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

enum class Region { Outer, Inner, Spoke, Outside };

Region classify_point(const PhysPoint& p, const DomainSpec& d) noexcept;

/// Physical ring point to unit space. Throws PointNotInRing for spoke or
/// outside points.
UnitPoint normalize_point(const PhysPoint& p, const DomainSpec& d);

/// Inverse of normalize_point. Throws UnitRadiusOutOfBand when the unit
/// radius falls outside both bands.
PhysPoint denormalize_point(const UnitPoint& u, const DomainSpec& d);

/// Uniform draws in (angle, band radius, height) for each ring, outer ring
/// first. Returns a (2 * n_per_ring) x 3 matrix of unit coordinates.
Eigen::MatrixXd sample_unit_points(const DomainSpec& d, std::size_t n_per_ring,
                                   std::uint64_t seed);

/// True when every row of `coords` lies in one of the two unit bands with
/// 0 <= z <= 1 (tolerance 1e-9).
bool unit_points_valid(const Eigen::MatrixXd& coords) noexcept;

}  // namespace flare::geometry
