#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flare/error.hpp"
#include "flare/geometry.hpp"
#include "flare/random.hpp"

using namespace flare;
using namespace flare::geometry;

namespace {

// Outer ring c = 37.5, t = 10; inner ring c = 22.5, t = 5; H = 7.5.
DomainSpec part() { return DomainSpec::from_dimensions(37.5, 10.0, 22.5, 5.0, 7.5); }

PhysPoint polar(double r, double theta, double z) { return {r * std::cos(theta), r * std::sin(theta), z}; }

double unit_radius(const UnitPoint& u) { return std::hypot(u.x, u.y); }

}  // namespace

TEST_CASE("classification of ring, spoke and outside points") {
  const DomainSpec d = part();
  CHECK(classify_point(polar(37.5, 0.3, 3.75), d) == Region::Outer);
  CHECK(classify_point(polar(22.5, -2.0, 1.0), d) == Region::Inner);
  const double gap_mid = (d.inner.outer_edge() + d.outer.inner_edge()) / 2.0;
  CHECK(classify_point(polar(gap_mid, 1.0, 1.0), d) == Region::Spoke);
  CHECK(classify_point(polar(37.5 + 10.0, 0.0, 1.0), d) == Region::Outside);
  CHECK(classify_point(polar(5.0, 0.0, 1.0), d) == Region::Outside);
  CHECK(classify_point(polar(37.5, 0.0, 7.6), d) == Region::Outside);
  CHECK(classify_point(polar(37.5, 0.0, -0.1), d) == Region::Outside);
  // Ring edges belong to the ring.
  CHECK(classify_point(polar(d.outer.inner_edge(), 0.4, 0.0), d) == Region::Outer);
  CHECK(classify_point(polar(d.outer.outer_edge(), 0.4, 7.5), d) == Region::Outer);
  CHECK(classify_point(polar(d.inner.inner_edge(), 0.4, 0.0), d) == Region::Inner);
}

TEST_CASE("forward map hits the documented anchors") {
  const DomainSpec d = part();
  CHECK(unit_radius(normalize_point(polar(d.outer.inner_edge(), 0.7, 1.0), d)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(unit_radius(normalize_point(polar(d.outer.outer_edge(), 0.7, 1.0), d)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(unit_radius(normalize_point(polar(d.inner.inner_edge(), 0.7, 1.0), d)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(unit_radius(normalize_point(polar(d.inner.outer_edge(), 0.7, 1.0), d)) == doctest::Approx(0.5).epsilon(1e-15));
  // lambda = 0.5 on the outer ring: 0.75 + 0.25 * 0.5.
  CHECK(unit_radius(normalize_point(polar(37.5, 0.2, 1.0), d)) == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(normalize_point(polar(37.5, 0.2, 7.5), d).z == 1.0);
  CHECK(normalize_point(polar(37.5, 0.2, 0.0), d).z == 0.0);
}

TEST_CASE("inverse map hits the documented anchors") {
  const DomainSpec d = part();
  const PhysPoint top = denormalize_point({1.0, 0.0, 0.5}, d);
  CHECK(std::hypot(top.x, top.y) == doctest::Approx(d.outer.outer_edge()).epsilon(1e-15));
  CHECK(top.z == doctest::Approx(3.75));
  const PhysPoint mid = denormalize_point({0.0, 0.375, 0.0}, d);
  CHECK(std::hypot(mid.x, mid.y) == doctest::Approx(22.5).epsilon(1e-15));
  const PhysPoint in = denormalize_point({0.25, 0.0, 0.0}, d);
  CHECK(std::hypot(in.x, in.y) == doctest::Approx(d.inner.inner_edge()).epsilon(1e-15));
}

TEST_CASE("out-of-ring and out-of-band inputs are rejected") {
  const DomainSpec d = part();
  const double gap_mid = (d.inner.outer_edge() + d.outer.inner_edge()) / 2.0;
  try {
    normalize_point(polar(gap_mid, 0.0, 1.0), d);
    FAIL("expected PointNotInRing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PointNotInRing);
  }
  CHECK_THROWS_AS(normalize_point(polar(100.0, 0.0, 1.0), d), Error);
  for (double r : {0.6, 1.2, 0.1}) {
    try {
      denormalize_point({r, 0.0, 0.5}, d);
      FAIL("expected UnitRadiusOutOfBand");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnitRadiusOutOfBand);
    }
  }
  // Band edges within tolerance are accepted.
  CHECK_NOTHROW(denormalize_point({1.0 + 5e-10, 0.0, 0.5}, d));
  CHECK_NOTHROW(denormalize_point({0.5, 0.0, 0.5}, d));
}

TEST_CASE("invalid domain specs are refused") {
  CHECK_THROWS_AS(DomainSpec::from_dimensions(37.5, 10.0, 30.0, 10.0, 7.5), Error);  // overlapping rings
  CHECK_NOTHROW(DomainSpec::from_dimensions(35.0, 10.0, 25.0, 10.0, 1.0));  // touching rings (range extremes)
  CHECK_THROWS_AS(DomainSpec::from_dimensions(37.5, -1.0, 22.5, 5.0, 7.5), Error);
  CHECK_THROWS_AS(DomainSpec::from_dimensions(37.5, 10.0, 22.5, 5.0, 0.0), Error);
  CHECK_THROWS_AS(DomainSpec::from_dimensions(37.5, 10.0, 2.0, 5.0, 1.0), Error);  // inner edge below zero
}

TEST_CASE("round trip, angle preservation and band containment on random ring points") {
  const DomainSpec d = part();
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const RingSpec& ring = (i % 2 == 0) ? d.outer : d.inner;
    const double r = rng.uniform(ring.inner_edge(), ring.outer_edge());
    const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const PhysPoint p = polar(r, th, rng.uniform(0.0, d.height));
    const UnitPoint u = normalize_point(p, d);
    const double ru = unit_radius(u);
    CHECK(ru >= ring.band_min - 1e-12);
    CHECK(ru <= ring.band_max + 1e-12);
    CHECK(std::abs(std::atan2(u.y, u.x) - std::atan2(p.y, p.x)) < 1e-12);
    const PhysPoint q = denormalize_point(u, d);
    worst = std::max({worst, std::abs(q.x - p.x), std::abs(q.y - p.y), std::abs(q.z - p.z)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("unit radius increases strictly with physical radius") {
  const DomainSpec d = part();
  for (const RingSpec* ring : {&d.outer, &d.inner}) {
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double r = ring->inner_edge() + ring->thickness * i / 100.0;
      const double ru = unit_radius(normalize_point(polar(r, 1.1, 0.5), d));
      CHECK(ru > prev);
      prev = ru;
    }
  }
}

TEST_CASE("unit-space sampling") {
  const DomainSpec d = part();
  const Eigen::MatrixXd a = sample_unit_points(d, 100, 9);
  const Eigen::MatrixXd b = sample_unit_points(d, 100, 9);
  CHECK(a.rows() == 200);
  CHECK(a.cols() == 3);
  CHECK(a == b);
  CHECK(a != sample_unit_points(d, 100, 10));
  CHECK(unit_points_valid(a));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double r = std::hypot(a(i, 0), a(i, 1));
    if (i < 100) {
      CHECK(r >= 0.75 - 1e-12);
      CHECK(r <= 1.0 + 1e-12);
    } else {
      CHECK(r >= 0.25 - 1e-12);
      CHECK(r <= 0.5 + 1e-12);
    }
  }
  // Every sample maps back into its physical ring.
  for (Eigen::Index i = 0; i < a.rows(); i += 17) {
    const PhysPoint p = denormalize_point({a(i, 0), a(i, 1), a(i, 2)}, d);
    CHECK(classify_point(p, d) == (i < 100 ? Region::Outer : Region::Inner));
  }
}

TEST_CASE("unit point validity check") {
  Eigen::MatrixXd ok(2, 3);
  ok << 0.8, 0.0, 0.5, 0.0, -0.3, 1.0;
  CHECK(unit_points_valid(ok));
  Eigen::MatrixXd gap(1, 3);
  gap << 0.6, 0.0, 0.5;
  CHECK_FALSE(unit_points_valid(gap));
  Eigen::MatrixXd high(1, 3);
  high << 0.8, 0.0, 1.5;
  CHECK_FALSE(unit_points_valid(high));
}

TEST_CASE("touching rings: the shared boundary belongs to the outer ring") {
  const DomainSpec d = DomainSpec::from_dimensions(35.0, 10.0, 25.0, 10.0, 1.0);
  CHECK(classify_point(polar(30.0, 0.5, 0.5), d) == Region::Outer);
  CHECK(std::hypot(normalize_point(polar(30.0, 0.5, 0.5), d).x, normalize_point(polar(30.0, 0.5, 0.5), d).y) ==
        doctest::Approx(0.75).epsilon(1e-15));
}
