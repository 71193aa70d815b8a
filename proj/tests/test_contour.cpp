#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/contour.hpp"
#include "tforge/error.hpp"

using namespace tforge;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("circle radius is exact at every angle") {
  const FrameContour c = FrameContour::circle(20.0);
  double worst = 0.0;
  for (int k = 0; k < 360; ++k) worst = std::max(worst, std::abs(ray_cast_radius(c, k * kPi / 180.0) - 20.0) / 20.0);
  CHECK(worst < 1e-12);
}

TEST_CASE("ellipse semi-axes and closed form") {
  const FrameContour e = FrameContour::ellipse(25.0, 18.0);
  CHECK(std::abs(ray_cast_radius(e, 0.0) - 25.0) < 1e-9);
  CHECK(std::abs(ray_cast_radius(e, kPi / 2) - 18.0) < 1e-9);
  CHECK(std::abs(ray_cast_radius(e, kPi) - 25.0) < 1e-9);
  for (int k = 0; k < 600; ++k) {
    const double th = 2 * kPi * k / 600;
    CHECK(std::abs(ray_cast_radius(e, th) - oracle::ellipse_radius(25.0, 18.0, th)) < 1e-9);
  }
}

TEST_CASE("superellipse matches a dense polygon") {
  const FrameContour s = FrameContour::superellipse(25.0, 18.0, 4.0);
  for (double th : {kPi / 4, 0.3, 2.0, 4.1}) {
    const double want = oracle::superellipse_polygon_radius(25.0, 18.0, 4.0, th);
    CHECK(std::abs(ray_cast_radius(s, th) - want) < 1e-6);
  }
}

TEST_CASE("rotation shifts the radius function") {
  const double phi = 0.37;
  const FrameContour e = FrameContour::ellipse(27.0, 15.5);
  const FrameContour r = e.rotated(phi);
  double worst = 0.0;
  for (int k = 0; k < 600; ++k) {
    const double th = 2 * kPi * k / 600;
    worst = std::max(worst, std::abs(ray_cast_radius(r, th) - ray_cast_radius(e, th - phi)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("mirroring reflects across the in-plane y axis") {
  const FrameContour f = FrameContour::fourier(24.0, 17.0, {Vec2(0.04, 0.02), Vec2(-0.03, 0.05)});
  const FrameContour m = f.mirrored();
  CHECK(m.is_mirrored());
  CHECK(std::abs(m.center_2d().x() + f.center_2d().x()) < 1e-9);
  CHECK(std::abs(m.center_2d().y() - f.center_2d().y()) < 1e-9);
  for (int k = 0; k < 60; ++k) {
    const double th = 2 * kPi * k / 60;
    CHECK(std::abs(ray_cast_radius(m, kPi - th) - ray_cast_radius(f, th)) < 1e-9);
  }
}

TEST_CASE("boxing center of an asymmetric contour") {
  const FrameContour f = FrameContour::fourier(24.0, 17.0, {Vec2(0.0, 0.0), Vec2(0.0, 0.0), Vec2(0.08, 0.0)});
  // Brute-force bounding box of the parametric curve.
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (int i = 0; i < 200000; ++i) {
    const Vec2 p = f.point(2 * kPi * i / 200000);
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  CHECK(std::abs(f.center_2d().x() - 0.5 * (xmin + xmax)) < 1e-6);
  CHECK(std::abs(f.center_2d().y() - 0.5 * (ymin + ymax)) < 1e-6);
}

TEST_CASE("rays from outside the aperture are rejected") {
  const FrameContour c = FrameContour::circle(20.0);
  CHECK_THROWS_AS(ray_cast_radius_from(c, Vec2(-30.0, 0.0), 0.0), Error);
  try {
    ray_cast_radius_from(c, Vec2(-30.0, 0.0), 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotStarShaped);
  }
}

TEST_CASE("validation bounds") {
  CHECK_NOTHROW(FrameContour::ellipse(25.0, 18.0).validate());
  CHECK_THROWS_AS(FrameContour::circle(8.0).validate(), Error);
  CHECK_THROWS_AS(FrameContour::ellipse(40.0, 18.0).validate(), Error);
}

TEST_CASE("ray_cast_trace uses uniform counterclockwise angles") {
  const FrameContour e = FrameContour::ellipse(25.0, 18.0);
  const auto r = ray_cast_trace(e, 600, 0.1);
  REQUIRE(r.size() == 600);
  for (int k = 0; k < 600; k += 37)
    CHECK(std::abs(r[static_cast<std::size_t>(k)] - oracle::ellipse_radius(25.0, 18.0, 0.1 + 2 * kPi * k / 600)) < 1e-9);
}

TEST_CASE("area centroid of symmetric shapes is the origin") {
  for (const auto& c : {FrameContour::circle(20.0), FrameContour::ellipse(26.0, 14.0),
                        FrameContour::superellipse(22.0, 16.0, 3.5)}) {
    CHECK(c.area_centroid_2d().norm() < 1e-6);
    CHECK(c.center_2d().norm() < 1e-9);
  }
}
