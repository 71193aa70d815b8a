#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/error.hpp"
#include "tforge/geometry.hpp"

using namespace tforge;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PinholeCamera axis_camera() {
  PinholeCamera c;
  c.focal_px = 1000.0;
  c.principal_point = {648.0, 648.0};
  return c;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("project: optical axis and lateral offset") {
  const PinholeCamera c = axis_camera();
  const Vec2 p0 = project(c, {0, 0, 500});
  CHECK(p0.x() == 648.0);
  CHECK(p0.y() == 648.0);
  const Vec2 p1 = project(c, {50, 0, 500});
  CHECK(p1.x() == doctest::Approx(748.0).epsilon(1e-15));
  CHECK(p1.y() == 648.0);
}

TEST_CASE("project: behind or on the camera plane") {
  const PinholeCamera c = axis_camera();
  CHECK(code_of([&] { project(c, {1, 2, 0}); }) == ErrorCode::kNonPositiveDepth);
  CHECK(code_of([&] { project(c, {1, 2, -10}); }) == ErrorCode::kNonPositiveDepth);
}

TEST_CASE("rig camera projection agrees with a hand-built 3x4 matrix") {
  const CameraRig rig = default_rig();
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (const auto& cam : rig.cameras) {
    const auto p = oracle::projection_matrix(cam);
    for (int k = 0; k < 50; ++k) {
      const Vec3 x(u(gen), u(gen), 500.0 + u(gen));
      const Vec2 got = project(cam, x);
      const Vec2 want = oracle::apply_projection(p, x);
      CHECK((got - want).norm() < 1e-9);
    }
  }
}

TEST_CASE("15 degree yaw camera: rotation and projection by hand") {
  const double psi = 15.0 * kDeg;
  const Vec3 target(0, 0, 500);
  const Vec3 eye = target + 500.0 * Vec3(std::sin(psi), 0.0, -std::cos(psi));
  Mat3 r_hand;
  r_hand << std::cos(psi), 0, std::sin(psi), 0, 1, 0, -std::sin(psi), 0, std::cos(psi);
  const Mat3 r = look_at_rotation(eye, target);
  CHECK((r - r_hand).cwiseAbs().maxCoeff() < 1e-12);

  PinholeCamera cam;
  cam.rotation = r_hand;
  cam.translation = -r_hand * eye;
  // Point on the frame plane z = 500, 30 mm to the right of the target.
  const Vec3 x(30, -12, 500);
  const double xc = std::cos(psi) * (x.x() - eye.x()) + std::sin(psi) * (x.z() - eye.z());
  const double yc = x.y() - eye.y();
  const double zc = -std::sin(psi) * (x.x() - eye.x()) + std::cos(psi) * (x.z() - eye.z());
  const Vec2 want(1400.0 * xc / zc + 648.0, 1400.0 * yc / zc + 648.0);
  CHECK((project(cam, x) - want).norm() < 1e-9);

  // Off-center pixel backprojects to the hand-rotated camera ray.
  const Vec2 px(900.0, 300.0);
  const Vec3 d_cam = Vec3((px.x() - 648.0) / 1400.0, (px.y() - 648.0) / 1400.0, 1.0).normalized();
  const Vec3 d_world = r_hand.transpose() * d_cam;
  const Ray ray = backproject_ray(cam, px);
  CHECK((ray.direction - d_world).norm() < 1e-12);
  CHECK((ray.origin - eye).norm() < 1e-9);
}

TEST_CASE("backproject: principal point follows the optical axis") {
  for (const auto& cam : default_rig().cameras) {
    const Ray ray = backproject_ray(cam, cam.principal_point);
    CHECK((ray.direction - cam.optical_axis()).norm() < 1e-12);
    CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("project/backproject round trip on 1000 random in-frustum points") {
  const CameraRig rig = default_rig();
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_px = 0.0, worst_mm = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const PinholeCamera& cam = rig.cameras[static_cast<std::size_t>(k % 4)];
    const Vec2 px(u(gen) * 1295.0, u(gen) * 1295.0);
    const double depth = 300.0 + 400.0 * u(gen);
    const Ray ray = backproject_ray(cam, px);
    const Vec3 x = ray.origin + depth * ray.direction;
    worst_px = std::max(worst_px, (project(cam, x) - px).norm());
    const Ray back = backproject_ray(cam, project(cam, x));
    const Vec3 v = x - back.origin;
    worst_mm = std::max(worst_mm, (v - v.dot(back.direction) * back.direction).norm());
  }
  CHECK(worst_px < 1e-6);
  CHECK(worst_mm < 1e-6);
}

TEST_CASE("default rig layout") {
  const CameraRig rig = default_rig();
  CHECK_NOTHROW(rig.validate());
  const Vec3 target(0, 0, 500);
  for (const auto& cam : rig.cameras) {
    const Mat3 rtr = cam.rotation.transpose() * cam.rotation;
    CHECK((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(cam.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((cam.center() - target).norm() == doctest::Approx(500.0).epsilon(1e-12));
    const Vec2 p = project(cam, target);
    CHECK((p - cam.principal_point).norm() < 1e-9);
  }
  CHECK(rig.cameras[0].center().x() < 0.0);
  CHECK(rig.cameras[1].center().x() > 0.0);
}

TEST_CASE("rig validation") {
  CameraRig rig = default_rig();
  rig.working_distance_mm = 200.0;
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::kInvalidArgument);
  rig = default_rig();
  rig.cameras[2] = rig.cameras[1];
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::kInvalidArgument);
  rig = default_rig();
  rig.cameras[0].focal_px = 0.0;
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::kInvalidArgument);
  rig = default_rig();
  rig.cameras[3].rotation(0, 0) += 1e-3;
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("rig text round trip") {
  RigLayout layout;
  layout.yaw_deg = 12.5;
  layout.focal_px = 1712.25;
  const CameraRig rig = default_rig(layout);
  const CameraRig back = parse_rig(format_rig(rig));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.cameras[i].focal_px == rig.cameras[i].focal_px);
    CHECK(back.cameras[i].rotation == rig.cameras[i].rotation);
    CHECK(back.cameras[i].translation == rig.cameras[i].translation);
    CHECK(back.cameras[i].principal_point == rig.cameras[i].principal_point);
    CHECK(back.cameras[i].image_size == rig.cameras[i].image_size);
  }
  CHECK(back.working_distance_mm == rig.working_distance_mm);
}

TEST_CASE("rig from layout keys") {
  const CameraRig rig = parse_rig("working_distance_mm = 600\nlayout.yaw_deg = 8\n");
  const CameraRig want = default_rig(RigLayout{600.0, 8.0});
  for (std::size_t i = 0; i < 4; ++i) CHECK((rig.cameras[i].center() - want.cameras[i].center()).norm() < 1e-12);
  CHECK(code_of([] { parse_rig("layout.yaw_deg = abc\n"); }) == ErrorCode::kParseError);
}

TEST_CASE("frame plane") {
  const FramePlane pl = FramePlane::from_normal({1, 2, 400}, Vec3(0.1, 0.0, -1.0));
  CHECK(std::abs(pl.normal.norm() - 1.0) < 1e-12);
  CHECK(std::abs(pl.in_plane_x.dot(pl.normal)) < 1e-12);
  CHECK(pl.in_plane_x.x() > 0.9);
  const Vec2 q(3.5, -7.25);
  CHECK((pl.to_plane(pl.to_world(q)) - q).norm() < 1e-12);
  CHECK(std::abs(pl.signed_distance(pl.to_world(q))) < 1e-12);

  const Ray toward{{0, 0, 0}, Vec3(0, 0, 1)};
  const auto t = pl.intersect(toward);
  REQUIRE(t.has_value());
  CHECK(std::abs(pl.signed_distance(toward.origin + *t * toward.direction)) < 1e-9);
  const Ray away{{0, 0, 0}, Vec3(0, 0, -1)};
  CHECK_FALSE(pl.intersect(away).has_value());
}
