#include "tforge/geometry.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include "tforge/error.hpp"
#include "tforge/kv.hpp"

namespace tforge {

void PinholeCamera::validate() const {
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) fail(ErrorCode::kInvalidArgument, "focal length must be positive");
  if (image_size.x() <= 0 || image_size.y() <= 0) fail(ErrorCode::kInvalidArgument, "image size must be positive");
  // Crop cameras keep the full sensor's principal point, which may lie
  // outside the crop.
  if (!principal_point.allFinite()) fail(ErrorCode::kInvalidArgument, "principal point must be finite");
  if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    fail(ErrorCode::kInvalidArgument, "rotation not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) fail(ErrorCode::kInvalidArgument, "rotation determinant != 1");
  if (!translation.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite translation");
}

PinholeCamera PinholeCamera::cropped(int x0, int y0, int width, int height) const {
  PinholeCamera c = *this;
  c.principal_point -= Vec2(x0, y0);
  c.image_size = {width, height};
  return c;
}

Eigen::Matrix<double, 3, 4> PinholeCamera::projection_matrix() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = focal_px;
  k(1, 1) = focal_px;
  k(0, 2) = principal_point.x();
  k(1, 2) = principal_point.y();
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = translation;
  return k * rt;
}

Vec2 project(const PinholeCamera& camera, const Vec3& point_world) {
  const Vec3 pc = camera.to_camera(point_world);
  if (!(pc.z() > 0.0)) fail(ErrorCode::kNonPositiveDepth, "point at or behind camera plane");
  return {camera.focal_px * pc.x() / pc.z() + camera.principal_point.x(),
          camera.focal_px * pc.y() / pc.z() + camera.principal_point.y()};
}

Ray backproject_ray(const PinholeCamera& camera, const Vec2& pixel) {
  const Vec3 dir_cam((pixel.x() - camera.principal_point.x()) / camera.focal_px,
                     (pixel.y() - camera.principal_point.y()) / camera.focal_px, 1.0);
  return {camera.center(), (camera.rotation.transpose() * dir_cam).normalized()};
}

Mat3 look_at_rotation(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = Vec3::UnitY().cross(z);
  if (x.norm() < 1e-12) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

void CameraRig::validate() const {
  if (working_distance_mm < 300.0 || working_distance_mm > 800.0)
    fail(ErrorCode::kInvalidArgument, "working distance outside [300, 800] mm");
  for (size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    for (size_t j = 0; j < i; ++j) {
      if ((cameras[i].center() - cameras[j].center()).norm() < 1e-9 &&
          (cameras[i].rotation - cameras[j].rotation).cwiseAbs().maxCoeff() < 1e-12)
        fail(ErrorCode::kInvalidArgument, "duplicate camera poses");
    }
  }
}

CameraRig default_rig(const RigLayout& layout) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double wd = layout.working_distance_mm;
  const Vec3 target(0.0, 0.0, wd);
  const std::array<std::pair<double, double>, 4> offsets = {{
      {-layout.yaw_deg, layout.pitch_deg},
      {layout.yaw_deg, layout.pitch_deg},
      {-layout.yaw_deg, -layout.pitch_deg},
      {layout.yaw_deg, -layout.pitch_deg},
  }};
  CameraRig rig;
  rig.working_distance_mm = wd;
  for (size_t i = 0; i < 4; ++i) {
    const double yaw = offsets[i].first * kDeg;
    const double pitch = offsets[i].second * kDeg;
    const Vec3 eye = target + wd * Vec3(std::sin(yaw) * std::cos(pitch), -std::sin(pitch),
                                        -std::cos(yaw) * std::cos(pitch));
    PinholeCamera& cam = rig.cameras[i];
    cam.focal_px = layout.focal_px;
    cam.image_size = {layout.image_width, layout.image_height};
    cam.principal_point = {layout.image_width / 2.0, layout.image_height / 2.0};
    cam.rotation = look_at_rotation(eye, target);
    cam.translation = -cam.rotation * eye;
  }
  return rig;
}

namespace {

template <int N>
Eigen::Matrix<double, N, 1> parse_vec(const KeyValues& kv, const std::string& key) {
  const auto values = kv.numbers(key);
  if (values.size() != N) fail(ErrorCode::kParseError, "key '" + key + "' expects " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = values[i];
  return v;
}

}  // namespace

CameraRig parse_rig(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  RigLayout layout;
  layout.working_distance_mm = kv.number_or("working_distance_mm", layout.working_distance_mm);
  layout.yaw_deg = kv.number_or("layout.yaw_deg", layout.yaw_deg);
  layout.pitch_deg = kv.number_or("layout.pitch_deg", layout.pitch_deg);
  layout.focal_px = kv.number_or("layout.focal_px", layout.focal_px);
  layout.image_width = static_cast<int>(kv.number_or("layout.image_width", layout.image_width));
  layout.image_height = static_cast<int>(kv.number_or("layout.image_height", layout.image_height));
  CameraRig rig = default_rig(layout);

  for (int i = 0; i < 4; ++i) {
    const std::string p = "camera." + std::to_string(i) + ".";
    if (!kv.has(p + "rotation")) continue;
    PinholeCamera& cam = rig.cameras[i];
    cam.focal_px = kv.number(p + "focal_px");
    cam.principal_point = parse_vec<2>(kv, p + "principal_point");
    const Vec2 size = parse_vec<2>(kv, p + "image_size");
    cam.image_size = {static_cast<int>(size.x()), static_cast<int>(size.y())};
    const auto r = parse_vec<9>(kv, p + "rotation");
    for (int k = 0; k < 9; ++k) cam.rotation(k / 3, k % 3) = r[k];
    cam.translation = parse_vec<3>(kv, p + "translation");
  }
  rig.validate();
  return rig;
}

CameraRig load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open rig file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rig(ss.str());
}

std::string format_rig(const CameraRig& rig) {
  std::ostringstream out;
  out.precision(17);
  out << "# trace-forge rig v1 (mm, px)\n";
  out << "working_distance_mm = " << rig.working_distance_mm << "\n";
  for (size_t i = 0; i < rig.cameras.size(); ++i) {
    const PinholeCamera& c = rig.cameras[i];
    const std::string p = "camera." + std::to_string(i) + ".";
    out << p << "focal_px = " << c.focal_px << "\n";
    out << p << "principal_point = " << c.principal_point.x() << " " << c.principal_point.y() << "\n";
    out << p << "image_size = " << c.image_size.x() << " " << c.image_size.y() << "\n";
    out << p << "rotation =";
    for (int k = 0; k < 9; ++k) out << " " << c.rotation(k / 3, k % 3);
    out << "\n";
    out << p << "translation = " << c.translation.x() << " " << c.translation.y() << " " << c.translation.z() << "\n";
  }
  return out.str();
}

void save_rig(const CameraRig& rig, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write rig file " + path.string());
  out << format_rig(rig);
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

void FramePlane::validate() const {
  if (std::abs(normal.norm() - 1.0) > 1e-12) fail(ErrorCode::kInvalidArgument, "plane normal not unit length");
  if (std::abs(in_plane_x.norm() - 1.0) > 1e-12) fail(ErrorCode::kInvalidArgument, "in-plane axis not unit length");
  if (std::abs(in_plane_x.dot(normal)) > 1e-12) fail(ErrorCode::kInvalidArgument, "in-plane axis not orthogonal");
}

std::optional<double> FramePlane::intersect(const Ray& ray) const {
  const double denom = normal.dot(ray.direction);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = normal.dot(origin - ray.origin) / denom;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

FramePlane FramePlane::from_normal(const Vec3& origin, const Vec3& normal) {
  FramePlane p;
  p.origin = origin;
  p.normal = normal.normalized();
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(p.normal) * p.normal;
  if (x.norm() < 1e-9) x = Vec3::UnitY() - Vec3::UnitY().dot(p.normal) * p.normal;
  p.in_plane_x = x.normalized();
  // Re-orthogonalize once more so the 1e-12 invariants hold after rounding.
  p.in_plane_x = (p.in_plane_x - p.in_plane_x.dot(p.normal) * p.normal).normalized();
  return p;
}

}  // namespace tforge
