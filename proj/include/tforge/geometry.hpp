#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <filesystem>
#include <optional>
#include <string>

namespace tforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rectified pinhole camera. The pose maps world to camera coordinates,
/// X_cam = rotation * X_world + translation, with x right, y down and z
/// along the optical axis. Units are millimetres and pixels.
struct PinholeCamera {
  double focal_px = 1400.0;
  Vec2 principal_point{648.0, 648.0};
  Eigen::Vector2i image_size{1296, 1296};
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 optical_axis() const { return rotation.transpose().col(2); }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

  /// The same camera restricted to a window whose top-left pixel is
  /// (x0, y0) in this camera's image.
  PinholeCamera cropped(int x0, int y0, int width, int height) const;

  /// Full 3x4 projection matrix K [R | t].
  Eigen::Matrix<double, 3, 4> projection_matrix() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

/// Pinhole projection. Throws NonPositiveDepth at or behind the camera plane.
Vec2 project(const PinholeCamera& camera, const Vec3& point_world);

Ray backproject_ray(const PinholeCamera& camera, const Vec2& pixel);

/// Rotation whose third row is the viewing direction from `eye` to `target`,
/// with image-down roughly along world +y.
Mat3 look_at_rotation(const Vec3& eye, const Vec3& target);

struct CameraRig {
  std::array<PinholeCamera, 4> cameras;
  double working_distance_mm = 500.0;

  void validate() const;
};

/// Layout knobs for the default tower rig: four cameras on an arc around a
/// target at the working distance, at (yaw, pitch) = (+-yaw, +-pitch).
struct RigLayout {
  double working_distance_mm = 500.0;
  double yaw_deg = 10.0;
  double pitch_deg = 6.0;
  double focal_px = 1400.0;
  int image_width = 1296;
  int image_height = 1296;
};

CameraRig default_rig(const RigLayout& layout = {});

/// Plain-text rig description. Either explicit cameras
/// (`camera.<i>.focal_px`, `.principal_point`, `.image_size`, `.rotation`,
/// `.translation`) or layout keys (`layout.yaw_deg`, ...) are accepted;
/// explicit cameras win when present.
CameraRig load_rig(const std::filesystem::path& path);
CameraRig parse_rig(const std::string& text);
void save_rig(const CameraRig& rig, const std::filesystem::path& path);
std::string format_rig(const CameraRig& rig);

/// Plane carrying a frame contour. in_plane_y = normal x in_plane_x, so the
/// in-plane basis reads counterclockwise when the normal faces the viewer.
struct FramePlane {
  Vec3 origin = Vec3::Zero();
  Vec3 normal{0.0, 0.0, -1.0};
  Vec3 in_plane_x{1.0, 0.0, 0.0};

  void validate() const;

  Vec3 in_plane_y() const { return normal.cross(in_plane_x); }
  Vec3 to_world(const Vec2& p) const { return origin + p.x() * in_plane_x + p.y() * in_plane_y(); }
  Vec2 to_plane(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {d.dot(in_plane_x), d.dot(in_plane_y())};
  }
  double signed_distance(const Vec3& p) const { return normal.dot(p - origin); }

  /// Ray parameter t at which the ray meets the plane, if it does so in front.
  std::optional<double> intersect(const Ray& ray) const;

  /// Plane through `origin` with the given normal; in_plane_x is world +x
  /// projected into the plane.
  static FramePlane from_normal(const Vec3& origin, const Vec3& normal);
};

}  // namespace tforge
