#pragma once

#include <string>
#include <vector>

#include "tforge/geometry.hpp"

namespace tforge {

enum class ContourFamily { kCircle, kEllipse, kSuperellipse, kFourier };

std::string to_string(ContourFamily f);
ContourFamily parse_contour_family(const std::string& s);

/// Closed inner-edge curve of one eye frame, lying in `plane`.
///
/// The curve is given in polar form about the plane origin,
/// p(phi) = rho(phi) (cos phi, sin phi), then optionally mirrored across the
/// in-plane y axis (left eye) and rotated in-plane. Every family is a
/// polar curve about its parametric center, so the shape is star-shaped
/// about that point by construction; the trace however is measured about
/// the boxing center, which must be checked separately.
class FrameContour {
 public:
  static constexpr int kMaxHarmonics = 8;

  static FrameContour circle(double radius_mm, const FramePlane& plane = {});
  static FrameContour ellipse(double semi_a_mm, double semi_b_mm, const FramePlane& plane = {});
  static FrameContour superellipse(double semi_a_mm, double semi_b_mm, double exponent, const FramePlane& plane = {});
  /// Ellipse modulated by 1 + sum_k (c_k cos k phi + s_k sin k phi).
  static FrameContour fourier(double semi_a_mm, double semi_b_mm, std::vector<Vec2> harmonics,
                              const FramePlane& plane = {});

  FrameContour rotated(double angle_rad) const;
  FrameContour mirrored() const;
  FrameContour with_plane(const FramePlane& plane) const;

  ContourFamily family() const { return family_; }
  double semi_a() const { return semi_a_; }
  double semi_b() const { return semi_b_; }
  double exponent() const { return exponent_; }
  const std::vector<Vec2>& harmonics() const { return harmonics_; }
  double rotation_rad() const { return rotation_; }
  bool is_mirrored() const { return mirror_; }
  const FramePlane& plane() const { return plane_; }

  /// Boxing center in plane coordinates: center of the axis-aligned
  /// bounding box of the curve in the (in_plane_x, in_plane_y) frame.
  const Vec2& center_2d() const { return boxing_center_; }
  /// Centroid of the enclosed region, the alternative trace origin.
  Vec2 area_centroid_2d() const;
  double max_polar_radius() const { return max_rho_; }

  /// Polar radius of the unmirrored, unrotated curve.
  double polar_radius(double phi) const;
  /// Point on the curve in plane coordinates.
  Vec2 point(double phi) const;
  /// |q| - rho(angle(q)) in the curve's own frame: negative strictly inside.
  double implicit_residual(const Vec2& q_plane) const;

  /// Checks semi-axis range [12, 32] mm, harmonic budget and
  /// star-shapedness about the boxing center (3600 rays).
  void validate() const;

  /// Serialized parameters, stable across platforms (%.17g).
  std::string describe() const;

 private:
  FrameContour() = default;
  void finalize();

  ContourFamily family_ = ContourFamily::kCircle;
  double semi_a_ = 20.0;
  double semi_b_ = 20.0;
  double exponent_ = 2.0;
  std::vector<Vec2> harmonics_;
  double rotation_ = 0.0;
  bool mirror_ = false;
  FramePlane plane_;
  Vec2 boxing_center_ = Vec2::Zero();
  double max_rho_ = 0.0;
};

/// Distance from the contour's boxing center to the inner edge along the
/// in-plane direction `angle_rad` (0 = +in_plane_x, counterclockwise).
/// Bracketing scan plus bisection to well below 1e-9 mm. Throws
/// NotStarShaped when the ray crosses the curve more than once.
double ray_cast_radius(const FrameContour& contour, double angle_rad);

/// Same, from an arbitrary in-plane origin.
double ray_cast_radius_from(const FrameContour& contour, const Vec2& origin_2d, double angle_rad);

/// Radii at n uniform angles starting at angle0.
std::vector<double> ray_cast_trace(const FrameContour& contour, int n_points, double angle0_rad = 0.0);

}  // namespace tforge
