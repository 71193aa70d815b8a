#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "tforge/error.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"

namespace tforge {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

FrameContour sample_contour(std::uint64_t rng_seed, const ContourSamplerConfig& cfg) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(attempt)));
    double total = 0.0;
    for (double w : cfg.family_weights) total += w;
    double pick = rng.uniform() * total;
    int family = 0;
    while (family < 3 && pick >= cfg.family_weights[family]) pick -= cfg.family_weights[family++];

    const double a = rng.uniform(cfg.semi_a_min, cfg.semi_a_max);
    const double b = rng.uniform(cfg.semi_b_min, std::min(cfg.semi_b_max, a));
    const double rot = rng.uniform(-cfg.max_rotation_rad, cfg.max_rotation_rad);
    try {
      FrameContour c = FrameContour::circle(a, cfg.plane);
      switch (family) {
        case 0:
          c = FrameContour::circle(0.5 * (a + b), cfg.plane);
          break;
        case 1:
          c = FrameContour::ellipse(a, b, cfg.plane);
          break;
        case 2:
          c = FrameContour::superellipse(a, b, rng.uniform(cfg.exponent_min, cfg.exponent_max), cfg.plane);
          break;
        default: {
          std::vector<Vec2> h(FrameContour::kMaxHarmonics);
          double amp = 0.0;
          for (int k = 0; k < FrameContour::kMaxHarmonics; ++k) {
            const double decay = std::pow(static_cast<double>(k + 1), -1.5);
            h[k] = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)) * decay;
            amp += h[k].norm();
          }
          const double target = cfg.max_fourier_amplitude * rng.uniform(0.3, 1.0);
          for (auto& v : h) v *= target / amp;
          c = FrameContour::fourier(a, b, std::move(h), cfg.plane);
        }
      }
      if (family != 0) c = c.rotated(rot);
      c.validate();
      return c;
    } catch (const Error&) {
      continue;
    }
  }
  fail(ErrorCode::kGenerationFailed, "100 contour candidates rejected");
}

Scene sample_scene(std::uint64_t rng_seed, const CameraRig& rig, const SceneConfig& cfg) {
  Rng rng(rng_seed);
  const double tilt = rng.uniform(-cfg.max_pantoscopic_tilt_deg, cfg.max_pantoscopic_tilt_deg) * kDeg;
  const double yaw = rng.uniform(-cfg.max_yaw_deg, cfg.max_yaw_deg) * kDeg;
  const Vec3 normal = (Eigen::AngleAxisd(yaw, Vec3::UnitY()) * Eigen::AngleAxisd(tilt, Vec3::UnitX()) *
                       Vec3(0.0, 0.0, -1.0))
                          .normalized();
  const double depth = rig.working_distance_mm + rng.uniform(-cfg.max_depth_jitter_mm, cfg.max_depth_jitter_mm);
  const Vec3 center(0.0, 0.0, depth);
  const FramePlane mid = FramePlane::from_normal(center, normal);

  ContourSamplerConfig ccfg = cfg.contour;
  ccfg.plane = mid;
  const FrameContour right = sample_contour(rng.next(), ccfg);
  const FrameContour left = right.mirrored();

  Scene s;
  s.rim_width_mm = rng.uniform(cfg.rim_width_min_mm, cfg.rim_width_max_mm);
  const double bridge = rng.uniform(cfg.bridge_min_mm, cfg.bridge_max_mm);
  double half_width = 0.0;
  for (int i = 0; i < 720; ++i) {
    const Vec2 p = right.point(2.0 * std::numbers::pi * i / 720) - right.center_2d();
    half_width = std::max(half_width, std::abs(p.x()));
  }
  // Crops of crop_size_px must not meet, with the closest camera and a small
  // allowance for the plane yaw.
  double min_sep = 0.0;
  for (const auto& cam : rig.cameras) {
    const double z = (cam.center() - center).norm();
    min_sep = std::max(min_sep, (cfg.crop_size_px + 4) * z / cam.focal_px / std::cos(yaw) * 1.08);
  }
  const double sep = std::max(2.0 * (half_width + s.rim_width_mm) + bridge, min_sep);

  const Vec3 ex = mid.in_plane_x, ey = mid.in_plane_y();
  const Vec2 br = right.center_2d(), bl = left.center_2d();
  const Vec3 right_origin = center - 0.5 * sep * ex - br.x() * ex - br.y() * ey;
  const Vec3 left_origin = center + 0.5 * sep * ex - bl.x() * ex - bl.y() * ey;
  FramePlane pr = mid, pl = mid;
  pr.origin = right_origin;
  pl.origin = left_origin;
  s.eyes.push_back({right.with_plane(pr), Eye::kRight});
  s.eyes.push_back({left.with_plane(pl), Eye::kLeft});

  s.face_plane = FramePlane::from_normal(center - cfg.face_offset_mm * normal, normal);
  const double tone = rng.uniform(0.35, 0.95);
  s.skin_rgb = {tone, tone * rng.uniform(0.68, 0.82), tone * rng.uniform(0.55, 0.72)};
  const double rim_v = rng.uniform(0.04, 0.5);
  s.rim_rgb = {rim_v * rng.uniform(0.5, 1.5), rim_v * rng.uniform(0.5, 1.5), rim_v * rng.uniform(0.5, 1.5)};
  for (auto& c : s.rim_rgb) c = std::clamp(c, 0.0, 1.0);
  s.light_angle_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.nose_overlap = rng.bernoulli(cfg.nose_overlap_probability);
  s.texture_seed = rng.next();
  s.trace_center = cfg.trace_center;
  return s;
}

RadialTrace truth_trace(const EyeFrame& frame, TraceCenter center) {
  const Vec2 origin = center == TraceCenter::kBoxing ? frame.contour.center_2d() : frame.contour.area_centroid_2d();
  std::vector<double> radii(RadialTrace::kPoints);
  for (int i = 0; i < RadialTrace::kPoints; ++i)
    radii[i] = ray_cast_radius_from(frame.contour, origin, 2.0 * std::numbers::pi * i / RadialTrace::kPoints);
  RadialTrace t(std::move(radii), frame.eye, 0.0);
  t.center_2d = origin;
  return t;
}

void MultiViewSample::validate() const {
  const View& v0 = views[0];
  for (const auto& v : views) {
    if (v.mask.width != v0.mask.width || v.mask.height != v0.mask.height || !v.depth.same_shape(v.mask))
      fail(ErrorCode::kInvalidArgument, "views differ in dimensions");
    if (v.channels() != v0.channels()) fail(ErrorCode::kInvalidArgument, "views differ in channel count");
    for (const auto& c : v.image)
      if (!c.same_shape(v.mask)) fail(ErrorCode::kInvalidArgument, "image plane size mismatch");
    float fg_min = 1e30f, bg_max = -1e30f;
    for (size_t i = 0; i < v.mask.data.size(); ++i) {
      if (v.mask.data[i])
        fg_min = std::min(fg_min, v.depth.data[i]);
      else
        bg_max = std::max(bg_max, v.depth.data[i]);
    }
    if (fg_min == 1e30f) fail(ErrorCode::kInvalidArgument, "empty mask");
    if (!(fg_min > bg_max)) fail(ErrorCode::kInvalidArgument, "depth convention violated (frame not closer)");

    // Single 8-connected component.
    const size_t total = count_nonzero(v.mask);
    std::vector<char> seen(v.mask.data.size(), 0);
    size_t start = 0;
    while (!v.mask.data[start]) ++start;
    std::queue<size_t> q;
    q.push(start);
    seen[start] = 1;
    size_t reached = 0;
    while (!q.empty()) {
      const size_t i = q.front();
      q.pop();
      ++reached;
      const int x = static_cast<int>(i % v.mask.width), y = static_cast<int>(i / v.mask.width);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!v.mask.contains(nx, ny)) continue;
          const size_t j = static_cast<size_t>(ny) * v.mask.width + nx;
          if (v.mask.data[j] && !seen[j]) {
            seen[j] = 1;
            q.push(j);
          }
        }
    }
    if (reached != total) fail(ErrorCode::kInvalidArgument, "mask is not a single connected component");
  }
  truth.validate();
}

}  // namespace tforge
