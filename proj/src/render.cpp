#include <algorithm>
#include <cmath>
#include <numbers>

#include "tforge/error.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"

namespace tforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ull +
                                                       static_cast<std::uint64_t>(iy) * 0x85EBCA77ull));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smooth value noise in [0, 1].
double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(ix, iy, seed), b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed), d = lattice(ix + 1, iy + 1, seed);
  return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

double fbm(double x, double y, std::uint64_t seed) {
  return 0.5 * value_noise(x, y, seed) + 0.3 * value_noise(2.03 * x, 2.03 * y, seed + 1) +
         0.2 * value_noise(4.01 * x, 4.01 * y, seed + 2);
}

struct PixelValue {
  std::array<double, 3> rgb;
  double depth;
  bool rim;
};

bool in_ellipse(double x, double y, double cx, double cy, double ax, double ay) {
  const double u = (x - cx) / ax, v = (y - cy) / ay;
  return u * u + v * v <= 1.0;
}

// Face texture in face-plane coordinates (mm, y up, origin between the eyes).
PixelValue shade_face(const Scene& s, const Vec2& f, const std::vector<Vec2>& eye_centers, double range_mm,
                      double working_distance) {
  const std::uint64_t seed = s.texture_seed;
  double shade = 0.82 + 0.18 * fbm(f.x() / 7.0, f.y() / 7.0, seed);
  std::array<double, 3> rgb = {s.skin_rgb[0] * shade, s.skin_rgb[1] * shade, s.skin_rgb[2] * shade};
  double relief = 0.0;

  // Nose: a wedge widening downward, lit from one side.
  const double nose_half = 7.0 + 0.35 * std::max(0.0, -f.y());
  if (std::abs(f.x()) < nose_half && f.y() < 6.0) {
    const double side = f.x() / nose_half;
    const double k = 0.92 + 0.12 * side;
    for (auto& c : rgb) c *= k;
    relief += 25.0 * (1.0 - side * side);
  }
  for (const auto& e : eye_centers) {
    // Brow above the aperture.
    if (std::abs(f.x() - e.x()) < 24.0 && std::abs(f.y() - (e.y() + 24.0)) < 2.5 + 1.0 * fbm(f.x(), 3.0, seed + 7)) {
      const double d = 0.25 + 0.1 * fbm(f.x() * 2.0, f.y() * 2.0, seed + 9);
      rgb = {d, d * 0.8, d * 0.6};
    }
    if (in_ellipse(f.x(), f.y(), e.x(), e.y(), 13.0, 6.0)) {
      relief -= 12.0;
      rgb = {0.88, 0.86, 0.84};
      const double r = std::hypot(f.x() - e.x(), f.y() - e.y());
      if (r < 5.5) {
        const double g = 0.35 + 0.25 * fbm(std::atan2(f.y() - e.y(), f.x() - e.x()) * 6.0, r, seed + 11);
        rgb = {0.45 * g, 0.32 * g, 0.2 * g};
      }
      if (r < 2.2) rgb = {0.04, 0.04, 0.05};
    }
  }
  // A few textured blobs standing in for skin detail.
  for (int k = 0; k < 6; ++k) {
    const double cx = (lattice(k, 1, seed + 13) - 0.5) * 140.0;
    const double cy = (lattice(k, 2, seed + 13) - 0.5) * 80.0;
    if (in_ellipse(f.x(), f.y(), cx, cy, 2.0 + 4.0 * lattice(k, 3, seed + 13), 1.5 + 3.0 * lattice(k, 4, seed + 13)))
      for (auto& c : rgb) c *= 0.8;
  }
  const double depth =
      std::clamp(60.0 + 0.5 * (working_distance - range_mm) + relief + 20.0 * (fbm(f.x() / 15.0, f.y() / 15.0, seed + 5) - 0.5),
                 0.0, 120.0);
  return {rgb, depth, false};
}

struct ScenePrecomp {
  std::vector<Vec2> eye_centers_face;  // eye boxing centers in face-plane coords
  Vec3 face_origin;
};

ScenePrecomp precompute(const Scene& scene) {
  ScenePrecomp p;
  Vec3 mid = Vec3::Zero();
  for (const auto& e : scene.eyes) mid += e.contour.plane().to_world(e.contour.center_2d());
  mid /= static_cast<double>(std::max<size_t>(scene.eyes.size(), 1));
  FramePlane face = scene.face_plane;
  face.origin = mid - face.normal * face.normal.dot(mid - scene.face_plane.origin);
  p.face_origin = face.origin;
  for (const auto& e : scene.eyes) {
    const Vec3 c = e.contour.plane().to_world(e.contour.center_2d());
    p.eye_centers_face.push_back(face.to_plane(c));
  }
  return p;
}

PixelValue shade_pixel(const Scene& scene, const ScenePrecomp& pre, const PinholeCamera& cam, double working_distance,
                       int x, int y) {
  const Ray ray = backproject_ray(cam, Vec2(x, y));
  FramePlane face = scene.face_plane;
  face.origin = pre.face_origin;

  Vec2 face_pt = Vec2::Zero();
  double face_range = working_distance + 20.0;
  if (const auto t = face.intersect(ray)) {
    face_pt = face.to_plane(ray.origin + *t * ray.direction);
    face_range = *t;
  }

  for (const auto& e : scene.eyes) {
    const FramePlane& plane = e.contour.plane();
    const auto t = plane.intersect(ray);
    if (!t) continue;
    const Vec2 q = plane.to_plane(ray.origin + *t * ray.direction);
    const double g = e.contour.implicit_residual(q);
    if (g < 0.0 || g >= scene.rim_width_mm) continue;

    const DepthBands& b = scene.depth_bands;
    const double depth = std::clamp(0.5 * (b.frame_lo + b.frame_hi) + (working_distance - *t), b.frame_lo, b.frame_hi);
    if (scene.nose_overlap) {
      // Nose clutter painted over the lower nasal part of the rim.
      const double nose_half = 7.0 + 0.35 * std::max(0.0, -face_pt.y());
      if (std::abs(face_pt.x()) < nose_half + 3.0 && face_pt.y() < -4.0) {
        PixelValue v = shade_face(scene, face_pt, pre.eye_centers_face, face_range, working_distance);
        v.depth = depth;
        v.rim = true;
        return v;
      }
    }
    const Vec2 d = q - e.contour.center_2d();
    const double phi = std::atan2(d.y(), d.x());
    const double u = g / scene.rim_width_mm;
    const double lambert = 0.7 + 0.3 * std::cos(phi - scene.light_angle_rad);
    const double spec = 0.35 * std::exp(-std::pow((u - 0.3) / 0.12, 2.0)) * std::max(0.0, std::cos(phi - scene.light_angle_rad));
    std::array<double, 3> rgb;
    for (int c = 0; c < 3; ++c) rgb[c] = scene.rim_rgb[c] * lambert + spec;
    return {rgb, depth, true};
  }
  return shade_face(scene, face_pt, pre.eye_centers_face, face_range, working_distance);
}

double quantize_unit(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

View make_view(int w, int h, int channels) {
  View v;
  v.image.assign(static_cast<size_t>(channels), ImageF(w, h));
  v.depth = ImageF(w, h);
  v.mask = Mask(w, h);
  return v;
}

// Renders the window [x0, x0 + w) x [y0, y0 + h) of camera `view_index`.
View render_window(const Scene& scene, const ScenePrecomp& pre, const CameraRig& rig, size_t view_index, int x0,
                   int y0, int w, int h, int channels) {
  const PinholeCamera& cam = rig.cameras[view_index];
  View v = make_view(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int px = x0 + x, py = y0 + y;
      const PixelValue pv = shade_pixel(scene, pre, cam, rig.working_distance_mm, px, py);
      // Sensor noise keyed on the full-frame pixel, so crops match full renders.
      const double noise =
          (lattice(px, py, scene.texture_seed ^ (0xA5A5ull + view_index)) - 0.5) * (3.0 / 255.0);
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) v.image[c].at(x, y) = static_cast<float>(quantize_unit(pv.rgb[c] + noise));
      } else {
        const double grey = 0.299 * pv.rgb[0] + 0.587 * pv.rgb[1] + 0.114 * pv.rgb[2];
        v.image[0].at(x, y) = static_cast<float>(quantize_unit(grey + noise));
      }
      v.depth.at(x, y) = static_cast<float>(std::round(pv.depth));
      v.mask.at(x, y) = pv.rim ? 1 : 0;
    }
  return v;
}

struct Window {
  int x0, y0, size;
  bool intersects(const Window& o) const {
    return x0 < o.x0 + o.size && o.x0 < x0 + size && y0 < o.y0 + o.size && o.y0 < y0 + size;
  }
};

Window eye_window(const EyeFrame& e, double rim_width, const PinholeCamera& cam, const RenderConfig& cfg) {
  const FramePlane& plane = e.contour.plane();
  Vec2 c;
  try {
    c = project(cam, plane.to_world(e.contour.center_2d()));
  } catch (const Error&) {
    fail(ErrorCode::kOutOfFrustum, "eye center behind a camera");
  }
  Window win{static_cast<int>(std::lround(c.x())) - cfg.crop_size / 2,
             static_cast<int>(std::lround(c.y())) - cfg.crop_size / 2, cfg.crop_size};
  if (win.x0 < 0 || win.y0 < 0 || win.x0 + win.size > cam.image_size.x() || win.y0 + win.size > cam.image_size.y())
    fail(ErrorCode::kOutOfFrustum, "crop window leaves the image");
  // The outer rim must sit inside the window with the required margin.
  const double lo_x = win.x0 + cfg.crop_margin, hi_x = win.x0 + win.size - 1 - cfg.crop_margin;
  const double lo_y = win.y0 + cfg.crop_margin, hi_y = win.y0 + win.size - 1 - cfg.crop_margin;
  for (int i = 0; i < 1440; ++i) {
    const double phi = kTwoPi * i / 1440;
    const Vec2 inner = e.contour.point(phi);
    const Vec2 dir = inner.normalized();
    Vec2 p;
    try {
      // Slightly past the rim so pixels straddling the outer edge count.
      p = project(cam, plane.to_world(inner + (rim_width + 0.5) * dir));
    } catch (const Error&) {
      fail(ErrorCode::kOutOfFrustum, "rim behind a camera");
    }
    if (p.x() < lo_x || p.x() > hi_x || p.y() < lo_y || p.y() > hi_y)
      fail(ErrorCode::kOutOfFrustum, "rim leaves the crop window");
  }
  return win;
}

MultiViewSample sample_shell(const Scene& scene, const EyeFrame& e, const CameraRig& rig,
                             const std::array<Window, 4>& wins, std::uint64_t seed) {
  MultiViewSample s;
  s.eye = e.eye;
  s.rng_seed = seed;
  s.truth = truth_trace(e, scene.trace_center);
  s.rig = rig;
  for (size_t v = 0; v < 4; ++v) s.rig.cameras[v] = rig.cameras[v].cropped(wins[v].x0, wins[v].y0, wins[v].size, wins[v].size);
  s.mm_per_px = rig.working_distance_mm / rig.cameras[0].focal_px;
  return s;
}

const EyeFrame& find_eye(const Scene& scene, Eye eye) {
  for (const auto& e : scene.eyes)
    if (e.eye == eye) return e;
  fail(ErrorCode::kInvalidArgument, "scene has no " + to_string(eye) + " eye");
}

}  // namespace

MultiViewSample render_views(const FrameContour& contour, const CameraRig& rig, const RenderConfig& cfg, Eye eye,
                             double rim_width_mm) {
  Scene scene;
  scene.eyes.push_back({contour, eye});
  scene.rim_width_mm = rim_width_mm;
  scene.face_plane = FramePlane::from_normal(contour.plane().origin - 18.0 * contour.plane().normal, contour.plane().normal);
  const ScenePrecomp pre = precompute(scene);
  std::array<Window, 4> wins;
  for (size_t v = 0; v < 4; ++v) wins[v] = eye_window(scene.eyes[0], rim_width_mm, rig.cameras[v], cfg);
  MultiViewSample s = sample_shell(scene, scene.eyes[0], rig, wins, 0);
  s.sample_id = "single_" + to_string(eye);
  for (size_t v = 0; v < 4; ++v)
    s.views[v] = render_window(scene, pre, rig, v, wins[v].x0, wins[v].y0, wins[v].size, wins[v].size, cfg.channels);
  return s;
}

FullCapture render_capture(const Scene& scene, const CameraRig& rig, int channels, std::uint64_t rng_seed) {
  FullCapture cap{scene, rig, {}, rng_seed};
  const ScenePrecomp pre = precompute(scene);
  for (size_t v = 0; v < 4; ++v) {
    const auto& cam = rig.cameras[v];
    cap.views[v] = render_window(scene, pre, rig, v, 0, 0, cam.image_size.x(), cam.image_size.y(), channels);
  }
  return cap;
}

namespace {

std::pair<std::array<Window, 4>, std::array<Window, 4>> pair_windows(const Scene& scene, const CameraRig& rig,
                                                                     const RenderConfig& cfg) {
  const EyeFrame& left = find_eye(scene, Eye::kLeft);
  const EyeFrame& right = find_eye(scene, Eye::kRight);
  std::array<Window, 4> wl, wr;
  for (size_t v = 0; v < 4; ++v) {
    wl[v] = eye_window(left, scene.rim_width_mm, rig.cameras[v], cfg);
    wr[v] = eye_window(right, scene.rim_width_mm, rig.cameras[v], cfg);
    if (wl[v].intersects(wr[v])) fail(ErrorCode::kOverlapError, "eye crops overlap in view " + std::to_string(v));
  }
  return {wl, wr};
}

View crop_view(const View& full, const Window& w) {
  View v = make_view(w.size, w.size, full.channels());
  for (int y = 0; y < w.size; ++y)
    for (int x = 0; x < w.size; ++x) {
      for (int c = 0; c < full.channels(); ++c) v.image[c].at(x, y) = full.image[c].at(w.x0 + x, w.y0 + y);
      v.depth.at(x, y) = full.depth.at(w.x0 + x, w.y0 + y);
      v.mask.at(x, y) = full.mask.at(w.x0 + x, w.y0 + y);
    }
  return v;
}

}  // namespace

std::pair<MultiViewSample, MultiViewSample> split_eyes(const FullCapture& capture, const RenderConfig& cfg) {
  const auto [wl, wr] = pair_windows(capture.scene, capture.rig, cfg);
  MultiViewSample l = sample_shell(capture.scene, find_eye(capture.scene, Eye::kLeft), capture.rig, wl, capture.rng_seed);
  MultiViewSample r = sample_shell(capture.scene, find_eye(capture.scene, Eye::kRight), capture.rig, wr, capture.rng_seed);
  for (size_t v = 0; v < 4; ++v) {
    l.views[v] = crop_view(capture.views[v], wl[v]);
    r.views[v] = crop_view(capture.views[v], wr[v]);
  }
  return {std::move(l), std::move(r)};
}

std::pair<MultiViewSample, MultiViewSample> render_eye_pair(const Scene& scene, const CameraRig& rig,
                                                            const RenderConfig& cfg, std::uint64_t rng_seed) {
  const auto [wl, wr] = pair_windows(scene, rig, cfg);
  const ScenePrecomp pre = precompute(scene);
  MultiViewSample l = sample_shell(scene, find_eye(scene, Eye::kLeft), rig, wl, rng_seed);
  MultiViewSample r = sample_shell(scene, find_eye(scene, Eye::kRight), rig, wr, rng_seed);
  for (size_t v = 0; v < 4; ++v) {
    l.views[v] = render_window(scene, pre, rig, v, wl[v].x0, wl[v].y0, cfg.crop_size, cfg.crop_size, cfg.channels);
    r.views[v] = render_window(scene, pre, rig, v, wr[v].x0, wr[v].y0, cfg.crop_size, cfg.crop_size, cfg.channels);
  }
  return {std::move(l), std::move(r)};
}

}  // namespace tforge
