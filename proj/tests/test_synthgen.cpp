#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/error.hpp"
#include "tforge/geometric_trace.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"

using namespace tforge;

namespace {

constexpr double kStep = 2 * std::numbers::pi / RadialTrace::kPoints;

bool same_views(const MultiViewSample& a, const MultiViewSample& b) {
  for (std::size_t v = 0; v < 4; ++v)
    if (!(a.views[v] == b.views[v])) return false;
  return true;
}

MultiViewSample ellipse_sample() {
  const FramePlane plane = FramePlane::from_normal(Vec3(1.0, -2.0, 500.0), Vec3(0.0, 0.0, -1.0));
  return render_views(FrameContour::ellipse(25.0, 18.0, plane), default_rig(), RenderConfig{});
}

}  // namespace

TEST_CASE("contour sampling is deterministic and valid") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const FrameContour a = sample_contour(seed), b = sample_contour(seed);
    CHECK(a.describe() == b.describe());
    CHECK_NOTHROW(a.validate());
  }
  CHECK(sample_contour(1).describe() != sample_contour(2).describe());
}

TEST_CASE("rendered ellipse sample invariants") {
  const MultiViewSample s = ellipse_sample();
  CHECK_NOTHROW(s.validate());
  CHECK(*std::max_element(s.truth.radii_mm.begin(), s.truth.radii_mm.end()) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(*std::min_element(s.truth.radii_mm.begin(), s.truth.radii_mm.end()) == doctest::Approx(18.0).epsilon(1e-12));
  for (const View& v : s.views) {
    CHECK(v.width() == 256);
    CHECK(v.height() == 256);
    float fg = 1e9f, bg = -1e9f;
    int xmin = v.width(), xmax = -1, ymin = v.height(), ymax = -1;
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x) {
        if (v.mask.at(x, y)) {
          fg = std::min(fg, v.depth.at(x, y));
          xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
        } else {
          bg = std::max(bg, v.depth.at(x, y));
        }
      }
    CHECK(fg > bg);
    CHECK(xmin >= 8);
    CHECK(ymin >= 8);
    CHECK(xmax <= v.width() - 9);
    CHECK(ymax <= v.height() - 9);
  }
}

TEST_CASE("mask inner boundary reprojects onto the circle") {
  const FramePlane plane = FramePlane::from_normal(Vec3(0.0, 0.0, 500.0), Vec3(0.0, 0.0, -1.0));
  const MultiViewSample s = render_views(FrameContour::circle(20.0, plane), default_rig(), RenderConfig{});
  for (const double r : s.truth.radii_mm) CHECK(std::abs(r - 20.0) < 1e-9);
  for (std::size_t v = 0; v < 4; ++v) {
    const PinholeCamera& cam = s.rig.cameras[v];
    const auto pts = inner_edge_samples(s.views[v].mask, project(cam, plane.origin));
    double ss = 0.0;
    for (const Vec2& p : pts) {
      // Distance in pixels from the edge sample to the projected circle,
      // measured along the image ray through the circle point nearest to it.
      const Ray ray = backproject_ray(cam, p);
      const Vec2 q = plane.to_plane(ray.origin + *plane.intersect(ray) * ray.direction);
      const Vec2 on = 20.0 * q.normalized();
      const double d = (project(cam, plane.to_world(on)) - p).norm();
      ss += d * d;
    }
    CHECK(std::sqrt(ss / static_cast<double>(pts.size())) < 0.3);
  }
}

TEST_CASE("direct eye crops equal crops of the full capture") {
  const CameraRig rig = default_rig();
  const Scene scene = sample_scene(derive_seed(42, 3), rig);
  const auto direct = render_eye_pair(scene, rig, RenderConfig{}, 77);
  const auto split = split_eyes(render_capture(scene, rig, 3, 77), RenderConfig{});
  CHECK(same_views(direct.first, split.first));
  CHECK(same_views(direct.second, split.second));
  CHECK(direct.first.truth.radii_mm == split.first.truth.radii_mm);
  CHECK(direct.first.eye == Eye::kLeft);
  CHECK(direct.second.eye == Eye::kRight);
  CHECK_NOTHROW(direct.first.validate());
  CHECK_NOTHROW(direct.second.validate());
}

TEST_CASE("mirrored eye frames have reflected traces") {
  const FrameContour c = FrameContour::fourier(24.0, 17.0, {Vec2(0.03, 0.02), Vec2(0.0, 0.04), Vec2(-0.02, 0.01)});
  const FramePlane pr = FramePlane::from_normal(Vec3(32.0, 0.0, 500.0), Vec3(0.0, 0.0, -1.0));
  const FramePlane pl = FramePlane::from_normal(Vec3(-32.0, 0.0, 500.0), Vec3(0.0, 0.0, -1.0));
  const RadialTrace right = truth_trace(EyeFrame{c.with_plane(pr), Eye::kRight});
  const RadialTrace left = truth_trace(EyeFrame{c.mirrored().with_plane(pl), Eye::kLeft});
  const int n = RadialTrace::kPoints;
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(left.radii_mm[static_cast<std::size_t>((n / 2 - i + n) % n)] - right.radii_mm[static_cast<std::size_t>(i)]) < 1e-9);
}

TEST_CASE("augmentation: disabled is the identity, seeds are repeatable") {
  const MultiViewSample s = ellipse_sample();
  const MultiViewSample same = augment(s, AugmentationConfig::disabled(), 5);
  CHECK(same_views(same, s));
  CHECK(same.truth.radii_mm == s.truth.radii_mm);

  AugmentationConfig all;
  all.p_geometric = all.p_noise = all.p_color = all.p_blur = all.p_sharpness = 1.0;
  const MultiViewSample a = augment(s, all, 9), b = augment(s, all, 9), c = augment(s, all, 10);
  CHECK(same_views(a, b));
  CHECK(a.truth.radii_mm == b.truth.radii_mm);
  CHECK_FALSE(same_views(a, c));
  for (const View& v : a.views)
    for (const auto& plane : v.image)
      for (float x : plane.data) CHECK((x >= 0.0f && x <= 1.0f));

  AugmentationConfig bad;
  bad.p_noise = 1.5;
  CHECK_THROWS_AS(augment(s, bad, 1), Error);
}

TEST_CASE("geometric augmentation: scale and grid-aligned rotation") {
  const MultiViewSample s = ellipse_sample();
  const MultiViewSample up = apply_geometric(s, GeometricTransform{0.0, 1.1, 0.0, 0.0});
  for (std::size_t i = 0; i < s.truth.radii_mm.size(); ++i)
    CHECK(up.truth.radii_mm[i] == doctest::Approx(1.1 * s.truth.radii_mm[i]).epsilon(1e-12));
  for (std::size_t v = 0; v < 4; ++v) {
    const double ratio = static_cast<double>(count_nonzero(up.views[v].mask)) / count_nonzero(s.views[v].mask);
    CHECK(ratio == doctest::Approx(1.21).epsilon(0.02));
  }

  const MultiViewSample rot = apply_geometric(s, GeometricTransform{7 * kStep, 1.0, 0.0, 0.0});
  const int n = RadialTrace::kPoints;
  for (int i = 0; i < n; ++i)
    CHECK(rot.truth.radii_mm[static_cast<std::size_t>((i + 7) % n)] == s.truth.radii_mm[static_cast<std::size_t>(i)]);
}

TEST_CASE("geometric augmentation matches the transformed contour") {
  const MultiViewSample s = ellipse_sample();
  const double phi = 0.1, scale = 1.05;
  const MultiViewSample g = apply_geometric(s, GeometricTransform{phi, scale, 3.0, -2.0});
  const auto want = ray_cast_trace(FrameContour::ellipse(25.0 * scale, 18.0 * scale).rotated(phi), RadialTrace::kPoints);
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(g.truth.radii_mm[i] - want[i]));
  CHECK(worst < 0.02);
  // The image content turns with the trace: the frontal-most view's mask
  // long axis follows the rotation.
  auto axis_angle = [](const Mask& m) {
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(x, y)) sx += x, sy += y, n += 1;
    sx /= n, sy /= n;
    double cxx = 0, cyy = 0, cxy = 0;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(x, y)) {
          const double dx = x - sx, dy = sy - y;
          cxx += dx * dx, cyy += dy * dy, cxy += dx * dy;
        }
    return 0.5 * std::atan2(2 * cxy, cxx - cyy);
  };
  const double turned = axis_angle(g.views[0].mask) - axis_angle(s.views[0].mask);
  CHECK(std::abs(turned - phi) < 0.02);
}

TEST_CASE("sample blob round trip") {
  oracle::TempDir dir("blob");
  MultiViewSample s = ellipse_sample();
  s.sample_id = "s00001_right";
  s.rng_seed = 123456789;
  write_sample_blob(s, dir / "a.tfs");
  const MultiViewSample back = read_sample_blob(dir / "a.tfs");
  CHECK(same_views(s, back));
  CHECK(back.sample_id == s.sample_id);
  CHECK(back.rng_seed == s.rng_seed);
  CHECK(back.eye == s.eye);

  // Non-quantized content takes the float encoding, still lossless.
  AugmentationConfig noisy = AugmentationConfig::disabled();
  noisy.p_noise = 1.0;
  const MultiViewSample n = augment(s, noisy, 3);
  write_sample_blob(n, dir / "b.tfs");
  CHECK(same_views(n, read_sample_blob(dir / "b.tfs")));

  std::filesystem::resize_file(dir / "b.tfs", 100);
  CHECK_THROWS_AS(read_sample_blob(dir / "b.tfs"), Error);
}

TEST_CASE("mask PGM round trip") {
  oracle::TempDir dir("pgm");
  const MultiViewSample s = ellipse_sample();
  write_mask_pgm(s.views[2].mask, dir / "m.pgm");
  const Mask back = read_mask_pgm(dir / "m.pgm");
  REQUIRE(back.same_shape(s.views[2].mask));
  for (std::size_t i = 0; i < back.data.size(); ++i) CHECK((back.data[i] != 0) == (s.views[2].mask.data[i] != 0));
}

TEST_CASE("manifest text round trip") {
  Manifest m;
  m.seed = 7;
  m.n_scenes = 1;
  m.mm_per_px = 0.357142857142857;
  m.entries.push_back({"s00000_left", Split::kTrain, Eye::kLeft, 0, "samples/s00000_left.tfs",
                       "samples/s00000_left.trace", "samples/s00000_left.rig"});
  m.entries.push_back({"s00000_right", Split::kTest, Eye::kRight, 0, "samples/s00000_right.tfs",
                       "samples/s00000_right.trace", "samples/s00000_right.rig"});
  const std::string text = format_manifest(m);
  const Manifest back = parse_manifest(text);
  CHECK(format_manifest(back) == text);
  CHECK(back.entries.size() == 2);
  CHECK(back.entries[1].split == Split::kTest);
  CHECK(back.mm_per_px == m.mm_per_px);
  try {
    parse_manifest(text.substr(0, text.rfind("sample ")));
    FAIL("truncated manifest accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCountMismatch);
  }
}

TEST_CASE("dataset generation is byte-identical per seed") {
  oracle::TempDir a("ds_a"), b("ds_b"), c("ds_c");
  DatasetConfig cfg;
  cfg.jobs = 2;
  const Manifest ma = build_dataset(10, 7, a.path(), cfg);
  cfg.jobs = 1;
  build_dataset(10, 7, b.path(), cfg);
  CHECK(oracle::snapshot(a.path()) == oracle::snapshot(b.path()));
  build_dataset(10, 8, c.path(), cfg);
  CHECK(oracle::read_file(a / "manifest.txt") != oracle::read_file(c / "manifest.txt"));

  CHECK(ma.entries.size() == 20);
  CHECK(ma.split(Split::kTrain).size() == 16);
  CHECK(ma.split(Split::kVal).size() == 2);
  CHECK(ma.split(Split::kTest).size() == 2);
  // Both eyes of a scene share a split.
  for (const auto& e : ma.entries)
    for (const auto& f : ma.entries)
      if (e.scene_index == f.scene_index) CHECK(e.split == f.split);

  const Manifest read = read_manifest(a.path());
  CHECK(format_manifest(read) == format_manifest(ma));
  for (const auto& e : read.entries) {
    const RadialTrace t = read_trace(a.path() / e.trace_path);
    CHECK_NOTHROW(t.validate());
    const MultiViewSample s = load_sample(a.path(), e);
    CHECK(s.sample_id == e.sample_id);
    CHECK(s.eye == e.eye);
    CHECK_NOTHROW(s.validate());
  }
  CHECK_THROWS_AS(build_dataset(5, 7, c.path() / "small", cfg), Error);
}
