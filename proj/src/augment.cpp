#include <algorithm>
#include <cmath>
#include <numbers>

#include "tforge/error.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"

namespace tforge {

namespace {

float bilinear(const ImageF& img, double x, double y, float fill) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double tx = x - fx, ty = y - fy;
  auto px = [&](int xi, int yi) { return img.contains(xi, yi) ? static_cast<double>(img.at(xi, yi)) : fill; };
  const double top = px(x0, y0) * (1 - tx) + px(x0 + 1, y0) * tx;
  const double bot = px(x0, y0 + 1) * (1 - tx) + px(x0 + 1, y0 + 1) * tx;
  return static_cast<float>(top * (1 - ty) + bot * ty);
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Separable Gaussian blur with clamped borders.
ImageF blur(const ImageF& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  ImageF tmp(img.width, img.height), out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(std::clamp(x + i, 0, img.width - 1), y);
      tmp.at(x, y) = static_cast<float>(acc);
    }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, std::clamp(y + i, 0, img.height - 1));
      out.at(x, y) = static_cast<float>(acc);
    }
  return out;
}

void clamp_unit(ImageF& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

void AugmentationConfig::validate() const {
  for (double p : {p_geometric, p_noise, p_color, p_blur, p_sharpness})
    if (p < 0.0 || p > 1.0) fail(ErrorCode::kInvalidArgument, "augmentation probabilities must lie in [0, 1]");
  if (scale_min <= 0.0 || scale_max < scale_min) fail(ErrorCode::kInvalidArgument, "bad scale range");
}

AugmentationConfig AugmentationConfig::disabled() {
  AugmentationConfig c;
  c.p_geometric = c.p_noise = c.p_color = c.p_blur = c.p_sharpness = 0.0;
  return c;
}

MultiViewSample apply_geometric(const MultiViewSample& sample, const GeometricTransform& g) {
  MultiViewSample out = sample;
  const double c = std::cos(g.rotation_rad), s = std::sin(g.rotation_rad);
  for (size_t v = 0; v < 4; ++v) {
    const View& src = sample.views[v];
    View& dst = out.views[v];
    std::vector<const ImageF*> planes;
    std::vector<ImageF*> targets;
    for (int ch = 0; ch < src.channels(); ++ch) {
      planes.push_back(&src.image[ch]);
      targets.push_back(&dst.image[ch]);
    }
    planes.push_back(&src.depth);
    targets.push_back(&dst.depth);
    const int w = src.width(), h = src.height();
    const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        // Inverse map: undo translation, scale, then rotation (image y points
        // down, so a visual counterclockwise turn is a clockwise matrix here).
        const double dx = (x - cx - g.tx_px) / g.scale, dy = (y - cy - g.ty_px) / g.scale;
        const double sx = cx + c * dx - s * dy;
        const double sy = cy + s * dx + c * dy;
        const std::size_t o = static_cast<std::size_t>(y) * w + x;
        const double fx = std::floor(sx), fy = std::floor(sy);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
          const double tx = sx - fx, ty = sy - fy;
          const double w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty), w01 = (1 - tx) * ty, w11 = tx * ty;
          const std::size_t i = static_cast<std::size_t>(y0) * w + x0;
          for (std::size_t p = 0; p < planes.size(); ++p) {
            const float* d = planes[p]->data.data();
            targets[p]->data[o] = static_cast<float>(w00 * d[i] + w10 * d[i + 1] + w01 * d[i + w] + w11 * d[i + w + 1]);
          }
        } else {
          for (std::size_t p = 0; p < planes.size(); ++p) targets[p]->data[o] = bilinear(*planes[p], sx, sy, 0.0f);
        }
        const int nx = static_cast<int>(std::floor(sx + 0.5)), ny = static_cast<int>(std::floor(sy + 0.5));
        dst.mask.data[o] = src.mask.contains(nx, ny) ? src.mask.at(nx, ny) : 0;
      }
  }
  out.truth = rotate_trace(sample.truth, g.rotation_rad);
  for (auto& r : out.truth.radii_mm) r *= g.scale;
  return out;
}

MultiViewSample augment(const MultiViewSample& sample, const AugmentationConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, rng_seed));
  // Every decision and parameter is drawn up front, in a fixed order, so the
  // draw sequence does not depend on which transforms fire.
  const bool do_geo = rng.bernoulli(cfg.p_geometric);
  const double deg = std::numbers::pi / 180.0;
  GeometricTransform g{rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg) * deg,
                       rng.uniform(cfg.scale_min, cfg.scale_max), 0.0, 0.0};
  const double w = sample.views[0].width();
  g.tx_px = rng.uniform(-cfg.max_translation_frac, cfg.max_translation_frac) * w;
  g.ty_px = rng.uniform(-cfg.max_translation_frac, cfg.max_translation_frac) * w;
  const bool do_noise = rng.bernoulli(cfg.p_noise);
  const double sigma = rng.uniform(0.0, cfg.max_noise_sigma);
  const std::uint64_t noise_seed = rng.next();
  const bool do_color = rng.bernoulli(cfg.p_color);
  const double gain = rng.uniform(cfg.gain_min, cfg.gain_max);
  const double bias = rng.uniform(-cfg.max_bias, cfg.max_bias);
  const bool do_blur = rng.bernoulli(cfg.p_blur);
  const double blur_sigma = rng.uniform(0.3, std::max(0.3, cfg.max_blur_sigma_px));
  const bool do_sharp = rng.bernoulli(cfg.p_sharpness);
  const double amount = rng.uniform(0.0, cfg.max_sharpness);

  MultiViewSample out = do_geo ? apply_geometric(sample, g) : sample;
  Rng noise(noise_seed);
  for (auto& view : out.views) {
    for (auto& plane : view.image) {
      if (do_color)
        for (auto& v : plane.data) v = static_cast<float>(v * gain + bias);
      if (do_blur) plane = blur(plane, blur_sigma);
      if (do_sharp) {
        const ImageF soft = blur(plane, 1.0);
        for (size_t i = 0; i < plane.data.size(); ++i)
          plane.data[i] = static_cast<float>(plane.data[i] + amount * (plane.data[i] - soft.data[i]));
      }
      if (do_noise)
        for (auto& v : plane.data) v = static_cast<float>(v + sigma * noise.normal());
      if (do_color || do_blur || do_sharp || do_noise) clamp_unit(plane);
    }
  }
  return out;
}

}  // namespace tforge
