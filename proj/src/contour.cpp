#include "tforge/contour.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

#include "tforge/error.hpp"

namespace tforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kDenseSamples = 7200;
constexpr double kScanStepMm = 0.25;

// Golden-section maximization of f on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100 && (b - a) > 1e-13; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

std::string to_string(ContourFamily f) {
  switch (f) {
    case ContourFamily::kCircle: return "circle";
    case ContourFamily::kEllipse: return "ellipse";
    case ContourFamily::kSuperellipse: return "superellipse";
    case ContourFamily::kFourier: return "fourier";
  }
  return "unknown";
}

ContourFamily parse_contour_family(const std::string& s) {
  if (s == "circle") return ContourFamily::kCircle;
  if (s == "ellipse") return ContourFamily::kEllipse;
  if (s == "superellipse") return ContourFamily::kSuperellipse;
  if (s == "fourier") return ContourFamily::kFourier;
  fail(ErrorCode::kParseError, "unknown contour family '" + s + "'");
}

FrameContour FrameContour::circle(double radius_mm, const FramePlane& plane) {
  FrameContour c;
  c.family_ = ContourFamily::kCircle;
  c.semi_a_ = c.semi_b_ = radius_mm;
  c.plane_ = plane;
  c.finalize();
  return c;
}

FrameContour FrameContour::ellipse(double semi_a_mm, double semi_b_mm, const FramePlane& plane) {
  FrameContour c;
  c.family_ = ContourFamily::kEllipse;
  c.semi_a_ = semi_a_mm;
  c.semi_b_ = semi_b_mm;
  c.plane_ = plane;
  c.finalize();
  return c;
}

FrameContour FrameContour::superellipse(double semi_a_mm, double semi_b_mm, double exponent,
                                        const FramePlane& plane) {
  if (!(exponent > 0.0)) fail(ErrorCode::kInvalidArgument, "superellipse exponent must be positive");
  FrameContour c;
  c.family_ = ContourFamily::kSuperellipse;
  c.semi_a_ = semi_a_mm;
  c.semi_b_ = semi_b_mm;
  c.exponent_ = exponent;
  c.plane_ = plane;
  c.finalize();
  return c;
}

FrameContour FrameContour::fourier(double semi_a_mm, double semi_b_mm, std::vector<Vec2> harmonics,
                                   const FramePlane& plane) {
  if (harmonics.size() > static_cast<size_t>(kMaxHarmonics))
    fail(ErrorCode::kInvalidArgument, "at most 8 Fourier harmonics");
  FrameContour c;
  c.family_ = ContourFamily::kFourier;
  c.semi_a_ = semi_a_mm;
  c.semi_b_ = semi_b_mm;
  c.harmonics_ = std::move(harmonics);
  c.plane_ = plane;
  c.finalize();
  return c;
}

FrameContour FrameContour::rotated(double angle_rad) const {
  FrameContour c = *this;
  c.rotation_ += angle_rad;
  c.finalize();
  return c;
}

FrameContour FrameContour::mirrored() const {
  FrameContour c = *this;
  c.mirror_ = !c.mirror_;
  c.rotation_ = -c.rotation_;
  c.finalize();
  return c;
}

FrameContour FrameContour::with_plane(const FramePlane& plane) const {
  FrameContour c = *this;
  c.plane_ = plane;
  return c;
}

double FrameContour::polar_radius(double phi) const {
  const double cs = std::cos(phi), sn = std::sin(phi);
  switch (family_) {
    case ContourFamily::kCircle:
      return semi_a_;
    case ContourFamily::kEllipse:
      return semi_a_ * semi_b_ / std::hypot(semi_b_ * cs, semi_a_ * sn);
    case ContourFamily::kSuperellipse:
      return std::pow(std::pow(std::abs(cs / semi_a_), exponent_) + std::pow(std::abs(sn / semi_b_), exponent_),
                      -1.0 / exponent_);
    case ContourFamily::kFourier: {
      double mod = 1.0;
      for (size_t k = 0; k < harmonics_.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        mod += harmonics_[k].x() * std::cos(kk * phi) + harmonics_[k].y() * std::sin(kk * phi);
      }
      return semi_a_ * semi_b_ / std::hypot(semi_b_ * cs, semi_a_ * sn) * mod;
    }
  }
  return 0.0;
}

Vec2 FrameContour::point(double phi) const {
  const double rho = polar_radius(phi);
  Vec2 local(rho * std::cos(phi), rho * std::sin(phi));
  if (mirror_) local.x() = -local.x();
  const double c = std::cos(rotation_), s = std::sin(rotation_);
  return {c * local.x() - s * local.y(), s * local.x() + c * local.y()};
}

double FrameContour::implicit_residual(const Vec2& q) const {
  const double c = std::cos(rotation_), s = std::sin(rotation_);
  Vec2 local(c * q.x() + s * q.y(), -s * q.x() + c * q.y());
  if (mirror_) local.x() = -local.x();
  const double r = local.norm();
  if (r == 0.0) return -polar_radius(0.0);
  return r - polar_radius(std::atan2(local.y(), local.x()));
}

void FrameContour::finalize() {
  // Dense sampling followed by golden-section refinement of each extreme.
  double best[4] = {-1e300, -1e300, -1e300, -1e300};  // +x, -x, +y, -y
  int arg[4] = {0, 0, 0, 0};
  max_rho_ = 0.0;
  for (int i = 0; i < kDenseSamples; ++i) {
    const double phi = kTwoPi * i / kDenseSamples;
    const Vec2 p = point(phi);
    const double v[4] = {p.x(), -p.x(), p.y(), -p.y()};
    for (int k = 0; k < 4; ++k)
      if (v[k] > best[k]) {
        best[k] = v[k];
        arg[k] = i;
      }
    max_rho_ = std::max(max_rho_, polar_radius(phi));
  }
  const double step = kTwoPi / kDenseSamples;
  double ext[4];
  for (int k = 0; k < 4; ++k) {
    const double phi0 = kTwoPi * arg[k] / kDenseSamples;
    ext[k] = golden_max(
        [&](double phi) {
          const Vec2 p = point(phi);
          const double v[4] = {p.x(), -p.x(), p.y(), -p.y()};
          return v[k];
        },
        phi0 - step, phi0 + step);
  }
  boxing_center_ = Vec2(0.5 * (ext[0] - ext[1]), 0.5 * (ext[2] - ext[3]));
}

Vec2 FrameContour::area_centroid_2d() const {
  double area = 0.0;
  Vec2 moment = Vec2::Zero();
  for (int i = 0; i < kDenseSamples; ++i) {
    const double phi = kTwoPi * i / kDenseSamples;
    const double rho = polar_radius(phi);
    area += 0.5 * rho * rho;
    moment += (rho * rho * rho / 3.0) * Vec2(std::cos(phi), std::sin(phi));
  }
  Vec2 local = moment / area;
  if (mirror_) local.x() = -local.x();
  const double c = std::cos(rotation_), s = std::sin(rotation_);
  return {c * local.x() - s * local.y(), s * local.x() + c * local.y()};
}

void FrameContour::validate() const {
  if (semi_a_ < 12.0 || semi_a_ > 32.0 || semi_b_ < 12.0 || semi_b_ > 32.0)
    fail(ErrorCode::kInvalidArgument, "semi-axes must lie in [12, 32] mm");
  double amp = 0.0;
  for (const auto& h : harmonics_) amp += h.norm();
  if (amp > 0.10 + 1e-12) fail(ErrorCode::kInvalidArgument, "Fourier perturbation exceeds 10% of the mean radius");
  plane_.validate();
  for (int i = 0; i < 3600; ++i) ray_cast_radius(*this, kTwoPi * i / 3600.0);
}

std::string FrameContour::describe() const {
  char buf[128];
  std::ostringstream out;
  out << to_string(family_);
  std::snprintf(buf, sizeof buf, " a=%.17g b=%.17g n=%.17g rot=%.17g mirror=%d", semi_a_, semi_b_, exponent_,
                rotation_, mirror_ ? 1 : 0);
  out << buf;
  for (const auto& h : harmonics_) {
    std::snprintf(buf, sizeof buf, " h=%.17g,%.17g", h.x(), h.y());
    out << buf;
  }
  return out.str();
}

double ray_cast_radius_from(const FrameContour& contour, const Vec2& origin, double angle_rad) {
  const Vec2 u(std::cos(angle_rad), std::sin(angle_rad));
  auto g = [&](double r) { return contour.implicit_residual(origin + r * u); };
  if (g(0.0) > 0.0) fail(ErrorCode::kNotStarShaped, "ray origin lies outside the contour");

  const double r_max = origin.norm() + 1.05 * contour.max_polar_radius() + 1.0;
  const int steps = static_cast<int>(std::ceil(r_max / kScanStepMm));
  double lo = -1.0, hi = -1.0;
  int crossings = 0;
  bool inside = true;
  double prev = 0.0;
  for (int i = 1; i <= steps; ++i) {
    const double r = r_max * i / steps;
    const bool now_inside = g(r) <= 0.0;
    if (now_inside != inside) {
      ++crossings;
      if (crossings == 1) {
        lo = prev;
        hi = r;
      }
      inside = now_inside;
    }
    prev = r;
  }
  if (crossings != 1) fail(ErrorCode::kNotStarShaped, "ray crosses the contour " + std::to_string(crossings) + " times");

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double ray_cast_radius(const FrameContour& contour, double angle_rad) {
  return ray_cast_radius_from(contour, contour.center_2d(), angle_rad);
}

std::vector<double> ray_cast_trace(const FrameContour& contour, int n_points, double angle0_rad) {
  std::vector<double> r(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) r[i] = ray_cast_radius(contour, angle0_rad + kTwoPi * i / n_points);
  return r;
}

}  // namespace tforge
