#include "tforge/geometric_trace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "tforge/error.hpp"

namespace tforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPlaneFitHarmonics = 12;

Vec2 mask_centroid(const Mask& m) {
  double sx = 0.0, sy = 0.0;
  size_t n = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) fail(ErrorCode::kDegenerateGeometry, "empty mask");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

// Least-squares point closest to a bundle of rays.
Vec3 triangulate(const std::array<Ray, 4>& rays) {
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const auto& r : rays) {
    const Mat3 p = Mat3::Identity() - r.direction * r.direction.transpose();
    a += p;
    b += p * r.origin;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  if (es.eigenvalues().minCoeff() < 1e-8) fail(ErrorCode::kDegenerateGeometry, "rays are parallel");
  return a.ldlt().solve(b);
}

struct PolarSample {
  double theta;
  double r;
};

std::vector<PolarSample> to_polar(const std::vector<Vec2>& pts, const Vec2& c) {
  std::vector<PolarSample> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    const Vec2 d = p - c;
    out.push_back({std::atan2(d.y(), d.x()), d.norm()});
  }
  return out;
}

// Least-squares Fourier series r(theta) = a0 + sum_k a_k cos k theta + b_k sin k theta.
// A tiny ridge on the harmonics keeps the system solvable across gaps.
Eigen::VectorXd fit_fourier(const std::vector<PolarSample>& s, int order, double ridge) {
  const int m = 2 * order + 1;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd row(m);
  for (const auto& p : s) {
    row[0] = 1.0;
    for (int k = 1; k <= order; ++k) {
      row[2 * k - 1] = std::cos(k * p.theta);
      row[2 * k] = std::sin(k * p.theta);
    }
    ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
    atb += p.r * row;
  }
  ata = ata.selfadjointView<Eigen::Lower>();
  for (int i = 1; i < m; ++i) ata(i, i) += ridge * static_cast<double>(s.size());
  return ata.ldlt().solve(atb);
}

double eval_fourier(const Eigen::VectorXd& coef, double theta) {
  const int order = static_cast<int>(coef.size() - 1) / 2;
  double r = coef[0];
  for (int k = 1; k <= order; ++k) r += coef[2 * k - 1] * std::cos(k * theta) + coef[2 * k] * std::sin(k * theta);
  return r;
}

struct ViewEdges {
  std::vector<Ray> rays;
};

std::array<ViewEdges, 4> collect_edges(const ViewMasks& masks, const CameraRig& rig, const Vec3& center_world) {
  std::array<ViewEdges, 4> out;
  for (size_t v = 0; v < 4; ++v) {
    Vec2 c_px;
    try {
      c_px = project(rig.cameras[v], center_world);
    } catch (const Error&) {
      fail(ErrorCode::kDegenerateGeometry, "aperture center behind camera " + std::to_string(v));
    }
    for (const auto& px : inner_edge_samples(masks[v], c_px)) out[v].rays.push_back(backproject_ray(rig.cameras[v], px));
  }
  return out;
}

std::vector<Vec2> rays_on_plane(const std::vector<Ray>& rays, const FramePlane& plane) {
  std::vector<Vec2> pts;
  pts.reserve(rays.size());
  for (const auto& r : rays)
    if (const auto t = plane.intersect(r)) pts.push_back(plane.to_plane(r.origin + *t * r.direction));
  return pts;
}

struct PlaneParams {
  Vec3 p0;
  Vec3 n0;
  Vec3 e1;
  Vec3 e2;

  FramePlane plane(const Eigen::Vector3d& x) const {
    const Vec3 n = (n0 + x[0] * e1 + x[1] * e2).normalized();
    return FramePlane::from_normal(p0 + x[2] * n0, n);
  }
};

Eigen::VectorXd consistency_residuals(const std::array<ViewEdges, 4>& edges, const FramePlane& plane) {
  std::vector<PolarSample> all;
  for (const auto& v : edges) {
    auto s = to_polar(rays_on_plane(v.rays, plane), Vec2::Zero());
    all.insert(all.end(), s.begin(), s.end());
  }
  const Eigen::VectorXd coef = fit_fourier(all, kPlaneFitHarmonics, 0.0);
  size_t total = 0;
  for (const auto& v : edges) total += v.rays.size();
  Eigen::VectorXd res = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(total), 1e3);
  for (size_t i = 0; i < all.size(); ++i) res[static_cast<Eigen::Index>(i)] = all[i].r - eval_fourier(coef, all[i].theta);
  return res;
}

std::array<size_t, 4> canonical_view_order(const CameraRig& rig) {
  std::array<size_t, 4> idx = {0, 1, 2, 3};
  auto key = [&](size_t i) {
    const auto& c = rig.cameras[i];
    std::array<double, 13> k;
    const Vec3 ctr = c.center();
    k[0] = ctr.x();
    k[1] = ctr.y();
    k[2] = ctr.z();
    for (int j = 0; j < 9; ++j) k[3 + j] = c.rotation(j / 3, j % 3);
    k[12] = c.focal_px;
    return k;
  };
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return key(a) < key(b); });
  return idx;
}

}  // namespace

std::vector<Vec2> inner_edge_samples(const Mask& mask, const Vec2& center_px) {
  std::vector<Vec2> out;
  constexpr int kSteps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) continue;
      for (const auto& s : kSteps) {
        const int qx = x + s[0], qy = y + s[1];
        if (!mask.contains(qx, qy) || !mask.at(qx, qy)) continue;
        const Vec2 mid(x + 0.5 * s[0], y + 0.5 * s[1]);
        const Vec2 radial = mid - center_px;
        const double len = radial.norm();
        if (len < 1e-9) continue;
        if ((s[0] * radial.x() + s[1] * radial.y()) / len > 0.5) out.push_back(mid);
      }
    }
  return out;
}

PlaneFit fit_frame_plane(const ViewMasks& masks, const CameraRig& rig) {
  std::array<Ray, 4> centroid_rays;
  for (size_t v = 0; v < 4; ++v) {
    if (masks[v].empty()) fail(ErrorCode::kDegenerateGeometry, "mask " + std::to_string(v) + " is empty");
    centroid_rays[v] = backproject_ray(rig.cameras[v], mask_centroid(masks[v]));
  }
  PlaneParams pp;
  pp.p0 = triangulate(centroid_rays);
  Vec3 mean_center = Vec3::Zero();
  for (const auto& c : rig.cameras) mean_center += c.center() / 4.0;
  pp.n0 = (mean_center - pp.p0).normalized();
  pp.e1 = pp.n0.unitOrthogonal();
  pp.e2 = pp.n0.cross(pp.e1);

  const auto edges = collect_edges(masks, rig, pp.p0);
  int n_edges = 0;
  for (const auto& v : edges) n_edges += static_cast<int>(v.rays.size());
  if (n_edges < 4 * (2 * kPlaneFitHarmonics + 1))
    fail(ErrorCode::kDegenerateGeometry, "too few inner-edge samples (" + std::to_string(n_edges) + ")");

  {
    // Edge evidence spread along a line cannot pin down a plane.
    const auto pts = rays_on_plane(edges[0].rays, pp.plane(Eigen::Vector3d::Zero()));
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    Vec2 mean = Vec2::Zero();
    for (const auto& p : pts) mean += p;
    mean /= std::max<size_t>(pts.size(), 1);
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (pts.size() < 3 || es.eigenvalues()[0] < 1e-6 * es.eigenvalues()[1])
      fail(ErrorCode::kDegenerateGeometry, "edge samples are collinear");
  }

  // Levenberg-Marquardt over (tilt_1, tilt_2, offset) with a central
  // difference Jacobian.
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  const Eigen::Vector3d h(1e-6, 1e-6, 1e-4);
  Eigen::VectorXd r = consistency_residuals(edges, pp.plane(x));
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < 60; ++it) {
    Eigen::MatrixXd j(r.size(), 3);
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d xp = x, xm = x;
      xp[k] += h[k];
      xm[k] -= h[k];
      j.col(k) = (consistency_residuals(edges, pp.plane(xp)) - consistency_residuals(edges, pp.plane(xm))) / (2 * h[k]);
    }
    const Eigen::Matrix3d jtj = j.transpose() * j;
    const Eigen::Vector3d g = j.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 10; ++tries) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() *= 1.0 + lambda;
      const Eigen::Vector3d step = a.ldlt().solve(-g);
      const Eigen::Vector3d xn = x + step;
      const Eigen::VectorXd rn = consistency_residuals(edges, pp.plane(xn));
      const double cn = rn.squaredNorm();
      if (cn < cost) {
        const bool converged = (cost - cn) < 1e-12 * cost || step.cwiseQuotient(h).cwiseAbs().maxCoeff() < 1e-2;
        x = xn;
        r = rn;
        cost = cn;
        lambda = std::max(lambda / 10.0, 1e-9);
        improved = true;
        if (converged) it = 1000;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  PlaneFit fit;
  fit.plane = pp.plane(x);
  fit.residual_rms_mm = std::sqrt(cost / static_cast<double>(r.size()));
  fit.n_edge_points = n_edges;
  return fit;
}

GeometricTraceResult geometric_trace(const ViewMasks& input_masks, const CameraRig& input_rig,
                                     const GeometricTraceOptions& options) {
  if (options.n_points < 8) fail(ErrorCode::kInvalidArgument, "n_points must be at least 8");
  // Views are processed in a canonical camera order so that the floating
  // point result does not depend on how the caller numbered the cameras.
  const auto order_idx = canonical_view_order(input_rig);
  ViewMasks masks;
  CameraRig rig = input_rig;
  for (size_t v = 0; v < 4; ++v) {
    masks[v] = input_masks[order_idx[v]];
    rig.cameras[v] = input_rig.cameras[order_idx[v]];
  }
  GeometricTraceResult result;
  result.plane_fit = fit_frame_plane(masks, rig);
  const FramePlane& plane = result.plane_fit.plane;

  const auto edges = collect_edges(masks, rig, plane.origin);
  std::array<std::vector<Vec2>, 4> pts;
  for (size_t v = 0; v < 4; ++v) {
    pts[v] = rays_on_plane(edges[v].rays, plane);
    result.edge_points_per_view[order_idx[v]] = static_cast<int>(pts[v].size());
  }

  const int n = options.n_points;
  const int order = options.harmonics;
  const double window = options.visibility_window_deg * std::numbers::pi / 180.0;
  std::vector<double> radii(static_cast<size_t>(n));
  std::vector<std::uint8_t> flags(static_cast<size_t>(n));
  Vec2 center = Vec2::Zero();
  Vec2 radii_center = center;

  for (int iter = 0; iter < 8; ++iter) {
    std::vector<double> sum(static_cast<size_t>(n), 0.0);
    std::vector<int> seen(static_cast<size_t>(n), 0);
    for (size_t v = 0; v < 4; ++v) {
      if (pts[v].size() < static_cast<size_t>(4 * (2 * order + 1))) continue;
      const auto polar = to_polar(pts[v], center);
      const Eigen::VectorXd coef = fit_fourier(polar, order, 1e-9);
      // Angular coverage histogram at the output resolution.
      std::vector<char> covered(static_cast<size_t>(n), 0);
      const int reach = static_cast<int>(std::ceil(window / (kTwoPi / n)));
      for (const auto& s : polar) {
        double a = s.theta < 0 ? s.theta + kTwoPi : s.theta;
        const int k0 = static_cast<int>(std::lround(a / (kTwoPi / n)));
        for (int d = -reach; d <= reach; ++d) {
          const int k = ((k0 + d) % n + n) % n;
          double diff = std::remainder(a - kTwoPi * k / n, kTwoPi);
          if (std::abs(diff) <= window) covered[k] = 1;
        }
      }
      for (int k = 0; k < n; ++k)
        if (covered[k]) {
          sum[k] += eval_fourier(coef, kTwoPi * k / n);
          ++seen[k];
        }
    }

    int occluded = 0;
    for (int k = 0; k < n; ++k) {
      flags[k] = seen[k] >= 2 ? kPointOk : kOccludedAngle;
      occluded += seen[k] < 2;
      radii[k] = seen[k] > 0 ? sum[k] / seen[k] : 0.0;
    }
    if (occluded == n) fail(ErrorCode::kDegenerateGeometry, "no angle is seen by two views");
    // Circular linear interpolation across occluded runs.
    for (int k = 0; k < n; ++k) {
      if (flags[k] == kPointOk) continue;
      int lo = k, hi = k, dl = 0, dh = 0;
      while (flags[(lo % n + n) % n] != kPointOk) {
        --lo;
        ++dl;
      }
      while (flags[hi % n] != kPointOk) {
        ++hi;
        ++dh;
      }
      const double rl = radii[(lo % n + n) % n], rh = radii[hi % n];
      radii[k] = rl + (rh - rl) * dl / static_cast<double>(dl + dh);
    }
    result.occluded_points = occluded;

    // Re-center on the requested center of the current estimate.
    Vec2 offset = Vec2::Zero();
    if (options.center == TraceCenter::kBoxing) {
      double ext[4];
      for (int e = 0; e < 4; ++e) {
        auto val = [&](int k) {
          const int kk = (k % n + n) % n;
          const double a = kTwoPi * kk / n;
          const double c = e < 2 ? std::cos(a) : std::sin(a);
          return (e % 2 == 0 ? 1.0 : -1.0) * radii[kk] * c;
        };
        int best = 0;
        for (int k = 1; k < n; ++k)
          if (val(k) > val(best)) best = k;
        const double y0 = val(best - 1), y1 = val(best), y2 = val(best + 1);
        const double den = y0 - 2.0 * y1 + y2;
        ext[e] = den < 0.0 ? y1 - 0.125 * (y2 - y0) * (y2 - y0) / den : y1;
      }
      offset = Vec2(0.5 * (ext[0] - ext[1]), 0.5 * (ext[2] - ext[3]));
    } else {
      double area = 0.0;
      Vec2 m = Vec2::Zero();
      for (int k = 0; k < n; ++k) {
        const double a = kTwoPi * k / n;
        const double r = radii[k];
        area += 0.5 * r * r;
        m += (r * r * r / 3.0) * Vec2(std::cos(a), std::sin(a));
      }
      offset = m / area;
    }
    radii_center = center;
    center += offset;
    if (offset.norm() < 1e-7) break;
  }

  result.trace = RadialTrace(std::move(radii), options.eye, 0.0);
  result.trace.flags = std::move(flags);
  result.trace.center_2d = radii_center;
  return result;
}

}  // namespace tforge
