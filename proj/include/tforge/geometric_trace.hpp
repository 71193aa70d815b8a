#pragma once

#include <array>
#include <vector>

#include "tforge/geometry.hpp"
#include "tforge/image.hpp"
#include "tforge/trace.hpp"

namespace tforge {

using ViewMasks = std::array<Mask, 4>;

struct PlaneFit {
  FramePlane plane;            // origin = triangulated aperture center
  double residual_rms_mm = 0;  // multi-view disagreement after refinement
  int n_edge_points = 0;
};

/// Frame plane from four segmentation masks. The aperture center is
/// triangulated from the mask centroids; the plane is then refined so the
/// inner mask edges of all views, backprojected onto it, agree on one
/// curve in the least-squares sense. Throws DegenerateGeometry on empty
/// masks or collinear edge evidence.
PlaneFit fit_frame_plane(const ViewMasks& masks, const CameraRig& rig);

struct GeometricTraceOptions {
  int n_points = RadialTrace::kPoints;
  int harmonics = 16;                 // per-view Fourier order of r(theta)
  double visibility_window_deg = 2.5; // edge evidence needed within this window
  TraceCenter center = TraceCenter::kBoxing;
  Eye eye = Eye::kRight;
};

struct GeometricTraceResult {
  RadialTrace trace;
  PlaneFit plane_fit;
  std::array<int, 4> edge_points_per_view{};
  int occluded_points = 0;
};

/// Classical multi-view trace: inner mask edges of each view are
/// backprojected onto the fitted plane, each view's edge is smoothed by a
/// least-squares Fourier series in the polar angle, visible views are
/// averaged per angle, and the radii are re-centered on the requested
/// center. Angles seen by fewer than two views carry kOccludedAngle and are
/// filled by circular interpolation.
GeometricTraceResult geometric_trace(const ViewMasks& masks, const CameraRig& rig,
                                     const GeometricTraceOptions& options = {});

/// Inner-edge samples of one mask: midpoints between a background pixel and
/// a mask pixel where the step into the mask points away from
/// `center_px`. Exposed for tests and diagnostics.
std::vector<Vec2> inner_edge_samples(const Mask& mask, const Vec2& center_px);

}  // namespace tforge
