#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tforge/geometry.hpp"
#include "tforge/image.hpp"

namespace tforge {

enum class Eye { kLeft, kRight };

std::string to_string(Eye eye);
Eye parse_eye(const std::string& s);

/// Per-point markers carried alongside the radii.
enum PointFlag : std::uint8_t {
  kPointOk = 0,
  kOccludedAngle = 1,  // fewer than two views saw the edge; value interpolated
  kOutOfRange = 2,     // radius non-finite, non-positive or >= 100 mm
};

/// Which point of the aperture the radii are measured from.
enum class TraceCenter { kBoxing, kCentroid };

/// Frame trace: radii in mm at uniform angles, counterclockwise (as seen
/// from the cameras) from angle0, index 0 nominally along +in_plane_x.
struct RadialTrace {
  static constexpr int kPoints = 600;
  static constexpr double kMaxRadiusMm = 100.0;

  std::vector<double> radii_mm;
  double angle0_rad = 0.0;
  Vec2 center_2d = Vec2::Zero();
  Eye eye = Eye::kRight;
  std::vector<std::uint8_t> flags;

  RadialTrace() = default;
  RadialTrace(std::vector<double> radii, Eye e, double angle0 = 0.0);

  int size() const { return static_cast<int>(radii_mm.size()); }
  double angle(int i) const;
  double angle_step() const;

  /// Throws CountMismatch / InvalidArgument on invariant violations.
  void validate() const;
  /// Marks points violating the radius bounds with kOutOfRange; returns the
  /// number of violations. Values are left untouched.
  int flag_out_of_range();
  bool any_flag(std::uint8_t f) const;
};

struct TraceNormalizer {
  double mean_mm = 0.0;
  double std_mm = 1.0;
};

std::vector<double> normalize(const RadialTrace& trace, const TraceNormalizer& norm);
std::vector<double> denormalize(std::span<const double> values, const TraceNormalizer& norm);
/// Population mean and standard deviation over every radius of every trace.
TraceNormalizer fit_normalizer(std::span<const RadialTrace> traces);

/// Text layout: "TFTRACE 1", "eye <left|right>", "angle0_urad <int>", then one
/// integer per line holding the radius in hundredths of a millimetre.
/// UTF-8, LF line endings.
std::string format_trace(const RadialTrace& trace);
RadialTrace parse_trace(const std::string& text);
void write_trace(const RadialTrace& trace, const std::filesystem::path& path);
RadialTrace read_trace(const std::filesystem::path& path);

struct TraceErrorReport {
  double min_mm = 0.0;
  double max_mm = 0.0;
  double mean_mm = 0.0;
  double median_mm = 0.0;
  double frac_under_1mm = 0.0;
  std::vector<double> per_point_abs_err;
  friend bool operator==(const TraceErrorReport&, const TraceErrorReport&) = default;
};

TraceErrorReport trace_error(const RadialTrace& pred, const RadialTrace& truth);

/// Aggregates from absolute errors; median averages the two middle values
/// for even counts.
TraceErrorReport summarize_errors(std::vector<double> abs_errors);

/// Test-split statistics under both readings of a per-cell summary: pooled
/// over every per-point error, and over per-sample mean errors.
struct PooledErrors {
  TraceErrorReport pooled;  // per_point_abs_err left empty
  double mean_of_sample_means = 0.0;
  double median_of_sample_means = 0.0;
  std::size_t n_points = 0;
  std::size_t n_under_1mm = 0;
  friend bool operator==(const PooledErrors&, const PooledErrors&) = default;
};

PooledErrors pool_errors(std::span<const TraceErrorReport> per_sample);

double mask_iou(const Mask& a, const Mask& b);

/// Radii resampled after rotating the underlying contour by `angle_rad`
/// counterclockwise about the trace center (periodic cubic interpolation).
/// Multiples of the angular step reduce to exact circular shifts.
RadialTrace rotate_trace(const RadialTrace& trace, double angle_rad);

}  // namespace tforge
