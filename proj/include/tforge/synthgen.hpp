#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tforge/contour.hpp"
#include "tforge/geometry.hpp"
#include "tforge/image.hpp"
#include "tforge/trace.hpp"

namespace tforge {

// ---------------------------------------------------------------------------
// Samples

/// One camera's view of one eye.
struct View {
  std::vector<ImageF> image;  // C planes (1 grey or 3 RGB), values in [0, 1]
  ImageF depth;               // relative depth in [0, 255], closer = higher
  Mask mask;                  // frame rim segmentation

  int width() const { return mask.width; }
  int height() const { return mask.height; }
  int channels() const { return static_cast<int>(image.size()); }
  friend bool operator==(const View&, const View&) = default;
};

struct MultiViewSample {
  std::array<View, 4> views;
  RadialTrace truth;
  Eye eye = Eye::kRight;
  std::string sample_id;
  std::uint64_t rng_seed = 0;
  /// Cameras restricted to the crop windows; no longer exact once a
  /// geometric augmentation has been applied.
  CameraRig rig;
  double mm_per_px = 0.0;

  /// Throws InvalidArgument on broken invariants (shared view dimensions,
  /// depth ordering, single connected mask, trace validity).
  void validate() const;
};

/// Renderer-side depth bands; only the [0, 255] range and the ordering are
/// contractual.
struct DepthBands {
  double frame_lo = 180.0;
  double frame_hi = 255.0;
  double background_lo = 0.0;
  double background_hi = 120.0;
};

// ---------------------------------------------------------------------------
// Contours and scenes

struct ContourSamplerConfig {
  // Relative weights of circle, ellipse, superellipse, fourier.
  std::array<double, 4> family_weights{0.1, 0.3, 0.3, 0.3};
  double semi_a_min = 18.0, semi_a_max = 30.0;
  double semi_b_min = 12.0, semi_b_max = 26.0;
  double exponent_min = 2.5, exponent_max = 5.0;
  double max_fourier_amplitude = 0.10;
  double max_rotation_rad = 0.12;
  FramePlane plane{};
};

/// Draws one contour. Candidates failing validation are redrawn; after 100
/// rejections throws GenerationFailed.
FrameContour sample_contour(std::uint64_t rng_seed, const ContourSamplerConfig& cfg = {});

struct EyeFrame {
  FrameContour contour;  // plane origin = eye position in the world
  Eye eye = Eye::kRight;
};

struct SceneConfig {
  ContourSamplerConfig contour{};
  double rim_width_min_mm = 2.0, rim_width_max_mm = 6.0;
  double bridge_min_mm = 14.0, bridge_max_mm = 22.0;
  double max_pantoscopic_tilt_deg = 8.0;  // about world x
  double max_yaw_deg = 4.0;               // about world y
  double max_depth_jitter_mm = 20.0;
  double face_offset_mm = 18.0;           // face plane behind the frame plane
  double nose_overlap_probability = 0.3;
  TraceCenter trace_center = TraceCenter::kBoxing;
  /// Eye separation is widened until per-eye crops of this size cannot
  /// overlap in any view.
  int crop_size_px = 256;
};

/// A two-eye (or, for render_views, one-eye) capture description. Every
/// rendered pixel is a pure function of this struct, the camera and the
/// pixel position.
struct Scene {
  std::vector<EyeFrame> eyes;
  double rim_width_mm = 4.0;
  FramePlane face_plane;
  std::array<double, 3> rim_rgb{0.1, 0.1, 0.1};
  std::array<double, 3> skin_rgb{0.8, 0.6, 0.5};
  double light_angle_rad = 1.0;
  bool nose_overlap = false;
  std::uint64_t texture_seed = 0;
  DepthBands depth_bands{};
  TraceCenter trace_center = TraceCenter::kBoxing;
};

Scene sample_scene(std::uint64_t rng_seed, const CameraRig& rig, const SceneConfig& cfg = {});

// ---------------------------------------------------------------------------
// Rendering

struct RenderConfig {
  int crop_size = 256;
  int crop_margin = 8;
  int channels = 3;
};

/// Renders a single-eye scene built around `contour` (whose plane must face
/// the rig) into per-eye crops. Throws OutOfFrustum if the rim leaves any
/// view's image or crop window.
MultiViewSample render_views(const FrameContour& contour, const CameraRig& rig, const RenderConfig& cfg = {},
                             Eye eye = Eye::kRight, double rim_width_mm = 4.0);

/// Full-frame renders of a scene in every camera.
struct FullCapture {
  Scene scene;
  CameraRig rig;
  std::array<View, 4> views;
  std::uint64_t rng_seed = 0;
};

FullCapture render_capture(const Scene& scene, const CameraRig& rig, int channels = 3, std::uint64_t rng_seed = 0);

/// Per-eye crops (left, right) of a full capture. Throws OverlapError if the
/// two crop windows intersect in any view.
std::pair<MultiViewSample, MultiViewSample> split_eyes(const FullCapture& capture, const RenderConfig& cfg = {});

/// Renders exactly the pixels split_eyes would cut out, without rendering
/// the full frames.
std::pair<MultiViewSample, MultiViewSample> render_eye_pair(const Scene& scene, const CameraRig& rig,
                                                            const RenderConfig& cfg = {},
                                                            std::uint64_t rng_seed = 0);

/// Ground-truth trace of an eye frame, computed from geometry.
RadialTrace truth_trace(const EyeFrame& frame, TraceCenter center = TraceCenter::kBoxing);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentationConfig {
  double p_geometric = 0.5;
  double max_rotation_deg = 10.0;
  double max_translation_frac = 0.04;
  double scale_min = 0.9, scale_max = 1.1;
  double p_noise = 0.3;
  double max_noise_sigma = 0.03;
  double p_color = 0.3;
  double gain_min = 0.8, gain_max = 1.2;
  double max_bias = 0.1;
  double p_blur = 0.3;
  double max_blur_sigma_px = 1.5;
  double p_sharpness = 0.3;
  double max_sharpness = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  static AugmentationConfig disabled();
  friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

/// Similarity applied to all four views about each crop center: rotation
/// counterclockwise as seen by the camera, isotropic scale, translation in
/// pixels. The trace is rotated and scaled to match.
struct GeometricTransform {
  double rotation_rad = 0.0;
  double scale = 1.0;
  double tx_px = 0.0;
  double ty_px = 0.0;
};

MultiViewSample apply_geometric(const MultiViewSample& sample, const GeometricTransform& g);

MultiViewSample augment(const MultiViewSample& sample, const AugmentationConfig& cfg, std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Dataset container

enum class Split { kTrain, kVal, kTest };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string sample_id;
  Split split = Split::kTrain;
  Eye eye = Eye::kRight;
  int scene_index = 0;
  std::string blob_path;   // relative to the dataset directory
  std::string trace_path;
  std::string rig_path;
};

struct Manifest {
  int format_version = 1;
  std::uint64_t seed = 0;
  int n_scenes = 0;
  int crop_size = 256;
  int channels = 3;
  double mm_per_px = 0.0;
  double working_distance_mm = 500.0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(Split s) const;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);
Manifest read_manifest(const std::filesystem::path& dataset_dir);

struct DatasetConfig {
  SceneConfig scene{};
  RenderConfig render{};
  RigLayout rig{};
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  int jobs = 1;
};

/// Generates n_scenes two-eye captures (2 * n_scenes per-eye samples) under
/// `out_dir`. Output bytes are a pure function of (n_scenes, seed, cfg).
Manifest build_dataset(int n_scenes, std::uint64_t seed, const std::filesystem::path& out_dir,
                       const DatasetConfig& cfg = {});

/// Binary sample blob: "TFSMPL01", u32 version, u32 views, u32 height,
/// u32 width, u32 channels, u8 encoding (0 = u8 /255 image and integer
/// depth, 1 = f32), u8 eye, u16 reserved, u64 rng_seed, u32 id length,
/// id bytes, then per view the image planes, the depth plane and the mask
/// plane (always u8), row-major, little-endian.
void write_sample_blob(const MultiViewSample& sample, const std::filesystem::path& path);
MultiViewSample read_sample_blob(const std::filesystem::path& path);

/// Loads blob, truth trace and crop rig of one manifest entry.
MultiViewSample load_sample(const std::filesystem::path& dataset_dir, const ManifestEntry& entry);

/// Writes one view's mask as a binary PGM (P5, 0/255).
void write_mask_pgm(const Mask& mask, const std::filesystem::path& path);
Mask read_mask_pgm(const std::filesystem::path& path);

}  // namespace tforge
