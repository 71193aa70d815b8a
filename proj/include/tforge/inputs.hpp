#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "tforge/synthgen.hpp"

namespace tforge {

enum class Modality { kRgbNoseg, kGrayDepth, kRgbDepth };
std::string to_string(Modality m);
Modality parse_modality(const std::string& s);
int channel_count(Modality m);
bool uses_mask(Modality m);

/// Per-channel standardization statistics, fit on the training split.
/// Masked modalities are fit on mask pixels only.
struct ChannelStats {
  Modality modality = Modality::kGrayDepth;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Network input geometry: full-resolution crops are area-averaged by
/// `downsample` before entering the encoder.
struct InputSpec {
  Modality modality = Modality::kGrayDepth;
  int downsample = 4;
};

struct InputTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // [C, H, W]
  Modality modality = Modality::kGrayDepth;
  bool mask_applied = false;
};

using ViewInputs = std::array<InputTensor, 4>;

/// Raw channel planes of one view before standardization: gray is Rec. 601
/// luma, depth is divided by 255.
std::vector<ImageF> raw_channels(const View& view, Modality m);

ChannelStats fit_channel_stats(std::span<const MultiViewSample* const> train, Modality m);

/// Builds the four per-view tensors. For masked modalities each channel is
/// standardized and then zeroed outside the mask, so background pixels have
/// no influence. Throws ModalityMismatch when the sample lacks the colour
/// channels the modality needs. `degenerate` (optional) is set when some
/// view has an empty mask.
ViewInputs build_input(const MultiViewSample& sample, const InputSpec& spec, const ChannelStats& stats,
                       bool* degenerate = nullptr);

}  // namespace tforge
