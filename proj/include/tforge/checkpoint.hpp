#pragma once

#include <filesystem>
#include <string>

#include "tforge/fusion_model.hpp"

namespace tforge {

/// Binary model file (.tfck), little-endian:
///   "TFCK" u32 version(1)
///   str modality, u32 downsample, str size tag, str fusion tag
///   u32 in_channels, u32 head_hidden, u32 n_stages,
///     n_stages x (u32 kernel, u32 stride, u32 channels, u32 act)
///   f64 normalizer mean, f64 normalizer std
///   u32 n_channels, n_channels x f64 mean, n_channels x f64 std
///   u32 n_tensors, per tensor: str name, u32 rank, rank x u32 dims
///   u64 n_scalars, n_scalars x f64 parameter values in tensor order
/// where str is a u32 byte length followed by the bytes.
std::string encode_checkpoint(const FusionModel& model);
FusionModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tforge
