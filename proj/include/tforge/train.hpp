#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tforge/fusion_model.hpp"
#include "tforge/synthgen.hpp"

namespace tforge {

enum class LossKind { kMse, kL1 };

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 200;
  std::uint64_t seed = 42;
  LossKind loss = LossKind::kMse;
  bool freeze_encoder = false;
  bool augment = false;
  AugmentationConfig augmentation{};

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;    // mean per-sample loss over the epoch
  double val_mean_mm = 0.0;   // mean abs radius error, validation split (or train if none)
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_mean_mm = 0.0;
};

struct TrainResult {
  FusionModel model;  // best-validation parameters
  TrainHistory history;
};

/// Fresh model whose normalizer and channel statistics are fit on `train`.
FusionModel make_model(ModelSize size, Modality modality, FusionStrategy strategy,
                       std::span<const MultiViewSample* const> train, std::uint64_t seed, int downsample = 4);

/// Mini-batch Adam on the per-sample loss, averaged over each batch. The
/// shuffle order and augmentation draws derive from cfg.seed only, and
/// gradients are accumulated in a fixed order, so runs are repeatable bit
/// for bit. The returned model holds the parameters of the epoch with the
/// lowest validation error (training error when `val` is empty). Throws
/// DivergenceDetected on a non-finite loss.
TrainResult train(FusionModel model, std::span<const MultiViewSample* const> train,
                  std::span<const MultiViewSample* const> val, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean absolute radius error in mm over `samples`.
double mean_error_mm(const FusionModel& model, std::span<const ViewInputs> inputs,
                     std::span<const MultiViewSample* const> samples);

}  // namespace tforge
