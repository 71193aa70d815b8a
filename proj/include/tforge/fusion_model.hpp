#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tforge/inputs.hpp"
#include "tforge/tape.hpp"
#include "tforge/trace.hpp"

namespace tforge {

enum class Nonlinearity { kSwish };

struct ConvStage {
  int kernel = 3;
  int stride = 2;
  int channels = 16;
  Nonlinearity act = Nonlinearity::kSwish;
  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

/// Shared per-view encoder followed by global average pooling; the pooled
/// width is the last stage's channel count.
struct EncoderSpec {
  int in_channels = 2;
  std::vector<ConvStage> stages;
  int head_hidden = 256;

  int feature_dim() const { return stages.empty() ? 0 : stages.back().channels; }
  /// Throws InvalidArgument (needs >= 2 stages, feature_dim >= 64).
  void validate() const;
  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

enum class ModelSize { kS, kM, kL };
std::string to_string(ModelSize s);
ModelSize parse_model_size(const std::string& s);
double width_multiplier(ModelSize s);

/// 5 stride-2 3x3 stages, channels 16-32-64-96-128 times the size's width
/// multiplier.
EncoderSpec encoder_spec(ModelSize size, int in_channels);

enum class FusionStage { kEarly, kLate };
enum class Combiner { kMaxPool, kLearned };

struct FusionStrategy {
  FusionStage stage = FusionStage::kLate;
  Combiner combiner = Combiner::kMaxPool;

  /// early_max, early_learned, late_max, late_learned
  std::string tag() const;
  static FusionStrategy parse(const std::string& tag);
  static std::vector<FusionStrategy> all();
  friend bool operator==(const FusionStrategy&, const FusionStrategy&) = default;
};

/// Encoder, fusion and head weights plus the preprocessing they were
/// trained with. Early fusion combines the four views' feature maps after
/// the penultimate stage; late fusion combines pooled feature vectors.
class FusionModel {
 public:
  static constexpr int kOutputs = RadialTrace::kPoints;

  FusionModel() = default;
  /// Fan-in scaled uniform weights (bound sqrt(6 / fan_in)), zero biases.
  FusionModel(EncoderSpec spec, FusionStrategy strategy, std::uint64_t seed);

  /// Records the forward graph on `tape`; returns the [600] output node.
  /// Parameter gradients accumulate into params() on backward.
  Tape::Id forward(Tape& tape, const ViewInputs& inputs);
  /// Normalized outputs without gradient bookkeeping.
  std::vector<double> infer(const ViewInputs& inputs) const;

  /// Output of one view through the same encoder and head with the fusion
  /// step skipped.
  std::vector<double> single_view(const InputTensor& input) const;

  const EncoderSpec& spec() const { return spec_; }
  const FusionStrategy& strategy() const { return strategy_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  InputSpec input;
  ChannelStats stats;
  TraceNormalizer normalizer;
  std::string size_tag = "S";

 private:
  template <typename Bind>
  Tape::Id build(Tape& tape, const ViewInputs& inputs, Bind&& bind) const;
  Tape::Id encode(Tape& tape, Tape::Id x, const std::vector<Tape::Id>& w, int first, int last) const;

  EncoderSpec spec_;
  FusionStrategy strategy_;
  ParamStore params_;
};

/// Mean squared error between `pred` and the normalized target.
double trace_loss(std::span<const double> pred, const RadialTrace& target, const TraceNormalizer& norm);

/// Forward + denormalize. Radii outside (0, 100) mm are flagged
/// kOutOfRange, not clamped.
RadialTrace predict_trace(const FusionModel& model, const MultiViewSample& sample);
RadialTrace predict_trace(const FusionModel& model, const ViewInputs& inputs, Eye eye);

}  // namespace tforge
