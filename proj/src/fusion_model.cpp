#include "tforge/fusion_model.hpp"

#include <cmath>

#include "tforge/error.hpp"
#include "tforge/rng.hpp"

namespace tforge {

void EncoderSpec::validate() const {
  if (in_channels < 1) fail(ErrorCode::kInvalidArgument, "encoder needs input channels");
  if (stages.size() < 2) fail(ErrorCode::kInvalidArgument, "encoder needs at least two stages");
  for (const auto& s : stages)
    if (s.kernel < 1 || s.kernel % 2 == 0 || s.stride < 1 || s.channels < 1)
      fail(ErrorCode::kInvalidArgument, "bad encoder stage");
  if (feature_dim() < 64) fail(ErrorCode::kInvalidArgument, "encoder feature dimension must be >= 64");
  if (head_hidden < 1) fail(ErrorCode::kInvalidArgument, "head width must be positive");
}

std::string to_string(ModelSize s) {
  switch (s) {
    case ModelSize::kS: return "S";
    case ModelSize::kM: return "M";
    case ModelSize::kL: return "L";
  }
  return "S";
}

ModelSize parse_model_size(const std::string& s) {
  if (s == "S" || s == "s") return ModelSize::kS;
  if (s == "M" || s == "m") return ModelSize::kM;
  if (s == "L" || s == "l") return ModelSize::kL;
  fail(ErrorCode::kInvalidArgument, "unknown model size '" + s + "' (S, M, L)");
}

double width_multiplier(ModelSize s) {
  switch (s) {
    case ModelSize::kS: return 1.0;
    case ModelSize::kM: return 1.5;
    case ModelSize::kL: return 2.0;
  }
  return 1.0;
}

EncoderSpec encoder_spec(ModelSize size, int in_channels) {
  EncoderSpec spec;
  spec.in_channels = in_channels;
  for (int c : {16, 32, 64, 96, 128})
    spec.stages.push_back({3, 2, static_cast<int>(std::lround(c * width_multiplier(size))), Nonlinearity::kSwish});
  return spec;
}

std::string FusionStrategy::tag() const {
  return std::string(stage == FusionStage::kEarly ? "early" : "late") +
         (combiner == Combiner::kMaxPool ? "_max" : "_learned");
}

FusionStrategy FusionStrategy::parse(const std::string& tag) {
  for (const auto& s : all())
    if (s.tag() == tag) return s;
  fail(ErrorCode::kInvalidArgument, "unknown fusion '" + tag + "' (early_max, early_learned, late_max, late_learned)");
}

std::vector<FusionStrategy> FusionStrategy::all() {
  return {{FusionStage::kEarly, Combiner::kMaxPool},
          {FusionStage::kEarly, Combiner::kLearned},
          {FusionStage::kLate, Combiner::kMaxPool},
          {FusionStage::kLate, Combiner::kLearned}};
}

namespace {

Tensor uniform_init(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / fan_in);
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

FusionModel::FusionModel(EncoderSpec spec, FusionStrategy strategy, std::uint64_t seed)
    : spec_(std::move(spec)), strategy_(strategy) {
  spec_.validate();
  input.modality = Modality::kGrayDepth;
  Rng rng(seed);
  int in = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
    const auto& s = spec_.stages[i];
    const int fan_in = in * s.kernel * s.kernel;
    params_.add("enc." + std::to_string(i) + ".w", uniform_init({s.channels, in, s.kernel, s.kernel}, fan_in, rng));
    params_.add("enc." + std::to_string(i) + ".b", Tensor({s.channels}));
    in = s.channels;
  }
  if (strategy_.combiner == Combiner::kLearned) {
    if (strategy_.stage == FusionStage::kEarly) {
      const int c = spec_.stages[spec_.stages.size() - 2].channels;
      params_.add("fuse.w", uniform_init({c, 4 * c, 1, 1}, 4 * c, rng));
      params_.add("fuse.b", Tensor({c}));
    } else {
      const int d = spec_.feature_dim();
      params_.add("fuse.w", uniform_init({d, 4 * d}, 4 * d, rng));
      params_.add("fuse.b", Tensor({d}));
    }
  }
  const int d = spec_.feature_dim(), h = spec_.head_hidden;
  params_.add("head.0.w", uniform_init({h, d}, d, rng));
  params_.add("head.0.b", Tensor({h}));
  params_.add("head.1.w", uniform_init({kOutputs, h}, h, rng));
  params_.add("head.1.b", Tensor({kOutputs}));
}

// Parameter node ids in store order: stage weights/biases, optional fusion
// weights, head weights.
Tape::Id FusionModel::encode(Tape& tape, Tape::Id x, const std::vector<Tape::Id>& w, int first, int last) const {
  for (int i = first; i < last; ++i) {
    const auto& s = spec_.stages[static_cast<std::size_t>(i)];
    x = tape.conv2d(x, w[2 * i], w[2 * i + 1], s.stride, s.kernel / 2);
    x = tape.swish(x);
  }
  return x;
}

template <typename Bind>
Tape::Id FusionModel::build(Tape& tape, const ViewInputs& inputs, Bind&& bind) const {
  std::vector<Tape::Id> w;
  for (int i = 0; i < params_.count(); ++i) w.push_back(bind(i));
  const int n_stages = static_cast<int>(spec_.stages.size());
  const int fuse = strategy_.combiner == Combiner::kLearned ? 2 * n_stages : -1;
  const int head = 2 * n_stages + (fuse >= 0 ? 2 : 0);

  std::vector<Tape::Id> views;
  for (const auto& in : inputs) {
    if (in.channels != spec_.in_channels || in.data.size() != static_cast<std::size_t>(in.channels) * in.height * in.width)
      fail(ErrorCode::kShapeMismatch, "input tensor does not match the encoder");
    if (in.height != inputs[0].height || in.width != inputs[0].width)
      fail(ErrorCode::kShapeMismatch, "views differ in size");
    Tensor t({in.channels, in.height, in.width});
    t.data = in.data;
    views.push_back(tape.constant(std::move(t)));
  }

  Tape::Id fused;
  if (strategy_.stage == FusionStage::kEarly) {
    for (auto& v : views) v = encode(tape, v, w, 0, n_stages - 1);
    if (strategy_.combiner == Combiner::kMaxPool)
      fused = tape.max_over(views);
    else
      fused = tape.conv2d(tape.concat(views), w[fuse], w[fuse + 1], 1, 0);
    fused = tape.global_avg_pool(encode(tape, fused, w, n_stages - 1, n_stages));
  } else {
    for (auto& v : views) v = tape.global_avg_pool(encode(tape, v, w, 0, n_stages));
    if (strategy_.combiner == Combiner::kMaxPool)
      fused = tape.max_over(views);
    else
      fused = tape.affine(tape.concat(views), w[fuse], w[fuse + 1]);
  }
  const Tape::Id hidden = tape.swish(tape.affine(fused, w[head], w[head + 1]));
  return tape.affine(hidden, w[head + 2], w[head + 3]);
}

Tape::Id FusionModel::forward(Tape& tape, const ViewInputs& inputs) {
  return build(tape, inputs, [&](int i) { return tape.param(params_, i); });
}

std::vector<double> FusionModel::infer(const ViewInputs& inputs) const {
  Tape tape;
  const Tape::Id out = build(tape, inputs, [&](int i) { return tape.constant(params_[i].value); });
  return tape.value(out).data;
}

std::vector<double> FusionModel::single_view(const InputTensor& input) const {
  Tape tape;
  std::vector<Tape::Id> w;
  for (int i = 0; i < params_.count(); ++i) w.push_back(tape.constant(params_[i].value));
  const int n_stages = static_cast<int>(spec_.stages.size());
  const int head = 2 * n_stages + (strategy_.combiner == Combiner::kLearned ? 2 : 0);
  Tensor t({input.channels, input.height, input.width});
  t.data = input.data;
  const Tape::Id f = tape.global_avg_pool(encode(tape, tape.constant(std::move(t)), w, 0, n_stages));
  const Tape::Id hidden = tape.swish(tape.affine(f, w[head], w[head + 1]));
  return tape.value(tape.affine(hidden, w[head + 2], w[head + 3])).data;
}

double trace_loss(std::span<const double> pred, const RadialTrace& target, const TraceNormalizer& norm) {
  const auto t = normalize(target, norm);
  if (pred.size() != t.size()) fail(ErrorCode::kShapeMismatch, "prediction and target differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += (pred[i] - t[i]) * (pred[i] - t[i]);
  return s / static_cast<double>(t.size());
}

RadialTrace predict_trace(const FusionModel& model, const ViewInputs& inputs, Eye eye) {
  const auto out = model.infer(inputs);
  RadialTrace t;
  t.radii_mm = denormalize(out, model.normalizer);
  t.eye = eye;
  t.flags.assign(t.radii_mm.size(), kPointOk);
  t.flag_out_of_range();
  return t;
}

RadialTrace predict_trace(const FusionModel& model, const MultiViewSample& sample) {
  return predict_trace(model, build_input(sample, model.input, model.stats), sample.eye);
}

}  // namespace tforge
