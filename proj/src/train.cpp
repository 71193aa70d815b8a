#include "tforge/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "tforge/error.hpp"
#include "tforge/rng.hpp"

namespace tforge {

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) fail(ErrorCode::kInvalidArgument, "learning_rate must be >= 0");
  if (epochs < 0) fail(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || epsilon <= 0)
    fail(ErrorCode::kInvalidArgument, "bad Adam hyperparameters");
  augmentation.validate();
}

FusionModel make_model(ModelSize size, Modality modality, FusionStrategy strategy,
                       std::span<const MultiViewSample* const> train, std::uint64_t seed, int downsample) {
  if (train.empty()) fail(ErrorCode::kEmptyCollection, "no training samples");
  FusionModel model(encoder_spec(size, channel_count(modality)), strategy, seed);
  model.size_tag = to_string(size);
  model.input = {modality, downsample};
  model.stats = fit_channel_stats(train, modality);
  std::vector<RadialTrace> traces;
  for (const auto* s : train) traces.push_back(s->truth);
  model.normalizer = fit_normalizer(traces);
  return model;
}

double mean_error_mm(const FusionModel& model, std::span<const ViewInputs> inputs,
                     std::span<const MultiViewSample* const> samples) {
  if (inputs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto pred = denormalize(model.infer(inputs[i]), model.normalizer);
    double s = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) s += std::abs(pred[k] - samples[i]->truth.radii_mm[k]);
    total += s / static_cast<double>(pred.size());
  }
  return total / static_cast<double>(inputs.size());
}

namespace {

struct Adam {
  std::vector<Tensor> m, v;
  long step = 0;

  explicit Adam(const ParamStore& ps) {
    for (const auto& p : ps.params()) {
      m.emplace_back(p.value.shape);
      v.emplace_back(p.value.shape);
    }
  }

  void apply(ParamStore& ps, const TrainConfig& cfg) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (int i = 0; i < ps.count(); ++i) {
      Parameter& p = ps[i];
      if (p.frozen) continue;
      auto& mi = m[static_cast<std::size_t>(i)].data;
      auto& vi = v[static_cast<std::size_t>(i)].data;
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double gk = p.grad.data[k];
        mi[k] = cfg.beta1 * mi[k] + (1.0 - cfg.beta1) * gk;
        vi[k] = cfg.beta2 * vi[k] + (1.0 - cfg.beta2) * gk * gk;
        p.value.data[k] -= cfg.learning_rate * (mi[k] / c1) / (std::sqrt(vi[k] / c2) + cfg.epsilon);
      }
    }
  }
};

}  // namespace

TrainResult train(FusionModel model, std::span<const MultiViewSample* const> train,
                  std::span<const MultiViewSample* const> val, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (train.empty()) fail(ErrorCode::kEmptyCollection, "no training samples");
  ParamStore& ps = model.params();
  ps.set_frozen("enc.", cfg.freeze_encoder);

  std::vector<ViewInputs> train_inputs, val_inputs;
  std::vector<std::vector<double>> targets;
  for (const auto* s : train) {
    if (!cfg.augment) train_inputs.push_back(build_input(*s, model.input, model.stats));
    targets.push_back(normalize(s->truth, model.normalizer));
  }
  // Without a validation split the training samples (unaugmented) stand in.
  const auto eval_set = val.empty() ? train : val;
  for (const auto* s : eval_set) val_inputs.push_back(build_input(*s, model.input, model.stats));

  Adam adam(ps);
  TrainResult result;
  result.history.best_val_mean_mm = std::numeric_limits<double>::infinity();
  std::vector<Parameter> best = ps.params();

  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ps.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        ViewInputs aug_in;
        std::vector<double> aug_target;
        const ViewInputs* in = nullptr;
        const std::vector<double>* target = &targets[i];
        if (cfg.augment) {
          const std::uint64_t key = derive_seed(cfg.seed ^ 0xA5A5A5A5ull,
                                                static_cast<std::uint64_t>(epoch) * train.size() + i);
          const MultiViewSample a = augment(*train[i], cfg.augmentation, key);
          aug_in = build_input(a, model.input, model.stats);
          aug_target = normalize(a.truth, model.normalizer);
          in = &aug_in;
          target = &aug_target;
        } else {
          in = &train_inputs[i];
        }
        Tape tape;
        const Tape::Id out = model.forward(tape, *in);
        const Tape::Id loss = cfg.loss == LossKind::kMse ? tape.mse(out, *target) : tape.l1(out, *target);
        const double lv = tape.value(loss).data[0];
        if (!std::isfinite(lv))
          fail(ErrorCode::kDivergenceDetected, "non-finite loss at epoch " + std::to_string(epoch + 1));
        loss_sum += lv;
        tape.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& p : ps.params())
        for (auto& gk : p.grad.data) gk *= inv;
      adam.apply(ps, cfg);
    }
    if (!ps.all_finite()) fail(ErrorCode::kDivergenceDetected, "non-finite weights at epoch " + std::to_string(epoch + 1));

    EpochStats st;
    st.epoch = epoch + 1;
    st.train_loss = loss_sum / static_cast<double>(train.size());
    st.val_mean_mm = mean_error_mm(model, val_inputs, eval_set);
    result.history.epochs.push_back(st);
    if (st.val_mean_mm < result.history.best_val_mean_mm) {
      result.history.best_val_mean_mm = st.val_mean_mm;
      result.history.best_epoch = st.epoch;
      best = ps.params();
    }
    if (on_epoch) on_epoch(st);
  }
  ps.params() = best;
  ps.set_frozen("enc.", false);
  ps.zero_grad();
  result.model = std::move(model);
  return result;
}

}  // namespace tforge
