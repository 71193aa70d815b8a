#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/checkpoint.hpp"
#include "tforge/error.hpp"
#include "tforge/train.hpp"

using namespace tforge;

namespace {

const std::vector<MultiViewSample>& samples() {
  static const std::vector<MultiViewSample> s = [] {
    std::vector<MultiViewSample> out;
    ContourSamplerConfig cfg;
    cfg.plane = FramePlane::from_normal(Vec3(0.0, 0.0, 500.0), Vec3(0.0, 0.0, -1.0));
    for (std::uint64_t seed = 0; out.size() < 6; ++seed) {
      try {
        out.push_back(render_views(sample_contour(seed, cfg), default_rig(), RenderConfig{}));
      } catch (const Error&) {
      }
    }
    return out;
  }();
  return s;
}

std::vector<const MultiViewSample*> ptrs(std::size_t first, std::size_t last) {
  std::vector<const MultiViewSample*> p;
  for (std::size_t i = first; i < last; ++i) p.push_back(&samples()[i]);
  return p;
}

// Micro encoder on 8x8 inputs (256 px crops averaged over 32 x 32 blocks).
FusionModel micro_model(const std::vector<const MultiViewSample*>& train, FusionStrategy f = {}) {
  FusionModel m(oracle::micro_spec(2), f, 17);
  m.input = {Modality::kGrayDepth, 32};
  m.stats = fit_channel_stats(train, Modality::kGrayDepth);
  std::vector<RadialTrace> t;
  for (const auto* s : train) t.push_back(s->truth);
  m.normalizer = fit_normalizer(t);
  return m;
}

TrainConfig quick(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 2;
  c.learning_rate = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK(c.batch_size == 8);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.epsilon == 1e-8);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("zero learning rate leaves the model untouched") {
  const auto tr = ptrs(0, 4), va = ptrs(4, 6);
  const FusionModel m = micro_model(tr);
  TrainConfig c = quick(3);
  c.learning_rate = 0.0;
  const TrainResult r = train(m, tr, va, c);
  for (int i = 0; i < m.params().count(); ++i) CHECK(r.model.params()[i].value == m.params()[i].value);
  REQUIRE(r.history.epochs.size() == 3);
  CHECK(r.history.epochs[0].val_mean_mm == r.history.epochs[2].val_mean_mm);
  CHECK(r.history.epochs[0].train_loss == r.history.epochs[2].train_loss);
}

TEST_CASE("frozen encoder is not updated") {
  const auto tr = ptrs(0, 4);
  const FusionModel m = micro_model(tr);
  TrainConfig c = quick(2);
  c.freeze_encoder = true;
  const TrainResult r = train(m, tr, {}, c);
  bool head_moved = false;
  for (int i = 0; i < m.params().count(); ++i) {
    const auto& name = m.params()[i].name;
    if (name.starts_with("enc."))
      CHECK(r.model.params()[i].value == m.params()[i].value);
    else
      head_moved |= r.model.params()[i].value != m.params()[i].value;
  }
  CHECK(head_moved);
}

TEST_CASE("training is repeatable bit for bit") {
  const auto tr = ptrs(0, 4), va = ptrs(4, 6);
  for (bool aug : {false, true}) {
    TrainConfig c = quick(3);
    c.augment = aug;
    const TrainResult a = train(micro_model(tr, FusionStrategy::parse("late_learned")), tr, va, c);
    const TrainResult b = train(micro_model(tr, FusionStrategy::parse("late_learned")), tr, va, c);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
      CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
      CHECK(a.history.epochs[e].val_mean_mm == b.history.epochs[e].val_mean_mm);
    }
    for (int i = 0; i < a.model.params().count(); ++i) CHECK(a.model.params()[i].value == b.model.params()[i].value);
  }
}

TEST_CASE("best validation epoch is returned") {
  const auto tr = ptrs(0, 4), va = ptrs(4, 6);
  const TrainResult r = train(micro_model(tr), tr, va, quick(6));
  double best = 1e300;
  int best_epoch = -1;
  for (const auto& e : r.history.epochs)
    if (e.val_mean_mm < best) best = e.val_mean_mm, best_epoch = e.epoch;
  CHECK(r.history.best_epoch == best_epoch);
  CHECK(r.history.best_val_mean_mm == best);
  std::vector<ViewInputs> in;
  for (const auto* s : va) in.push_back(build_input(*s, r.model.input, r.model.stats));
  CHECK(mean_error_mm(r.model, in, va) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("training loss decreases") {
  const auto tr = ptrs(0, 4);
  TrainConfig c = quick(30);
  c.learning_rate = 1e-2;
  const TrainResult r = train(micro_model(tr), tr, {}, c);
  CHECK(r.history.epochs.back().train_loss < 0.5 * r.history.epochs.front().train_loss);
}

TEST_CASE("divergence is detected") {
  const auto tr = ptrs(0, 4);
  TrainConfig c = quick(5);
  c.learning_rate = 1e200;
  try {
    train(micro_model(tr), tr, {}, c);
    FAIL("no divergence reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergenceDetected);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto tr = ptrs(0, 4);
  for (const FusionStrategy f : FusionStrategy::all()) {
    FusionModel m = make_model(ModelSize::kS, Modality::kRgbDepth, f, tr, 5, 4);
    const std::string bytes = encode_checkpoint(m);
    const FusionModel back = decode_checkpoint(bytes);
    CHECK(encode_checkpoint(back) == bytes);
    CHECK(back.spec() == m.spec());
    CHECK(back.strategy() == m.strategy());
    CHECK(back.input.modality == m.input.modality);
    CHECK(back.input.downsample == m.input.downsample);
    CHECK(back.stats.mean == m.stats.mean);
    CHECK(back.stats.stddev == m.stats.stddev);
    CHECK(back.normalizer.mean_mm == m.normalizer.mean_mm);
    CHECK(back.normalizer.std_mm == m.normalizer.std_mm);
    CHECK(back.size_tag == "S");
    for (int i = 0; i < m.params().count(); ++i) {
      CHECK(back.params()[i].name == m.params()[i].name);
      CHECK(back.params()[i].value == m.params()[i].value);
    }
    CHECK(predict_trace(back, *tr[0]).radii_mm == predict_trace(m, *tr[0]).radii_mm);
  }

  oracle::TempDir dir("ckpt");
  const FusionModel m = micro_model(tr);
  save_checkpoint(m, dir / "m.tfck");
  CHECK(encode_checkpoint(load_checkpoint(dir / "m.tfck")) == encode_checkpoint(m));
  std::string bytes = encode_checkpoint(m);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bytes), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.tfck"), Error);
}
