#include "tforge/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tforge/checkpoint.hpp"
#include "tforge/error.hpp"
#include "tforge/geometric_trace.hpp"
#include "tforge/kv.hpp"
#include "tforge/rng.hpp"

namespace tforge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string CellSpec::key() const {
  return to_string(modality) + "/" + to_string(size) + "/" + fusion.tag() + "/" + std::to_string(seed);
}

void ExperimentGrid::validate() const {
  if (modalities.empty() || sizes.empty() || fusions.empty() || seeds.empty())
    fail(ErrorCode::kInvalidArgument, "every grid axis needs at least one value");
  if (downsample < 1) fail(ErrorCode::kInvalidArgument, "downsample must be >= 1");
  train.validate();
}

std::vector<CellSpec> ExperimentGrid::cells() const {
  validate();
  std::vector<CellSpec> out;
  for (auto m : modalities)
    for (auto s : sizes)
      for (const auto& f : fusions)
        for (auto seed : seeds) out.push_back({m, s, f, seed});
  return out;
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::kParseError, "expected a boolean, got '" + v + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentGrid ExperimentGrid::parse(const std::string& text, const fs::path& base_dir) {
  static const std::set<std::string> known = {"dataset",   "modalities", "sizes",    "fusions",      "seeds",
                                              "epochs",    "batch_size", "learning_rate", "augment", "loss",
                                              "downsample", "freeze_encoder"};
  const KeyValues kv = KeyValues::parse(text);
  for (const auto& [k, v] : kv.entries())
    if (!known.count(k)) fail(ErrorCode::kParseError, "unknown grid key '" + k + "'");
  ExperimentGrid g;
  if (kv.has("dataset")) {
    g.dataset = kv.get("dataset");
    if (g.dataset.is_relative() && !base_dir.empty()) g.dataset = base_dir / g.dataset;
  }
  if (kv.has("modalities")) {
    g.modalities.clear();
    for (const auto& w : kv.words("modalities")) g.modalities.push_back(parse_modality(w));
  }
  if (kv.has("sizes")) {
    g.sizes.clear();
    for (const auto& w : kv.words("sizes")) g.sizes.push_back(parse_model_size(w));
  }
  if (kv.has("fusions")) {
    g.fusions.clear();
    for (const auto& w : kv.words("fusions")) g.fusions.push_back(FusionStrategy::parse(w));
  }
  if (kv.has("seeds")) {
    g.seeds.clear();
    for (const auto& w : kv.words("seeds")) g.seeds.push_back(std::stoull(w));
  }
  g.train.epochs = static_cast<int>(kv.number_or("epochs", g.train.epochs));
  g.train.batch_size = static_cast<int>(kv.number_or("batch_size", g.train.batch_size));
  g.train.learning_rate = kv.number_or("learning_rate", g.train.learning_rate);
  if (kv.has("augment")) g.train.augment = parse_bool(kv.get("augment"));
  if (kv.has("freeze_encoder")) g.train.freeze_encoder = parse_bool(kv.get("freeze_encoder"));
  if (kv.has("loss")) {
    const std::string l = kv.get("loss");
    if (l != "mse" && l != "l1") fail(ErrorCode::kParseError, "loss must be mse or l1");
    g.train.loss = l == "mse" ? LossKind::kMse : LossKind::kL1;
  }
  g.downsample = static_cast<int>(kv.number_or("downsample", g.downsample));
  g.validate();
  return g;
}

ExperimentGrid ExperimentGrid::load(const fs::path& path) { return parse(read_text(path), path.parent_path()); }

SplitSummary check_split_hygiene(const Manifest& manifest) {
  std::map<std::string, Split> by_id;
  std::map<int, Split> by_scene;
  SplitSummary s;
  std::vector<std::string> lines;
  for (const auto& e : manifest.entries) {
    auto [it, fresh] = by_id.emplace(e.sample_id, e.split);
    if (!fresh) fail(ErrorCode::kInvalidArgument, "sample " + e.sample_id + " listed twice");
    auto [sit, sfresh] = by_scene.emplace(e.scene_index, e.split);
    if (!sfresh && sit->second != e.split)
      fail(ErrorCode::kInvalidArgument, "scene " + std::to_string(e.scene_index) + " spans two splits");
    lines.push_back(to_string(e.split) + " " + e.sample_id);
    (e.split == Split::kTrain ? s.n_train : e.split == Split::kVal ? s.n_val : s.n_test)++;
  }
  std::sort(lines.begin(), lines.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& l : lines)
    for (unsigned char c : l + "\n") {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  s.hash = buf;
  return s;
}

CellResult evaluate_model(const FusionModel& model, const std::vector<const MultiViewSample*>& test) {
  CellResult r;
  std::vector<TraceErrorReport> reports;
  for (const auto* s : test) {
    const RadialTrace pred = predict_trace(model, *s);
    reports.push_back(trace_error(pred, s->truth));
    r.samples.push_back({s->sample_id, reports.back()});
  }
  if (!reports.empty()) r.stats = pool_errors(reports);
  r.ok = true;
  return r;
}

namespace {

CellResult evaluate_mean_baseline(const std::vector<const MultiViewSample*>& train,
                                  const std::vector<const MultiViewSample*>& test) {
  std::vector<double> mean(RadialTrace::kPoints, 0.0);
  for (const auto* s : train)
    for (int k = 0; k < RadialTrace::kPoints; ++k) mean[k] += s->truth.radii_mm[k];
  for (auto& v : mean) v /= static_cast<double>(train.size());
  CellResult r;
  std::vector<TraceErrorReport> reports;
  for (const auto* s : test) {
    RadialTrace pred(mean, s->eye, s->truth.angle0_rad);
    reports.push_back(trace_error(pred, s->truth));
    r.samples.push_back({s->sample_id, reports.back()});
  }
  if (!reports.empty()) r.stats = pool_errors(reports);
  r.ok = true;
  return r;
}

}  // namespace

ExperimentReport run_grid(const ExperimentGrid& grid, const RunOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto cells = grid.cells();
  const Manifest manifest = read_manifest(grid.dataset);
  ExperimentReport report;
  report.grid = grid;
  report.split = check_split_hygiene(manifest);

  std::vector<MultiViewSample> samples;
  samples.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) samples.push_back(load_sample(grid.dataset, e));
  std::vector<const MultiViewSample*> train_set, val_set, test_set;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Split s = manifest.entries[i].split;
    (s == Split::kTrain ? train_set : s == Split::kVal ? val_set : test_set).push_back(&samples[i]);
  }
  if (train_set.empty()) fail(ErrorCode::kTooFewSamples, "dataset has no training samples");
  if (test_set.empty()) fail(ErrorCode::kTooFewSamples, "dataset has no test samples");

  report.baseline = evaluate_mean_baseline(train_set, test_set);
  report.cells.resize(cells.size());
  std::mutex log_mu;
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    options.log(msg);
  };

  auto run_cell = [&](std::size_t ci) {
    const CellSpec& spec = cells[ci];
    const auto t0 = std::chrono::steady_clock::now();
    CellResult r;
    try {
      TrainConfig cfg = grid.train;
      cfg.seed = spec.seed;
      cfg.augmentation.seed = spec.seed;
      FusionModel model = make_model(spec.size, spec.modality, spec.fusion, train_set,
                                     derive_seed(spec.seed, 0x1417ull), grid.downsample);
      TrainResult tr = train(std::move(model), train_set, val_set, cfg, [&](const EpochStats& st) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s epoch %d/%d loss %.5f val %.4f mm", spec.key().c_str(), st.epoch,
                      cfg.epochs, st.train_loss, st.val_mean_mm);
        log(buf);
      });
      r = evaluate_model(tr.model, test_set);
      r.best_epoch = tr.history.best_epoch;
      r.best_val_mean_mm = tr.history.best_val_mean_mm;
      if (!options.checkpoint_dir.empty()) {
        std::string name = spec.key();
        std::replace(name.begin(), name.end(), '/', '_');
        save_checkpoint(tr.model, options.checkpoint_dir / (name + ".tfck"));
      }
    } catch (const std::exception& e) {
      r = CellResult{};
      r.ok = false;
      r.error = e.what();
      log(spec.key() + " failed: " + r.error);
    }
    r.spec = spec;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.cells[ci] = std::move(r);
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(cells.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        for (std::size_t i = static_cast<std::size_t>(j); i < cells.size(); i += static_cast<std::size_t>(jobs))
          run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  report.ranking = rank_cells(report.cells);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

std::vector<std::string> rank_cells(const std::vector<CellResult>& cells) {
  std::vector<const CellResult*> ok;
  for (const auto& c : cells)
    if (c.ok) ok.push_back(&c);
  auto names = [](const CellResult* c) {
    return std::make_tuple(to_string(c->spec.modality), to_string(c->spec.size), c->spec.fusion.tag(), c->spec.seed);
  };
  std::stable_sort(ok.begin(), ok.end(), [&](const CellResult* a, const CellResult* b) {
    if (a->stats.pooled.mean_mm != b->stats.pooled.mean_mm) return a->stats.pooled.mean_mm < b->stats.pooled.mean_mm;
    return names(a) < names(b);
  });
  std::vector<std::string> out;
  for (const auto* c : ok) out.push_back(c->spec.key());
  return out;
}

CaseSelection select_cases(const std::vector<SampleResult>& samples) {
  if (samples.size() < 3) fail(ErrorCode::kTooFewSamples, "case selection needs at least 3 samples");
  std::vector<const SampleResult*> order;
  for (const auto& s : samples) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const SampleResult* a, const SampleResult* b) {
    if (a->errors.mean_mm != b->errors.mean_mm) return a->errors.mean_mm < b->errors.mean_mm;
    return a->sample_id < b->sample_id;
  });
  return {order.front()->sample_id, order[order.size() / 2]->sample_id, order.back()->sample_id};
}

Mask dilate(const Mask& mask, int r) {
  if (r <= 0) return mask;
  Mask tmp(mask.width, mask.height), out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      for (int dx = -r; dx <= r && !v; ++dx)
        if (mask.contains(x + dx, y)) v = mask.at(x + dx, y) ? 1 : 0;
      tmp.at(x, y) = v;
    }
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      for (int dy = -r; dy <= r && !v; ++dy)
        if (tmp.contains(x, y + dy)) v = tmp.at(x, y + dy);
      out.at(x, y) = v;
    }
  return out;
}

GeometricComparison compare_to_geometric(const CellResult& cell, const std::vector<const MultiViewSample*>& test,
                                         int dilate_px) {
  if (test.empty()) fail(ErrorCode::kTooFewSamples, "geometric comparison needs test samples");
  std::map<std::string, double> learned;
  for (const auto& s : cell.samples) learned[s.sample_id] = s.errors.mean_mm;
  GeometricComparison out;
  out.dilate_px = dilate_px;
  double lsum = 0.0, gsum = 0.0;
  int n_geo = 0, wins = 0, n_rows = 0;
  for (const auto* s : test) {
    GeometricRow row;
    row.sample_id = s->sample_id;
    const auto it = learned.find(s->sample_id);
    if (it == learned.end()) fail(ErrorCode::kInvalidArgument, "cell has no result for " + s->sample_id);
    row.learned_mean_mm = it->second;
    try {
      ViewMasks masks;
      for (std::size_t v = 0; v < 4; ++v) masks[v] = dilate(s->views[v].mask, dilate_px);
      GeometricTraceOptions opt;
      opt.eye = s->eye;
      const auto g = geometric_trace(masks, s->rig, opt);
      row.geometric_mean_mm = trace_error(g.trace, s->truth).mean_mm;
      row.occluded_points = g.occluded_points;
      if (g.occluded_points > 0) row.note = std::to_string(g.occluded_points) + " occluded angles interpolated";
      gsum += row.geometric_mean_mm;
      ++n_geo;
      if (row.learned_mean_mm < row.geometric_mean_mm) ++wins;
    } catch (const Error& e) {
      row.geometric_ok = false;
      row.note = e.what();
      ++wins;
    }
    lsum += row.learned_mean_mm;
    ++n_rows;
    out.rows.push_back(std::move(row));
  }
  out.learned_mean_mm = lsum / n_rows;
  out.geometric_mean_mm = n_geo ? gsum / n_geo : 0.0;
  out.learned_win_rate = static_cast<double>(wins) / n_rows;
  return out;
}

// ---------------------------------------------------------------------------
// JSON report

namespace {

ojson errors_json(const TraceErrorReport& r, bool per_point) {
  ojson j;
  j["min_mm"] = r.min_mm;
  j["max_mm"] = r.max_mm;
  j["mean_mm"] = r.mean_mm;
  j["median_mm"] = r.median_mm;
  j["frac_under_1mm"] = r.frac_under_1mm;
  if (per_point) j["abs_err_mm"] = r.per_point_abs_err;
  return j;
}

TraceErrorReport errors_from(const ojson& j) {
  TraceErrorReport r;
  r.min_mm = j.at("min_mm").get<double>();
  r.max_mm = j.at("max_mm").get<double>();
  r.mean_mm = j.at("mean_mm").get<double>();
  r.median_mm = j.at("median_mm").get<double>();
  r.frac_under_1mm = j.at("frac_under_1mm").get<double>();
  if (j.contains("abs_err_mm")) r.per_point_abs_err = j.at("abs_err_mm").get<std::vector<double>>();
  return r;
}

ojson cell_json(const CellResult& c, bool timing, bool with_spec) {
  ojson j;
  if (with_spec) {
    j["key"] = c.spec.key();
    j["modality"] = to_string(c.spec.modality);
    j["size"] = to_string(c.spec.size);
    j["fusion"] = c.spec.fusion.tag();
    j["seed"] = c.spec.seed;
  }
  j["status"] = c.ok ? "ok" : "failed";
  j["error"] = c.error;
  ojson agg = errors_json(c.stats.pooled, false);
  agg["mean_of_sample_means_mm"] = c.stats.mean_of_sample_means;
  agg["median_of_sample_means_mm"] = c.stats.median_of_sample_means;
  agg["n_points"] = c.stats.n_points;
  agg["n_under_1mm"] = c.stats.n_under_1mm;
  j["aggregates"] = agg;
  j["best_epoch"] = c.best_epoch;
  j["best_val_mean_mm"] = c.best_val_mean_mm;
  if (timing) j["wall_seconds"] = c.wall_seconds;
  ojson samples = ojson::array();
  for (const auto& s : c.samples) {
    ojson sj;
    sj["id"] = s.sample_id;
    sj["errors"] = errors_json(s.errors, true);
    samples.push_back(std::move(sj));
  }
  j["samples"] = std::move(samples);
  return j;
}

CellResult cell_from(const ojson& j) {
  CellResult c;
  if (j.contains("modality")) {
    c.spec.modality = parse_modality(j.at("modality").get<std::string>());
    c.spec.size = parse_model_size(j.at("size").get<std::string>());
    c.spec.fusion = FusionStrategy::parse(j.at("fusion").get<std::string>());
    c.spec.seed = j.at("seed").get<std::uint64_t>();
  }
  c.ok = j.at("status").get<std::string>() == "ok";
  c.error = j.at("error").get<std::string>();
  const ojson& agg = j.at("aggregates");
  c.stats.pooled = errors_from(agg);
  c.stats.mean_of_sample_means = agg.at("mean_of_sample_means_mm").get<double>();
  c.stats.median_of_sample_means = agg.at("median_of_sample_means_mm").get<double>();
  c.stats.n_points = agg.at("n_points").get<std::size_t>();
  c.stats.n_under_1mm = agg.at("n_under_1mm").get<std::size_t>();
  c.best_epoch = j.at("best_epoch").get<int>();
  c.best_val_mean_mm = j.at("best_val_mean_mm").get<double>();
  if (j.contains("wall_seconds")) c.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto& sj : j.at("samples")) c.samples.push_back({sj.at("id").get<std::string>(), errors_from(sj.at("errors"))});
  return c;
}

}  // namespace

std::string report_to_json(const ExperimentReport& r, bool include_timing) {
  ojson j;
  j["format"] = "trace-forge-report/1";
  ojson cfg;
  const ExperimentGrid& g = r.grid;
  cfg["dataset"] = g.dataset.generic_string();
  ojson mods = ojson::array(), sizes = ojson::array(), fus = ojson::array();
  for (auto m : g.modalities) mods.push_back(to_string(m));
  for (auto s : g.sizes) sizes.push_back(to_string(s));
  for (const auto& f : g.fusions) fus.push_back(f.tag());
  cfg["modalities"] = mods;
  cfg["sizes"] = sizes;
  cfg["fusions"] = fus;
  cfg["seeds"] = g.seeds;
  cfg["downsample"] = g.downsample;
  ojson t;
  t["epochs"] = g.train.epochs;
  t["batch_size"] = g.train.batch_size;
  t["learning_rate"] = g.train.learning_rate;
  t["beta1"] = g.train.beta1;
  t["beta2"] = g.train.beta2;
  t["epsilon"] = g.train.epsilon;
  t["seed"] = g.train.seed;
  t["loss"] = g.train.loss == LossKind::kMse ? "mse" : "l1";
  t["freeze_encoder"] = g.train.freeze_encoder;
  t["augment"] = g.train.augment;
  const AugmentationConfig& a = g.train.augmentation;
  t["augmentation"] = ojson{{"p_geometric", a.p_geometric},         {"max_rotation_deg", a.max_rotation_deg},
                            {"max_translation_frac", a.max_translation_frac}, {"scale_min", a.scale_min},
                            {"scale_max", a.scale_max},             {"p_noise", a.p_noise},
                            {"max_noise_sigma", a.max_noise_sigma}, {"p_color", a.p_color},
                            {"gain_min", a.gain_min},               {"gain_max", a.gain_max},
                            {"max_bias", a.max_bias},               {"p_blur", a.p_blur},
                            {"max_blur_sigma_px", a.max_blur_sigma_px}, {"p_sharpness", a.p_sharpness},
                            {"max_sharpness", a.max_sharpness},     {"seed", a.seed}};
  cfg["train"] = t;
  j["config"] = cfg;
  j["split"] = ojson{{"hash", r.split.hash},
                     {"n_train", r.split.n_train},
                     {"n_val", r.split.n_val},
                     {"n_test", r.split.n_test}};
  j["baseline"] = cell_json(r.baseline, include_timing, false);
  ojson cells = ojson::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c, include_timing, true));
  j["cells"] = std::move(cells);
  j["ranking"] = r.ranking;
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  try {
    const ojson j = ojson::parse(text);
    if (j.at("format").get<std::string>() != "trace-forge-report/1")
      fail(ErrorCode::kParseError, "unsupported report format");
    ExperimentReport r;
    const ojson& cfg = j.at("config");
    ExperimentGrid& g = r.grid;
    g.dataset = cfg.at("dataset").get<std::string>();
    g.modalities.clear();
    g.sizes.clear();
    g.fusions.clear();
    for (const auto& m : cfg.at("modalities")) g.modalities.push_back(parse_modality(m.get<std::string>()));
    for (const auto& s : cfg.at("sizes")) g.sizes.push_back(parse_model_size(s.get<std::string>()));
    for (const auto& f : cfg.at("fusions")) g.fusions.push_back(FusionStrategy::parse(f.get<std::string>()));
    g.seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    g.downsample = cfg.at("downsample").get<int>();
    const ojson& t = cfg.at("train");
    g.train.epochs = t.at("epochs").get<int>();
    g.train.batch_size = t.at("batch_size").get<int>();
    g.train.learning_rate = t.at("learning_rate").get<double>();
    g.train.beta1 = t.at("beta1").get<double>();
    g.train.beta2 = t.at("beta2").get<double>();
    g.train.epsilon = t.at("epsilon").get<double>();
    g.train.seed = t.at("seed").get<std::uint64_t>();
    g.train.loss = t.at("loss").get<std::string>() == "mse" ? LossKind::kMse : LossKind::kL1;
    g.train.freeze_encoder = t.at("freeze_encoder").get<bool>();
    g.train.augment = t.at("augment").get<bool>();
    const ojson& a = t.at("augmentation");
    AugmentationConfig& ac = g.train.augmentation;
    ac.p_geometric = a.at("p_geometric").get<double>();
    ac.max_rotation_deg = a.at("max_rotation_deg").get<double>();
    ac.max_translation_frac = a.at("max_translation_frac").get<double>();
    ac.scale_min = a.at("scale_min").get<double>();
    ac.scale_max = a.at("scale_max").get<double>();
    ac.p_noise = a.at("p_noise").get<double>();
    ac.max_noise_sigma = a.at("max_noise_sigma").get<double>();
    ac.p_color = a.at("p_color").get<double>();
    ac.gain_min = a.at("gain_min").get<double>();
    ac.gain_max = a.at("gain_max").get<double>();
    ac.max_bias = a.at("max_bias").get<double>();
    ac.p_blur = a.at("p_blur").get<double>();
    ac.max_blur_sigma_px = a.at("max_blur_sigma_px").get<double>();
    ac.p_sharpness = a.at("p_sharpness").get<double>();
    ac.max_sharpness = a.at("max_sharpness").get<double>();
    ac.seed = a.at("seed").get<std::uint64_t>();
    const ojson& sp = j.at("split");
    r.split.hash = sp.at("hash").get<std::string>();
    r.split.n_train = sp.at("n_train").get<int>();
    r.split.n_val = sp.at("n_val").get<int>();
    r.split.n_test = sp.at("n_test").get<int>();
    r.baseline = cell_from(j.at("baseline"));
    for (const auto& c : j.at("cells")) r.cells.push_back(cell_from(c));
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    if (j.contains("wall_seconds")) r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("malformed report: ") + e.what());
  }
}

void write_report(const ExperimentReport& report, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << report_to_json(report);
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

ExperimentReport read_report(const fs::path& path) { return report_from_json(read_text(path)); }

}  // namespace tforge
