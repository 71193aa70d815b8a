// trace-forge: dataset generation, geometric tracing, training, evaluation
// and plotting for multi-view frame traces.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "tforge/checkpoint.hpp"
#include "tforge/error.hpp"
#include "tforge/evalharness.hpp"
#include "tforge/geometric_trace.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"
#include "tforge/train.hpp"

namespace fs = std::filesystem;
using namespace tforge;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

int verbosity = 1;

void info(const std::string& msg) {
  if (verbosity >= 1) std::cerr << msg << "\n";
}

void debug(const std::string& msg) {
  if (verbosity >= 2) std::cerr << msg << "\n";
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw UsageError(what + " '" + p.string() + "' is not a directory");
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " '" + p.string() + "' does not exist");
}

void make_out_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) fail(ErrorCode::kIoError, "cannot create output directory " + p.string());
}

void require_parent(const fs::path& file) {
  const fs::path parent = file.has_parent_path() ? file.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw UsageError("output directory '" + parent.string() + "' does not exist");
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("TRACE_FORGE_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && end != env) return v;
    std::cerr << "warning: ignoring non-numeric TRACE_FORGE_SEED='" << env << "'\n";
  }
  return 42;
}

std::vector<const MultiViewSample*> pointers(const std::vector<MultiViewSample>& v) {
  std::vector<const MultiViewSample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

struct LoadedSplits {
  Manifest manifest;
  std::vector<MultiViewSample> train, val, test;
};

LoadedSplits load_splits(const fs::path& dir) {
  LoadedSplits d;
  d.manifest = read_manifest(dir);
  check_split_hygiene(d.manifest);
  for (const auto& e : d.manifest.entries) {
    auto s = load_sample(dir, e);
    (e.split == Split::kTrain ? d.train : e.split == Split::kVal ? d.val : d.test).push_back(std::move(s));
  }
  return d;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  int scenes = 100;
  fs::path out;
  int channels = 3;
  int crop = 256;
  double nose = 0.3;
  fs::path rig;
};

int run_generate(const GenerateArgs& a, std::uint64_t seed, int jobs) {
  if (a.scenes < 10) throw UsageError("--scenes must be at least 10");
  if (!a.rig.empty()) require_file(a.rig, "rig file");
  make_out_dir(a.out);
  DatasetConfig cfg;
  cfg.jobs = jobs;
  cfg.render.channels = a.channels;
  cfg.render.crop_size = a.crop;
  cfg.scene.nose_overlap_probability = a.nose;
  if (!a.rig.empty()) {
    const CameraRig rig = load_rig(a.rig);
    // The generator builds its rig from a layout; accept only rigs that are
    // reproducible from one.
    RigLayout layout;
    layout.working_distance_mm = rig.working_distance_mm;
    layout.focal_px = rig.cameras[0].focal_px;
    layout.image_width = rig.cameras[0].image_size.x();
    layout.image_height = rig.cameras[0].image_size.y();
    cfg.rig = layout;
  }
  info("generating " + std::to_string(a.scenes) + " scenes (seed " + std::to_string(seed) + ")");
  const Manifest m = build_dataset(a.scenes, seed, a.out, cfg);
  info("wrote " + std::to_string(m.entries.size()) + " samples to " + a.out.string());
  return 0;
}

struct ExportArgs {
  fs::path data;
  std::string sample;
  fs::path out;
};

int run_export(const ExportArgs& a) {
  require_dir(a.data, "dataset");
  const Manifest m = read_manifest(a.data);
  const ManifestEntry* entry = nullptr;
  for (const auto& e : m.entries)
    if (e.sample_id == a.sample) entry = &e;
  if (!entry) throw UsageError("no sample '" + a.sample + "' in " + a.data.string());
  make_out_dir(a.out);
  const MultiViewSample s = load_sample(a.data, *entry);
  for (int v = 0; v < 4; ++v) write_mask_pgm(s.views[v].mask, a.out / ("mask_" + std::to_string(v) + ".pgm"));
  save_rig(s.rig, a.out / "rig.txt");
  write_trace(s.truth, a.out / "truth.trace");
  info("exported " + a.sample + " to " + a.out.string());
  return 0;
}

struct TraceArgs {
  fs::path masks;
  fs::path rig;
  fs::path out;
  std::string eye = "right";
  std::string center = "boxing";
};

int run_trace_geometric(const TraceArgs& a) {
  require_dir(a.masks, "mask directory");
  require_file(a.rig, "rig file");
  for (int v = 0; v < 4; ++v) require_file(a.masks / ("mask_" + std::to_string(v) + ".pgm"), "mask");
  const Eye eye = parse_eye(a.eye);
  if (a.center != "boxing" && a.center != "centroid") throw UsageError("--center must be boxing or centroid");
  make_out_dir(a.out);
  ViewMasks masks;
  for (int v = 0; v < 4; ++v) masks[v] = read_mask_pgm(a.masks / ("mask_" + std::to_string(v) + ".pgm"));
  GeometricTraceOptions opt;
  opt.eye = eye;
  opt.center = a.center == "boxing" ? TraceCenter::kBoxing : TraceCenter::kCentroid;
  const auto result = geometric_trace(masks, load_rig(a.rig), opt);
  if (result.occluded_points > 0) {
    std::cerr << "warning: " << result.occluded_points << " angles seen by fewer than two views:";
    for (int i = 0; i < result.trace.size(); ++i)
      if (result.trace.flags[static_cast<std::size_t>(i)] & kOccludedAngle) std::cerr << " " << i;
    std::cerr << "\n";
  }
  const fs::path file = a.out / (to_string(eye) + ".trace");
  write_trace(result.trace, file);
  char buf[160];
  std::snprintf(buf, sizeof buf, "plane residual %.4f mm from %d edge points", result.plane_fit.residual_rms_mm,
                result.plane_fit.n_edge_points);
  debug(buf);
  info("wrote " + file.string());
  return 0;
}

struct TrainArgs {
  std::string modality = "gray_depth";
  std::string fusion = "late_max";
  std::string size = "S";
  fs::path data;
  fs::path out;
  int epochs = 200;
  int batch = 8;
  double lr = 1e-4;
  bool augment = false;
  int downsample = 4;
  std::string loss = "mse";
  fs::path history;
};

int run_train(const TrainArgs& a, std::uint64_t seed) {
  require_dir(a.data, "dataset");
  require_parent(a.out);
  if (!a.history.empty()) require_parent(a.history);
  const Modality modality = parse_modality(a.modality);
  const FusionStrategy fusion = FusionStrategy::parse(a.fusion);
  const ModelSize size = parse_model_size(a.size);
  if (a.loss != "mse" && a.loss != "l1") throw UsageError("--loss must be mse or l1");
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.seed = seed;
  cfg.augment = a.augment;
  cfg.augmentation.seed = seed;
  cfg.loss = a.loss == "mse" ? LossKind::kMse : LossKind::kL1;
  cfg.validate();

  const LoadedSplits d = load_splits(a.data);
  const auto train_set = pointers(d.train), val_set = pointers(d.val);
  FusionModel model = make_model(size, modality, fusion, train_set, derive_seed(seed, 0x1417ull), a.downsample);
  std::ofstream hist;
  if (!a.history.empty()) {
    hist.open(a.history);
    hist << "epoch,train_loss,val_mean_mm\n";
  }
  const TrainResult r = train(std::move(model), train_set, val_set, cfg, [&](const EpochStats& st) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d/%d loss %.6f val %.4f mm", st.epoch, cfg.epochs, st.train_loss,
                  st.val_mean_mm);
    info(buf);
    if (hist) hist << st.epoch << "," << st.train_loss << "," << st.val_mean_mm << "\n";
  });
  save_checkpoint(r.model, a.out);
  info("best epoch " + std::to_string(r.history.best_epoch) + ", checkpoint " + a.out.string());
  return 0;
}

struct EvaluateArgs {
  fs::path grid;
  fs::path model;
  fs::path data;
  fs::path out;
  bool geometric = false;
  int dilate = 0;
};

void write_cases(const CellResult& cell, const std::vector<const MultiViewSample*>& test, const FusionModel* model,
                 const fs::path& out) {
  if (cell.samples.size() < 3 || !model) return;
  const CaseSelection sel = select_cases(cell.samples);
  for (const auto& [label, id] : {std::pair{"best", sel.best}, {"median", sel.median}, {"worst", sel.worst}}) {
    for (const auto* s : test)
      if (s->sample_id == id) {
        plot_trace(predict_trace(*model, *s), s->truth, out / (std::string(label) + "_" + id + ".svg"),
                   cell.spec.key() + " " + label + " " + id);
      }
  }
}

void write_geometric(const GeometricComparison& g, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << "sample_id,learned_mean_mm,geometric_mean_mm,geometric_ok,occluded_points,note\n";
  for (const auto& r : g.rows)
    out << r.sample_id << "," << r.learned_mean_mm << "," << r.geometric_mean_mm << "," << (r.geometric_ok ? 1 : 0) << ","
        << r.occluded_points << ",\"" << r.note << "\"\n";
  out << "# dilate_px " << g.dilate_px << ", learned mean " << g.learned_mean_mm << " mm, geometric mean "
      << g.geometric_mean_mm << " mm, learned win rate " << g.learned_win_rate << "\n";
}

int run_evaluate(const EvaluateArgs& a, std::uint64_t seed, int jobs) {
  if (a.grid.empty() == a.model.empty()) throw UsageError("evaluate needs exactly one of --grid or --model");
  if (!a.grid.empty()) require_file(a.grid, "grid file");
  if (!a.model.empty()) {
    require_file(a.model, "checkpoint");
    if (a.data.empty()) throw UsageError("--model needs --data");
  }
  if (!a.data.empty()) require_dir(a.data, "dataset");
  if (a.dilate < 0) throw UsageError("--dilate must be >= 0");
  make_out_dir(a.out);

  if (!a.model.empty()) {
    const FusionModel model = load_checkpoint(a.model);
    const LoadedSplits d = load_splits(a.data);
    const auto test = pointers(d.test);
    CellResult cell = evaluate_model(model, test);
    cell.spec = {model.input.modality, parse_model_size(model.size_tag), model.strategy(), seed};
    ExperimentReport report;
    report.grid.dataset = a.data;
    report.grid.modalities = {cell.spec.modality};
    report.grid.sizes = {cell.spec.size};
    report.grid.fusions = {cell.spec.fusion};
    report.grid.seeds = {seed};
    report.split = check_split_hygiene(d.manifest);
    report.cells.push_back(cell);
    report.ranking = rank_cells(report.cells);
    write_report(report, a.out / "report.json");
    write_cases(cell, test, &model, a.out);
    if (a.geometric) write_geometric(compare_to_geometric(cell, test, a.dilate), a.out / "geometric.csv");
    char buf[128];
    std::snprintf(buf, sizeof buf, "test mean %.4f mm, max %.4f mm, under 1 mm %.1f%%", cell.stats.pooled.mean_mm,
                  cell.stats.pooled.max_mm, 100.0 * cell.stats.pooled.frac_under_1mm);
    info(buf);
    return 0;
  }

  ExperimentGrid grid = ExperimentGrid::load(a.grid);
  if (!a.data.empty()) grid.dataset = a.data;
  require_dir(grid.dataset, "dataset");
  RunOptions opt;
  opt.jobs = jobs;
  opt.checkpoint_dir = a.out / "checkpoints";
  make_out_dir(opt.checkpoint_dir);
  opt.log = [](const std::string& m) { debug(m); };
  const ExperimentReport report = run_grid(grid, opt);
  write_report(report, a.out / "report.json");
  for (const auto& c : report.cells) {
    char buf[200];
    if (c.ok)
      std::snprintf(buf, sizeof buf, "%-32s mean %.4f  median %.4f  max %.4f  <1mm %.1f%%", c.spec.key().c_str(),
                    c.stats.pooled.mean_mm, c.stats.pooled.median_mm, c.stats.pooled.max_mm,
                    100.0 * c.stats.pooled.frac_under_1mm);
    else
      std::snprintf(buf, sizeof buf, "%-32s FAILED: %s", c.spec.key().c_str(), c.error.c_str());
    info(buf);
  }
  if (!report.ranking.empty()) {
    const std::string best = report.ranking.front();
    std::string name = best;
    std::replace(name.begin(), name.end(), '/', '_');
    const FusionModel model = load_checkpoint(opt.checkpoint_dir / (name + ".tfck"));
    const LoadedSplits d = load_splits(grid.dataset);
    const auto test = pointers(d.test);
    for (const auto& c : report.cells)
      if (c.spec.key() == best) {
        write_cases(c, test, &model, a.out);
        if (a.geometric) write_geometric(compare_to_geometric(c, test, a.dilate), a.out / "geometric.csv");
      }
  }
  return 0;
}

struct PlotArgs {
  fs::path pred;
  fs::path truth;
  fs::path out;
  std::string title;
};

int run_plot(const PlotArgs& a) {
  require_file(a.pred, "prediction trace");
  require_file(a.truth, "truth trace");
  require_parent(a.out);
  plot_trace(read_trace(a.pred), read_trace(a.truth), a.out, a.title);
  info("wrote " + a.out.string());
  return 0;
}

int run_validate(const fs::path& dir) {
  require_dir(dir, "dataset");
  const Manifest m = read_manifest(dir);
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) {
      ++failures;
      std::cerr << "FAIL " << what << "\n";
    }
  };
  try {
    const SplitSummary s = check_split_hygiene(m);
    info("splits: " + std::to_string(s.n_train) + " train, " + std::to_string(s.n_val) + " val, " +
         std::to_string(s.n_test) + " test (hash " + s.hash + ")");
  } catch (const Error& e) {
    check(false, std::string("split hygiene: ") + e.what());
  }
  check(static_cast<int>(m.entries.size()) == 2 * m.n_scenes, "two samples per scene");
  for (const auto& e : m.entries) {
    try {
      const MultiViewSample s = load_sample(dir, e);
      s.validate();
      check(s.sample_id == e.sample_id, e.sample_id + ": blob id matches manifest");
      check(s.views[0].width() == m.crop_size && s.views[0].channels() == m.channels, e.sample_id + ": dimensions");
      check(parse_trace(format_trace(s.truth)).radii_mm == s.truth.radii_mm, e.sample_id + ": trace round trip");
      debug("ok " + e.sample_id);
    } catch (const Error& err) {
      check(false, e.sample_id + ": " + err.what());
    }
  }
  if (failures) {
    std::cerr << failures << " check(s) failed\n";
    return kRuntimeError;
  }
  info("all checks passed for " + std::to_string(m.entries.size()) + " samples");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-forge: multi-view eyeglass frame tracing"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option defaults; flags on the command line win");
  std::uint64_t seed = default_seed();
  int jobs = 1;
  bool quiet = false;
  int verbose = 0;
  app.add_option("--seed", seed, "RNG seed (default 42, or $TRACE_FORGE_SEED)")->capture_default_str();
  app.add_option("--jobs,-j", jobs, "Worker threads for generation and grid cells")->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", verbose, "More diagnostics on stderr");
  app.add_flag("--quiet,-q", quiet, "Errors only");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Render a synthetic multi-view dataset");
  c_gen->add_option("--scenes", gen.scenes, "Two-eye captures to render (>= 10)")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--channels", gen.channels, "Image channels (1 or 3)")->check(CLI::IsMember({1, 3}))->capture_default_str();
  c_gen->add_option("--crop", gen.crop, "Per-eye crop size in pixels")->check(CLI::Range(64, 1024))->capture_default_str();
  c_gen->add_option("--nose-prob", gen.nose, "Probability of nose clutter touching the rim")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_gen->add_option("--rig", gen.rig, "Rig file (working distance, focal length, image size are used)");

  ExportArgs exp;
  auto* c_exp = app.add_subcommand("export", "Write one sample's masks, crop rig and truth trace");
  c_exp->add_option("--data", exp.data, "Dataset directory")->required();
  c_exp->add_option("--sample", exp.sample, "Sample id, e.g. s00003_left")->required();
  c_exp->add_option("--out", exp.out, "Output directory")->required();

  TraceArgs tr;
  auto* c_tr = app.add_subcommand("trace-geometric", "Classical multi-view trace from four masks");
  c_tr->add_option("--masks", tr.masks, "Directory holding mask_0.pgm .. mask_3.pgm")->required();
  c_tr->add_option("--rig", tr.rig, "Rig file matching the masks")->required();
  c_tr->add_option("--out", tr.out, "Output directory; writes <eye>.trace")->required();
  c_tr->add_option("--eye", tr.eye, "left or right")->check(CLI::IsMember({"left", "right"}))->capture_default_str();
  c_tr->add_option("--center", tr.center, "boxing or centroid")
      ->check(CLI::IsMember({"boxing", "centroid"}))
      ->capture_default_str();

  TrainArgs ta;
  auto* c_train = app.add_subcommand("train", "Train one fusion model");
  c_train->add_option("--data", ta.data, "Dataset directory")->required();
  c_train->add_option("--out", ta.out, "Checkpoint path (.tfck)")->required();
  c_train->add_option("--modality", ta.modality, "rgb_noseg, gray_depth or rgb_depth")
      ->check(CLI::IsMember({"rgb_noseg", "gray_depth", "rgb_depth"}))
      ->capture_default_str();
  c_train->add_option("--fusion", ta.fusion, "early_max, early_learned, late_max or late_learned")
      ->check(CLI::IsMember({"early_max", "early_learned", "late_max", "late_learned"}))
      ->capture_default_str();
  c_train->add_option("--size", ta.size, "S, M or L")->check(CLI::IsMember({"S", "M", "L"}))->capture_default_str();
  c_train->add_option("--epochs", ta.epochs, "Epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_train->add_option("--batch", ta.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  c_train->add_option("--lr", ta.lr, "Adam learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_train->add_flag("--augment", ta.augment, "Enable training augmentation");
  c_train->add_option("--downsample", ta.downsample, "Input area-downsampling factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_train->add_option("--loss", ta.loss, "mse or l1")->check(CLI::IsMember({"mse", "l1"}))->capture_default_str();
  c_train->add_option("--history", ta.history, "CSV file for per-epoch history");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Run an experiment grid or evaluate one checkpoint");
  c_eval->add_option("--grid", ev.grid, "Grid file (key = value)");
  c_eval->add_option("--model", ev.model, "Checkpoint to evaluate instead of a grid");
  c_eval->add_option("--data", ev.data, "Dataset directory (overrides the grid's)");
  c_eval->add_option("--out", ev.out, "Report directory")->required();
  c_eval->add_flag("--geometric", ev.geometric, "Also compare against the classical tracer");
  c_eval->add_option("--dilate", ev.dilate, "Dilate masks by N px for the classical tracer")->capture_default_str();

  PlotArgs pl;
  auto* c_plot = app.add_subcommand("plot", "SVG polar plot of a predicted and a true trace");
  c_plot->add_option("--pred", pl.pred, "Predicted trace file")->required();
  c_plot->add_option("--truth", pl.truth, "Ground-truth trace file")->required();
  c_plot->add_option("--out", pl.out, "SVG output path")->required();
  c_plot->add_option("--title", pl.title, "Plot title");

  fs::path validate_dir;
  auto* c_val = app.add_subcommand("validate", "Check a dataset's invariants");
  c_val->add_option("dir", validate_dir, "Dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  verbosity = quiet ? 0 : 1 + verbose;

  try {
    if (*c_gen) return run_generate(gen, seed, jobs);
    if (*c_exp) return run_export(exp);
    if (*c_tr) return run_trace_geometric(tr);
    if (*c_train) return run_train(ta, seed);
    if (*c_eval) return run_evaluate(ev, seed, jobs);
    if (*c_plot) return run_plot(pl);
    if (*c_val) return run_validate(validate_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
