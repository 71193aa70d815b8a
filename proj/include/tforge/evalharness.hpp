#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tforge/fusion_model.hpp"
#include "tforge/synthgen.hpp"
#include "tforge/train.hpp"

namespace tforge {

struct CellSpec {
  Modality modality = Modality::kGrayDepth;
  ModelSize size = ModelSize::kS;
  FusionStrategy fusion{};
  std::uint64_t seed = 42;

  /// "gray_depth/S/late_max/42"
  std::string key() const;
  friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

/// Cartesian product of modalities x sizes x fusions x seeds over one
/// dataset, all trained with the same TrainConfig.
struct ExperimentGrid {
  std::filesystem::path dataset;
  std::vector<Modality> modalities{Modality::kGrayDepth};
  std::vector<ModelSize> sizes{ModelSize::kS};
  std::vector<FusionStrategy> fusions{FusionStrategy{}};
  std::vector<std::uint64_t> seeds{42};
  TrainConfig train{};
  int downsample = 4;

  void validate() const;
  std::vector<CellSpec> cells() const;

  /// `key = value` file: dataset, modalities, sizes, fusions, seeds (comma
  /// or space separated lists), epochs, batch_size, learning_rate, augment
  /// (true/false), loss (mse/l1), downsample. A relative dataset path is
  /// resolved against `base_dir`.
  static ExperimentGrid parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentGrid load(const std::filesystem::path& path);
  friend bool operator==(const ExperimentGrid&, const ExperimentGrid&) = default;
};

struct SampleResult {
  std::string sample_id;
  TraceErrorReport errors;  // includes the 600 per-point absolute errors
  friend bool operator==(const SampleResult&, const SampleResult&) = default;
};

struct CellResult {
  CellSpec spec;
  bool ok = false;
  std::string error;  // set when training or evaluation failed
  PooledErrors stats;
  std::vector<SampleResult> samples;  // test split, manifest order
  int best_epoch = -1;
  double best_val_mean_mm = 0.0;
  double wall_seconds = 0.0;
  friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct SplitSummary {
  std::string hash;  // FNV-1a 64 over sorted "split sample_id" lines, hex
  int n_train = 0;
  int n_val = 0;
  int n_test = 0;
  friend bool operator==(const SplitSummary&, const SplitSummary&) = default;
};

struct ExperimentReport {
  ExperimentGrid grid;
  SplitSummary split;
  /// Predict-the-training-mean-trace baseline on the test split.
  CellResult baseline;
  std::vector<CellResult> cells;
  std::vector<std::string> ranking;  // cell keys, best first
  double wall_seconds = 0.0;
  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Throws InvalidArgument when a sample id or a scene appears in more than
/// one split.
SplitSummary check_split_hygiene(const Manifest& manifest);

struct RunOptions {
  int jobs = 1;
  /// When set, each cell's best checkpoint is saved here as <key>.tfck
  /// with '/' replaced by '_'.
  std::filesystem::path checkpoint_dir;
  std::function<void(const std::string&)> log;
};

/// Trains and evaluates every cell. A failing cell is recorded with its
/// error message; the remaining cells still run.
ExperimentReport run_grid(const ExperimentGrid& grid, const RunOptions& options = {});

/// Evaluates an already trained model on the test split.
CellResult evaluate_model(const FusionModel& model, const std::vector<const MultiViewSample*>& test);

/// Successful cells ordered by ascending pooled mean error; ties broken by
/// (modality, size, fusion, seed) names. Failed cells are left out.
std::vector<std::string> rank_cells(const std::vector<CellResult>& cells);

struct CaseSelection {
  std::string best;
  std::string median;  // element floor(n / 2) of the ascending order
  std::string worst;
};

/// Order by per-sample mean error, ties by sample id. Throws TooFewSamples
/// below three samples.
CaseSelection select_cases(const std::vector<SampleResult>& samples);

struct GeometricRow {
  std::string sample_id;
  double learned_mean_mm = 0.0;
  double geometric_mean_mm = 0.0;
  bool geometric_ok = true;
  int occluded_points = 0;
  std::string note;
};

struct GeometricComparison {
  std::vector<GeometricRow> rows;
  int dilate_px = 0;
  double learned_mean_mm = 0.0;
  double geometric_mean_mm = 0.0;  // over samples where the tracer succeeded
  double learned_win_rate = 0.0;   // fraction of rows where learned < geometric
};

/// Runs the classical multi-view tracer on the test samples (masks
/// optionally dilated by `dilate_px` to simulate segmentation error) and
/// compares it against the cell's per-sample errors. Throws TooFewSamples
/// on an empty test split.
GeometricComparison compare_to_geometric(const CellResult& cell, const std::vector<const MultiViewSample*>& test,
                                         int dilate_px = 0);

/// Square-structuring-element dilation.
Mask dilate(const Mask& mask, int radius_px);

/// JSON report with a fixed key order. Timing fields are omitted when
/// `include_timing` is false, which makes repeated runs byte-comparable.
std::string report_to_json(const ExperimentReport& report, bool include_timing = true);
ExperimentReport report_from_json(const std::string& text);
void write_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport read_report(const std::filesystem::path& path);

/// Polar overlay of truth (blue) and prediction (orange); radial axis
/// labelled in hundredths of a millimetre. Output depends only on the
/// inputs.
std::string trace_svg(const RadialTrace& pred, const RadialTrace& truth, const std::string& title = {});
void plot_trace(const RadialTrace& pred, const RadialTrace& truth, const std::filesystem::path& path,
                const std::string& title = {});

}  // namespace tforge
