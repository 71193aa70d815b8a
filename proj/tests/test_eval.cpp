#include <algorithm>
#include <cmath>
#include <random>
#include <regex>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/error.hpp"
#include "tforge/evalharness.hpp"

using namespace tforge;

namespace {

CellResult fake_cell(std::mt19937_64& gen, const CellSpec& spec, int n_samples) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  CellResult c;
  c.spec = spec;
  c.ok = true;
  std::vector<TraceErrorReport> per;
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> e(RadialTrace::kPoints);
    for (double& x : e) x = u(gen);
    per.push_back(summarize_errors(e));
    c.samples.push_back({"s" + std::to_string(10000 + s) + "_left", per.back()});
  }
  c.stats = pool_errors(per);
  c.best_epoch = 3;
  c.best_val_mean_mm = 0.123456789012345;
  c.wall_seconds = 1.5;
  return c;
}

ExperimentReport fake_report() {
  std::mt19937_64 gen(12);
  ExperimentReport r;
  r.grid.dataset = "/tmp/ds";
  r.grid.modalities = {Modality::kGrayDepth, Modality::kRgbNoseg};
  r.grid.fusions = FusionStrategy::all();
  r.grid.train.epochs = 7;
  r.split = {"0123456789abcdef", 16, 2, 2};
  r.baseline = fake_cell(gen, {}, 4);
  for (const auto& spec : r.grid.cells()) r.cells.push_back(fake_cell(gen, spec, 4));
  r.cells[3].ok = false;
  r.cells[3].error = "DivergenceDetected: non-finite loss";
  r.cells[3].samples.clear();
  r.cells[3].stats = {};
  r.ranking = rank_cells(r.cells);
  r.wall_seconds = 12.25;
  return r;
}

std::vector<Vec2> path_points(const std::string& svg, const std::string& id) {
  const auto at = svg.find("<path id=\"" + id + "\" d=\"");
  REQUIRE(at != std::string::npos);
  const auto start = svg.find(" d=\"", at) + 4;
  const std::string d = svg.substr(start, svg.find('"', start) - start);
  std::vector<Vec2> pts;
  const std::regex num(R"(([-0-9.]+),([-0-9.]+))");
  for (auto it = std::sregex_iterator(d.begin(), d.end(), num); it != std::sregex_iterator(); ++it)
    pts.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  return pts;
}

}  // namespace

TEST_CASE("grid parsing") {
  const ExperimentGrid g = ExperimentGrid::parse(
      "dataset = data\nmodalities = gray_depth, rgb_depth rgb_noseg\nsizes = S M\n"
      "fusions = late_max early_learned\nseeds = 1 2\nepochs = 3\nbatch_size = 4\n"
      "learning_rate = 0.001\naugment = true\nloss = l1\ndownsample = 8\n",
      "/base");
  CHECK(g.dataset == std::filesystem::path("/base/data"));
  CHECK(g.modalities.size() == 3);
  CHECK(g.cells().size() == 3 * 2 * 2 * 2);
  CHECK(g.train.epochs == 3);
  CHECK(g.train.batch_size == 4);
  CHECK(g.train.learning_rate == 0.001);
  CHECK(g.train.augment);
  CHECK(g.train.loss == LossKind::kL1);
  CHECK(g.downsample == 8);
  CHECK(g.cells()[0].key() == "gray_depth/S/late_max/1");
  CHECK_THROWS_AS(ExperimentGrid::parse("colour = red\n"), Error);
  CHECK_THROWS_AS(ExperimentGrid::parse("fusions =\n"), Error);
  CHECK_THROWS_AS(ExperimentGrid::parse("loss = huber\n"), Error);
}

TEST_CASE("ranking orders by pooled mean with name tie-breaks") {
  std::mt19937_64 gen(3);
  std::vector<CellResult> cells;
  for (const auto& f : FusionStrategy::all()) cells.push_back(fake_cell(gen, {Modality::kGrayDepth, ModelSize::kS, f, 42}, 3));
  cells[1].stats.pooled.mean_mm = cells[2].stats.pooled.mean_mm;  // early_learned ties late_max
  cells[0].ok = false;
  const auto ranking = rank_cells(cells);
  // Oracle: every ordered pair of successful cells compared directly.
  std::vector<const CellResult*> ok;
  for (const auto& c : cells)
    if (c.ok) ok.push_back(&c);
  REQUIRE(ranking.size() == ok.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::size_t better = 0;
    for (const auto* o : ok)
      for (const auto* c : ok)
        if (c->spec.key() == ranking[i] && o != c &&
            (o->stats.pooled.mean_mm < c->stats.pooled.mean_mm ||
             (o->stats.pooled.mean_mm == c->stats.pooled.mean_mm && o->spec.fusion.tag() < c->spec.fusion.tag())))
          ++better;
    CHECK(better == i);
  }
}

TEST_CASE("best, median and worst cases") {
  std::mt19937_64 gen(8);
  for (int n : {3, 4, 7, 20}) {
    std::vector<SampleResult> s;
    std::uniform_int_distribution<int> u(0, 5);
    for (int i = 0; i < n; ++i) {
      SampleResult r;
      r.sample_id = "id" + std::to_string((i * 7919) % 101);
      r.errors.mean_mm = u(gen) * 0.25;  // plenty of ties
      s.push_back(r);
    }
    // Oracle: rank of each sample = number of samples strictly before it.
    auto rank = [&](const SampleResult& a) {
      int k = 0;
      for (const auto& b : s)
        k += b.errors.mean_mm < a.errors.mean_mm || (b.errors.mean_mm == a.errors.mean_mm && b.sample_id < a.sample_id);
      return k;
    };
    const CaseSelection c = select_cases(s);
    for (const auto& r : s) {
      if (r.sample_id == c.best) CHECK(rank(r) == 0);
      if (r.sample_id == c.median) CHECK(rank(r) == n / 2);
      if (r.sample_id == c.worst) CHECK(rank(r) == n - 1);
    }
  }
  CHECK_THROWS_AS(select_cases(std::vector<SampleResult>(2)), Error);
}

TEST_CASE("report JSON round trip") {
  const ExperimentReport r = fake_report();
  const std::string json = report_to_json(r);
  const ExperimentReport back = report_from_json(json);
  CHECK(report_to_json(back) == json);
  CHECK(back.cells == r.cells);
  CHECK(back.baseline == r.baseline);
  CHECK(back.ranking == r.ranking);
  CHECK(back.split == r.split);
  CHECK(back.wall_seconds == r.wall_seconds);
  CHECK(back.grid.cells() == r.grid.cells());

  const std::string untimed = report_to_json(r, false);
  CHECK(untimed.find("wall_seconds") == std::string::npos);
  CHECK_THROWS_AS(report_from_json("{\"format\": \"nope\"}"), Error);
  CHECK_THROWS_AS(report_from_json("not json"), Error);
}

TEST_CASE("under-1mm fraction is recoverable from a report") {
  const ExperimentReport r = report_from_json(report_to_json(fake_report()));
  for (const auto& c : r.cells) {
    if (!c.ok) continue;
    std::size_t under = 0, total = 0;
    for (const auto& s : c.samples)
      for (double e : s.errors.per_point_abs_err) under += e < 1.0, ++total;
    CHECK(c.stats.n_under_1mm == under);
    CHECK(c.stats.n_points == total);
    CHECK(std::abs(c.stats.pooled.frac_under_1mm - static_cast<double>(under) / total) < 1e-12);
  }
}

TEST_CASE("split hygiene") {
  Manifest m;
  m.entries.push_back({"a_left", Split::kTrain, Eye::kLeft, 0, "", "", ""});
  m.entries.push_back({"a_right", Split::kTrain, Eye::kRight, 0, "", "", ""});
  m.entries.push_back({"b_left", Split::kTest, Eye::kLeft, 1, "", "", ""});
  const SplitSummary s = check_split_hygiene(m);
  CHECK(s.n_train == 2);
  CHECK(s.n_test == 1);
  CHECK(s.hash.size() == 16);
  Manifest shuffled = m;
  std::swap(shuffled.entries[0], shuffled.entries[2]);
  CHECK(check_split_hygiene(shuffled).hash == s.hash);

  Manifest leak = m;
  leak.entries.push_back({"b_right", Split::kTrain, Eye::kRight, 1, "", "", ""});
  CHECK_THROWS_AS(check_split_hygiene(leak), Error);
  Manifest dup = m;
  dup.entries.push_back({"a_left", Split::kTrain, Eye::kLeft, 0, "", "", ""});
  CHECK_THROWS_AS(check_split_hygiene(dup), Error);
}

TEST_CASE("SVG overlay geometry") {
  const RadialTrace truth(std::vector<double>(600, 20.0), Eye::kRight);
  std::vector<double> p(600);
  for (int i = 0; i < 600; ++i) p[static_cast<std::size_t>(i)] = 18.0 + std::cos(truth.angle(i));
  const RadialTrace pred(p, Eye::kRight);
  const std::string svg = trace_svg(pred, truth, "case <1>");
  CHECK(svg == trace_svg(pred, truth, "case <1>"));
  CHECK(svg.find("case &lt;1&gt;") != std::string::npos);
  CHECK(svg.find("1/100 mm") != std::string::npos);
  CHECK(svg.find(">2000</text>") != std::string::npos);
  CHECK(svg.find("#1f77b4") != std::string::npos);
  CHECK(svg.find("#ff7f0e") != std::string::npos);

  // 2000 hundredths fill the 220 px plot radius around (260, 260).
  const auto circle = path_points(svg, "truth");
  REQUIRE(circle.size() == 600);
  for (const Vec2& q : circle) CHECK(std::abs((q - Vec2(260, 260)).norm() - 220.0) < 0.5);
  const auto curve = path_points(svg, "prediction");
  REQUIRE(curve.size() == 600);
  for (int i = 0; i < 600; i += 50) {
    const Vec2 q = curve[static_cast<std::size_t>(i)] - Vec2(260, 260);
    CHECK(std::abs(q.norm() - p[static_cast<std::size_t>(i)] * 11.0) < 0.5);
    // Counterclockwise on screen: y grows downward.
    CHECK(std::abs(std::remainder(std::atan2(-q.y(), q.x()) - truth.angle(i), 2 * std::numbers::pi)) < 1e-3);
  }
}

TEST_CASE("dilation") {
  Mask m(7, 7);
  m.at(3, 3) = 1;
  const Mask d = dilate(m, 1);
  CHECK(count_nonzero(d) == 9);
  CHECK(d.at(2, 2) == 1);
  CHECK(d.at(1, 3) == 0);
  CHECK(dilate(m, 0) == m);
  CHECK(count_nonzero(dilate(m, 2)) == 25);
}

TEST_CASE("learned cell against the geometric tracer") {
  std::vector<MultiViewSample> s;
  for (double r : {19.0, 21.0, 23.0}) s.push_back(oracle::circle_sample(r, Vec3(0.0, 0.0, 500.0)));
  for (std::size_t i = 0; i < s.size(); ++i) s[i].sample_id = "c" + std::to_string(i);
  std::vector<const MultiViewSample*> test;
  for (auto& x : s) test.push_back(&x);
  FusionModel m(oracle::micro_spec(2), FusionStrategy{}, 1);
  m.input = {Modality::kGrayDepth, 32};
  m.stats = fit_channel_stats(test, Modality::kGrayDepth);
  m.normalizer = {21.0, 2.0};
  const CellResult cell = evaluate_model(m, test);
  CHECK(cell.ok);
  REQUIRE(cell.samples.size() == 3);
  CHECK(cell.samples[0].sample_id == "c0");

  const GeometricComparison g = compare_to_geometric(cell, test, 0);
  REQUIRE(g.rows.size() == 3);
  for (const auto& row : g.rows) {
    CHECK(row.geometric_ok);
    CHECK(row.geometric_mean_mm < 0.05);
  }
  CHECK(g.learned_win_rate == 0.0);
  const GeometricComparison fat = compare_to_geometric(cell, test, 2);
  CHECK(fat.geometric_mean_mm > g.geometric_mean_mm);
  CHECK_THROWS_AS(compare_to_geometric(cell, {}, 0), Error);
}

TEST_CASE("grid run is complete and repeatable") {
  oracle::TempDir dir("grid");
  build_dataset(10, 5, dir / "data");
  ExperimentGrid g;
  g.dataset = dir / "data";
  g.fusions = FusionStrategy::all();
  g.train.epochs = 2;
  g.train.batch_size = 4;
  g.train.learning_rate = 1e-3;
  g.downsample = 16;
  const ExperimentReport a = run_grid(g);
  RunOptions opt;
  opt.jobs = 2;
  opt.checkpoint_dir = dir.path();
  const ExperimentReport b = run_grid(g, opt);
  CHECK(report_to_json(a, false) == report_to_json(b, false));
  REQUIRE(a.cells.size() == 4);
  CHECK(a.ranking.size() == 4);
  for (const auto& c : a.cells) {
    CHECK(c.ok);
    CHECK(c.samples.size() == 2);
  }
  CHECK(a.baseline.ok);
  CHECK(a.split.n_train == 16);
  CHECK(std::filesystem::exists(dir / "gray_depth_S_late_max_42.tfck"));
}
