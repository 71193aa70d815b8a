#include "tforge/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tforge/error.hpp"

namespace tforge {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string to_string(Eye eye) { return eye == Eye::kLeft ? "left" : "right"; }

Eye parse_eye(const std::string& s) {
  if (s == "left") return Eye::kLeft;
  if (s == "right") return Eye::kRight;
  fail(ErrorCode::kParseError, "unknown eye '" + s + "'");
}

RadialTrace::RadialTrace(std::vector<double> radii, Eye e, double angle0)
    : radii_mm(std::move(radii)), angle0_rad(angle0), eye(e), flags(radii_mm.size(), kPointOk) {}

double RadialTrace::angle_step() const { return kTwoPi / static_cast<double>(radii_mm.size()); }

double RadialTrace::angle(int i) const { return angle0_rad + angle_step() * i; }

void RadialTrace::validate() const {
  if (radii_mm.size() != static_cast<size_t>(kPoints))
    fail(ErrorCode::kCountMismatch, "trace has " + std::to_string(radii_mm.size()) + " radii, expected 600");
  if (!flags.empty() && flags.size() != radii_mm.size()) fail(ErrorCode::kCountMismatch, "flag count mismatch");
  for (size_t i = 0; i < radii_mm.size(); ++i) {
    const double r = radii_mm[i];
    if (!std::isfinite(r) || r <= 0.0 || r >= kMaxRadiusMm)
      fail(ErrorCode::kInvalidArgument, "radius " + std::to_string(i) + " out of range: " + std::to_string(r));
  }
}

int RadialTrace::flag_out_of_range() {
  flags.resize(radii_mm.size(), kPointOk);
  int n = 0;
  for (size_t i = 0; i < radii_mm.size(); ++i) {
    const double r = radii_mm[i];
    if (!std::isfinite(r) || r <= 0.0 || r >= kMaxRadiusMm) {
      flags[i] |= kOutOfRange;
      ++n;
    }
  }
  return n;
}

bool RadialTrace::any_flag(std::uint8_t f) const {
  return std::any_of(flags.begin(), flags.end(), [f](std::uint8_t v) { return (v & f) != 0; });
}

std::vector<double> normalize(const RadialTrace& trace, const TraceNormalizer& norm) {
  if (!(norm.std_mm > 1e-6)) fail(ErrorCode::kZeroStd, "normalizer std must exceed 1e-6");
  std::vector<double> out(trace.radii_mm.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = (trace.radii_mm[i] - norm.mean_mm) / norm.std_mm;
  return out;
}

std::vector<double> denormalize(std::span<const double> values, const TraceNormalizer& norm) {
  std::vector<double> out(values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = values[i] * norm.std_mm + norm.mean_mm;
  return out;
}

TraceNormalizer fit_normalizer(std::span<const RadialTrace> traces) {
  if (traces.empty()) fail(ErrorCode::kEmptyCollection, "cannot fit a normalizer on no traces");
  // Two passes keep the variance free of catastrophic cancellation.
  double sum = 0.0;
  size_t n = 0;
  for (const auto& t : traces)
    for (double r : t.radii_mm) {
      sum += r;
      ++n;
    }
  if (n == 0) fail(ErrorCode::kEmptyCollection, "traces hold no radii");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& t : traces)
    for (double r : t.radii_mm) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

std::string format_trace(const RadialTrace& trace) {
  std::string out;
  out.reserve(16 * trace.radii_mm.size() + 64);
  out += "TFTRACE 1\n";
  out += "eye " + to_string(trace.eye) + "\n";
  out += "angle0_urad " + std::to_string(std::llround(trace.angle0_rad * 1e6)) + "\n";
  for (double r : trace.radii_mm) {
    if (!std::isfinite(r)) fail(ErrorCode::kInvalidArgument, "cannot serialize a non-finite radius");
    out += std::to_string(std::llround(r * 100.0));
    out += '\n';
  }
  return out;
}

RadialTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) fail(ErrorCode::kParseError, std::string("missing ") + what);
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": CR line ending");
  };
  auto parse_int = [&](std::string_view token) -> long long {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
      fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": expected integer, got '" +
                                       std::string(token) + "'");
    return v;
  };
  auto expect_prefix = [&](const std::string& prefix) -> std::string_view {
    if (line.rfind(prefix, 0) != 0)
      fail(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": expected '" + prefix + "'");
    return std::string_view(line).substr(prefix.size());
  };

  next("format header");
  if (line != "TFTRACE 1") fail(ErrorCode::kParseError, "line 1: unsupported trace format '" + line + "'");
  next("eye line");
  RadialTrace t;
  const auto eye = expect_prefix("eye ");
  if (eye == "left")
    t.eye = Eye::kLeft;
  else if (eye == "right")
    t.eye = Eye::kRight;
  else
    fail(ErrorCode::kParseError, "line 2: unknown eye '" + std::string(eye) + "'");
  next("angle0 line");
  t.angle0_rad = static_cast<double>(parse_int(expect_prefix("angle0_urad "))) * 1e-6;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    t.radii_mm.push_back(static_cast<double>(parse_int(line)) / 100.0);
  }
  if (t.radii_mm.size() != static_cast<size_t>(RadialTrace::kPoints))
    fail(ErrorCode::kCountMismatch, "trace file holds " + std::to_string(t.radii_mm.size()) + " radii, expected 600");
  t.flags.assign(t.radii_mm.size(), kPointOk);
  return t;
}

void write_trace(const RadialTrace& trace, const std::filesystem::path& path) {
  trace.validate();
  const std::string text = format_trace(trace);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

RadialTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

TraceErrorReport summarize_errors(std::vector<double> abs_errors) {
  if (abs_errors.empty()) fail(ErrorCode::kEmptyCollection, "no errors to summarize");
  TraceErrorReport rep;
  double sum = 0.0;
  size_t under = 0;
  rep.min_mm = abs_errors.front();
  rep.max_mm = abs_errors.front();
  for (double e : abs_errors) {
    sum += e;
    under += e < 1.0;
    rep.min_mm = std::min(rep.min_mm, e);
    rep.max_mm = std::max(rep.max_mm, e);
  }
  const size_t n = abs_errors.size();
  rep.mean_mm = sum / static_cast<double>(n);
  rep.frac_under_1mm = static_cast<double>(under) / static_cast<double>(n);
  std::vector<double> sorted = abs_errors;
  std::sort(sorted.begin(), sorted.end());
  rep.median_mm = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  // Rounding in the mean can push it a hair outside [min, max].
  rep.mean_mm = std::clamp(rep.mean_mm, rep.min_mm, rep.max_mm);
  rep.per_point_abs_err = std::move(abs_errors);
  return rep;
}

TraceErrorReport trace_error(const RadialTrace& pred, const RadialTrace& truth) {
  if (pred.eye != truth.eye) fail(ErrorCode::kAngleMismatch, "traces belong to different eyes");
  if (std::abs(pred.angle0_rad - truth.angle0_rad) > 1e-9)
    fail(ErrorCode::kAngleMismatch, "traces use different angle origins");
  if (pred.radii_mm.size() != truth.radii_mm.size()) fail(ErrorCode::kCountMismatch, "traces differ in length");
  std::vector<double> err(pred.radii_mm.size());
  for (size_t i = 0; i < err.size(); ++i) err[i] = std::abs(pred.radii_mm[i] - truth.radii_mm[i]);
  return summarize_errors(std::move(err));
}

PooledErrors pool_errors(std::span<const TraceErrorReport> per_sample) {
  if (per_sample.empty()) fail(ErrorCode::kEmptyCollection, "no per-sample reports to pool");
  std::vector<double> all;
  std::vector<double> means;
  for (const auto& r : per_sample) {
    all.insert(all.end(), r.per_point_abs_err.begin(), r.per_point_abs_err.end());
    means.push_back(r.mean_mm);
  }
  PooledErrors out;
  out.n_points = all.size();
  out.n_under_1mm = static_cast<size_t>(std::count_if(all.begin(), all.end(), [](double e) { return e < 1.0; }));
  out.pooled = summarize_errors(std::move(all));
  out.pooled.per_point_abs_err.clear();
  const auto by_sample = summarize_errors(std::move(means));
  out.mean_of_sample_means = by_sample.mean_mm;
  out.median_of_sample_means = by_sample.median_mm;
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "masks differ in size");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const bool x = a.data[i] != 0, y = b.data[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RadialTrace rotate_trace(const RadialTrace& trace, double angle_rad) {
  const int n = trace.size();
  RadialTrace out = trace;
  const double shift = angle_rad / trace.angle_step();
  const double k = std::round(shift);
  auto at = [&](long long i) { return trace.radii_mm[static_cast<size_t>(((i % n) + n) % n)]; };
  if (std::abs(shift - k) < 1e-9) {
    const auto ki = static_cast<long long>(k);
    for (int i = 0; i < n; ++i) {
      out.radii_mm[i] = at(i - ki);
      if (!trace.flags.empty()) out.flags[i] = trace.flags[static_cast<size_t>((((i - ki) % n) + n) % n)];
    }
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const double src = i - shift;
    const double fl = std::floor(src);
    const double t = src - fl;
    const auto j = static_cast<long long>(fl);
    const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
    // Catmull-Rom
    out.radii_mm[i] = p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  }
  return out;
}

}  // namespace tforge
