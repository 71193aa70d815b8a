#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unistd.h>

namespace oracle {

namespace {
std::string fmt_g(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}
}  // namespace

using namespace tforge;

double superellipse_polygon_radius(double a, double b, double p, double theta, int n) {
  auto pt = [&](int i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const double c = std::cos(t), s = std::sin(t);
    return std::array<double, 2>{a * std::copysign(std::pow(std::abs(c), 2.0 / p), c),
                                 b * std::copysign(std::pow(std::abs(s), 2.0 / p), s)};
  };
  const double dx = std::cos(theta), dy = std::sin(theta);
  double best = std::numeric_limits<double>::quiet_NaN();
  auto prev = pt(0);
  for (int i = 1; i <= n; ++i) {
    const auto cur = pt(i % n);
    const double ex = cur[0] - prev[0], ey = cur[1] - prev[1];
    const double den = dx * ey - dy * ex;
    if (den != 0.0) {
      const double r = (prev[0] * ey - prev[1] * ex) / den;
      const double s = (prev[0] * dy - prev[1] * dx) / den;
      if (r > 0.0 && s >= 0.0 && s <= 1.0) best = r;
    }
    prev = cur;
  }
  return best;
}

double ellipse_radius(double a, double b, double theta) {
  const double c = b * std::cos(theta), s = a * std::sin(theta);
  return a * b / std::sqrt(c * c + s * s);
}

std::array<std::array<double, 4>, 3> projection_matrix(const PinholeCamera& cam) {
  const double k[3][3] = {{cam.focal_px, 0.0, cam.principal_point.x()},
                          {0.0, cam.focal_px, cam.principal_point.y()},
                          {0.0, 0.0, 1.0}};
  double rt[3][4];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rt[r][c] = cam.rotation(r, c);
    rt[r][3] = cam.translation(r);
  }
  std::array<std::array<double, 4>, 3> p{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int m = 0; m < 3; ++m) acc += k[r][m] * rt[m][c];
      p[r][c] = acc;
    }
  return p;
}

Vec2 apply_projection(const std::array<std::array<double, 4>, 3>& p, const Vec3& x) {
  double h[3];
  for (int r = 0; r < 3; ++r) h[r] = p[r][0] * x.x() + p[r][1] * x.y() + p[r][2] * x.z() + p[r][3];
  return {h[0] / h[2], h[1] / h[2]};
}

Summary summarize(std::vector<double> v) {
  Summary s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.min = v.front();
  s.max = v.back();
  double acc = 0.0;
  for (double x : v) {
    acc += x;
    s.under_1mm += x < 1.0;
  }
  s.mean = acc / static_cast<double>(n);
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  s.frac_under_1mm = static_cast<double>(s.under_1mm) / static_cast<double>(n);
  return s;
}

// Gradients below 1e-5 in magnitude are compared on an absolute scale: the
// central difference itself carries ~1e-10 of truncation error at step 1e-5.
double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / scale;
}

FdResult finite_difference_check(ParamStore& store, const std::function<Tape::Id(Tape&)>& loss, double step) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape;
    return tape.value(loss(tape)).data[0];
  };
  FdResult res;
  for (auto& p : store.params()) {
    if (p.frozen) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data[i];
      p.value.data[i] = keep + step;
      const double up = eval();
      p.value.data[i] = keep - step;
      const double down = eval();
      p.value.data[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p.grad.data.empty() ? 0.0 : p.grad.data[i];
      const double err = relative_error(analytic, numeric);
      if (err > res.max_rel_err) {
        res.max_rel_err = err;
        res.worst = p.name + "[" + std::to_string(i) + "] analytic " + fmt_g(analytic) + " numeric " + fmt_g(numeric);
      }
      ++res.checked;
    }
  }
  return res;
}

EncoderSpec micro_spec(int in_channels) {
  EncoderSpec s;
  s.in_channels = in_channels;
  s.stages = {ConvStage{3, 2, 8}, ConvStage{3, 2, 64}};
  s.head_hidden = 6;
  return s;
}

ViewInputs random_inputs(std::uint64_t seed, int channels, int size) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  ViewInputs v;
  for (auto& t : v) {
    t.channels = channels;
    t.height = size;
    t.width = size;
    t.data.resize(static_cast<std::size_t>(channels) * size * size);
    for (double& x : t.data) x = nd(gen);
  }
  return v;
}

MultiViewSample circle_sample(double radius_mm, const Vec3& center, Eye eye) {
  RigLayout layout;
  layout.focal_px = 2000.0;
  const CameraRig rig = default_rig(layout);
  const FramePlane plane = FramePlane::from_normal(center, Vec3(0.0, 0.0, -1.0));
  return render_views(FrameContour::circle(radius_mm, plane), rig, RenderConfig{}, eye, 4.0);
}

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = std::filesystem::temp_directory_path() /
          ("tforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), dir).string(), read_file(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
