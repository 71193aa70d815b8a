#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include "tforge/error.hpp"
#include "tforge/evalharness.hpp"

namespace tforge {

namespace {

constexpr double kSize = 520.0;
constexpr double kCenter = 260.0;
constexpr double kPlotRadius = 220.0;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Trace as a closed path; radii in hundredths of a millimetre, angle
// counterclockwise on screen (SVG y grows downward).
std::string curve(const RadialTrace& t, double px_per_unit, const char* id, const char* color) {
  std::string d;
  for (int i = 0; i < t.size(); ++i) {
    const double r = t.radii_mm[static_cast<std::size_t>(i)] * 100.0 * px_per_unit;
    const double a = t.angle(i);
    d += (i == 0 ? "M" : " L") + fmt("%.3f", kCenter + r * std::cos(a)) + "," + fmt("%.3f", kCenter - r * std::sin(a));
  }
  d += " Z";
  return std::string("<path id=\"") + id + "\" d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.5\"/>\n";
}

}  // namespace

std::string trace_svg(const RadialTrace& pred, const RadialTrace& truth, const std::string& title) {
  pred.validate();
  truth.validate();
  double rmax = 0.0;
  for (double r : pred.radii_mm) rmax = std::max(rmax, r);
  for (double r : truth.radii_mm) rmax = std::max(rmax, r);
  const double step = rmax * 100.0 > 2000.0 ? 1000.0 : 500.0;  // hundredths of a mm
  const double outer = std::max(step, std::ceil(rmax * 100.0 / step) * step);
  const double px_per_unit = kPlotRadius / outer;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kSize) + "\" height=\"" + fmt("%.0f", kSize) +
       "\" viewBox=\"0 0 " + fmt("%.0f", kSize) + " " + fmt("%.0f", kSize) + "\" font-family=\"sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) s += "<text x=\"10\" y=\"20\" font-size=\"13\">" + escape(title) + "</text>\n";
  s += "<g id=\"axes\" stroke=\"#cccccc\" fill=\"none\">\n";
  for (double r = step; r <= outer + 1e-9; r += step)
    s += "<circle cx=\"" + fmt("%.3f", kCenter) + "\" cy=\"" + fmt("%.3f", kCenter) + "\" r=\"" +
         fmt("%.3f", r * px_per_unit) + "\"/>\n";
  for (int k = 0; k < 12; ++k) {
    const double a = k * std::numbers::pi / 6.0;
    s += "<line x1=\"" + fmt("%.3f", kCenter) + "\" y1=\"" + fmt("%.3f", kCenter) + "\" x2=\"" +
         fmt("%.3f", kCenter + kPlotRadius * std::cos(a)) + "\" y2=\"" + fmt("%.3f", kCenter - kPlotRadius * std::sin(a)) +
         "\"/>\n";
  }
  s += "</g>\n<g id=\"labels\" font-size=\"10\" fill=\"#555555\">\n";
  for (double r = step; r <= outer + 1e-9; r += step)
    s += "<text x=\"" + fmt("%.3f", kCenter + 3.0) + "\" y=\"" + fmt("%.3f", kCenter - r * px_per_unit - 2.0) + "\">" +
         fmt("%.0f", r) + "</text>\n";
  s += "<text x=\"" + fmt("%.0f", kSize - 150.0) + "\" y=\"" + fmt("%.0f", kSize - 10.0) +
       "\">radius: 1/100 mm</text>\n</g>\n";
  s += curve(truth, px_per_unit, "truth", "#1f77b4");
  s += curve(pred, px_per_unit, "prediction", "#ff7f0e");
  s += "<g id=\"legend\" font-size=\"12\">\n";
  s += "<line x1=\"10\" y1=\"" + fmt("%.0f", kSize - 34.0) + "\" x2=\"30\" y2=\"" + fmt("%.0f", kSize - 34.0) +
       "\" stroke=\"#1f77b4\" stroke-width=\"2\"/><text x=\"36\" y=\"" + fmt("%.0f", kSize - 30.0) +
       "\">ground truth</text>\n";
  s += "<line x1=\"10\" y1=\"" + fmt("%.0f", kSize - 16.0) + "\" x2=\"30\" y2=\"" + fmt("%.0f", kSize - 16.0) +
       "\" stroke=\"#ff7f0e\" stroke-width=\"2\"/><text x=\"36\" y=\"" + fmt("%.0f", kSize - 12.0) +
       "\">prediction</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

void plot_trace(const RadialTrace& pred, const RadialTrace& truth, const std::filesystem::path& path,
                const std::string& title) {
  const std::string svg = trace_svg(pred, truth, title);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << svg;
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace tforge
