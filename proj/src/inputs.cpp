#include "tforge/inputs.hpp"

#include <cmath>

#include "tforge/error.hpp"

namespace tforge {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kRgbNoseg: return "rgb_noseg";
    case Modality::kGrayDepth: return "gray_depth";
    case Modality::kRgbDepth: return "rgb_depth";
  }
  return "gray_depth";
}

Modality parse_modality(const std::string& s) {
  if (s == "rgb_noseg") return Modality::kRgbNoseg;
  if (s == "gray_depth") return Modality::kGrayDepth;
  if (s == "rgb_depth") return Modality::kRgbDepth;
  fail(ErrorCode::kInvalidArgument, "unknown modality '" + s + "' (rgb_noseg, gray_depth, rgb_depth)");
}

int channel_count(Modality m) {
  switch (m) {
    case Modality::kRgbNoseg: return 3;
    case Modality::kGrayDepth: return 2;
    case Modality::kRgbDepth: return 4;
  }
  return 0;
}

bool uses_mask(Modality m) { return m != Modality::kRgbNoseg; }

std::vector<ImageF> raw_channels(const View& view, Modality m) {
  const int have = view.channels();
  std::vector<ImageF> out;
  if (m == Modality::kGrayDepth) {
    if (have == 1) {
      out.push_back(view.image[0]);
    } else if (have == 3) {
      ImageF gray(view.width(), view.height());
      for (std::size_t i = 0; i < gray.data.size(); ++i)
        gray.data[i] = static_cast<float>(0.299 * view.image[0].data[i] + 0.587 * view.image[1].data[i] +
                                          0.114 * view.image[2].data[i]);
      out.push_back(std::move(gray));
    } else {
      fail(ErrorCode::kModalityMismatch, "sample has no usable image channels");
    }
  } else {
    if (have != 3) fail(ErrorCode::kModalityMismatch, to_string(m) + " needs RGB views");
    out = view.image;
  }
  if (m != Modality::kRgbNoseg) {
    ImageF d = view.depth;
    for (auto& v : d.data) v = static_cast<float>(v / 255.0);
    out.push_back(std::move(d));
  }
  return out;
}

ChannelStats fit_channel_stats(std::span<const MultiViewSample* const> train, Modality m) {
  if (train.empty()) fail(ErrorCode::kEmptyCollection, "channel statistics need training samples");
  const int C = channel_count(m);
  const bool masked = uses_mask(m);
  std::vector<double> sum(C, 0.0), sq(C, 0.0);
  double n = 0.0;
  // Two passes over the data for a numerically stable variance.
  for (const auto* s : train)
    for (const auto& v : s->views) {
      const auto ch = raw_channels(v, m);
      for (std::size_t i = 0; i < v.mask.data.size(); ++i) {
        if (masked && !v.mask.data[i]) continue;
        for (int c = 0; c < C; ++c) sum[c] += ch[c].data[i];
        n += 1.0;
      }
    }
  if (n == 0.0) fail(ErrorCode::kEmptyCollection, "no pixels to fit channel statistics on");
  ChannelStats st;
  st.modality = m;
  st.mean.resize(C);
  for (int c = 0; c < C; ++c) st.mean[c] = sum[c] / n;
  for (const auto* s : train)
    for (const auto& v : s->views) {
      const auto ch = raw_channels(v, m);
      for (std::size_t i = 0; i < v.mask.data.size(); ++i) {
        if (masked && !v.mask.data[i]) continue;
        for (int c = 0; c < C; ++c) sq[c] += (ch[c].data[i] - st.mean[c]) * (ch[c].data[i] - st.mean[c]);
      }
    }
  st.stddev.resize(C);
  for (int c = 0; c < C; ++c) st.stddev[c] = std::max(std::sqrt(sq[c] / n), 1e-6);
  return st;
}

ViewInputs build_input(const MultiViewSample& sample, const InputSpec& spec, const ChannelStats& stats,
                       bool* degenerate) {
  const Modality m = spec.modality;
  if (stats.modality != m || static_cast<int>(stats.mean.size()) != channel_count(m))
    fail(ErrorCode::kModalityMismatch, "channel statistics were fit for " + to_string(stats.modality));
  const int f = spec.downsample;
  if (f < 1) fail(ErrorCode::kInvalidArgument, "downsample factor must be >= 1");
  const bool masked = uses_mask(m);
  if (degenerate) *degenerate = false;

  ViewInputs out;
  for (std::size_t vi = 0; vi < 4; ++vi) {
    const View& v = sample.views[vi];
    if (v.width() % f != 0 || v.height() % f != 0)
      fail(ErrorCode::kShapeMismatch, "crop size is not a multiple of the downsample factor");
    const auto ch = raw_channels(v, m);
    if (masked && count_nonzero(v.mask) == 0 && degenerate) *degenerate = true;
    InputTensor& t = out[vi];
    t.channels = channel_count(m);
    t.height = v.height() / f;
    t.width = v.width() / f;
    t.modality = m;
    t.mask_applied = masked;
    t.data.assign(static_cast<std::size_t>(t.channels) * t.height * t.width, 0.0);
    const double inv_area = 1.0 / (f * f);
    for (int c = 0; c < t.channels; ++c) {
      const double mu = stats.mean[c], inv_sd = 1.0 / stats.stddev[c];
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) {
          double acc = 0.0;
          for (int dy = 0; dy < f; ++dy)
            for (int dx = 0; dx < f; ++dx) {
              const int px = x * f + dx, py = y * f + dy;
              if (masked && !v.mask.at(px, py)) continue;
              acc += (ch[c].at(px, py) - mu) * inv_sd;
            }
          t.data[(static_cast<std::size_t>(c) * t.height + y) * t.width + x] = acc * inv_area;
        }
    }
  }
  return out;
}

}  // namespace tforge
