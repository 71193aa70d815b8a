#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace tforge {

// Row-major single-channel raster. Pixel (x, y) has its center at integer
// coordinates (x, y) in the owning camera's image frame.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return data[static_cast<size_t>(y) * width + x];
  }
  const T& at(int x, int y) const {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return data[static_cast<size_t>(y) * width + x];
  }
  bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool empty() const { return data.empty(); }
  template <typename U>
  bool same_shape(const Image<U>& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const Image&, const Image&) = default;
};

using ImageF = Image<float>;
using Mask = Image<std::uint8_t>;

inline std::size_t count_nonzero(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data) n += v != 0;
  return n;
}

}  // namespace tforge
