#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mrnom/error.hpp"

namespace mrnom {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major single-channel raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : w_(width), h_(height), px_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    require(width >= 0 && height >= 0, ErrorCode::InvalidArgument, "negative raster dimensions");
  }

  int width() const noexcept { return w_; }
  int height() const noexcept { return h_; }
  std::size_t size() const noexcept { return px_.size(); }
  bool empty() const noexcept { return px_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < w_ && y < h_; }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return px_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return px_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return px_[i]; }
  const T& operator[](std::size_t i) const noexcept { return px_[i]; }

  /// Replicate-padded read.
  const T& clamped(int x, int y) const noexcept {
    return (*this)(std::clamp(x, 0, w_ - 1), std::clamp(y, 0, h_ - 1));
  }

  std::span<T> data() noexcept { return px_; }
  std::span<const T> data() const noexcept { return px_; }
  std::vector<T>& storage() noexcept { return px_; }
  const std::vector<T>& storage() const noexcept { return px_; }

  template <typename U>
  bool same_shape(const Raster<U>& o) const noexcept {
    return w_ == o.width() && h_ == o.height();
  }

  void fill(T v) { std::fill(px_.begin(), px_.end(), v); }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.w_ == b.w_ && a.h_ == b.h_ && a.px_ == b.px_;
  }

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<T> px_;
};

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  require(a.same_shape(b), ErrorCode::InvalidArgument, what);
}

struct ValueRange {
  double lo = 0.0;
  double hi = 255.0;
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

/// Real-valued raster that carries its declared value range.
class GrayMap : public Raster<double> {
 public:
  GrayMap() = default;
  GrayMap(int width, int height, double fill = 0.0, ValueRange range = {0.0, 255.0})
      : Raster<double>(width, height, fill), range_(range) {}

  ValueRange range() const noexcept { return range_; }
  void set_range(ValueRange r) noexcept { range_ = r; }

  /// Throws if any value is non-finite or lies outside the declared range.
  void check_range(double tol = 1e-9) const {
    for (double v : data()) {
      require(std::isfinite(v), ErrorCode::Internal, "non-finite value in GrayMap");
      require(v >= range_.lo - tol && v <= range_.hi + tol, ErrorCode::Internal, "GrayMap value outside declared range");
    }
  }

  friend bool operator==(const GrayMap& a, const GrayMap& b) {
    return static_cast<const Raster<double>&>(a) == static_cast<const Raster<double>&>(b) && a.range_ == b.range_;
  }

 private:
  ValueRange range_{0.0, 255.0};
};

/// 0/1 per pixel.
using BinaryMask = Raster<std::uint8_t>;

/// 0 is background; instances are 1..K.
using LabelMap = Raster<std::int32_t>;

/// Interleaved 8-bit image with 1 or 3 channels, as read from disk.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y, int c) const noexcept {
    return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                      static_cast<std::size_t>(channels) +
                  static_cast<std::size_t>(c)];
  }
  friend bool operator==(const Image8&, const Image8&) = default;
};

enum class Connectivity { Four = 4, Eight = 8 };

/// Neighbour offsets in a fixed order: N, W, E, S, then diagonals NW, NE, SW, SE.
inline constexpr int kDx[8] = {0, -1, 1, 0, -1, 1, -1, 1};
inline constexpr int kDy[8] = {-1, 0, 0, 1, -1, -1, 1, 1};
inline constexpr int neighbour_count(Connectivity c) { return c == Connectivity::Four ? 4 : 8; }

}  // namespace mrnom
