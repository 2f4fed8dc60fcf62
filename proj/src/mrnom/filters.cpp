#include "mrnom/filters.hpp"

#include <array>
#include <numbers>
#include <numeric>

namespace mrnom {

Kernel::Kernel(int side_, std::vector<double> w, bool even) : side(side_), weights(std::move(w)), even_sided(even) {
  require(side > 0, ErrorCode::InvalidArgument, "kernel side must be positive");
  require(weights.size() == static_cast<std::size_t>(side) * static_cast<std::size_t>(side), ErrorCode::InvalidArgument,
          "kernel weight count does not match side");
  require(even_sided || side % 2 == 1, ErrorCode::InvalidArgument, "symmetric kernels must have odd side");
}

double Kernel::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

Kernel Kernel::transposed() const {
  Kernel t = *this;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) t.at(i, j) = at(j, i);
  return t;
}

GrayMap convolve(const GrayMap& img, const Kernel& k) {
  require(!img.empty(), ErrorCode::InvalidArgument, "empty image");
  const int a = k.anchor();
  GrayMap out(img.width(), img.height(), 0.0, img.range());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int j = 0; j < k.side; ++j)
        for (int i = 0; i < k.side; ++i) acc += k.at(i, j) * img.clamped(x - (i - a), y - (j - a));
      out(x, y) = acc;
    }
  }
  return out;
}

GrayMap convolve_separable(const GrayMap& img, const std::vector<double>& row, const std::vector<double>& col) {
  require(!img.empty(), ErrorCode::InvalidArgument, "empty image");
  require(row.size() == col.size() && row.size() % 2 == 1, ErrorCode::InvalidArgument, "separable taps must be odd and equal");
  const int side = static_cast<int>(row.size());
  const int a = side / 2;
  const int w = img.width();
  const int h = img.height();

  GrayMap tmp(w, h, 0.0, img.range());
  std::vector<double> line(static_cast<std::size_t>(w + 2 * a));
  for (int y = 0; y < h; ++y) {
    for (int x = -a; x < w + a; ++x) line[static_cast<std::size_t>(x + a)] = img.clamped(x, y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      // sample at x - (i - a) => line index x - i + 2a
      const double* base = line.data() + x + 2 * a;
      for (int i = 0; i < side; ++i) acc += row[static_cast<std::size_t>(i)] * base[-i];
      tmp(x, y) = acc;
    }
  }
  GrayMap out(w, h, 0.0, img.range());
  std::vector<double> colbuf(static_cast<std::size_t>(h + 2 * a));
  for (int x = 0; x < w; ++x) {
    for (int y = -a; y < h + a; ++y) colbuf[static_cast<std::size_t>(y + a)] = tmp.clamped(x, y);
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      const double* base = colbuf.data() + y + 2 * a;
      for (int j = 0; j < side; ++j) acc += col[static_cast<std::size_t>(j)] * base[-j];
      out(x, y) = acc;
    }
  }
  return out;
}

Kernel gaussian_kernel(double sd, int side) {
  require(sd > 0.0, ErrorCode::InvalidArgument, "gaussian sd must be positive");
  require(side > 0 && side % 2 == 1, ErrorCode::InvalidArgument, "gaussian side must be odd");
  const int a = side / 2;
  std::vector<double> w(static_cast<std::size_t>(side * side));
  double total = 0.0;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const double dx = i - a;
      const double dy = j - a;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sd * sd));
      w[static_cast<std::size_t>(j * side + i)] = v;
      total += v;
    }
  for (double& v : w) v /= total;
  return Kernel(side, std::move(w));
}

int log_kernel_side(double sd) {
  int side = static_cast<int>(std::ceil(6.0 * sd + 1.0 - 1e-9));
  if (side % 2 == 0) ++side;
  return side;
}

namespace {

std::vector<double> gauss_1d(double sd, int side) {
  const int a = side / 2;
  std::vector<double> g(static_cast<std::size_t>(side));
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sd);
  for (int i = 0; i < side; ++i) {
    const double t = i - a;
    g[static_cast<std::size_t>(i)] = norm * std::exp(-t * t / (2.0 * sd * sd));
  }
  return g;
}

std::vector<double> gauss_1d_second(double sd, int side) {
  const int a = side / 2;
  std::vector<double> g = gauss_1d(sd, side);
  for (int i = 0; i < side; ++i) {
    const double t = i - a;
    g[static_cast<std::size_t>(i)] *= (t * t - sd * sd) / (sd * sd * sd * sd);
  }
  return g;
}

}  // namespace

Kernel log_kernel(double sd) {
  require(sd > 0.0, ErrorCode::InvalidArgument, "LoG sd must be positive");
  const int side = log_kernel_side(sd);
  const auto g = gauss_1d(sd, side);
  const auto g2 = gauss_1d_second(sd, side);
  std::vector<double> w(static_cast<std::size_t>(side * side));
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      w[static_cast<std::size_t>(j * side + i)] =
          g2[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] +
          g[static_cast<std::size_t>(i)] * g2[static_cast<std::size_t>(j)];
  const double m = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  for (double& v : w) v -= m;
  return Kernel(side, std::move(w));
}

GrayMap log_filter(const GrayMap& img, double sd) {
  require(sd > 0.0, ErrorCode::InvalidArgument, "LoG sd must be positive");
  const int side = log_kernel_side(sd);
  const auto g = gauss_1d(sd, side);
  const auto g2 = gauss_1d_second(sd, side);

  // Same mean as log_kernel() computes over the full 2-D grid.
  double total = 0.0;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      total += g2[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] +
               g[static_cast<std::size_t>(i)] * g2[static_cast<std::size_t>(j)];
  const double m = total / (static_cast<double>(side) * side);

  GrayMap a = convolve_separable(img, g2, g);
  const GrayMap b = convolve_separable(img, g, g2);
  const std::vector<double> ones(static_cast<std::size_t>(side), 1.0);
  const GrayMap box = convolve_separable(img, ones, ones);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] + b[i] - m * box[i];
  return a;
}

std::pair<Kernel, Kernel> dog_kernel_pair(double sd, int side) {
  std::vector<double> w(static_cast<std::size_t>(side * side));
  const double c = (side - 1) / 2.0;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const double u = i - c;
      const double v = j - c;
      const double g = std::exp(-(u * u + v * v) / (2.0 * sd * sd)) / (2.0 * std::numbers::pi * sd * sd);
      w[static_cast<std::size_t>(j * side + i)] = -u / (sd * sd) * g;
    }
  const bool even = side % 2 == 0;
  Kernel kx(side, std::move(w), even);
  Kernel ky = kx.transposed();
  return {std::move(kx), std::move(ky)};
}

GrayMap median3(const GrayMap& img) {
  GrayMap out(img.width(), img.height(), 0.0, img.range());
  std::array<double, 9> win{};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) win[static_cast<std::size_t>(n++)] = img.clamped(x + dx, y + dy);
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      out(x, y) = win[4];
    }
  return out;
}

GrayMap rescale(const GrayMap& img, double lo, double hi) {
  GrayMap out(img.width(), img.height(), lo, {lo, hi});
  if (img.empty()) return out;
  const auto [mn, mx] = std::minmax_element(img.data().begin(), img.data().end());
  const double span = *mx - *mn;
  if (span > 0.0) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double v = lo + (img[i] - *mn) * (hi - lo) / span;
      out[i] = std::clamp(v, lo, hi);
    }
  }
  out.check_range();
  return out;
}

double mean(const GrayMap& img) {
  if (img.empty()) return 0.0;
  return std::accumulate(img.data().begin(), img.data().end(), 0.0) / static_cast<double>(img.size());
}

}  // namespace mrnom
