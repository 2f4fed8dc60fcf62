#pragma once

#include <utility>
#include <vector>

#include "mrnom/raster.hpp"

namespace mrnom {

/// Square filter kernel. Odd sides are centred; the even 8x8 derivative
/// kernel is anchored at side/2 and flagged via even_sided.
struct Kernel {
  int side = 1;
  std::vector<double> weights{1.0};
  bool even_sided = false;

  Kernel() = default;
  Kernel(int side_, std::vector<double> w, bool even = false);

  double& at(int i, int j) { return weights[static_cast<std::size_t>(j * side + i)]; }
  double at(int i, int j) const { return weights[static_cast<std::size_t>(j * side + i)]; }
  int anchor() const { return side / 2; }
  double sum() const;
  Kernel transposed() const;
};

/// out(x,y) = sum_{i,j} k(i,j) * img(x - (i - a), y - (j - a)), replicate padding.
GrayMap convolve(const GrayMap& img, const Kernel& k);

/// Separable form of convolve(): kernel = outer(col, row), both of the same odd length.
GrayMap convolve_separable(const GrayMap& img, const std::vector<double>& row, const std::vector<double>& col);

Kernel gaussian_kernel(double sd, int side);

/// Smallest odd integer >= 6*sd + 1.
int log_kernel_side(double sd);

/// Sampled Laplacian of Gaussian, mean-subtracted so the weights sum to zero.
Kernel log_kernel(double sd);

/// Convolution with log_kernel(sd), evaluated through its separable decomposition.
GrayMap log_filter(const GrayMap& img, double sd);

/// 8x8 x- and y-derivative-of-Gaussian kernels (sd 2), sampled at offsets -3.5..3.5.
std::pair<Kernel, Kernel> dog_kernel_pair(double sd = 2.0, int side = 8);

GrayMap median3(const GrayMap& img);

/// Linear min-max map onto [lo, hi]. A constant image maps to lo.
GrayMap rescale(const GrayMap& img, double lo, double hi);

double mean(const GrayMap& img);

}  // namespace mrnom
