#include "mrnom/synth.hpp"

#include <cmath>
#include <numbers>

#include "mrnom/filters.hpp"
#include "mrnom/forest.hpp"

namespace mrnom {

void SynthSpec::validate() const {
  require(width >= 16 && height >= 16, ErrorCode::InvalidArgument, "synth: tile too small");
  require(cells_min >= 0 && cells_max >= cells_min, ErrorCode::InvalidArgument, "synth: bad cell count range");
  require(radius_min > 1.0 && radius_max >= radius_min, ErrorCode::InvalidArgument, "synth: bad radius range");
  require(axis_ratio_min > 0.0 && axis_ratio_max >= axis_ratio_min && axis_ratio_max <= 1.0, ErrorCode::InvalidArgument,
          "synth: bad axis ratio range");
  require(overlap_probability >= 0.0 && overlap_probability <= 1.0, ErrorCode::InvalidArgument,
          "synth: overlap probability outside [0,1]");
  require(cluster_min >= 2 && cluster_max >= cluster_min, ErrorCode::InvalidArgument, "synth: bad cluster size range");
  require(cell_max >= cell_min && noise_sd >= 0.0 && texture_sd >= 0.0, ErrorCode::InvalidArgument,
          "synth: bad intensity parameters");
  require(granule_sd >= 0.0 && granule_scale > 0.0 && nucleus_fraction >= 0.0 && nucleus_fraction < 1.0,
          ErrorCode::InvalidArgument, "synth: bad texture parameters");
  require(clearance >= 0 && max_retries > 0, ErrorCode::InvalidArgument, "synth: bad placement parameters");
}

namespace {

struct Cell {
  double cx, cy, a, b, theta, base;
  double nx = 0.0, ny = 0.0;  // nucleus offset in units of the semi-axes
  /// Squared normalised radius; <= 1 inside.
  double rho2(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (dx * std::cos(theta) + dy * std::sin(theta)) / a;
    const double v = (-dx * std::sin(theta) + dy * std::cos(theta)) / b;
    return u * u + v * v;
  }
  bool in_nucleus(double x, double y, double fraction) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (dx * std::cos(theta) + dy * std::sin(theta)) / a - nx;
    const double v = (-dx * std::sin(theta) + dy * std::cos(theta)) / b - ny;
    const double k = fraction * b;
    return (u * a) * (u * a) + (v * b) * (v * b) <= k * k;
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * g_.uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(g_.below(static_cast<std::uint64_t>(hi - lo + 1))); }
  double gauss() {
    const double u1 = 1.0 - g_.uniform();
    const double u2 = g_.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  SplitMix64 g_;
};

class Placer {
 public:
  Placer(const SynthSpec& s, Rng& rng) : s_(s), rng_(rng) {}

  Cell draw_shape() {
    Cell c{};
    c.a = rng_.uniform(s_.radius_min, s_.radius_max);
    c.b = c.a * rng_.uniform(s_.axis_ratio_min, s_.axis_ratio_max);
    c.theta = rng_.uniform(0.0, std::numbers::pi);
    c.base = rng_.uniform(s_.cell_min, s_.cell_max);
    const double t = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = rng_.uniform(0.0, 0.35);
    c.nx = r * std::cos(t);
    c.ny = r * std::sin(t);
    return c;
  }

  bool inside_tile(const Cell& c) const {
    return c.cx - c.a >= 1.0 && c.cy - c.a >= 1.0 && c.cx + c.a <= s_.width - 2.0 && c.cy + c.a <= s_.height - 2.0;
  }

  bool clear_of(const Cell& c, const std::vector<Cell>& others) const {
    for (const Cell& o : others)
      if (std::hypot(c.cx - o.cx, c.cy - o.cy) < c.a + o.a + s_.clearance) return false;
    return true;
  }

  /// Cells of one group, or empty if placement failed.
  std::vector<Cell> place_group(int size, const std::vector<Cell>& placed) {
    std::vector<Cell> group;
    for (int attempt = 0; attempt < s_.max_retries && static_cast<int>(group.size()) < size; ++attempt) {
      Cell c = draw_shape();
      if (group.empty()) {
        c.cx = rng_.uniform(c.a + 1.0, s_.width - c.a - 2.0);
        c.cy = rng_.uniform(c.a + 1.0, s_.height - c.a - 2.0);
      } else {
        const Cell& m = group[static_cast<std::size_t>(rng_.integer(0, static_cast<int>(group.size()) - 1))];
        const double phi = rng_.uniform(0.0, 2.0 * std::numbers::pi);
        // Closer than the sum of minor semi-axes, so the two ellipses always overlap.
        const double d = rng_.uniform(0.7, 0.9) * (m.b + c.b);
        c.cx = m.cx + d * std::cos(phi);
        c.cy = m.cy + d * std::sin(phi);
      }
      if (!inside_tile(c) || !clear_of(c, placed)) continue;
      bool crowded = false;
      for (const Cell& o : group)
        if (std::hypot(c.cx - o.cx, c.cy - o.cy) < 0.7 * (std::max(o.b, c.b) + std::min(o.b, c.b))) crowded = true;
      if (crowded) continue;
      group.push_back(c);
    }
    if (static_cast<int>(group.size()) < size) group.clear();
    return group;
  }

 private:
  const SynthSpec& s_;
  Rng& rng_;
};

}  // namespace

SynthTile synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = rng.integer(spec.cells_min, spec.cells_max);
  int clustered = static_cast<int>(std::lround(spec.overlap_probability * n));
  if (clustered == 1) clustered = n >= 2 ? 2 : 0;

  std::vector<int> groups;
  for (int left = clustered; left > 0;) {
    int k = std::min(rng.integer(spec.cluster_min, spec.cluster_max), left);
    if (k < 2) {
      ++groups.back();
      break;
    }
    groups.push_back(k);
    left -= k;
  }
  for (int i = clustered; i < n; ++i) groups.push_back(1);

  Placer placer(spec, rng);
  std::vector<Cell> cells;
  for (int size : groups) {
    std::vector<Cell> g;
    for (int attempt = 0; attempt < spec.max_retries && g.empty(); ++attempt) g = placer.place_group(size, cells);
    if (g.empty()) fail(ErrorCode::Degenerate, "cannot place cells (try a larger tile or fewer cells)");
    cells.insert(cells.end(), g.begin(), g.end());
  }

  SynthTile out;
  out.gt = LabelMap(spec.width, spec.height);
  std::vector<double> v(static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height));
  for (double& p : v) p = spec.neuropil + spec.noise_sd * rng.gauss();
  GrayMap granules(spec.width, spec.height);
  if (spec.granule_sd > 0.0) {
    for (std::size_t i = 0; i < granules.size(); ++i) granules[i] = rng.gauss();
    const Kernel g = gaussian_kernel(spec.granule_scale, 2 * static_cast<int>(std::ceil(3.0 * spec.granule_scale)) + 1);
    std::vector<double> taps(g.weights.begin() + static_cast<std::ptrdiff_t>(g.anchor() * g.side),
                             g.weights.begin() + static_cast<std::ptrdiff_t>((g.anchor() + 1) * g.side));
    double s = 0.0;
    for (double w : taps) s += w;
    for (double& w : taps) w /= s;
    granules = convolve_separable(granules, taps, taps);
    double ss = 0.0;
    for (std::size_t i = 0; i < granules.size(); ++i) ss += granules[i] * granules[i];
    const double sd = std::sqrt(ss / static_cast<double>(granules.size()));
    for (std::size_t i = 0; i < granules.size(); ++i) granules[i] *= spec.granule_sd / (sd > 0.0 ? sd : 1.0);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell& c = cells[k];
    const int x0 = std::max(0, static_cast<int>(std::floor(c.cx - c.a)));
    const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(c.cx + c.a)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.cy - c.a)));
    const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(c.cy + c.a)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double r2 = c.rho2(x, y);
        if (r2 > 1.0) continue;
        out.gt(x, y) = static_cast<std::int32_t>(k + 1);
        double value = c.base + spec.cell_gradient * r2 + spec.texture_sd * rng.gauss() + granules(x, y);
        if (spec.nucleus_contrast != 0.0 && c.in_nucleus(x, y, spec.nucleus_fraction)) value += spec.nucleus_contrast;
        v[out.gt.index(x, y)] = value;
      }
  }

  out.image.width = spec.width;
  out.image.height = spec.height;
  out.image.channels = 3;
  out.image.pixels.resize(v.size() * 3);
  auto to8 = [](double x) { return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L)); };
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.image.pixels[3 * i] = to8(v[i]);
    out.image.pixels[3 * i + 1] = to8(v[i] * 0.88);
    out.image.pixels[3 * i + 2] = to8(v[i] * 1.06 + 6.0);
  }
  return out;
}

}  // namespace mrnom
