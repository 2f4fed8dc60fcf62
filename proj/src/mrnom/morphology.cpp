#include "mrnom/morphology.hpp"

#include <deque>
#include <limits>
#include <queue>
#include <utility>

namespace mrnom {

namespace {

template <typename T, typename Fn>
void for_neighbours(const Raster<T>& r, int x, int y, Connectivity conn, Fn&& fn) {
  const int n = neighbour_count(conn);
  for (int k = 0; k < n; ++k) {
    const int nx = x + kDx[k];
    const int ny = y + kDy[k];
    if (r.contains(nx, ny)) fn(nx, ny);
  }
}

bool px(const BinaryMask& m, int x, int y) { return m.contains(x, y) && m(x, y) != 0; }

}  // namespace

BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask, Connectivity conn) {
  require_same_shape(marker, mask, "reconstruct: marker and mask differ in size");
  BinaryMask out(mask.width(), mask.height());
  std::deque<std::pair<int, int>> q;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (marker(x, y)) {
        if (!mask(x, y)) fail(ErrorCode::Precondition, "reconstruct: marker exceeds mask");
        out(x, y) = 1;
        q.emplace_back(x, y);
      }
  while (!q.empty()) {
    const auto [x, y] = q.front();
    q.pop_front();
    for_neighbours(mask, x, y, conn, [&](int nx, int ny) {
      if (mask(nx, ny) && !out(nx, ny)) {
        out(nx, ny) = 1;
        q.emplace_back(nx, ny);
      }
    });
  }
  return out;
}

GrayMap reconstruct(const GrayMap& marker, const GrayMap& mask, Connectivity conn) {
  require_same_shape(marker, mask, "reconstruct: marker and mask differ in size");
  GrayMap out = marker;
  out.set_range(mask.range());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item> heap;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (marker[i] > mask[i]) fail(ErrorCode::Precondition, "reconstruct: marker exceeds mask");
    heap.emplace(out[i], i);
  }
  const int w = out.width();
  while (!heap.empty()) {
    const auto [v, i] = heap.top();
    heap.pop();
    if (v < out[i]) continue;
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for_neighbours(out, x, y, conn, [&](int nx, int ny) {
      const std::size_t j = out.index(nx, ny);
      const double nv = std::min(v, mask[j]);
      if (nv > out[j]) {
        out[j] = nv;
        heap.emplace(nv, j);
      }
    });
  }
  return out;
}

GrayMap reconstruct_erode(const GrayMap& marker, const GrayMap& mask, Connectivity conn) {
  require_same_shape(marker, mask, "reconstruct_erode: marker and mask differ in size");
  GrayMap out = marker;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (marker[i] < mask[i]) fail(ErrorCode::Precondition, "reconstruct_erode: marker below mask");
    heap.emplace(out[i], i);
  }
  const int w = out.width();
  while (!heap.empty()) {
    const auto [v, i] = heap.top();
    heap.pop();
    if (v > out[i]) continue;
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for_neighbours(out, x, y, conn, [&](int nx, int ny) {
      const std::size_t j = out.index(nx, ny);
      const double nv = std::max(v, mask[j]);
      if (nv < out[j]) {
        out[j] = nv;
        heap.emplace(nv, j);
      }
    });
  }
  return out;
}

BinaryMask dilate3(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      std::uint8_t v = 0;
      for (int dy = -1; dy <= 1 && !v; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (m.clamped(x + dx, y + dy)) {
            v = 1;
            break;
          }
      out(x, y) = v;
    }
  return out;
}

BinaryMask erode3(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      std::uint8_t v = 1;
      for (int dy = -1; dy <= 1 && v; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (!m.clamped(x + dx, y + dy)) {
            v = 0;
            break;
          }
      out(x, y) = v;
    }
  return out;
}

BinaryMask open3(const BinaryMask& m) { return dilate3(erode3(m)); }
BinaryMask close3(const BinaryMask& m) { return erode3(dilate3(m)); }

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

BinaryMask fill_holes(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  BinaryMask seed(w, h);
  const BinaryMask bg = complement(m);
  for (int x = 0; x < w; ++x) {
    if (bg(x, 0)) seed(x, 0) = 1;
    if (bg(x, h - 1)) seed(x, h - 1) = 1;
  }
  for (int y = 0; y < h; ++y) {
    if (bg(0, y)) seed(0, y) = 1;
    if (bg(w - 1, y)) seed(w - 1, y) = 1;
  }
  const BinaryMask outside = reconstruct(seed, bg, Connectivity::Four);
  return complement(outside);
}

BinaryMask remove_small(const BinaryMask& m, int min_area, Connectivity conn) {
  const LabelMap cc = connected_components(m, conn);
  std::vector<int> area(static_cast<std::size_t>(max_label(cc)) + 1, 0);
  for (auto l : cc.data()) ++area[static_cast<std::size_t>(l)];
  BinaryMask out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i)
    out[i] = (cc[i] > 0 && area[static_cast<std::size_t>(cc[i])] >= min_area) ? 1 : 0;
  return out;
}

BinaryMask remove_hbreak(const BinaryMask& m) {
  BinaryMask out = m;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      const bool n = px(m, x, y - 1), s = px(m, x, y + 1), w = px(m, x - 1, y), e = px(m, x + 1, y);
      const bool nw = px(m, x - 1, y - 1), ne = px(m, x + 1, y - 1), sw = px(m, x - 1, y + 1), se = px(m, x + 1, y + 1);
      const bool corners = nw && ne && sw && se;
      const bool h_vertical_bars = corners && w && e && !n && !s;
      const bool h_horizontal_bars = corners && n && s && !w && !e;
      if (h_vertical_bars || h_horizontal_bars) out(x, y) = 0;
    }
  return out;
}

BinaryMask remove_spur(const BinaryMask& m) {
  BinaryMask out = m;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      int nb = 0;
      for (int k = 0; k < 8; ++k) nb += px(m, x + kDx[k], y + kDy[k]) ? 1 : 0;
      if (nb == 1) out(x, y) = 0;
    }
  return out;
}

BinaryMask binary_cleanup(const BinaryMask& m, const std::vector<CleanupOp>& ops) {
  BinaryMask cur = m;
  for (const auto& op : ops) {
    switch (op.kind) {
      case CleanupOp::Kind::FillHoles: cur = fill_holes(cur); break;
      case CleanupOp::Kind::Open: cur = open3(cur); break;
      case CleanupOp::Kind::Close: cur = close3(cur); break;
      case CleanupOp::Kind::RemoveSmall: cur = remove_small(cur, op.min_area); break;
      case CleanupOp::Kind::RemoveHBreak: cur = remove_hbreak(cur); break;
      case CleanupOp::Kind::RemoveSpur: cur = remove_spur(cur); break;
    }
  }
  return cur;
}

LabelMap connected_components(const BinaryMask& m, Connectivity conn) {
  LabelMap out(m.width(), m.height());
  std::int32_t next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y) || out(x, y)) continue;
      ++next;
      out(x, y) = next;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for_neighbours(m, cx, cy, conn, [&](int nx, int ny) {
          if (m(nx, ny) && !out(nx, ny)) {
            out(nx, ny) = next;
            stack.emplace_back(nx, ny);
          }
        });
      }
    }
  return out;
}

int max_label(const LabelMap& lb) {
  std::int32_t mx = 0;
  for (auto l : lb.data()) mx = std::max(mx, l);
  return mx;
}

LabelMap compact_labels(const LabelMap& lb) {
  const int mx = max_label(lb);
  std::vector<std::int32_t> remap(static_cast<std::size_t>(mx) + 1, 0);
  for (auto l : lb.data())
    if (l > 0) remap[static_cast<std::size_t>(l)] = 1;
  std::int32_t next = 0;
  for (int l = 1; l <= mx; ++l)
    if (remap[static_cast<std::size_t>(l)]) remap[static_cast<std::size_t>(l)] = ++next;
  LabelMap out(lb.width(), lb.height());
  for (std::size_t i = 0; i < lb.size(); ++i) out[i] = lb[i] > 0 ? remap[static_cast<std::size_t>(lb[i])] : 0;
  return out;
}

namespace {

/// Plateaus with no strictly lower (minima) or higher (maxima) neighbour.
BinaryMask regional_extrema(const GrayMap& img, Connectivity conn, bool minima) {
  const int w = img.width();
  const int h = img.height();
  BinaryMask out(w, h);
  Raster<std::uint8_t> seen(w, h);
  std::vector<std::pair<int, int>> plateau;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (seen(x, y)) continue;
      const double v = img(x, y);
      bool extremum = true;
      plateau.clear();
      stack.emplace_back(x, y);
      seen(x, y) = 1;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        plateau.emplace_back(cx, cy);
        for_neighbours(img, cx, cy, conn, [&](int nx, int ny) {
          const double nv = img(nx, ny);
          if (nv == v) {
            if (!seen(nx, ny)) {
              seen(nx, ny) = 1;
              stack.emplace_back(nx, ny);
            }
          } else if (minima ? nv < v : nv > v) {
            extremum = false;
          }
        });
      }
      if (extremum)
        for (const auto& [px_, py_] : plateau) out(px_, py_) = 1;
    }
  return out;
}

}  // namespace

BinaryMask regional_minima(const GrayMap& img, Connectivity conn) { return regional_extrema(img, conn, true); }
BinaryMask regional_maxima(const GrayMap& img, Connectivity conn) { return regional_extrema(img, conn, false); }

NearestLabel nearest_label_transform(const LabelMap& sites) {
  const int w = sites.width();
  const int h = sites.height();
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  constexpr std::int32_t kNoLabel = std::numeric_limits<std::int32_t>::max();

  // Column pass: nearest site within the same column.
  Raster<std::int64_t> fcol(w, h, kInf);
  LabelMap lcol(w, h, kNoLabel);
  for (int x = 0; x < w; ++x) {
    int last = -1;
    std::vector<std::int64_t> du(static_cast<std::size_t>(h), kInf);
    std::vector<std::int32_t> lu(static_cast<std::size_t>(h), kNoLabel);
    for (int y = 0; y < h; ++y) {
      if (sites(x, y) > 0) last = y;
      if (last >= 0) {
        du[static_cast<std::size_t>(y)] = y - last;
        lu[static_cast<std::size_t>(y)] = sites(x, last);
      }
    }
    int next = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (sites(x, y) > 0) next = y;
      std::int64_t d = du[static_cast<std::size_t>(y)];
      std::int32_t l = lu[static_cast<std::size_t>(y)];
      if (next >= 0) {
        const std::int64_t dd = next - y;
        const std::int32_t ld = sites(x, next);
        if (dd < d || (dd == d && ld < l)) {
          d = dd;
          l = ld;
        }
      }
      if (d < kInf) {
        fcol(x, y) = d * d;
        lcol(x, y) = l;
      }
    }
  }

  NearestLabel out{LabelMap(w, h), Raster<std::int64_t>(w, h, kInf)};
  if (max_label(sites) == 0) return out;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::int64_t best = kInf;
      std::int32_t best_l = kNoLabel;
      for (std::int64_t d = 0; d <= w; ++d) {
        if (best < kInf && d * d > best) break;
        for (int side = 0; side < (d == 0 ? 1 : 2); ++side) {
          const int nx = side == 0 ? x - static_cast<int>(d) : x + static_cast<int>(d);
          if (nx < 0 || nx >= w) continue;
          const std::int64_t f = fcol(nx, y);
          if (f >= kInf) continue;
          const std::int64_t c = d * d + f;
          const std::int32_t l = lcol(nx, y);
          if (c < best || (c == best && l < best_l)) {
            best = c;
            best_l = l;
          }
        }
      }
      if (best < kInf) {
        out.label(x, y) = best_l;
        out.dist2(x, y) = best;
      }
    }
  return out;
}

std::size_t count(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.data()) n += v ? 1 : 0;
  return n;
}

}  // namespace mrnom
