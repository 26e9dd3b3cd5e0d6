#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

namespace oracle {

struct Blob {
  int x0, y0, x1, y1;  // inclusive
  std::size_t area;
  std::uint64_t mass;
};

// Union-find over active pixels. Two active pixels are joined when their
// (2r+1)-squares overlap or share an edge.
inline std::vector<Blob> blobs(const std::vector<std::uint16_t>& activity, int width, int height,
                               std::uint16_t thresh, int r, std::size_t min_area) {
  struct Px {
    int x, y;
    std::uint16_t v;
  };
  std::vector<Px> px;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto v = activity[static_cast<std::size_t>(y) * width + x];
      if (v >= thresh) px.push_back({x, y, v});
    }
  }
  std::vector<std::size_t> parent(px.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const int reach = 2 * r;
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (std::size_t j = i + 1; j < px.size(); ++j) {
      const int dx = std::abs(px[i].x - px[j].x);
      const int dy = std::abs(px[i].y - px[j].y);
      const bool touch = (dx <= reach + 1 && dy <= reach) || (dx <= reach && dy <= reach + 1);
      if (touch) parent[find(i)] = find(j);
    }
  }
  std::vector<Blob> out;
  std::vector<long> slot(px.size(), -1);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<long>(out.size());
      out.push_back({px[i].x, px[i].y, px[i].x, px[i].y, 0, 0});
    }
    auto& b = out[static_cast<std::size_t>(slot[root])];
    b.x0 = std::min(b.x0, px[i].x);
    b.y0 = std::min(b.y0, px[i].y);
    b.x1 = std::max(b.x1, px[i].x);
    b.y1 = std::max(b.y1, px[i].y);
    ++b.area;
    b.mass += px[i].v;
  }
  out.erase(std::remove_if(out.begin(), out.end(), [&](const Blob& b) { return b.area < min_area; }),
            out.end());
  return out;
}

}  // namespace oracle
