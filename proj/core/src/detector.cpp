#include "evflow/detector.hpp"

#include <algorithm>
#include <limits>

#include "evflow/error.hpp"

namespace evflow {
namespace {

// Max filter of radius r along one axis of a binary mask restricted to the
// region [x0, x1] x [y0, y1].
void dilate_axis(std::vector<std::uint8_t>& mask, std::size_t width, int x0, int x1, int y0, int y1,
                 int r, bool horizontal) {
  std::vector<std::uint8_t> line;
  const int outer0 = horizontal ? y0 : x0;
  const int outer1 = horizontal ? y1 : x1;
  const int inner0 = horizontal ? x0 : y0;
  const int inner1 = horizontal ? x1 : y1;
  const auto at = [&](int outer, int inner) -> std::uint8_t& {
    return horizontal ? mask[static_cast<std::size_t>(outer) * width + static_cast<std::size_t>(inner)]
                      : mask[static_cast<std::size_t>(inner) * width + static_cast<std::size_t>(outer)];
  };
  for (int o = outer0; o <= outer1; ++o) {
    line.assign(static_cast<std::size_t>(inner1 - inner0 + 1), 0);
    for (int i = inner0; i <= inner1; ++i) line[static_cast<std::size_t>(i - inner0)] = at(o, i);
    // Distance to the nearest set cell on each side, via two sweeps.
    int last = std::numeric_limits<int>::min() / 2;
    for (int i = inner0; i <= inner1; ++i) {
      if (line[static_cast<std::size_t>(i - inner0)]) last = i;
      if (i - last <= r) at(o, i) = 1;
    }
    last = std::numeric_limits<int>::max() / 2;
    for (int i = inner1; i >= inner0; --i) {
      if (line[static_cast<std::size_t>(i - inner0)]) last = i;
      if (last - i <= r) at(o, i) = 1;
    }
  }
}

}  // namespace

FrameDetections detect_blobs(const PolarityFrame& frame, const StubDetectorParams& params) {
  const std::size_t w = frame.width();
  const std::size_t h = frame.height();
  const auto pos = frame.pos();
  const auto neg = frame.neg();
  const std::uint16_t thresh = std::max<std::uint16_t>(params.activity_thresh, 1);

  std::vector<std::uint8_t> active(w * h, 0);
  int min_x = static_cast<int>(w), max_x = -1, min_y = static_cast<int>(h), max_y = -1;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (static_cast<std::uint16_t>(pos[i] + neg[i]) >= thresh) {
        active[i] = 1;
        min_x = std::min(min_x, static_cast<int>(x));
        max_x = std::max(max_x, static_cast<int>(x));
        min_y = std::min(min_y, static_cast<int>(y));
        max_y = std::max(max_y, static_cast<int>(y));
      }
    }
  }
  FrameDetections out;
  if (max_x < 0) return out;

  const int r = std::max(params.link_radius, 0);
  const int x0 = std::max(0, min_x - r);
  const int x1 = std::min(static_cast<int>(w) - 1, max_x + r);
  const int y0 = std::max(0, min_y - r);
  const int y1 = std::min(static_cast<int>(h) - 1, max_y + r);

  std::vector<std::uint8_t> linked = active;
  if (r > 0) {
    dilate_axis(linked, w, x0, x1, y0, y1, r, true);
    dilate_axis(linked, w, x0, x1, y0, y1, r, false);
  }

  std::vector<std::int32_t> label(w * h, -1);
  std::vector<std::size_t> stack;
  std::int32_t next_label = 0;
  for (int sy = y0; sy <= y1; ++sy) {
    for (int sx = x0; sx <= x1; ++sx) {
      const std::size_t seed = static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx);
      if (!linked[seed] || label[seed] >= 0) continue;
      std::size_t area = 0;
      std::uint64_t mass = 0;
      int bx0 = sx, bx1 = sx, by0 = sy, by1 = sy;
      bool any = false;
      label[seed] = next_label;
      stack.push_back(seed);
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        if (active[i]) {
          ++area;
          mass += pos[i] + neg[i];
          if (!any) {
            bx0 = bx1 = x;
            by0 = by1 = y;
            any = true;
          }
          bx0 = std::min(bx0, x);
          bx1 = std::max(bx1, x);
          by0 = std::min(by0, y);
          by1 = std::max(by1, y);
        }
        const auto visit = [&](int nx, int ny) {
          if (nx < x0 || nx > x1 || ny < y0 || ny > y1) return;
          const std::size_t j = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (linked[j] && label[j] < 0) {
            label[j] = next_label;
            stack.push_back(j);
          }
        };
        visit(x - 1, y);
        visit(x + 1, y);
        visit(x, y - 1);
        visit(x, y + 1);
      }
      ++next_label;
      if (!any || area < params.min_area) continue;
      Detection d;
      d.frame_idx = frame.frame_index();
      d.box = BBox{static_cast<double>(bx0), static_cast<double>(by0),
                   static_cast<double>(bx1 - bx0 + 1), static_cast<double>(by1 - by0 + 1)};
      d.confidence = std::min(1.0, static_cast<double>(mass) / 255.0);
      d.class_id = 0;
      out.push_back(d);
    }
  }
  return out;
}

std::vector<FrameDetections> stub_detector(std::span<const PolarityFrame> batch,
                                           const StubDetectorParams& params) {
  if (batch.empty()) raise(Errc::InvalidArgument, "detector batch must not be empty");
  std::vector<FrameDetections> out;
  out.reserve(batch.size());
  for (const auto& frame : batch) out.push_back(detect_blobs(frame, params));
  return out;
}

ReplayDetector::ReplayDetector(std::span<const Detection> detections) {
  for (const auto& d : detections) by_frame_[d.frame_idx].push_back(d);
}

std::vector<FrameDetections> ReplayDetector::detect(std::span<const PolarityFrame> batch) {
  std::vector<FrameDetections> out;
  out.reserve(batch.size());
  for (const auto& frame : batch) {
    const auto it = by_frame_.find(frame.frame_index());
    out.push_back(it == by_frame_.end() ? FrameDetections{} : it->second);
  }
  return out;
}

}  // namespace evflow
