#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evflow/event_stream.hpp"
#include "evflow/grid.hpp"

namespace evflow {

using RealGrid = Grid<double>;

// Common raster both activity sequences are reduced to before correlation.
inline constexpr std::size_t kSyncRasterWidth = 320;
inline constexpr std::size_t kSyncRasterHeight = 180;

struct GrayFrameSequence {
  std::size_t width = 0;
  std::size_t height = 0;
  Timestamp frame_period = 0;
  std::vector<Grid<std::uint8_t>> frames;

  // InvalidArgument if frames disagree in shape or frame_period is zero.
  void validate() const;
};

// Zero-mean normalized cross-correlation of two equally sized grids:
// sum((a - mean_a)(b - mean_b)) / (N * sd_a * sd_b), clamped to [-1, 1].
// ShapeMismatch on unequal sizes, ZeroVariance if either grid is constant.
double zncc(const RealGrid& a, const RealGrid& b);

// |curr - prev| per pixel. ShapeMismatch on unequal sizes.
RealGrid rgb_activity(const Grid<std::uint8_t>& prev, const Grid<std::uint8_t>& curr);

struct OffsetScore {
  int offset = 0;
  double score = 0.0;
  std::size_t pairs = 0;    // pairs that entered the mean
  std::size_t skipped = 0;  // zero-variance pairs left out
};

struct OffsetResult {
  int best_offset = 0;
  double best_score = 0.0;
  std::vector<OffsetScore> curve;  // ordered by offset, -max .. +max

  std::string to_json() const;
};

// For each d in [-max_abs_offset, max_abs_offset], scores the mean ZNCC of
// the pairs (ev_seq[i], rgb_seq[i + d]), skipping pairs where either grid is
// constant. A positive best_offset means the RGB stream lags the events.
// Ties go to the smaller |d|, then to the positive offset.
OffsetResult find_offset(std::span<const RealGrid> ev_seq, std::span<const RealGrid> rgb_seq,
                         int max_abs_offset);

template <typename T>
RealGrid to_real(const Grid<T>& grid) {
  RealGrid out(grid.width(), grid.height());
  auto dst = out.values();
  const auto src = grid.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]);
  return out;
}

// Area-weighted mean resampling to a smaller or equal raster.
RealGrid resample_area(const RealGrid& grid, std::size_t out_w, std::size_t out_h);

// Event activity (pos + neg) for `count` consecutive windows starting at t=0,
// each resampled to out_w x out_h.
std::vector<RealGrid> event_activity_sequence(const EventStream& stream, Timestamp window,
                                              std::size_t count, std::size_t out_w = kSyncRasterWidth,
                                              std::size_t out_h = kSyncRasterHeight);

// Consecutive-frame differences (frames.size() - 1 grids), resampled.
std::vector<RealGrid> rgb_activity_sequence(const GrayFrameSequence& frames,
                                            std::size_t out_w = kSyncRasterWidth,
                                            std::size_t out_h = kSyncRasterHeight);

}  // namespace evflow
