#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evflow/event_stream.hpp"
#include "evflow/grid.hpp"

namespace evflow {

inline constexpr std::uint8_t kSaturation = 255;
// 30 fps integration window.
inline constexpr Timestamp kDefaultWindowUs = 33'333;

// Two saturating 8-bit count planes over one integration window
// [t0, t0 + duration). The payload is exactly width * height * 2 bytes:
// the positive plane followed by the negative plane, both row-major.
class PolarityFrame {
 public:
  PolarityFrame() = default;
  PolarityFrame(std::uint16_t width, std::uint16_t height, Timestamp t0, Timestamp duration);
  // Takes ownership of a pos-then-neg payload; InvalidArgument on size mismatch.
  PolarityFrame(std::uint16_t width, std::uint16_t height, Timestamp t0, Timestamp duration,
                std::vector<std::uint8_t> payload);

  std::uint16_t width() const noexcept { return width_; }
  std::uint16_t height() const noexcept { return height_; }
  Timestamp t0() const noexcept { return t0_; }
  Timestamp duration() const noexcept { return duration_; }
  // Index of the window on the global grid t0 = k * duration.
  std::int64_t frame_index() const noexcept {
    return duration_ == 0 ? 0 : static_cast<std::int64_t>(t0_ / duration_);
  }

  std::span<std::uint8_t> pos() noexcept { return {data_.data(), plane_size()}; }
  std::span<std::uint8_t> neg() noexcept { return {data_.data() + plane_size(), plane_size()}; }
  std::span<const std::uint8_t> pos() const noexcept { return {data_.data(), plane_size()}; }
  std::span<const std::uint8_t> neg() const noexcept {
    return {data_.data() + plane_size(), plane_size()};
  }
  std::uint8_t pos_at(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
  std::uint8_t neg_at(std::size_t x, std::size_t y) const noexcept {
    return data_[plane_size() + y * width_ + x];
  }

  std::span<const std::uint8_t> payload() const noexcept { return data_; }
  std::size_t payload_bytes() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  friend bool operator==(const PolarityFrame&, const PolarityFrame&) = default;

 private:
  std::uint16_t width_ = 0;
  std::uint16_t height_ = 0;
  Timestamp t0_ = 0;
  Timestamp duration_ = 0;
  std::vector<std::uint8_t> data_;
};

// Adds events to a frame with saturation at 255. Events must lie inside the
// frame; window membership is the caller's responsibility.
void accumulate_into(PolarityFrame& frame, std::span<const Event> events) noexcept;

// Counts events with t0 <= t < t0 + window per pixel and polarity.
// InvalidWindow if window == 0.
PolarityFrame accumulate(const EventStream& stream, Timestamp t0, Timestamp window);

// Streams consecutive windows [k*T, (k+1)*T) from the first window holding an
// event through the last one. Empty windows in between are emitted.
class FrameSequencer {
 public:
  FrameSequencer(const EventStream& stream, Timestamp window);

  bool done() const noexcept { return next_index_ > last_index_ || empty_; }
  PolarityFrame next();
  std::size_t frame_count() const noexcept {
    return empty_ ? 0 : static_cast<std::size_t>(last_index_ - first_index_ + 1);
  }

 private:
  const EventStream& stream_;
  Timestamp window_;
  bool empty_ = true;
  std::uint64_t first_index_ = 0;
  std::uint64_t last_index_ = 0;
  std::uint64_t next_index_ = 0;
  std::size_t cursor_ = 0;
};

std::vector<PolarityFrame> frame_sequence(const EventStream& stream, Timestamp window);

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// White where any positive event fired, blue where only negative events fired,
// black elsewhere.
RgbImage render_rgb(const PolarityFrame& frame);

// Area-weighted mean per channel, rounded half up. UpscaleUnsupported if an
// output dimension exceeds the input; InvalidArgument for a zero dimension.
PolarityFrame downscale(const PolarityFrame& frame, std::uint16_t out_w, std::uint16_t out_h);

// pos + neg per pixel.
Grid<std::uint16_t> activity(const PolarityFrame& frame);

// PFR1 dump: "PFR1", width u16, height u16, t0 u64, duration u64 (all LE),
// then the pos plane and the neg plane.
std::vector<std::uint8_t> encode_frame(const PolarityFrame& frame);
PolarityFrame decode_frame(std::span<const std::uint8_t> bytes);
void write_frame(const std::string& path, const PolarityFrame& frame);
PolarityFrame read_frame(const std::string& path);

}  // namespace evflow
