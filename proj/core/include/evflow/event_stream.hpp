#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evflow/error.hpp"

namespace evflow {

// Microseconds since the stream epoch.
using Timestamp = std::uint64_t;

enum class Polarity : std::uint8_t { Negative = 0, Positive = 1 };

struct Event {
  Timestamp t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Polarity p = Polarity::Negative;

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint16_t width = 0;
  std::uint16_t height = 0;

  bool valid() const noexcept { return width > 0 && height > 0; }
  bool contains(std::uint32_t x, std::uint32_t y) const noexcept {
    return x < width && y < height;
  }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * height;
  }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

// Prophesee EVK4 (IMX636) and the IMX219 RGB stream both run at 1280x720.
inline constexpr SensorGeometry kEvk4Geometry{1280, 720};
// Detector input raster.
inline constexpr SensorGeometry kDetectorGeometry{640, 480};

// Immutable once constructed; construction does not validate (see validate()).
class EventStream {
 public:
  EventStream() = default;
  EventStream(SensorGeometry geometry, std::vector<Event> events)
      : geometry_(geometry), events_(std::move(events)) {}

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t i) const noexcept { return events_[i]; }

  // First and last timestamps; both nullopt on an empty stream.
  std::optional<Timestamp> first_time() const noexcept;
  std::optional<Timestamp> last_time() const noexcept;

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  SensorGeometry geometry_{};
  std::vector<Event> events_;
};

struct ValidationReport {
  bool ok = true;
  std::optional<Errc> violation;
  std::size_t index = 0;  // offending event index when !ok
  std::string message;
};

ValidationReport validate(const EventStream& stream);

// EVB1: "EVB1", width u16 LE, height u16 LE, then 13-byte records
// (t u64 LE, x u16 LE, y u16 LE, p u8).
inline constexpr std::size_t kEvb1HeaderSize = 8;
inline constexpr std::size_t kEvb1RecordSize = 13;

EventStream decode_stream(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_stream(const EventStream& stream);

EventStream read_evb1(const std::string& path);
void write_evb1(const std::string& path, const EventStream& stream);

// CSV with header `t_us,x,y,p`. Geometry is not stored in CSV, so the reader
// needs it from the caller.
EventStream read_events_csv(std::istream& in, SensorGeometry geometry);
void write_events_csv(std::ostream& out, const EventStream& stream);

// Events with t0 <= t < t1, order preserved. InvalidInterval if t0 > t1.
EventStream slice_interval(const EventStream& stream, Timestamp t0, Timestamp t1);

// Index range [first, last) of events inside [t0, t1). Requires sorted input.
std::pair<std::size_t, std::size_t> interval_bounds(std::span<const Event> events, Timestamp t0,
                                                    Timestamp t1) noexcept;

}  // namespace evflow
