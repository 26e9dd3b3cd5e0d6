#pragma once

#include <cstdint>

#include "evflow/event_stream.hpp"
#include "evflow/grid.hpp"
#include "evflow/kv_config.hpp"
#include "evflow/labels.hpp"

namespace evflow {

// A disc of constant radius moving at constant velocity. Units: pixels,
// pixels per second, seconds.
struct DiscTrajectory {
  double center_x = 100.0;
  double center_y = 150.0;
  double velocity_x = 100.0;
  double velocity_y = 45.0;
  double radius = 12.0;
  double duration_s = 1.0;
  // Expected events per pixel per second while the edge sweeps it.
  double event_rate_density = 500.0;

  bool valid() const noexcept;
  double speed() const noexcept;
  double center_x_at(double t_seconds) const noexcept { return center_x + velocity_x * t_seconds; }
  double center_y_at(double t_seconds) const noexcept { return center_y + velocity_y * t_seconds; }
};

// Uniform timestamp jitter applied to every synthetic event, in µs.
inline constexpr std::int64_t kSyntheticJitterUs = 200;

// Leading-edge crossings emit POSITIVE events, trailing-edge crossings emit
// NEGATIVE events. Each crossing yields floor(l) or ceil(l) events with
// mean l = event_rate_density / speed. Only timestamps inside
// [0, duration) are kept. A static disc produces no events.
//
// Raises InvalidArgument for an invalid trajectory and DegenerateTrajectory
// when the disc never covers a pixel centre of the sensor.
EventStream generate_disc_events(const DiscTrajectory& traj, SensorGeometry geom,
                                 std::uint64_t seed);

// Bounding square of the disc at each frame midpoint, clipped to the sensor.
// Frame k covers [k*T, (k+1)*T); frames where the clipped box is empty are
// skipped. Track id is 0.
Track ground_truth_boxes(const DiscTrajectory& traj, Timestamp frame_period, SensorGeometry geom);

// Grayscale rendering of the disc at time t (seconds), for cross-modality
// tests. Pixels whose centre lies inside the disc get `foreground`.
Grid<std::uint8_t> render_disc_gray(const DiscTrajectory& traj, SensorGeometry geom,
                                    double t_seconds, std::uint8_t background = 64,
                                    std::uint8_t foreground = 224);

// Rounds a recording length to a whole number of frame periods, so that a
// "10 s" recording at T = 33,333 µs spans exactly 300 windows.
double snap_duration_to_frames(double seconds, Timestamp frame_period);

// Reads trajectory fields (center_x, center_y, velocity_x, velocity_y,
// radius, duration_s, event_rate_density); absent keys keep their defaults.
DiscTrajectory trajectory_from_config(const KeyValueDoc& doc);

}  // namespace evflow
