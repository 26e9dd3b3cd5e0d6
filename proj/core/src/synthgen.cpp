#include "evflow/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace evflow {

bool DiscTrajectory::valid() const noexcept {
  const bool finite = std::isfinite(center_x) && std::isfinite(center_y) &&
                      std::isfinite(velocity_x) && std::isfinite(velocity_y) &&
                      std::isfinite(radius) && std::isfinite(duration_s) &&
                      std::isfinite(event_rate_density);
  return finite && radius > 0.0 && duration_s > 0.0 && event_rate_density > 0.0;
}

double DiscTrajectory::speed() const noexcept { return std::hypot(velocity_x, velocity_y); }

namespace {

struct PixelRange {
  int x0, x1, y0, y1;  // inclusive; empty when x0 > x1 or y0 > y1
};

PixelRange swept_pixels(const DiscTrajectory& traj, SensorGeometry geom) {
  const double ex = traj.center_x_at(traj.duration_s);
  const double ey = traj.center_y_at(traj.duration_s);
  const double lo_x = std::min(traj.center_x, ex) - traj.radius;
  const double hi_x = std::max(traj.center_x, ex) + traj.radius;
  const double lo_y = std::min(traj.center_y, ey) - traj.radius;
  const double hi_y = std::max(traj.center_y, ey) + traj.radius;
  // Pixel centres sit at index + 0.5. Lower bounds clamp to [0, n], upper
  // bounds to [-1, n - 1], so an off-sensor sweep yields an empty range.
  const auto lower = [](double v, int n) {
    return static_cast<int>(std::clamp(std::ceil(v - 0.5), 0.0, static_cast<double>(n)));
  };
  const auto upper = [](double v, int n) {
    return static_cast<int>(std::clamp(std::floor(v - 0.5), -1.0, static_cast<double>(n - 1)));
  };
  return {lower(lo_x, geom.width), upper(hi_x, geom.width), lower(lo_y, geom.height),
          upper(hi_y, geom.height)};
}

}  // namespace

EventStream generate_disc_events(const DiscTrajectory& traj, SensorGeometry geom,
                                 std::uint64_t seed) {
  if (!traj.valid()) raise(Errc::InvalidArgument, "disc trajectory parameters out of range");
  if (!geom.valid()) raise(Errc::InvalidArgument, "sensor geometry must be non-zero");

  const double duration = traj.duration_s;
  const double duration_us = duration * 1e6;
  const double vx = traj.velocity_x;
  const double vy = traj.velocity_y;
  const double a = vx * vx + vy * vy;
  const double r2 = traj.radius * traj.radius;

  const double per_crossing = a > 0.0 ? traj.event_rate_density / std::sqrt(a) : 0.0;
  const double whole = std::floor(per_crossing);
  const double frac = per_crossing - whole;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-static_cast<double>(kSyntheticJitterUs),
                                                static_cast<double>(kSyntheticJitterUs));

  std::vector<Event> events;
  bool touches_sensor = false;

  const auto emit = [&](double t_seconds, int x, int y, Polarity p) {
    const auto count = static_cast<int>(whole) + (unit(rng) < frac ? 1 : 0);
    for (int i = 0; i < count; ++i) {
      const double t_us = t_seconds * 1e6 + jitter(rng);
      if (t_us < 0.0 || t_us >= duration_us) continue;
      events.push_back({static_cast<Timestamp>(t_us), static_cast<std::uint16_t>(x),
                        static_cast<std::uint16_t>(y), p});
    }
  };

  const PixelRange range = swept_pixels(traj, geom);
  for (int y = range.y0; y <= range.y1; ++y) {
    for (int x = range.x0; x <= range.x1; ++x) {
      // |q - c(t)|^2 - r^2 = a t^2 + b t + c
      const double qx = x + 0.5 - traj.center_x;
      const double qy = y + 0.5 - traj.center_y;
      const double b = -2.0 * (vx * qx + vy * qy);
      const double c = qx * qx + qy * qy - r2;
      if (a == 0.0) {
        touches_sensor = touches_sensor || c < 0.0;
        continue;
      }
      const double t_min = std::clamp(-b / (2.0 * a), 0.0, duration);
      if ((a * t_min + b) * t_min + c >= 0.0) continue;
      touches_sensor = true;
      const double disc = b * b - 4.0 * a * c;
      if (disc <= 0.0) continue;
      const double root = std::sqrt(disc);
      const double t_in = (-b - root) / (2.0 * a);
      const double t_out = (-b + root) / (2.0 * a);
      if (t_in >= 0.0 && t_in < duration) emit(t_in, x, y, Polarity::Positive);
      if (t_out >= 0.0 && t_out < duration) emit(t_out, x, y, Polarity::Negative);
    }
  }
  if (!touches_sensor) {
    raise(Errc::DegenerateTrajectory, "disc never intersects the sensor");
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& l, const Event& r) { return l.t < r.t; });
  return EventStream(geom, std::move(events));
}

Track ground_truth_boxes(const DiscTrajectory& traj, Timestamp frame_period, SensorGeometry geom) {
  if (!traj.valid()) raise(Errc::InvalidArgument, "disc trajectory parameters out of range");
  if (frame_period == 0) raise(Errc::InvalidWindow, "frame period must be positive");
  const auto duration_us = static_cast<Timestamp>(std::llround(traj.duration_s * 1e6));
  const Timestamp frames = (duration_us + frame_period - 1) / frame_period;
  const double w = geom.width;
  const double h = geom.height;

  std::vector<Keyframe> keyframes;
  keyframes.reserve(frames);
  for (Timestamp k = 0; k < frames; ++k) {
    const double t_mid = (static_cast<double>(k) + 0.5) * static_cast<double>(frame_period) * 1e-6;
    const double cx = traj.center_x_at(t_mid);
    const double cy = traj.center_y_at(t_mid);
    const double x0 = std::clamp(cx - traj.radius, 0.0, w);
    const double x1 = std::clamp(cx + traj.radius, 0.0, w);
    const double y0 = std::clamp(cy - traj.radius, 0.0, h);
    const double y1 = std::clamp(cy + traj.radius, 0.0, h);
    if (x1 <= x0 || y1 <= y0) continue;
    keyframes.push_back({static_cast<std::int64_t>(k), BBox{x0, y0, x1 - x0, y1 - y0}});
  }
  if (keyframes.empty()) raise(Errc::DegenerateTrajectory, "disc is never on the sensor");
  return Track(0, std::move(keyframes));
}

Grid<std::uint8_t> render_disc_gray(const DiscTrajectory& traj, SensorGeometry geom,
                                    double t_seconds, std::uint8_t background,
                                    std::uint8_t foreground) {
  Grid<std::uint8_t> img(geom.width, geom.height, background);
  const double cx = traj.center_x_at(t_seconds);
  const double cy = traj.center_y_at(t_seconds);
  const double r2 = traj.radius * traj.radius;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - traj.radius)) - 1);
  const int y1 = std::min<int>(geom.height - 1, static_cast<int>(std::ceil(cy + traj.radius)) + 1);
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - traj.radius)) - 1);
  const int x1 = std::min<int>(geom.width - 1, static_cast<int>(std::ceil(cx + traj.radius)) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r2) img(x, y) = foreground;
    }
  }
  return img;
}

double snap_duration_to_frames(double seconds, Timestamp frame_period) {
  if (frame_period == 0) raise(Errc::InvalidWindow, "frame period must be positive");
  const double frames = std::round(seconds * 1e6 / static_cast<double>(frame_period));
  return frames * static_cast<double>(frame_period) * 1e-6;
}

DiscTrajectory trajectory_from_config(const KeyValueDoc& doc) {
  DiscTrajectory t;
  t.center_x = doc.get_double("center_x", t.center_x);
  t.center_y = doc.get_double("center_y", t.center_y);
  t.velocity_x = doc.get_double("velocity_x", t.velocity_x);
  t.velocity_y = doc.get_double("velocity_y", t.velocity_y);
  t.radius = doc.get_double("radius", t.radius);
  t.duration_s = doc.get_double("duration_s", t.duration_s);
  t.event_rate_density = doc.get_double("event_rate_density", t.event_rate_density);
  if (!t.valid()) raise(Errc::ConfigInvalid, "trajectory: radius, duration_s and event_rate_density must be positive");
  return t;
}

}  // namespace evflow
