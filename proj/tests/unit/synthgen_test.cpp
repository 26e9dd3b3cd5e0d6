#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "evflow/accumulator.hpp"
#include "evflow/synthgen.hpp"
#include "expect_error.hpp"

using namespace evflow;

TEST(Synth, StaticDiscIsSilent) {
  DiscTrajectory traj;
  traj.velocity_x = traj.velocity_y = 0.0;
  EXPECT_TRUE(generate_disc_events(traj, kEvk4Geometry, 1).empty());
}

TEST(Synth, SameSeedSameStream) {
  const DiscTrajectory traj;
  EXPECT_EQ(generate_disc_events(traj, kEvk4Geometry, 42), generate_disc_events(traj, kEvk4Geometry, 42));
  EXPECT_NE(generate_disc_events(traj, kEvk4Geometry, 42), generate_disc_events(traj, kEvk4Geometry, 43));
}

TEST(Synth, OutputValidates) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DiscTrajectory traj;
    traj.velocity_x = -60.0 + 30.0 * static_cast<double>(seed);
    traj.center_x = 600;
    const auto s = generate_disc_events(traj, kEvk4Geometry, seed);
    EXPECT_TRUE(validate(s).ok);
    EXPECT_FALSE(s.empty());
    EXPECT_LT(*s.last_time(), 1'000'000u);
  }
}

TEST(Synth, LeadingEdgeIsPositive) {
  DiscTrajectory traj;
  traj.velocity_x = 120.0;
  traj.velocity_y = 0.0;
  traj.center_y = 300.0;
  const auto s = generate_disc_events(traj, kEvk4Geometry, 9);
  for (Timestamp t0 = 0; t0 < 1'000'000; t0 += 100'000) {
    const auto part = slice_interval(s, t0, t0 + 100'000);
    double pos_sum = 0, neg_sum = 0;
    std::size_t pos_n = 0, neg_n = 0;
    for (const auto& e : part.events()) {
      if (e.p == Polarity::Positive) {
        pos_sum += e.x;
        ++pos_n;
      } else {
        neg_sum += e.x;
        ++neg_n;
      }
    }
    ASSERT_GT(pos_n, 0u);
    ASSERT_GT(neg_n, 0u);
    EXPECT_GT(pos_sum / pos_n, neg_sum / neg_n) << "interval at " << t0;
  }
}

TEST(Synth, EventCountLinearInDensity) {
  DiscTrajectory base;
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    DiscTrajectory dense = base;
    dense.event_rate_density = 2.0 * base.event_rate_density;
    const double a = static_cast<double>(generate_disc_events(base, kEvk4Geometry, seed).size());
    const double b = static_cast<double>(generate_disc_events(dense, kEvk4Geometry, seed + 100).size());
    EXPECT_NEAR(b / a, 2.0, 0.2);
    ratio_sum += b / a;
  }
  EXPECT_NEAR(ratio_sum / 8.0, 2.0, 0.05);
}

TEST(Synth, DiscOffSensorIsDegenerate) {
  DiscTrajectory traj;
  traj.center_x = -500;
  traj.velocity_x = -10;
  EXPECT_ERRC(generate_disc_events(traj, kEvk4Geometry, 1), Errc::DegenerateTrajectory);
  traj.radius = -1;
  EXPECT_ERRC(generate_disc_events(traj, kEvk4Geometry, 1), Errc::InvalidArgument);
}

TEST(GroundTruth, StaticDiscBox) {
  DiscTrajectory traj;
  traj.center_x = traj.center_y = 100.0;
  traj.velocity_x = traj.velocity_y = 0.0;
  traj.radius = 10.0;
  auto track = ground_truth_boxes(traj, 33'333, kEvk4Geometry);
  const auto& kf = track.keyframes().front();
  EXPECT_EQ(kf.frame_idx, 0);
  EXPECT_EQ(kf.box, (BBox{90, 90, 20, 20}));
  // 1 s is 30.0003 periods, so the last window is partial.
  EXPECT_EQ(track.keyframes().size(), 31u);
  traj.duration_s = snap_duration_to_frames(1.0, 33'333);
  EXPECT_EQ(ground_truth_boxes(traj, 33'333, kEvk4Geometry).keyframes().size(), 30u);
}

TEST(GroundTruth, CentresAdvanceOnePixelPerFrame) {
  DiscTrajectory traj;
  traj.velocity_x = 30.0;
  traj.velocity_y = 0.0;
  const auto track = ground_truth_boxes(traj, 33'333, kEvk4Geometry);
  const auto kfs = track.keyframes();
  for (std::size_t i = 1; i < kfs.size(); ++i) {
    const double c0 = kfs[i - 1].box.x + kfs[i - 1].box.w / 2;
    const double c1 = kfs[i].box.x + kfs[i].box.w / 2;
    EXPECT_NEAR(c1 - c0, 1.0, 1e-4);
  }
}

TEST(GroundTruth, ClippedAtSensorEdge) {
  DiscTrajectory traj;
  traj.center_x = 5.0;
  traj.center_y = 715.0;
  traj.velocity_x = traj.velocity_y = 0.0;
  traj.radius = 10.0;
  const auto box = ground_truth_boxes(traj, 33'333, kEvk4Geometry).keyframes().front().box;
  // Direct clip of [-5, 15] x [705, 725] to [0, 1280] x [0, 720].
  EXPECT_DOUBLE_EQ(box.x, 0.0);
  EXPECT_DOUBLE_EQ(box.w, 15.0);
  EXPECT_DOUBLE_EQ(box.y, 705.0);
  EXPECT_DOUBLE_EQ(box.h, 15.0);
}

TEST(GroundTruth, EventsStayNearTheirFrameBox) {
  const DiscTrajectory traj;
  const Timestamp period = 33'333;
  const auto s = generate_disc_events(traj, kEvk4Geometry, 5);
  const auto track = ground_truth_boxes(traj, period, kEvk4Geometry);
  for (const auto& kf : track.keyframes()) {
    const Timestamp t0 = static_cast<Timestamp>(kf.frame_idx) * period;
    const auto slice = slice_interval(s, t0, t0 + period);
    for (const auto& e : slice.events()) {
      const double px = e.x + 0.5;
      const double py = e.y + 0.5;
      ASSERT_GE(px, kf.box.x - 2.0);
      ASSERT_LE(px, kf.box.right() + 2.0);
      ASSERT_GE(py, kf.box.y - 2.0);
      ASSERT_LE(py, kf.box.bottom() + 2.0);
    }
  }
}

TEST(Snap, WholeFrames) {
  EXPECT_EQ(std::llround(snap_duration_to_frames(10.0, 33'333) * 1e6), 300 * 33'333);
  EXPECT_EQ(std::llround(snap_duration_to_frames(30.0, 33'333) * 1e6), 900 * 33'333);
}

TEST(Snap, ThirtySecondRecordingGivesNineHundredFrames) {
  DiscTrajectory traj;
  traj.velocity_x = 30.0;
  traj.velocity_y = 12.0;
  traj.duration_s = snap_duration_to_frames(30.0, kDefaultWindowUs);
  const auto s = generate_disc_events(traj, kEvk4Geometry, 1);
  EXPECT_EQ(FrameSequencer(s, kDefaultWindowUs).frame_count(), 900u);
  EXPECT_EQ(ground_truth_boxes(traj, kDefaultWindowUs, kEvk4Geometry).keyframes().size(), 900u);
}

TEST(Render, DiscPixelsAreForeground) {
  DiscTrajectory traj;
  traj.center_x = 10.0;
  traj.center_y = 10.0;
  traj.radius = 3.0;
  const auto img = render_disc_gray(traj, {20, 20}, 0.0, 10, 200);
  EXPECT_EQ(img(10, 10), 200);
  EXPECT_EQ(img(0, 0), 10);
  std::size_t fg = 0;
  for (auto v : img.values()) fg += v == 200;
  std::size_t expect = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      const double dx = x + 0.5 - 10.0, dy = y + 0.5 - 10.0;
      expect += dx * dx + dy * dy <= 9.0;
    }
  }
  EXPECT_EQ(fg, expect);
}

TEST(Config, ReadsTrajectoryKeys) {
  const auto doc = KeyValueDoc::parse("center_x = 5\nvelocity_y = -3.5\nradius = 7\n");
  const auto t = trajectory_from_config(doc);
  EXPECT_EQ(t.center_x, 5.0);
  EXPECT_EQ(t.velocity_y, -3.5);
  EXPECT_EQ(t.radius, 7.0);
  EXPECT_EQ(t.center_y, DiscTrajectory{}.center_y);
  EXPECT_ERRC(trajectory_from_config(KeyValueDoc::parse("radius = 0")), Errc::ConfigInvalid);
}
