#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "evflow/labels.hpp"
#include "expect_error.hpp"
#include "oracles/detection_oracle.hpp"

using namespace evflow;

namespace {

oracle::Box corners(const BBox& b) { return {b.x, b.y, b.right(), b.bottom()}; }

BBox random_box(std::mt19937_64& rng, double extent = 40.0) {
  std::uniform_real_distribution<double> pos(0.0, extent), size(1.0, extent / 2);
  return {pos(rng), pos(rng), size(rng), size(rng)};
}

}  // namespace

TEST(Interpolate, MidpointAndKeyframes) {
  const Track t(1, {{10, {100, 5, 20, 30}}, {0, {0, 5, 20, 30}}});
  EXPECT_EQ(interpolate_track(t, 5), (BBox{50, 5, 20, 30}));
  EXPECT_EQ(interpolate_track(t, 10), (BBox{100, 5, 20, 30}));
  EXPECT_EQ(interpolate_track(t, 0), (BBox{0, 5, 20, 30}));
}

TEST(Interpolate, NoExtrapolation) {
  const Track t(1, {{5, {0, 0, 1, 1}}, {20, {1, 1, 1, 1}}});
  EXPECT_FALSE(interpolate_track(t, 3).has_value());
  EXPECT_FALSE(interpolate_track(t, 21).has_value());
}

TEST(Interpolate, PiecewiseLinearAndContinuous) {
  const Track t(2, {{0, {0, 0, 10, 10}}, {4, {8, 4, 10, 14}}, {6, {8, 10, 12, 14}}});
  for (std::int64_t f = 0; f < 6; ++f) {
    const auto a = *interpolate_track(t, f);
    const auto b = *interpolate_track(t, f + 1);
    const auto c = f + 2 <= 6 ? interpolate_track(t, f + 2) : std::nullopt;
    if (c && f != 3) {  // 4 is a kink
      EXPECT_NEAR(b.x - a.x, c->x - b.x, 1e-12);
      EXPECT_NEAR(b.y - a.y, c->y - b.y, 1e-12);
    }
    EXPECT_LE(std::abs(b.x - a.x), 2.0 + 1e-12);
    EXPECT_LE(std::abs(b.y - a.y), 3.0 + 1e-12);
  }
}

TEST(Track, RejectsBadKeyframes) {
  EXPECT_ERRC(Track(0, {}), Errc::InvalidArgument);
  EXPECT_ERRC(Track(0, {{1, {}}, {1, {}}}), Errc::InvalidArgument);
  EXPECT_ERRC(Track(0, {{-1, {}}}), Errc::InvalidArgument);
  EXPECT_ERRC(Track(0, {{1, {0, 0, -1, 1}}}), Errc::InvalidArgument);
}

TEST(Iou, HandCases) {
  const BBox a{0, 0, 10, 10};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, {20, 20, 5, 5}), 0.0);
  EXPECT_EQ(iou(a, {10, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 0, 10, 10}), 1.0 / 3.0);
}

TEST(Iou, Properties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> shift(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_box(rng), b = random_box(rng);
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, oracle::overlap(corners(a), corners(b)), 1e-12);
    const double dx = shift(rng), dy = shift(rng);
    EXPECT_NEAR(iou({a.x + dx, a.y + dy, a.w, a.h}, {b.x + dx, b.y + dy, b.w, b.h}), v, 1e-9);
  }
}

TEST(Match, Cases) {
  const std::vector<BBox> gts{{0, 0, 10, 10}};
  const std::vector<Detection> one{{0, {0, 0, 10, 10}, 0.9, 0}};
  const auto m = match_detections(one, gts, 0.5);
  EXPECT_EQ(m.tp(), 1u);
  EXPECT_EQ(m.fp(), 0u);
  EXPECT_EQ(m.fn(), 0u);

  const std::vector<Detection> two{{0, {1, 0, 10, 10}, 0.8, 0}, {0, {0, 0, 10, 10}, 0.9, 0}};
  const auto m2 = match_detections(two, gts, 0.5);
  EXPECT_FALSE(m2.det_is_tp[0]);
  EXPECT_TRUE(m2.det_is_tp[1]);
}

TEST(Match, AgreesWithEnumeratedGreedyProtocol) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<Detection> dets(rng() % 5);
    std::vector<BBox> gts(rng() % 5);
    std::vector<oracle::Box> od, og;
    std::vector<double> conf;
    for (auto& g : gts) {
      g = random_box(rng, 20);
      og.push_back(corners(g));
    }
    for (auto& d : dets) {
      d.box = random_box(rng, 20);
      d.confidence = static_cast<double>(rng() % 4) / 4.0;  // plenty of ties
      od.push_back(corners(d.box));
      conf.push_back(d.confidence);
    }
    const double thresh = trial % 2 ? 0.5 : 0.1;
    const auto m = match_detections(dets, gts, thresh);
    const auto want = oracle::greedy_flags(od, conf, og, thresh);
    ASSERT_EQ(m.det_is_tp, want) << "trial " << trial;
  }
}

TEST(Ap, PerfectAndEmpty) {
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (int f = 0; f < 20; ++f) {
    gts.push_back({f, 0, {double(f), 0, 10, 10}});
    dets.push_back({f, {double(f), 0, 10, 10}, 0.5 + f * 0.01, 0});
  }
  EXPECT_EQ(evaluate(dets, gts, 0.5).ap, 1.0);
  EXPECT_EQ(evaluate({}, gts, 0.5).ap, 0.0);
  EXPECT_ERRC(evaluate(dets, {}, 0.5), Errc::NoGroundTruth);
}

TEST(Ap, WorkedThreeDetectionExample) {
  const std::vector<GroundTruth> gts{{0, 0, {0, 0, 10, 10}}, {1, 0, {0, 0, 10, 10}}};
  const std::vector<Detection> dets{
      {0, {0, 0, 10, 10}, 0.9, 0}, {0, {50, 50, 10, 10}, 0.8, 0}, {1, {0, 0, 10, 10}, 0.7, 0}};
  const auto r = evaluate(dets, gts, 0.5);
  EXPECT_NEAR(r.ap, 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(r.ap, oracle::all_point_ap({true, false, true}, 2), 1e-12);
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 0u);
}

TEST(Ap, FlagsAgreeWithOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<bool> flags(rng() % 30);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = rng() % 2;
      tp += flags[i];
    }
    const std::size_t n_gt = tp + rng() % 5 + (tp == 0);
    EXPECT_NEAR(average_precision_from_flags(flags, n_gt), oracle::all_point_ap(flags, n_gt), 1e-12);
  }
}

TEST(Ap, ConvertingFpToTpNeverHurts) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<bool> flags(1 + rng() % 20);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = rng() % 2;
      tp += flags[i];
    }
    const std::size_t n_gt = flags.size() + 2;
    const double before = average_precision_from_flags(flags, n_gt);
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (flags[i]) continue;
      auto better = flags;
      better[i] = true;
      EXPECT_GE(average_precision_from_flags(better, n_gt), before - 1e-15);
    }
  }
}

TEST(Ap, EqualConfidenceOrderIsStable) {
  const std::vector<GroundTruth> gts{{0, 0, {0, 0, 10, 10}}};
  const std::vector<Detection> a{{0, {0, 0, 10, 10}, 0.5, 0}, {0, {40, 40, 5, 5}, 0.5, 0}};
  const std::vector<Detection> b{a[1], a[0]};
  EXPECT_EQ(evaluate(a, gts, 0.5).ap, 1.0);
  EXPECT_EQ(evaluate(b, gts, 0.5).ap, 0.5);
}

TEST(Ap, EndToEndAgainstOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GroundTruth> gts;
    std::vector<Detection> dets;
    for (int f = 0; f < 10; ++f) {
      for (int g = 0, n = static_cast<int>(rng() % 3); g < n; ++g) gts.push_back({f, g, random_box(rng)});
      for (int d = 0, n = static_cast<int>(rng() % 4); d < n; ++d) {
        dets.push_back({f, random_box(rng), static_cast<double>(rng() % 1000) / 1000.0, 0});
      }
      if (!gts.empty() && rng() % 2) dets.push_back({f, gts.back().box, 0.95, 0});
    }
    if (gts.empty()) continue;
    // Oracle: per-frame greedy flags, then a global stable sort by confidence.
    std::vector<std::pair<double, bool>> scored;
    std::vector<std::size_t> order(dets.size());
    for (int f = 0; f < 10; ++f) {
      std::vector<oracle::Box> od, og;
      std::vector<double> conf;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].frame_idx != f) continue;
        od.push_back(corners(dets[i].box));
        conf.push_back(dets[i].confidence);
        idx.push_back(i);
      }
      for (const auto& g : gts) {
        if (g.frame_idx == f) og.push_back(corners(g.box));
      }
      const auto flags = oracle::greedy_flags(od, conf, og, 0.5);
      for (std::size_t k = 0; k < idx.size(); ++k) order[idx[k]] = flags[k];
    }
    for (std::size_t i = 0; i < dets.size(); ++i) scored.push_back({dets[i].confidence, order[i] != 0});
    std::stable_sort(scored.begin(), scored.end(), [](auto& l, auto& r) { return l.first > r.first; });
    std::vector<bool> flags;
    for (auto& s : scored) flags.push_back(s.second);
    EXPECT_NEAR(evaluate(dets, gts, 0.5).ap, oracle::all_point_ap(flags, gts.size()), 1e-12);
  }
}

TEST(Report, Json) {
  const std::vector<GroundTruth> gts{{0, 0, {0, 0, 10, 10}}};
  const std::vector<Detection> dets{{0, {0, 0, 10, 10}, 1.0, 0}};
  const auto j = nlohmann::json::parse(evaluate(dets, gts, 0.5).to_json());
  EXPECT_EQ(j["ap"], 1.0);
  EXPECT_EQ(j["tp"], 1);
  EXPECT_EQ(j["n_gt"], 1);
}

TEST(Csv, LabelsRoundTripAndExpansion) {
  const std::vector<Track> tracks{Track(3, {{0, {0, 0, 4, 4}}, {4, {8, 0, 4, 4}}}), Track(7, {{2, {1.5, 2.25, 3, 3}}})};
  std::stringstream buf;
  write_labels_csv(buf, tracks);
  const auto back = read_labels_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id(), 3);
  EXPECT_EQ(back[0].keyframes().size(), 2u);
  EXPECT_EQ(back[1].keyframes()[0].box, (BBox{1.5, 2.25, 3, 3}));

  const auto gts = expand_tracks(back);
  EXPECT_EQ(gts.size(), 6u);
  std::size_t at_frame_2 = 0;
  for (const auto& g : gts) at_frame_2 += g.frame_idx == 2;
  EXPECT_EQ(at_frame_2, 2u);
}

TEST(Csv, DetectionsRoundTrip) {
  const std::vector<Detection> dets{{4, {0.1, 0.2, 3.3, 4.4}, 0.123456789, 2}, {9, {1, 2, 3, 4}, 1.0, 0}};
  std::stringstream buf;
  write_detections_csv(buf, dets);
  EXPECT_EQ(read_detections_csv(buf), dets);

  std::istringstream bad("frame_idx,class_id,confidence,x,y,w,h\n0,0,1.5,0,0,1,1\n");
  EXPECT_ERRC(read_detections_csv(bad), Errc::ParseError);
}
