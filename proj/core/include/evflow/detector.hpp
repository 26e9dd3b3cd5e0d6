#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evflow/accumulator.hpp"
#include "evflow/labels.hpp"

namespace evflow {

using FrameDetections = std::vector<Detection>;

// A batch goes in, one detection list per frame comes out (same order).
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<FrameDetections> detect(std::span<const PolarityFrame> batch) = 0;
  virtual std::string name() const = 0;
};

struct StubDetectorParams {
  std::size_t min_area = 20;         // active pixels per component
  std::uint16_t activity_thresh = 1; // pos + neg count for a pixel to be active
  // The active mask is dilated by a (2r+1)-square before 4-connected labelling,
  // so two active pixels link when their squares overlap or share an edge.
  // Zero gives plain 4-connected components.
  int link_radius = 4;
};

// Blob detector over the activity grid: threshold, label components, keep
// those with at least min_area active pixels. Box is the bounding box of the
// component's active pixels; confidence = min(1, activity mass / 255).
FrameDetections detect_blobs(const PolarityFrame& frame, const StubDetectorParams& params);

std::vector<FrameDetections> stub_detector(std::span<const PolarityFrame> batch,
                                           const StubDetectorParams& params);

class StubDetector final : public Detector {
 public:
  explicit StubDetector(StubDetectorParams params = {}) : params_(params) {}
  std::vector<FrameDetections> detect(std::span<const PolarityFrame> batch) override {
    return stub_detector(batch, params_);
  }
  std::string name() const override { return "stub"; }

 private:
  StubDetectorParams params_;
};

// Replays precomputed detections (e.g. from an external network) keyed by
// frame index.
class ReplayDetector final : public Detector {
 public:
  explicit ReplayDetector(std::span<const Detection> detections);
  std::vector<FrameDetections> detect(std::span<const PolarityFrame> batch) override;
  std::string name() const override { return "external"; }

 private:
  std::map<std::int64_t, FrameDetections> by_frame_;
};

}  // namespace evflow
