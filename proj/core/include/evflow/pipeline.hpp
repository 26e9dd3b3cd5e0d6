#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evflow/accumulator.hpp"
#include "evflow/detector.hpp"
#include "evflow/geometry.hpp"
#include "evflow/kv_config.hpp"
#include "evflow/labels.hpp"

namespace evflow {

enum class DetectorKind { Stub, ExternalDetectionsFile };
enum class DropPolicy { DropOldest };

struct PipelineConfig {
  Timestamp window_us = kDefaultWindowUs;
  std::uint32_t batch_size = 1;
  DetectorKind detector = DetectorKind::Stub;
  std::string detections_file;  // for ExternalDetectionsFile
  std::optional<std::pair<std::uint16_t, std::uint16_t>> downscale_to;
  std::size_t queue_capacity = 0;  // 0 selects 2 * batch_size
  DropPolicy drop_policy = DropPolicy::DropOldest;
  StubDetectorParams stub;
  // Producer pacing relative to recording time: 1 = real time, 4 = four
  // times faster, 0 = as fast as possible.
  double replay_speed = 1.0;
  int threads = 2;  // 1 = single-threaded, 2 = producer + consumer
  double iou_thresh = 0.5;

  std::size_t effective_queue_capacity() const noexcept {
    return queue_capacity == 0 ? 2 * static_cast<std::size_t>(batch_size) : queue_capacity;
  }
  // ConfigInvalid on any violated constraint.
  void validate() const;

  // Keys: window_us, batch_size, detector (stub|external), detections_file,
  // downscale_to (WxH|none), queue_capacity, drop_policy (drop_oldest),
  // min_area, activity_thresh, link_radius, replay_speed, threads, iou_thresh.
  // Unknown keys are left for other consumers (e.g. trajectory fields).
  static PipelineConfig from_doc(const KeyValueDoc& doc);
};

// Reads EVFLOW_THREADS (1 or 2); returns fallback when unset.
int threads_from_env(int fallback = 2);

struct LatencyStats {
  std::size_t samples = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
};

// Nearest-rank percentiles.
LatencyStats summarize_latencies(std::vector<double> samples_ms);

struct PipelineMetrics {
  std::size_t frames_produced = 0;
  std::size_t frames_inferred = 0;
  std::size_t frames_dropped = 0;
  LatencyStats accumulate;  // per frame
  LatencyStats queue_wait;  // per frame, produce -> batch dispatch
  LatencyStats detect;      // per batch
  LatencyStats end_to_end;  // per frame, produce -> detections ready
  double wall_seconds = 0.0;
  double throughput_fps = 0.0;
};

struct PipelineResult {
  std::vector<Detection> detections;  // ordered by frame index
  PipelineMetrics metrics;
  std::optional<EvalReport> eval;

  std::string to_json() const;
};

// Ground truth in DVS coordinates: tracks are expanded per frame and, when a
// calibration is given, transferred from the RGB view first (boxes that fall
// off the DVS sensor are dropped).
std::vector<GroundTruth> prepare_ground_truth(std::span<const Track> tracks, const CameraPair* calib);

// Producer accumulates windows, consumer batches them into the detector.
// With `threads == 1` both stages run inline and nothing is dropped. With
// `threads == 2` the stages are joined by a BoundedQueue that evicts the
// oldest frame when full; drops are counted. Detection boxes are reported in
// sensor coordinates even when frames are downscaled.
PipelineResult run_pipeline(const EventStream& events, const PipelineConfig& cfg, Detector& detector,
                            const CameraPair* calib = nullptr, std::span<const Track> gts = {});

// Builds the detector named by cfg (reading detections_file if needed).
PipelineResult run_pipeline(const EventStream& events, const PipelineConfig& cfg,
                            const CameraPair* calib = nullptr, std::span<const Track> gts = {});

}  // namespace evflow
