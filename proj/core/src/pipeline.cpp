#include "evflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <thread>

#include <nlohmann/json.hpp>

#include "evflow/bounded_queue.hpp"
#include "evflow/error.hpp"

namespace evflow {

void PipelineConfig::validate() const {
  if (window_us == 0) raise(Errc::ConfigInvalid, "window_us must be positive");
  if (batch_size < 1) raise(Errc::ConfigInvalid, "batch_size must be >= 1");
  if (effective_queue_capacity() < batch_size) {
    raise(Errc::ConfigInvalid, "queue_capacity must be >= batch_size");
  }
  if (threads != 1 && threads != 2) raise(Errc::ConfigInvalid, "threads must be 1 or 2");
  if (!(replay_speed >= 0.0) || !std::isfinite(replay_speed)) {
    raise(Errc::ConfigInvalid, "replay_speed must be >= 0");
  }
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) raise(Errc::ConfigInvalid, "iou_thresh must lie in (0, 1]");
  if (downscale_to && (downscale_to->first == 0 || downscale_to->second == 0)) {
    raise(Errc::ConfigInvalid, "downscale_to dimensions must be positive");
  }
  if (detector == DetectorKind::ExternalDetectionsFile && detections_file.empty()) {
    raise(Errc::ConfigInvalid, "external detector needs detections_file");
  }
  if (stub.link_radius < 0) raise(Errc::ConfigInvalid, "link_radius must be >= 0");
}

PipelineConfig PipelineConfig::from_doc(const KeyValueDoc& doc) {
  PipelineConfig cfg;
  const auto positive = [&](const std::string& key, std::int64_t fallback) {
    const auto v = doc.get_int(key, fallback);
    if (v < 0) raise(Errc::ConfigInvalid, key + " must be non-negative");
    return v;
  };
  cfg.window_us = static_cast<Timestamp>(positive("window_us", static_cast<std::int64_t>(cfg.window_us)));
  cfg.batch_size = static_cast<std::uint32_t>(positive("batch_size", cfg.batch_size));
  const auto detector = doc.get_string("detector", "stub");
  if (detector == "stub") {
    cfg.detector = DetectorKind::Stub;
  } else if (detector == "external") {
    cfg.detector = DetectorKind::ExternalDetectionsFile;
  } else {
    raise(Errc::ConfigInvalid, "detector must be 'stub' or 'external'");
  }
  cfg.detections_file = doc.get_string("detections_file", "");
  const auto downscale = doc.get_string("downscale_to", "none");
  if (downscale != "none") {
    const auto x = downscale.find('x');
    if (x == std::string::npos) raise(Errc::ConfigInvalid, "downscale_to must be WxH or none");
    const auto w = parse_int(downscale.substr(0, x));
    const auto h = parse_int(downscale.substr(x + 1));
    if (w <= 0 || h <= 0 || w > 65535 || h > 65535) raise(Errc::ConfigInvalid, "downscale_to out of range");
    cfg.downscale_to = std::make_pair(static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h));
  }
  cfg.queue_capacity = static_cast<std::size_t>(positive("queue_capacity", 0));
  if (doc.get_string("drop_policy", "drop_oldest") != "drop_oldest") {
    raise(Errc::ConfigInvalid, "drop_policy must be drop_oldest");
  }
  cfg.stub.min_area = static_cast<std::size_t>(positive("min_area", static_cast<std::int64_t>(cfg.stub.min_area)));
  cfg.stub.activity_thresh = static_cast<std::uint16_t>(positive("activity_thresh", cfg.stub.activity_thresh));
  cfg.stub.link_radius = static_cast<int>(positive("link_radius", cfg.stub.link_radius));
  cfg.replay_speed = doc.get_double("replay_speed", cfg.replay_speed);
  cfg.threads = static_cast<int>(doc.get_int("threads", threads_from_env(cfg.threads)));
  cfg.iou_thresh = doc.get_double("iou_thresh", cfg.iou_thresh);
  cfg.validate();
  return cfg;
}

int threads_from_env(int fallback) {
  const char* value = std::getenv("EVFLOW_THREADS");
  if (value == nullptr || *value == '\0') return fallback;
  const std::string v(value);
  if (v == "1") return 1;
  if (v == "2") return 2;
  raise(Errc::ConfigInvalid, "EVFLOW_THREADS must be 1 or 2, got '" + v + "'");
}

LatencyStats summarize_latencies(std::vector<double> samples_ms) {
  LatencyStats stats;
  stats.samples = samples_ms.size();
  if (samples_ms.empty()) return stats;
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples_ms.size())));
    return samples_ms[std::clamp<std::size_t>(idx, 1, samples_ms.size()) - 1];
  };
  stats.p50_ms = rank(0.50);
  stats.p95_ms = rank(0.95);
  stats.p99_ms = rank(0.99);
  return stats;
}

std::vector<GroundTruth> prepare_ground_truth(std::span<const Track> tracks, const CameraPair* calib) {
  auto gts = expand_tracks(tracks);
  if (calib == nullptr) return gts;
  std::vector<GroundTruth> out;
  out.reserve(gts.size());
  for (const auto& g : gts) {
    try {
      const auto moved = transfer_bbox(g.box, *calib);
      if (!moved.degenerate) out.push_back({g.frame_idx, g.track_id, moved.box});
    } catch (const Error& e) {
      if (e.code() != Errc::OffSensor && e.code() != Errc::BehindCamera) throw;
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

struct QueuedFrame {
  PolarityFrame frame;
  Clock::time_point produced;
};

// State owned by the consumer stage.
class BatchSink {
 public:
  BatchSink(Detector& detector, std::uint32_t batch_size, double scale_x, double scale_y)
      : detector_(detector), batch_size_(batch_size), scale_x_(scale_x), scale_y_(scale_y) {}

  void add(QueuedFrame item) {
    pending_.push_back(std::move(item));
    if (pending_.size() >= batch_size_) flush();
  }

  void flush() {
    if (pending_.empty()) return;
    const auto dispatch = Clock::now();
    std::vector<PolarityFrame> frames;
    frames.reserve(pending_.size());
    for (auto& item : pending_) {
      queue_wait_.push_back(ms_between(item.produced, dispatch));
      frames.push_back(std::move(item.frame));
    }
    auto results = detector_.detect(frames);
    if (results.size() != frames.size()) {
      raise(Errc::InvalidArgument, "detector returned " + std::to_string(results.size()) +
                                       " results for " + std::to_string(frames.size()) + " frames");
    }
    const auto done = Clock::now();
    detect_.push_back(ms_between(dispatch, done));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      for (auto d : results[i]) {
        d.box.x *= scale_x_;
        d.box.w *= scale_x_;
        d.box.y *= scale_y_;
        d.box.h *= scale_y_;
        detections_.push_back(d);
      }
      end_to_end_.push_back(ms_between(pending_[i].produced, done));
    }
    inferred_ += frames.size();
    pending_.clear();
  }

  std::vector<Detection> detections_;
  std::vector<double> queue_wait_;
  std::vector<double> detect_;
  std::vector<double> end_to_end_;
  std::size_t inferred_ = 0;

 private:
  Detector& detector_;
  std::uint32_t batch_size_;
  double scale_x_;
  double scale_y_;
  std::vector<QueuedFrame> pending_;
};

// Accumulation stage: emits frames in window order, honouring pacing.
class FrameProducer {
 public:
  FrameProducer(const EventStream& events, const PipelineConfig& cfg)
      : seq_(events, cfg.window_us), cfg_(cfg), start_(Clock::now()) {}

  bool done() const noexcept { return seq_.done(); }

  QueuedFrame next() {
    const auto t_begin = Clock::now();
    PolarityFrame frame = seq_.next();
    if (cfg_.downscale_to) frame = downscale(frame, cfg_.downscale_to->first, cfg_.downscale_to->second);
    accumulate_ms_.push_back(ms_between(t_begin, Clock::now()));
    if (!base_) base_ = frame.t0();
    if (cfg_.replay_speed > 0.0) {
      const double release_us =
          static_cast<double>(frame.t0() + frame.duration() - *base_) / cfg_.replay_speed;
      std::this_thread::sleep_until(start_ + std::chrono::microseconds(static_cast<std::int64_t>(release_us)));
    }
    ++produced_;
    return {std::move(frame), Clock::now()};
  }

  std::vector<double> accumulate_ms_;
  std::size_t produced_ = 0;

 private:
  FrameSequencer seq_;
  const PipelineConfig& cfg_;
  Clock::time_point start_;
  std::optional<Timestamp> base_;
};

}  // namespace

PipelineResult run_pipeline(const EventStream& events, const PipelineConfig& cfg, Detector& detector,
                            const CameraPair* calib, std::span<const Track> gts) {
  cfg.validate();
  const auto& geom = events.geometry();
  double scale_x = 1.0;
  double scale_y = 1.0;
  if (cfg.downscale_to) {
    if (cfg.downscale_to->first > geom.width || cfg.downscale_to->second > geom.height) {
      raise(Errc::ConfigInvalid, "downscale_to exceeds the sensor resolution");
    }
    scale_x = static_cast<double>(geom.width) / cfg.downscale_to->first;
    scale_y = static_cast<double>(geom.height) / cfg.downscale_to->second;
  }

  const auto wall_start = Clock::now();
  FrameProducer producer(events, cfg);
  BatchSink sink(detector, cfg.batch_size, scale_x, scale_y);
  std::size_t dropped = 0;

  if (cfg.threads == 1) {
    while (!producer.done()) sink.add(producer.next());
    sink.flush();
  } else {
    BoundedQueue<QueuedFrame> queue(cfg.effective_queue_capacity());
    std::exception_ptr producer_error;
    std::thread producer_thread([&] {
      try {
        while (!producer.done()) {
          if (queue.push(producer.next())) ++dropped;
        }
      } catch (...) {
        producer_error = std::current_exception();
      }
      queue.close();
    });
    try {
      while (auto item = queue.pop()) sink.add(std::move(*item));
      sink.flush();
    } catch (...) {
      queue.close();
      producer_thread.join();
      throw;
    }
    producer_thread.join();
    if (producer_error) std::rethrow_exception(producer_error);
  }

  PipelineResult result;
  result.detections = std::move(sink.detections_);
  std::stable_sort(result.detections.begin(), result.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.frame_idx < b.frame_idx; });
  auto& m = result.metrics;
  m.frames_produced = producer.produced_;
  m.frames_inferred = sink.inferred_;
  m.frames_dropped = dropped;
  m.accumulate = summarize_latencies(std::move(producer.accumulate_ms_));
  m.queue_wait = summarize_latencies(std::move(sink.queue_wait_));
  m.detect = summarize_latencies(std::move(sink.detect_));
  m.end_to_end = summarize_latencies(std::move(sink.end_to_end_));
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - wall_start).count();
  m.throughput_fps = m.wall_seconds > 0.0 ? static_cast<double>(m.frames_inferred) / m.wall_seconds : 0.0;

  if (!gts.empty()) {
    const auto truth = prepare_ground_truth(gts, calib);
    result.eval = evaluate(result.detections, truth, cfg.iou_thresh);
  }
  return result;
}

PipelineResult run_pipeline(const EventStream& events, const PipelineConfig& cfg,
                            const CameraPair* calib, std::span<const Track> gts) {
  cfg.validate();
  std::unique_ptr<Detector> detector;
  if (cfg.detector == DetectorKind::Stub) {
    detector = std::make_unique<StubDetector>(cfg.stub);
  } else {
    std::ifstream in(cfg.detections_file);
    if (!in) raise(Errc::IoError, "cannot open " + cfg.detections_file);
    detector = std::make_unique<ReplayDetector>(read_detections_csv(in));
  }
  return run_pipeline(events, cfg, *detector, calib, gts);
}

namespace {

nlohmann::ordered_json stats_json(const LatencyStats& s) {
  return {{"samples", s.samples}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"p99_ms", s.p99_ms}};
}

}  // namespace

std::string PipelineResult::to_json() const {
  nlohmann::ordered_json j;
  j["detections"] = detections.size();
  nlohmann::ordered_json mj;
  mj["frames_produced"] = metrics.frames_produced;
  mj["frames_inferred"] = metrics.frames_inferred;
  mj["frames_dropped"] = metrics.frames_dropped;
  mj["accumulate"] = stats_json(metrics.accumulate);
  mj["queue_wait"] = stats_json(metrics.queue_wait);
  mj["detect"] = stats_json(metrics.detect);
  mj["end_to_end"] = stats_json(metrics.end_to_end);
  mj["wall_seconds"] = metrics.wall_seconds;
  mj["throughput_fps"] = metrics.throughput_fps;
  j["metrics"] = std::move(mj);
  if (eval) {
    j["eval"] = nlohmann::ordered_json::parse(eval->to_json());
  } else {
    j["eval"] = nullptr;
  }
  return j.dump();
}

}  // namespace evflow
