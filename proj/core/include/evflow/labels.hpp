#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evflow {

// Axis-aligned box, top-left corner plus size, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  bool valid() const noexcept { return w >= 0.0 && h >= 0.0; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Keyframe {
  std::int64_t frame_idx = 0;
  BBox box;
};

// Sparse annotation of one object. Keyframe indices strictly increase.
class Track {
 public:
  // Sorts keyframes; raises InvalidArgument on duplicates, negative indices,
  // invalid boxes or an empty list.
  Track(std::int64_t track_id, std::vector<Keyframe> keyframes);

  std::int64_t id() const noexcept { return id_; }
  std::span<const Keyframe> keyframes() const noexcept { return keyframes_; }
  std::int64_t first_frame() const noexcept { return keyframes_.front().frame_idx; }
  std::int64_t last_frame() const noexcept { return keyframes_.back().frame_idx; }

 private:
  std::int64_t id_;
  std::vector<Keyframe> keyframes_;
};

// Linear interpolation between the bracketing keyframes. No extrapolation:
// frames outside [first_frame, last_frame] yield nullopt.
std::optional<BBox> interpolate_track(const Track& track, std::int64_t frame_idx);

double iou(const BBox& a, const BBox& b) noexcept;

struct Detection {
  std::int64_t frame_idx = 0;
  BBox box;
  double confidence = 0.0;
  std::int32_t class_id = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  std::int64_t frame_idx = 0;
  std::int64_t track_id = 0;
  BBox box;
};

struct MatchResult {
  std::vector<bool> det_is_tp;   // indexed like the input detections
  std::vector<bool> gt_matched;  // indexed like the input ground truths
  std::size_t tp() const noexcept;
  std::size_t fp() const noexcept { return det_is_tp.size() - tp(); }
  std::size_t fn() const noexcept;
};

// Greedy one-to-one matching within a single frame. Detections are visited by
// descending confidence (stable on ties); each takes the unmatched ground
// truth with the highest IoU if that IoU reaches iou_thresh.
MatchResult match_detections(std::span<const Detection> dets, std::span<const BBox> gts,
                             double iou_thresh);

struct EvalReport {
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t n_gt = 0;
  double iou_thresh = 0.5;

  std::string to_json() const;
};

// All-point interpolated AP over every frame. Single-class: class_id is not
// used for matching. Raises NoGroundTruth if gts is empty.
EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                    double iou_thresh);

inline double average_precision(std::span<const Detection> dets,
                                std::span<const GroundTruth> gts, double iou_thresh) {
  return evaluate(dets, gts, iou_thresh).ap;
}

// AP from TP flags already sorted by descending confidence.
double average_precision_from_flags(const std::vector<bool>& tp_sorted, std::size_t n_gt);

// One ground-truth box per frame in each track's span.
std::vector<GroundTruth> expand_tracks(std::span<const Track> tracks);

// Labels CSV `frame_idx,track_id,x,y,w,h`. Rows may be dense or sparse
// keyframes; rows are grouped by track_id.
std::vector<Track> read_labels_csv(std::istream& in);
void write_labels_csv(std::ostream& out, std::span<const Track> tracks);
void write_ground_truth_csv(std::ostream& out, std::span<const GroundTruth> gts);

// Detections CSV `frame_idx,class_id,confidence,x,y,w,h`.
std::vector<Detection> read_detections_csv(std::istream& in);
void write_detections_csv(std::ostream& out, std::span<const Detection> dets);

}  // namespace evflow
