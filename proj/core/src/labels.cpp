#include "evflow/labels.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "evflow/error.hpp"

namespace evflow {

Track::Track(std::int64_t track_id, std::vector<Keyframe> keyframes)
    : id_(track_id), keyframes_(std::move(keyframes)) {
  if (keyframes_.empty()) raise(Errc::InvalidArgument, "track needs at least one keyframe");
  std::stable_sort(keyframes_.begin(), keyframes_.end(),
                   [](const Keyframe& a, const Keyframe& b) { return a.frame_idx < b.frame_idx; });
  for (std::size_t i = 0; i < keyframes_.size(); ++i) {
    const auto& kf = keyframes_[i];
    if (kf.frame_idx < 0) raise(Errc::InvalidArgument, "negative keyframe index");
    if (!kf.box.valid()) raise(Errc::InvalidArgument, "keyframe box has negative size");
    if (i > 0 && keyframes_[i - 1].frame_idx == kf.frame_idx) {
      raise(Errc::InvalidArgument, "duplicate keyframe index " + std::to_string(kf.frame_idx) +
                                       " in track " + std::to_string(track_id));
    }
  }
}

std::optional<BBox> interpolate_track(const Track& track, std::int64_t frame_idx) {
  const auto kfs = track.keyframes();
  if (frame_idx < kfs.front().frame_idx || frame_idx > kfs.back().frame_idx) return std::nullopt;
  const auto upper = std::lower_bound(
      kfs.begin(), kfs.end(), frame_idx,
      [](const Keyframe& kf, std::int64_t idx) { return kf.frame_idx < idx; });
  if (upper->frame_idx == frame_idx) return upper->box;
  const Keyframe& b = *upper;
  const Keyframe& a = *(upper - 1);
  const double s = static_cast<double>(frame_idx - a.frame_idx) /
                   static_cast<double>(b.frame_idx - a.frame_idx);
  const auto lerp = [s](double u, double v) { return u + s * (v - u); };
  return BBox{lerp(a.box.x, b.box.x), lerp(a.box.y, b.box.y), lerp(a.box.w, b.box.w),
              lerp(a.box.h, b.box.h)};
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::size_t MatchResult::tp() const noexcept {
  return static_cast<std::size_t>(std::count(det_is_tp.begin(), det_is_tp.end(), true));
}

std::size_t MatchResult::fn() const noexcept {
  return static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
}

namespace {

std::vector<std::size_t> confidence_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

}  // namespace

MatchResult match_detections(std::span<const Detection> dets, std::span<const BBox> gts,
                             double iou_thresh) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) {
    raise(Errc::InvalidArgument, "iou threshold must lie in (0, 1]");
  }
  MatchResult result;
  result.det_is_tp.assign(dets.size(), false);
  result.gt_matched.assign(gts.size(), false);
  for (const std::size_t d : confidence_order(dets)) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (result.gt_matched[g]) continue;
      const double o = iou(dets[d].box, gts[g]);
      if (o > best) {
        best = o;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_thresh) {
      result.det_is_tp[d] = true;
      result.gt_matched[best_gt] = true;
    }
  }
  return result;
}

double average_precision_from_flags(const std::vector<bool>& tp_sorted, std::size_t n_gt) {
  if (n_gt == 0) raise(Errc::NoGroundTruth, "average precision needs ground truth");
  const std::size_t n = tp_sorted.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += tp_sorted[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  // Precision envelope, right to left.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                    double iou_thresh) {
  if (gts.empty()) raise(Errc::NoGroundTruth, "no ground-truth boxes");
  std::map<std::int64_t, std::vector<BBox>> gt_by_frame;
  for (const auto& g : gts) gt_by_frame[g.frame_idx].push_back(g.box);
  std::map<std::int64_t, std::vector<std::size_t>> det_by_frame;
  for (std::size_t i = 0; i < dets.size(); ++i) det_by_frame[dets[i].frame_idx].push_back(i);

  std::vector<bool> is_tp(dets.size(), false);
  std::size_t matched_gt = 0;
  for (const auto& [frame, indices] : det_by_frame) {
    std::vector<Detection> frame_dets;
    frame_dets.reserve(indices.size());
    for (auto i : indices) frame_dets.push_back(dets[i]);
    const auto it = gt_by_frame.find(frame);
    const std::span<const BBox> frame_gts =
        it == gt_by_frame.end() ? std::span<const BBox>{} : std::span<const BBox>(it->second);
    const auto m = match_detections(frame_dets, frame_gts, iou_thresh);
    for (std::size_t k = 0; k < indices.size(); ++k) is_tp[indices[k]] = m.det_is_tp[k];
    matched_gt += m.tp();
  }

  const auto order = confidence_order(dets);
  std::vector<bool> sorted_flags;
  sorted_flags.reserve(order.size());
  for (auto i : order) sorted_flags.push_back(is_tp[i]);

  EvalReport report;
  report.ap = average_precision_from_flags(sorted_flags, gts.size());
  report.tp = matched_gt;
  report.fp = dets.size() - matched_gt;
  report.fn = gts.size() - matched_gt;
  report.n_gt = gts.size();
  report.iou_thresh = iou_thresh;
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["ap"] = ap;
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  j["n_gt"] = n_gt;
  j["iou_thresh"] = iou_thresh;
  return j.dump();
}

std::vector<GroundTruth> expand_tracks(std::span<const Track> tracks) {
  std::vector<GroundTruth> out;
  for (const auto& track : tracks) {
    for (auto f = track.first_frame(); f <= track.last_frame(); ++f) {
      out.push_back({f, track.id(), *interpolate_track(track, f)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GroundTruth& a, const GroundTruth& b) {
    return a.frame_idx < b.frame_idx;
  });
  return out;
}

std::vector<Track> read_labels_csv(std::istream& in) {
  detail::CsvReader csv(in, "frame_idx,track_id,x,y,w,h");
  std::map<std::int64_t, std::vector<Keyframe>> rows;
  std::vector<std::string> f;
  while (csv.next(f)) {
    Keyframe kf;
    kf.frame_idx = parse_int(f[0]);
    kf.box = {parse_double(f[2]), parse_double(f[3]), parse_double(f[4]), parse_double(f[5])};
    rows[parse_int(f[1])].push_back(kf);
  }
  std::vector<Track> tracks;
  for (auto& [id, kfs] : rows) tracks.emplace_back(id, std::move(kfs));
  return tracks;
}

namespace {

void write_box(std::ostream& out, const BBox& b) {
  out << b.x << ',' << b.y << ',' << b.w << ',' << b.h;
}

}  // namespace

void write_labels_csv(std::ostream& out, std::span<const Track> tracks) {
  const auto old_precision = out.precision(17);
  out << "frame_idx,track_id,x,y,w,h\n";
  for (const auto& track : tracks) {
    for (const auto& kf : track.keyframes()) {
      out << kf.frame_idx << ',' << track.id() << ',';
      write_box(out, kf.box);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

void write_ground_truth_csv(std::ostream& out, std::span<const GroundTruth> gts) {
  const auto old_precision = out.precision(17);
  out << "frame_idx,track_id,x,y,w,h\n";
  for (const auto& g : gts) {
    out << g.frame_idx << ',' << g.track_id << ',';
    write_box(out, g.box);
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<Detection> read_detections_csv(std::istream& in) {
  detail::CsvReader csv(in, "frame_idx,class_id,confidence,x,y,w,h");
  std::vector<Detection> dets;
  std::vector<std::string> f;
  while (csv.next(f)) {
    Detection d;
    d.frame_idx = parse_int(f[0]);
    d.class_id = static_cast<std::int32_t>(parse_int(f[1]));
    d.confidence = parse_double(f[2]);
    d.box = {parse_double(f[3]), parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      raise(Errc::ParseError, "line " + std::to_string(csv.line_no()) + ": confidence outside [0, 1]");
    }
    if (!d.box.valid()) {
      raise(Errc::ParseError, "line " + std::to_string(csv.line_no()) + ": negative box size");
    }
    dets.push_back(d);
  }
  return dets;
}

void write_detections_csv(std::ostream& out, std::span<const Detection> dets) {
  const auto old_precision = out.precision(17);
  out << "frame_idx,class_id,confidence,x,y,w,h\n";
  for (const auto& d : dets) {
    out << d.frame_idx << ',' << d.class_id << ',' << d.confidence << ',';
    write_box(out, d.box);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace evflow
