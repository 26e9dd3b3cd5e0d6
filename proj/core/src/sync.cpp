#include "evflow/sync.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "area_weights.hpp"
#include "evflow/accumulator.hpp"
#include "evflow/error.hpp"

namespace evflow {

void GrayFrameSequence::validate() const {
  if (frame_period == 0) raise(Errc::InvalidArgument, "frame period must be positive");
  for (const auto& f : frames) {
    if (f.width() != width || f.height() != height) {
      raise(Errc::InvalidArgument, "gray frames must share dimensions");
    }
  }
}

namespace {

bool is_constant(const RealGrid& g) noexcept {
  const auto v = g.values();
  return std::all_of(v.begin(), v.end(), [first = v.front()](double x) { return x == first; });
}

}  // namespace

double zncc(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b)) raise(Errc::ShapeMismatch, "zncc inputs differ in shape");
  if (a.empty()) raise(Errc::ZeroVariance, "zncc on empty grids");
  if (is_constant(a) || is_constant(b)) raise(Errc::ZeroVariance, "zncc input is constant");
  const auto va = a.values();
  const auto vb = b.values();
  const double n = static_cast<double>(va.size());
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    sum_a += va[i];
    sum_b += vb[i];
  }
  const double mean_a = sum_a / n;
  const double mean_b = sum_b / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double da = va[i] - mean_a;
    const double db = vb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) raise(Errc::ZeroVariance, "zncc input has no variance");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

RealGrid rgb_activity(const Grid<std::uint8_t>& prev, const Grid<std::uint8_t>& curr) {
  if (!prev.same_shape(curr)) raise(Errc::ShapeMismatch, "frames differ in shape");
  RealGrid out(curr.width(), curr.height());
  auto dst = out.values();
  const auto p = prev.values();
  const auto c = curr.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = std::abs(static_cast<double>(c[i]) - static_cast<double>(p[i]));
  }
  return out;
}

OffsetResult find_offset(std::span<const RealGrid> ev_seq, std::span<const RealGrid> rgb_seq,
                         int max_abs_offset) {
  if (max_abs_offset < 0) raise(Errc::InvalidArgument, "max_abs_offset must be non-negative");
  const auto need = static_cast<std::size_t>(max_abs_offset) + 1;
  if (ev_seq.size() <= need || rgb_seq.size() <= need) {
    raise(Errc::InsufficientOverlap, "sequences must be longer than max_abs_offset + 1");
  }
  for (const auto& g : ev_seq) {
    if (!g.same_shape(ev_seq.front())) raise(Errc::ShapeMismatch, "event activity grids differ in shape");
  }
  for (const auto& g : rgb_seq) {
    if (!g.same_shape(ev_seq.front())) raise(Errc::ShapeMismatch, "rgb activity grids differ from event raster");
  }

  std::vector<bool> ev_const(ev_seq.size());
  std::vector<bool> rgb_const(rgb_seq.size());
  for (std::size_t i = 0; i < ev_seq.size(); ++i) ev_const[i] = is_constant(ev_seq[i]);
  for (std::size_t i = 0; i < rgb_seq.size(); ++i) rgb_const[i] = is_constant(rgb_seq[i]);

  OffsetResult result;
  const auto n_ev = static_cast<long>(ev_seq.size());
  const auto n_rgb = static_cast<long>(rgb_seq.size());
  for (int d = -max_abs_offset; d <= max_abs_offset; ++d) {
    OffsetScore entry{d, 0.0, 0, 0};
    double total = 0.0;
    const long i0 = std::max(0L, -static_cast<long>(d));
    const long i1 = std::min(n_ev, n_rgb - d);
    for (long i = i0; i < i1; ++i) {
      const auto j = static_cast<std::size_t>(i + d);
      const auto ii = static_cast<std::size_t>(i);
      if (ev_const[ii] || rgb_const[j]) {
        ++entry.skipped;
        continue;
      }
      total += zncc(ev_seq[ii], rgb_seq[j]);
      ++entry.pairs;
    }
    if (entry.pairs == 0) {
      raise(Errc::InsufficientOverlap, "offset " + std::to_string(d) + " has no scorable frame pairs");
    }
    entry.score = total / static_cast<double>(entry.pairs);
    result.curve.push_back(entry);
  }

  // Visit 0, +1, -1, +2, -2, ... and keep the first strict maximum.
  const auto at = [&](int d) -> const OffsetScore& {
    return result.curve[static_cast<std::size_t>(d + max_abs_offset)];
  };
  result.best_offset = 0;
  result.best_score = at(0).score;
  for (int m = 1; m <= max_abs_offset; ++m) {
    for (int d : {m, -m}) {
      if (at(d).score > result.best_score) {
        result.best_score = at(d).score;
        result.best_offset = d;
      }
    }
  }
  return result;
}

std::string OffsetResult::to_json() const {
  nlohmann::ordered_json j;
  j["best_offset"] = best_offset;
  j["best_score"] = best_score;
  auto curve_json = nlohmann::ordered_json::array();
  for (const auto& c : curve) {
    curve_json.push_back({{"offset", c.offset}, {"score", c.score}, {"pairs", c.pairs}, {"skipped", c.skipped}});
  }
  j["curve"] = std::move(curve_json);
  return j.dump();
}

RealGrid resample_area(const RealGrid& grid, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) raise(Errc::InvalidArgument, "output dimensions must be positive");
  if (out_w > grid.width() || out_h > grid.height()) {
    raise(Errc::UpscaleUnsupported, "resample_area only reduces resolution");
  }
  if (out_w == grid.width() && out_h == grid.height()) return grid;
  const auto taps_x = detail::area_weights(static_cast<std::uint32_t>(grid.width()), static_cast<std::uint32_t>(out_w));
  const auto taps_y = detail::area_weights(static_cast<std::uint32_t>(grid.height()), static_cast<std::uint32_t>(out_h));
  const double denom = static_cast<double>(grid.width()) * static_cast<double>(grid.height());
  RealGrid rows(out_w, grid.height());
  for (std::size_t y = 0; y < grid.height(); ++y) {
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (const auto& tap : taps_x[j]) acc += tap.weight * grid(tap.src, y);
      rows(j, y) = acc;
    }
  }
  RealGrid out(out_w, out_h);
  for (std::size_t jy = 0; jy < out_h; ++jy) {
    for (std::size_t jx = 0; jx < out_w; ++jx) {
      double acc = 0.0;
      for (const auto& tap : taps_y[jy]) acc += tap.weight * rows(jx, tap.src);
      out(jx, jy) = acc / denom;
    }
  }
  return out;
}

std::vector<RealGrid> event_activity_sequence(const EventStream& stream, Timestamp window,
                                              std::size_t count, std::size_t out_w,
                                              std::size_t out_h) {
  if (window == 0) raise(Errc::InvalidWindow, "integration window must be positive");
  std::vector<RealGrid> out;
  out.reserve(count);
  const auto& geom = stream.geometry();
  const auto events = stream.events();
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < count; ++k) {
    PolarityFrame frame(geom.width, geom.height, k * window, window);
    const Timestamp t1 = (k + 1) * window;
    std::size_t end = cursor;
    while (end < events.size() && events[end].t < t1) ++end;
    accumulate_into(frame, events.subspan(cursor, end - cursor));
    cursor = end;
    out.push_back(resample_area(to_real(activity(frame)), out_w, out_h));
  }
  return out;
}

std::vector<RealGrid> rgb_activity_sequence(const GrayFrameSequence& frames, std::size_t out_w,
                                            std::size_t out_h) {
  frames.validate();
  std::vector<RealGrid> out;
  for (std::size_t i = 1; i < frames.frames.size(); ++i) {
    out.push_back(resample_area(rgb_activity(frames.frames[i - 1], frames.frames[i]), out_w, out_h));
  }
  return out;
}

}  // namespace evflow
