#include "evflow/accumulator.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "area_weights.hpp"

namespace evflow {

PolarityFrame::PolarityFrame(std::uint16_t width, std::uint16_t height, Timestamp t0,
                             Timestamp duration)
    : width_(width),
      height_(height),
      t0_(t0),
      duration_(duration),
      data_(static_cast<std::size_t>(width) * height * 2, 0) {}

PolarityFrame::PolarityFrame(std::uint16_t width, std::uint16_t height, Timestamp t0,
                             Timestamp duration, std::vector<std::uint8_t> payload)
    : width_(width), height_(height), t0_(t0), duration_(duration), data_(std::move(payload)) {
  if (data_.size() != static_cast<std::size_t>(width) * height * 2) {
    raise(Errc::InvalidArgument, "frame payload must be width*height*2 bytes");
  }
}

void accumulate_into(PolarityFrame& frame, std::span<const Event> events) noexcept {
  std::uint8_t* planes[2] = {frame.neg().data(), frame.pos().data()};
  const std::size_t width = frame.width();
  for (const Event& e : events) {
    std::uint8_t& cell = planes[static_cast<std::size_t>(e.p)][e.y * width + e.x];
    cell = static_cast<std::uint8_t>(cell + (cell != kSaturation));
  }
}

PolarityFrame accumulate(const EventStream& stream, Timestamp t0, Timestamp window) {
  if (window == 0) raise(Errc::InvalidWindow, "integration window must be positive");
  const auto& geom = stream.geometry();
  PolarityFrame frame(geom.width, geom.height, t0, window);
  const auto events = stream.events();
  const Timestamp t1 = t0 > UINT64_MAX - window ? UINT64_MAX : t0 + window;
  const auto [lo, hi] = interval_bounds(events, t0, t1);
  accumulate_into(frame, events.subspan(lo, hi - lo));
  return frame;
}

FrameSequencer::FrameSequencer(const EventStream& stream, Timestamp window)
    : stream_(stream), window_(window) {
  if (window == 0) raise(Errc::InvalidWindow, "integration window must be positive");
  if (!stream.empty()) {
    empty_ = false;
    first_index_ = *stream.first_time() / window;
    last_index_ = *stream.last_time() / window;
    next_index_ = first_index_;
  }
}

PolarityFrame FrameSequencer::next() {
  const auto& geom = stream_.geometry();
  const Timestamp t0 = next_index_ * window_;
  PolarityFrame frame(geom.width, geom.height, t0, window_);
  const auto events = stream_.events();
  const Timestamp t1 = t0 + window_;
  std::size_t end = cursor_;
  while (end < events.size() && events[end].t < t1) ++end;
  accumulate_into(frame, events.subspan(cursor_, end - cursor_));
  cursor_ = end;
  ++next_index_;
  return frame;
}

std::vector<PolarityFrame> frame_sequence(const EventStream& stream, Timestamp window) {
  FrameSequencer seq(stream, window);
  std::vector<PolarityFrame> frames;
  frames.reserve(seq.frame_count());
  while (!seq.done()) frames.push_back(seq.next());
  return frames;
}

RgbImage render_rgb(const PolarityFrame& frame) {
  RgbImage img{frame.width(), frame.height(), std::vector<std::uint8_t>(frame.plane_size() * 3, 0)};
  const auto pos = frame.pos();
  const auto neg = frame.neg();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    std::uint8_t* px = img.data.data() + 3 * i;
    if (pos[i] > 0) {
      px[0] = px[1] = px[2] = 255;
    } else if (neg[i] > 0) {
      px[2] = 255;
    }
  }
  return img;
}

PolarityFrame downscale(const PolarityFrame& frame, std::uint16_t out_w, std::uint16_t out_h) {
  if (out_w == 0 || out_h == 0) raise(Errc::InvalidArgument, "output dimensions must be positive");
  if (out_w > frame.width() || out_h > frame.height()) {
    raise(Errc::UpscaleUnsupported, "cannot resize " + std::to_string(frame.width()) + "x" +
                                        std::to_string(frame.height()) + " up to " +
                                        std::to_string(out_w) + "x" + std::to_string(out_h));
  }
  const std::size_t in_w = frame.width();
  const std::size_t in_h = frame.height();
  const auto taps_x = detail::area_weights(static_cast<std::uint32_t>(in_w), out_w);
  const auto taps_y = detail::area_weights(static_cast<std::uint32_t>(in_h), out_h);
  const std::uint64_t denom = static_cast<std::uint64_t>(in_w) * in_h;

  std::vector<std::uint8_t> out(static_cast<std::size_t>(out_w) * out_h * 2);
  std::vector<std::uint64_t> rows(in_h * out_w);
  for (int plane = 0; plane < 2; ++plane) {
    const auto src = plane == 0 ? frame.pos() : frame.neg();
    std::uint8_t* dst = out.data() + plane * static_cast<std::size_t>(out_w) * out_h;
    for (std::size_t y = 0; y < in_h; ++y) {
      const std::uint8_t* row = src.data() + y * in_w;
      for (std::size_t j = 0; j < out_w; ++j) {
        std::uint64_t acc = 0;
        for (const auto& tap : taps_x[j]) acc += static_cast<std::uint64_t>(tap.weight) * row[tap.src];
        rows[y * out_w + j] = acc;
      }
    }
    for (std::size_t jy = 0; jy < out_h; ++jy) {
      for (std::size_t jx = 0; jx < out_w; ++jx) {
        std::uint64_t acc = 0;
        for (const auto& tap : taps_y[jy]) acc += tap.weight * rows[tap.src * out_w + jx];
        const std::uint64_t rounded = (2 * acc + denom) / (2 * denom);
        dst[jy * out_w + jx] = static_cast<std::uint8_t>(std::min<std::uint64_t>(rounded, kSaturation));
      }
    }
  }
  return PolarityFrame(out_w, out_h, frame.t0(), frame.duration(), std::move(out));
}

Grid<std::uint16_t> activity(const PolarityFrame& frame) {
  Grid<std::uint16_t> grid(frame.width(), frame.height());
  const auto pos = frame.pos();
  const auto neg = frame.neg();
  auto out = grid.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(pos[i] + neg[i]);
  }
  return grid;
}

namespace {

constexpr char kFrameMagic[4] = {'P', 'F', 'R', '1'};
constexpr std::size_t kFrameHeaderSize = 4 + 2 + 2 + 8 + 8;

template <typename T>
void put_le(std::uint8_t* p, T v) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* p) noexcept {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const PolarityFrame& frame) {
  std::vector<std::uint8_t> out(kFrameHeaderSize + frame.payload_bytes());
  std::memcpy(out.data(), kFrameMagic, 4);
  put_le<std::uint16_t>(out.data() + 4, frame.width());
  put_le<std::uint16_t>(out.data() + 6, frame.height());
  put_le<std::uint64_t>(out.data() + 8, frame.t0());
  put_le<std::uint64_t>(out.data() + 16, frame.duration());
  std::copy(frame.payload().begin(), frame.payload().end(), out.begin() + kFrameHeaderSize);
  return out;
}

PolarityFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFrameMagic, 4) != 0) {
    raise(Errc::BadMagic, "not a PFR1 frame");
  }
  if (bytes.size() < kFrameHeaderSize) raise(Errc::TruncatedRecord, "PFR1 header truncated");
  const auto w = get_le<std::uint16_t>(bytes.data() + 4);
  const auto h = get_le<std::uint16_t>(bytes.data() + 6);
  const auto t0 = get_le<std::uint64_t>(bytes.data() + 8);
  const auto duration = get_le<std::uint64_t>(bytes.data() + 16);
  const std::size_t expected = static_cast<std::size_t>(w) * h * 2;
  if (bytes.size() - kFrameHeaderSize != expected) {
    raise(Errc::TruncatedRecord, "PFR1 payload is " + std::to_string(bytes.size() - kFrameHeaderSize) +
                                     " bytes, expected " + std::to_string(expected));
  }
  return PolarityFrame(w, h, t0, duration,
                       std::vector<std::uint8_t>(bytes.begin() + kFrameHeaderSize, bytes.end()));
}

void write_frame(const std::string& path, const PolarityFrame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write " + path);
  const auto bytes = encode_frame(frame);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::IoError, "short write to " + path);
}

PolarityFrame read_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_frame(bytes);
}

}  // namespace evflow
