#include "evflow/event_stream.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "evflow/kv_config.hpp"

namespace evflow {
namespace {

constexpr char kMagic[4] = {'E', 'V', 'B', '1'};

template <typename T>
T load_le(const std::uint8_t* p) noexcept {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  }
  return value;
}

template <typename T>
void store_le(std::uint8_t* p, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    p[i] = static_cast<std::uint8_t>(value >> (8 * i));
  }
}

std::string describe(const Event& e) {
  return "(t=" + std::to_string(e.t) + ", x=" + std::to_string(e.x) +
         ", y=" + std::to_string(e.y) + ")";
}

}  // namespace

std::optional<Timestamp> EventStream::first_time() const noexcept {
  if (events_.empty()) return std::nullopt;
  return events_.front().t;
}

std::optional<Timestamp> EventStream::last_time() const noexcept {
  if (events_.empty()) return std::nullopt;
  return events_.back().t;
}

ValidationReport validate(const EventStream& stream) {
  const auto& geom = stream.geometry();
  if (!geom.valid()) {
    return {false, Errc::InvalidArgument, 0, "sensor geometry must be non-zero"};
  }
  const auto events = stream.events();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!geom.contains(e.x, e.y)) {
      return {false, Errc::OutOfBounds, i,
              "event " + std::to_string(i) + " " + describe(e) + " outside " +
                  std::to_string(geom.width) + "x" + std::to_string(geom.height)};
    }
    if (e.p != Polarity::Positive && e.p != Polarity::Negative) {
      return {false, Errc::InvalidPolarity, i, "event " + std::to_string(i) + " has bad polarity"};
    }
    if (i > 0 && e.t < events[i - 1].t) {
      return {false, Errc::NonMonotonic, i,
              "timestamp decreases at index " + std::to_string(i) + " (" +
                  std::to_string(events[i - 1].t) + " -> " + std::to_string(e.t) + ")"};
    }
  }
  return {};
}

EventStream decode_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    raise(Errc::BadMagic, "not an EVB1 stream");
  }
  if (bytes.size() < kEvb1HeaderSize) {
    raise(Errc::TruncatedRecord, "EVB1 header truncated");
  }
  const SensorGeometry geom{load_le<std::uint16_t>(bytes.data() + 4),
                            load_le<std::uint16_t>(bytes.data() + 6)};
  if (!geom.valid()) raise(Errc::OutOfBounds, "EVB1 header declares zero-sized sensor");

  const std::size_t body = bytes.size() - kEvb1HeaderSize;
  if (body % kEvb1RecordSize != 0) {
    raise(Errc::TruncatedRecord, "payload of " + std::to_string(body) +
                                     " bytes is not a multiple of the 13-byte record");
  }
  const std::size_t count = body / kEvb1RecordSize;
  std::vector<Event> events;
  events.reserve(count);
  const std::uint8_t* p = bytes.data() + kEvb1HeaderSize;
  for (std::size_t i = 0; i < count; ++i, p += kEvb1RecordSize) {
    Event e;
    e.t = load_le<std::uint64_t>(p);
    e.x = load_le<std::uint16_t>(p + 8);
    e.y = load_le<std::uint16_t>(p + 10);
    const std::uint8_t pol = p[12];
    if (pol > 1) raise(Errc::InvalidPolarity, "record " + std::to_string(i) + " has polarity byte " + std::to_string(pol));
    e.p = static_cast<Polarity>(pol);
    if (!geom.contains(e.x, e.y)) {
      raise(Errc::OutOfBounds, "record " + std::to_string(i) + " " + describe(e) + " outside " +
                                   std::to_string(geom.width) + "x" + std::to_string(geom.height));
    }
    if (!events.empty() && e.t < events.back().t) {
      raise(Errc::NonMonotonic, "timestamp decreases at record " + std::to_string(i));
    }
    events.push_back(e);
  }
  return EventStream(geom, std::move(events));
}

std::vector<std::uint8_t> encode_stream(const EventStream& stream) {
  std::vector<std::uint8_t> out(kEvb1HeaderSize + stream.size() * kEvb1RecordSize);
  std::memcpy(out.data(), kMagic, sizeof(kMagic));
  store_le<std::uint16_t>(out.data() + 4, stream.geometry().width);
  store_le<std::uint16_t>(out.data() + 6, stream.geometry().height);
  std::uint8_t* p = out.data() + kEvb1HeaderSize;
  for (const Event& e : stream.events()) {
    store_le<std::uint64_t>(p, e.t);
    store_le<std::uint16_t>(p + 8, e.x);
    store_le<std::uint16_t>(p + 10, e.y);
    p[12] = static_cast<std::uint8_t>(e.p);
    p += kEvb1RecordSize;
  }
  return out;
}

EventStream read_evb1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_stream(bytes);
}

void write_evb1(const std::string& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write " + path);
  const auto bytes = encode_stream(stream);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::IoError, "short write to " + path);
}

EventStream read_events_csv(std::istream& in, SensorGeometry geometry) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t_us,x,y,p") {
    raise(Errc::ParseError, "expected CSV header 't_us,x,y,p'");
  }
  std::vector<Event> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    std::string_view fields[4];
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const auto comma = row.find(',', start);
      if ((comma == std::string_view::npos) != (f == 3)) {
        raise(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
      }
      fields[f] = row.substr(start, f == 3 ? std::string_view::npos : comma - start);
      start = comma + 1;
    }
    const auto t = parse_int(fields[0]);
    const auto x = parse_int(fields[1]);
    const auto y = parse_int(fields[2]);
    const auto p = parse_int(fields[3]);
    if (t < 0) raise(Errc::ParseError, "line " + std::to_string(line_no) + ": negative timestamp");
    if (p != 0 && p != 1) raise(Errc::InvalidPolarity, "line " + std::to_string(line_no));
    if (x < 0 || y < 0 || !geometry.contains(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y))) {
      raise(Errc::OutOfBounds, "line " + std::to_string(line_no) + ": pixel outside sensor");
    }
    Event e{static_cast<Timestamp>(t), static_cast<std::uint16_t>(x),
            static_cast<std::uint16_t>(y), static_cast<Polarity>(p)};
    if (!events.empty() && e.t < events.back().t) {
      raise(Errc::NonMonotonic, "line " + std::to_string(line_no));
    }
    events.push_back(e);
  }
  return EventStream(geometry, std::move(events));
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
  out << "t_us,x,y,p\n";
  for (const Event& e : stream.events()) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
  }
}

std::pair<std::size_t, std::size_t> interval_bounds(std::span<const Event> events, Timestamp t0,
                                                    Timestamp t1) noexcept {
  const auto by_time = [](const Event& e, Timestamp t) { return e.t < t; };
  const auto lo = std::lower_bound(events.begin(), events.end(), t0, by_time);
  const auto hi = std::lower_bound(lo, events.end(), t1, by_time);
  return {static_cast<std::size_t>(lo - events.begin()),
          static_cast<std::size_t>(hi - events.begin())};
}

EventStream slice_interval(const EventStream& stream, Timestamp t0, Timestamp t1) {
  if (t0 > t1) {
    raise(Errc::InvalidInterval,
          "t0 (" + std::to_string(t0) + ") > t1 (" + std::to_string(t1) + ")");
  }
  const auto events = stream.events();
  const auto [lo, hi] = interval_bounds(events, t0, t1);
  return EventStream(stream.geometry(),
                     std::vector<Event>(events.begin() + static_cast<std::ptrdiff_t>(lo),
                                        events.begin() + static_cast<std::ptrdiff_t>(hi)));
}

}  // namespace evflow
