// evflow: command-line front end to the evflow core library.
//
// Exit status: 0 on success, 1 on data errors, 2 on usage errors. Failures
// print a single line to stderr of the form `error: <Code>: <detail>`.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evflow/accumulator.hpp"
#include "evflow/error.hpp"
#include "evflow/event_stream.hpp"
#include "evflow/geometry.hpp"
#include "evflow/image_io.hpp"
#include "evflow/kv_config.hpp"
#include "evflow/labels.hpp"
#include "evflow/pipeline.hpp"
#include "evflow/power.hpp"
#include "evflow/sync.hpp"
#include "evflow/synthgen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using namespace evflow;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError {
  std::string message;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoError, "cannot write " + path);
  return out;
}

std::pair<std::uint16_t, std::uint16_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError{"expected WxH, got '" + text + "'"};
  std::int64_t w = 0;
  std::int64_t h = 0;
  try {
    w = parse_int(text.substr(0, x));
    h = parse_int(text.substr(x + 1));
  } catch (const Error&) {
    throw UsageError{"expected WxH, got '" + text + "'"};
  }
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) throw UsageError{"size out of range: " + text};
  return {static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h)};
}

SensorGeometry sensor_from(const KeyValueDoc& doc, const std::string& override_size) {
  if (!override_size.empty()) {
    const auto [w, h] = parse_size(override_size);
    return {w, h};
  }
  const auto w = doc.get_int("sensor_width", kEvk4Geometry.width);
  const auto h = doc.get_int("sensor_height", kEvk4Geometry.height);
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) raise(Errc::ConfigInvalid, "sensor size out of range");
  return {static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h)};
}

std::vector<Track> load_tracks(const std::string& path) {
  auto in = open_in(path);
  return read_labels_csv(in);
}

std::string frame_name(std::int64_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.%s", static_cast<long long>(index), ext);
  return buf;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config;
  std::string out;
  std::string truth;
  std::string gray_dir;
  std::string sensor;
  std::optional<std::uint64_t> seed;
  int gray_lag_frames = 0;
  bool no_snap = false;
};

int cmd_synth(const SynthArgs& a) {
  const auto doc = KeyValueDoc::load(a.config);
  auto traj = trajectory_from_config(doc);
  const auto geom = sensor_from(doc, a.sensor);
  const auto period = static_cast<Timestamp>(doc.get_int("window_us", kDefaultWindowUs));
  if (period == 0) raise(Errc::InvalidWindow, "window_us must be positive");
  if (!a.no_snap) traj.duration_s = snap_duration_to_frames(traj.duration_s, period);
  const auto seed = a.seed.value_or(static_cast<std::uint64_t>(doc.get_int("seed", 1)));

  const auto stream = generate_disc_events(traj, geom, seed);
  write_evb1(a.out, stream);
  const Track truth = ground_truth_boxes(traj, period, geom);
  std::size_t frames = static_cast<std::size_t>(truth.keyframes().size());
  if (!a.truth.empty()) {
    auto out = open_out(a.truth);
    const std::vector<Track> tracks{truth};
    write_labels_csv(out, tracks);
  }
  std::size_t gray_frames = 0;
  if (!a.gray_dir.empty()) {
    fs::create_directories(a.gray_dir);
    // Frame k is exposed at k*T; a positive lag makes the gray stream trail
    // the events by that many frames.
    const auto count = static_cast<std::int64_t>(std::ceil(traj.duration_s * 1e6 / static_cast<double>(period)));
    for (std::int64_t k = 0; k < count; ++k) {
      const double t = static_cast<double>((k - a.gray_lag_frames) * static_cast<std::int64_t>(period)) * 1e-6;
      write_pgm((fs::path(a.gray_dir) / frame_name(k, "pgm")).string(), render_disc_gray(traj, geom, t));
      ++gray_frames;
    }
  }
  json j;
  j["events"] = stream.size();
  j["width"] = geom.width;
  j["height"] = geom.height;
  j["duration_s"] = traj.duration_s;
  j["truth_frames"] = frames;
  j["gray_frames"] = gray_frames;
  j["seed"] = seed;
  std::cout << j.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------- accumulate

struct AccumulateArgs {
  std::string in;
  std::string out_dir;
  Timestamp window_us = kDefaultWindowUs;
  std::string downscale_to;
  bool ppm = false;
  bool no_pfr = false;
};

int cmd_accumulate(const AccumulateArgs& a) {
  std::optional<std::pair<std::uint16_t, std::uint16_t>> target;
  if (!a.downscale_to.empty()) target = parse_size(a.downscale_to);
  if (a.window_us == 0) raise(Errc::InvalidWindow, "window must be positive");
  const auto stream = read_evb1(a.in);
  const auto report = validate(stream);
  if (!report.ok) raise(*report.violation, report.message);

  fs::create_directories(a.out_dir);
  FrameSequencer seq(stream, a.window_us);
  std::size_t frames = 0;
  std::size_t bytes = 0;
  while (!seq.done()) {
    auto frame = seq.next();
    if (target) frame = downscale(frame, target->first, target->second);
    const auto index = frame.frame_index();
    if (!a.no_pfr) write_frame((fs::path(a.out_dir) / frame_name(index, "pfr")).string(), frame);
    if (a.ppm) write_ppm((fs::path(a.out_dir) / frame_name(index, "ppm")).string(), render_rgb(frame));
    bytes = frame.payload_bytes();
    ++frames;
  }
  json j;
  j["frames"] = frames;
  j["window_us"] = a.window_us;
  j["payload_bytes"] = bytes;
  std::cout << j.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------------- sync

struct SyncArgs {
  std::string events;
  std::string frames_dir;
  Timestamp frame_period_us = kDefaultWindowUs;
  int max_offset = 10;
  std::string raster;
};

int cmd_sync(const SyncArgs& a) {
  if (a.max_offset < 0) throw UsageError{"--max-offset must be >= 0"};
  std::size_t out_w = kSyncRasterWidth;
  std::size_t out_h = kSyncRasterHeight;
  if (!a.raster.empty()) std::tie(out_w, out_h) = parse_size(a.raster);

  const auto stream = read_evb1(a.events);
  if (!fs::is_directory(a.frames_dir)) raise(Errc::IoError, "not a directory: " + a.frames_dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(a.frames_dir)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  GrayFrameSequence gray;
  gray.frame_period = a.frame_period_us;
  for (const auto& p : paths) gray.frames.push_back(read_gray(p.string()));
  if (gray.frames.size() < 2) raise(Errc::InsufficientOverlap, "need at least two frames");
  gray.width = gray.frames.front().width();
  gray.height = gray.frames.front().height();
  gray.validate();

  const auto rgb_seq = rgb_activity_sequence(gray, out_w, out_h);
  const auto ev_seq = event_activity_sequence(stream, a.frame_period_us, rgb_seq.size(), out_w, out_h);
  const auto result = find_offset(ev_seq, rgb_seq, a.max_offset);
  std::cout << result.to_json() << '\n';
  return 0;
}

// ------------------------------------------------------ transfer-labels

struct TransferArgs {
  std::string labels;
  std::string calib;
  std::string out;
};

int cmd_transfer(const TransferArgs& a) {
  const auto pair = load_calibration(KeyValueDoc::load(a.calib));
  const auto tracks = load_tracks(a.labels);
  std::vector<Track> moved;
  std::size_t boxes_in = 0;
  std::size_t boxes_out = 0;
  std::size_t partial = 0;
  std::map<std::string, std::size_t> dropped;
  for (const auto& track : tracks) {
    std::vector<Keyframe> kept;
    for (const auto& kf : track.keyframes()) {
      ++boxes_in;
      try {
        const auto t = transfer_bbox(kf.box, pair);
        if (t.degenerate) {
          ++dropped["Degenerate"];
          continue;
        }
        if (t.partial) ++partial;
        kept.push_back({kf.frame_idx, t.box});
      } catch (const Error& e) {
        if (e.code() != Errc::OffSensor && e.code() != Errc::BehindCamera) throw;
        ++dropped[std::string(to_string(e.code()))];
      }
    }
    boxes_out += kept.size();
    if (!kept.empty()) moved.emplace_back(track.id(), std::move(kept));
  }
  auto out = open_out(a.out);
  write_labels_csv(out, moved);

  json j;
  j["tracks_in"] = tracks.size();
  j["tracks_out"] = moved.size();
  j["boxes_in"] = boxes_in;
  j["boxes_out"] = boxes_out;
  j["partial"] = partial;
  j["dropped"] = dropped;
  std::cout << j.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string detections;
  std::string truth;
  double iou = 0.5;
};

int cmd_eval(const EvalArgs& a) {
  if (!(a.iou > 0.0 && a.iou <= 1.0)) throw UsageError{"--iou must lie in (0, 1]"};
  auto din = open_in(a.detections);
  const auto dets = read_detections_csv(din);
  const auto gts = expand_tracks(load_tracks(a.truth));
  std::cout << evaluate(dets, gts, a.iou).to_json() << '\n';
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string latency;
  std::vector<std::uint32_t> batch_sizes;
  std::vector<std::string> traces;  // B:path:frames
  std::optional<double> t_start;
  std::optional<double> t_end;
  Timestamp frame_period_us = kDefaultWindowUs;
  std::string format = "json";
};

int cmd_bench(const BenchArgs& a) {
  const auto table = LatencyTable::load_file(a.latency);
  std::map<std::uint32_t, BatchRun> runs;
  for (const auto& arg : a.traces) {
    const auto first = arg.find(':');
    const auto last = arg.rfind(':');
    if (first == std::string::npos || first == last) {
      throw UsageError{"--trace expects B:path:frames, got '" + arg + "'"};
    }
    std::int64_t b = 0;
    std::int64_t frames = 0;
    try {
      b = parse_int(arg.substr(0, first));
      frames = parse_int(arg.substr(last + 1));
    } catch (const Error&) {
      throw UsageError{"--trace expects B:path:frames, got '" + arg + "'"};
    }
    if (b < 1 || frames < 0) throw UsageError{"--trace values out of range: '" + arg + "'"};
    BatchRun run;
    run.trace = load_power_trace_file(arg.substr(first + 1, last - first - 1));
    run.t_start = a.t_start;
    run.t_end = a.t_end;
    run.frames_processed = static_cast<std::uint64_t>(frames);
    runs[static_cast<std::uint32_t>(b)] = std::move(run);
  }

  std::vector<std::uint32_t> sizes = a.batch_sizes;
  if (sizes.empty()) {
    if (!runs.empty()) {
      for (const auto& [b, run] : runs) sizes.push_back(b);
    } else {
      for (const auto& [b, ms] : table.entries()) sizes.push_back(b);
    }
  }
  const auto report = sweep_batches(sizes, table, runs.empty() ? nullptr : &runs, a.frame_period_us);
  if (a.format == "table") {
    std::cout << report.to_table();
  } else {
    std::cout << report.to_json() << '\n';
  }
  return 0;
}

// ------------------------------------------------------------------ run

struct RunArgs {
  std::string config;
  std::string events;
  std::string truth;
  std::string calib;
  std::string detections_out;
  std::string sensor;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::uint32_t> batch_size;
  std::optional<double> replay_speed;
};

int cmd_run(const RunArgs& a) {
  auto doc = a.config.empty() ? KeyValueDoc{} : KeyValueDoc::load(a.config);
  if (a.threads) doc.set("threads", std::to_string(*a.threads));
  if (a.batch_size) doc.set("batch_size", std::to_string(*a.batch_size));
  if (a.replay_speed) doc.set("replay_speed", std::to_string(*a.replay_speed));
  const auto cfg = PipelineConfig::from_doc(doc);

  std::optional<CameraPair> calib;
  if (!a.calib.empty()) calib = load_calibration(KeyValueDoc::load(a.calib));

  EventStream stream;
  std::vector<Track> tracks;
  if (!a.events.empty()) {
    stream = read_evb1(a.events);
  } else {
    // No recording given: synthesize one from the trajectory fields.
    auto traj = trajectory_from_config(doc);
    traj.duration_s = snap_duration_to_frames(traj.duration_s, cfg.window_us);
    const auto geom = sensor_from(doc, a.sensor);
    const auto seed = a.seed.value_or(static_cast<std::uint64_t>(doc.get_int("seed", 1)));
    stream = generate_disc_events(traj, geom, seed);
    if (a.truth.empty()) tracks.push_back(ground_truth_boxes(traj, cfg.window_us, geom));
  }
  if (!a.truth.empty()) tracks = load_tracks(a.truth);
  const auto report = validate(stream);
  if (!report.ok) raise(*report.violation, report.message);

  const auto result = run_pipeline(stream, cfg, calib ? &*calib : nullptr, tracks);
  if (!a.detections_out.empty()) {
    auto out = open_out(a.detections_out);
    write_detections_csv(out, result.detections);
  }
  std::cout << result.to_json() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evflow: event-camera frame pipeline tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "evflow 0.1.0");
  std::function<int()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic disc recording and its ground truth");
  s->add_option("--config", synth.config, "Trajectory config (key = value)")->required();
  s->add_option("--out", synth.out, "Output EVB1 file")->required();
  s->add_option("--truth", synth.truth, "Output labels CSV");
  s->add_option("--gray-dir", synth.gray_dir, "Write grayscale PGM frames here");
  s->add_option("--gray-lag", synth.gray_lag_frames, "Frames by which the gray stream trails events");
  s->add_option("--sensor", synth.sensor, "Sensor size WxH (default from config or 1280x720)");
  s->add_option("--seed", synth.seed, "RNG seed (default from config or 1)");
  s->add_flag("--no-snap", synth.no_snap, "Keep duration_s as given instead of whole frames");
  s->callback([&] { action = [&] { return cmd_synth(synth); }; });

  AccumulateArgs acc;
  auto* c = app.add_subcommand("accumulate", "Convert an EVB1 recording to PFR1 polarity frames");
  c->add_option("--in", acc.in, "Input EVB1 file")->required();
  c->add_option("--out-dir", acc.out_dir, "Output directory")->required();
  c->add_option("--window-us", acc.window_us, "Integration window in microseconds");
  c->add_option("--downscale", acc.downscale_to, "Area-downscale frames to WxH");
  c->add_flag("--ppm", acc.ppm, "Also write PPM renders");
  c->add_flag("--no-pfr", acc.no_pfr, "Skip the PFR1 dumps");
  c->callback([&] { action = [&] { return cmd_accumulate(acc); }; });

  SyncArgs sync;
  auto* y = app.add_subcommand("sync", "Estimate the frame offset between events and RGB frames");
  y->add_option("--events", sync.events, "Input EVB1 file")->required();
  y->add_option("--frames-dir", sync.frames_dir, "Directory of PGM/PPM frames")->required();
  y->add_option("--frame-period-us", sync.frame_period_us, "RGB frame period in microseconds");
  y->add_option("--max-offset", sync.max_offset, "Largest |offset| searched, in frames");
  y->add_option("--raster", sync.raster, "Common correlation raster WxH (default 320x180)");
  y->callback([&] { action = [&] { return cmd_sync(sync); }; });

  TransferArgs transfer;
  auto* t = app.add_subcommand("transfer-labels", "Map RGB-view labels into the DVS view");
  t->add_option("--labels", transfer.labels, "Input labels CSV")->required();
  t->add_option("--calib", transfer.calib, "Calibration file")->required();
  t->add_option("--out", transfer.out, "Output labels CSV")->required();
  t->callback([&] { action = [&] { return cmd_transfer(transfer); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compute AP of detections against labels");
  e->add_option("--detections", ev.detections, "Detections CSV")->required();
  e->add_option("--truth", ev.truth, "Labels CSV")->required();
  e->add_option("--iou", ev.iou, "IoU threshold");
  e->callback([&] { action = [&] { return cmd_eval(ev); }; });

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Energy and latency report per batch size");
  b->add_option("--latency", bench.latency, "Latency table CSV (batch_size,latency_ms)")->required();
  b->add_option("--batch-sizes", bench.batch_sizes, "Batch sizes to report")->delimiter(',');
  b->add_option("--trace", bench.traces, "Power trace per batch size as B:path:frames");
  b->add_option("--t-start", bench.t_start, "Energy window start (s)");
  b->add_option("--t-end", bench.t_end, "Energy window end (s)");
  b->add_option("--frame-period-us", bench.frame_period_us, "Frame period in microseconds");
  b->add_option("--format", bench.format, "json or table")->check(CLI::IsMember({"json", "table"}));
  b->callback([&] { action = [&] { return cmd_bench(bench); }; });

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the accumulate-detect pipeline");
  r->add_option("--config", run.config, "Pipeline config (key = value)");
  r->add_option("--events", run.events, "Input EVB1 (default: synthesize from config)");
  r->add_option("--truth", run.truth, "Labels CSV to evaluate against");
  r->add_option("--calib", run.calib, "Calibration mapping RGB labels into the DVS view");
  r->add_option("--detections-out", run.detections_out, "Write detections CSV");
  r->add_option("--sensor", run.sensor, "Sensor size WxH for synthesized input");
  r->add_option("--seed", run.seed, "RNG seed for synthesized input");
  r->add_option("--threads", run.threads, "1 = single-threaded, 2 = pipelined")->check(CLI::Range(1, 2));
  r->add_option("--batch-size", run.batch_size, "Override batch_size");
  r->add_option("--replay-speed", run.replay_speed, "Override replay_speed (0 = unpaced)");
  r->callback([&] { action = [&] { return cmd_run(run); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "error: Usage: " << one_line(ex.what()) << '\n';
    return kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& ex) {
    std::cerr << "error: Usage: " << one_line(ex.message) << '\n';
    return kExitUsage;
  } catch (const Error& ex) {
    std::cerr << "error: " << to_string(ex.code()) << ": " << one_line(ex.detail()) << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& ex) {
    std::cerr << "error: IoError: " << one_line(ex.what()) << '\n';
    return kExitData;
  } catch (const std::exception& ex) {
    std::cerr << "error: Internal: " << one_line(ex.what()) << '\n';
    return kExitData;
  }
}
