#include "evflow/power.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "evflow/error.hpp"

namespace evflow {

PowerTrace load_power_trace(std::istream& in) {
  detail::CsvReader csv(in, "t_s,voltage_v,current_a");
  std::vector<double> times;
  PowerTrace trace;
  std::vector<std::string> f;
  while (csv.next(f)) {
    times.push_back(parse_double(f[0]));
    const PowerSample s{parse_double(f[1]), parse_double(f[2])};
    if (s.voltage < 0.0) {
      raise(Errc::NegativeVoltage, "line " + std::to_string(csv.line_no()) + ": voltage " + f[1]);
    }
    trace.samples.push_back(s);
  }
  if (times.empty()) raise(Errc::EmptyTrace, "power trace has no samples");
  if (times.size() < 2) raise(Errc::TraceTooShort, "cannot infer a sample period from one sample");
  const double period = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(period > 0.0)) raise(Errc::NonUniformSampling, "timestamps do not increase");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = times.front() + static_cast<double>(i) * period;
    if (std::abs(times[i] - expected) > 0.01 * period) {
      std::ostringstream msg;
      msg << "sample " << i << " at t=" << times[i] << " s deviates from the uniform grid (period "
          << period << " s)";
      raise(Errc::NonUniformSampling, msg.str());
    }
  }
  trace.start_time = times.front();
  trace.sample_period = period;
  return trace;
}

PowerTrace load_power_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  return load_power_trace(in);
}

void write_power_trace(std::ostream& out, const PowerTrace& trace) {
  const auto old = out.precision(17);
  out << "t_s,voltage_v,current_a\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    out << trace.start_time + static_cast<double>(i) * trace.sample_period << ','
        << trace.samples[i].voltage << ',' << trace.samples[i].current << '\n';
  }
  out.precision(old);
}

std::vector<double> smooth(const PowerTrace& trace, std::size_t window) {
  if (window == 0) raise(Errc::InvalidArgument, "smoothing window must be at least 1");
  const std::size_t n = trace.samples.size();
  if (n < window) {
    raise(Errc::TraceTooShort, "trace of " + std::to_string(n) + " samples is shorter than window " +
                                   std::to_string(window));
  }
  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i) power[i] = trace.samples[i].power();
  std::vector<double> out(n - window + 1);
  const double inv = static_cast<double>(window);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < window; ++k) acc += power[j + k];
    out[j] = acc / inv;
  }
  return out;
}

double trace_energy(const PowerTrace& trace, double t_start, double t_end) {
  const std::size_t n = trace.samples.size();
  if (n < 2 || !(trace.sample_period > 0.0)) raise(Errc::TraceTooShort, "need at least two samples");
  if (!(t_start < t_end)) raise(Errc::WindowOutOfRange, "t_start must precede t_end");
  const double last = static_cast<double>(n - 1);
  const double slack = 1e-9;
  double u0 = (t_start - trace.start_time) / trace.sample_period;
  double u1 = (t_end - trace.start_time) / trace.sample_period;
  if (u0 < -slack || u1 > last + slack) {
    std::ostringstream msg;
    msg << "window [" << t_start << ", " << t_end << "] s exceeds trace [" << trace.start_time
        << ", " << trace.end_time() << "] s";
    raise(Errc::WindowOutOfRange, msg.str());
  }
  u0 = std::clamp(u0, 0.0, last);
  u1 = std::clamp(u1, 0.0, last);

  // Integrate in sample-index units, then scale by the period.
  const auto first = static_cast<std::size_t>(std::floor(u0));
  double index_integral = 0.0;
  for (std::size_t i = first; i < n - 1 && static_cast<double>(i) < u1; ++i) {
    const double pi = trace.samples[i].power();
    const double pj = trace.samples[i + 1].power();
    const double lo = std::max(u0, static_cast<double>(i));
    const double hi = std::min(u1, static_cast<double>(i + 1));
    if (hi <= lo) continue;
    const double p_lo = lo == static_cast<double>(i) ? pi : pi + (lo - static_cast<double>(i)) * (pj - pi);
    const double p_hi = hi == static_cast<double>(i + 1) ? pj : pi + (hi - static_cast<double>(i)) * (pj - pi);
    index_integral += 0.5 * (hi - lo) * (p_lo + p_hi);
  }
  return index_integral * trace.sample_period;
}

double energy_per_frame(const PowerTrace& trace, double t_start, double t_end,
                        std::uint64_t frames_processed) {
  if (frames_processed == 0) raise(Errc::ZeroFrames, "frames_processed must be at least 1");
  return trace_energy(trace, t_start, t_end) * 1000.0 / static_cast<double>(frames_processed);
}

bool BatchConfig::valid() const {
  return batch_size >= 1 && frame_period_us > 0 && static_cast<bool>(inference_latency_ms) &&
         inference_latency_ms(batch_size) > 0.0;
}

BatchingResult batching_latency(const BatchConfig& cfg) {
  if (!cfg.valid()) raise(Errc::ConfigInvalid, "batch config needs B >= 1, T > 0 and positive latency");
  BatchingResult r;
  const double b = cfg.batch_size;
  r.fill_time_ms = b * (static_cast<double>(cfg.frame_period_us) / 1000.0);
  r.inference_latency_ms = cfg.inference_latency_ms(cfg.batch_size);
  r.worst_case_latency_ms = r.fill_time_ms + r.inference_latency_ms;
  r.throughput_fps = b * 1000.0 / std::max(r.fill_time_ms, r.inference_latency_ms);
  r.realtime_feasible = r.inference_latency_ms <= r.fill_time_ms;
  return r;
}

LatencyTable LatencyTable::load(std::istream& in) {
  detail::CsvReader csv(in, "batch_size,latency_ms");
  std::map<std::uint32_t, double> ms;
  std::vector<std::string> f;
  while (csv.next(f)) {
    const auto b = parse_int(f[0]);
    const double l = parse_double(f[1]);
    if (b < 1 || b > UINT32_MAX) raise(Errc::ParseError, "line " + std::to_string(csv.line_no()) + ": batch size must be >= 1");
    if (!(l > 0.0)) raise(Errc::ParseError, "line " + std::to_string(csv.line_no()) + ": latency must be positive");
    if (!ms.emplace(static_cast<std::uint32_t>(b), l).second) {
      raise(Errc::ParseError, "line " + std::to_string(csv.line_no()) + ": duplicate batch size");
    }
  }
  return LatencyTable(std::move(ms));
}

LatencyTable LatencyTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  return load(in);
}

std::optional<double> LatencyTable::find(std::uint32_t batch_size) const {
  const auto it = ms_.find(batch_size);
  if (it == ms_.end()) return std::nullopt;
  return it->second;
}

LatencyModel LatencyTable::model() const {
  return [table = ms_](std::uint32_t b) {
    const auto it = table.find(b);
    if (it == table.end()) raise(Errc::MissingInput, "no latency for batch size " + std::to_string(b));
    return it->second;
  };
}

BenchReport sweep_batches(std::span<const std::uint32_t> batch_sizes, const LatencyTable& latency,
                          const std::map<std::uint32_t, BatchRun>* runs,
                          Timestamp frame_period_us) {
  std::vector<std::uint32_t> sizes(batch_sizes.begin(), batch_sizes.end());
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  BenchReport report;
  report.frame_period_us = frame_period_us;
  for (const auto b : sizes) {
    if (b == 0) raise(Errc::InvalidArgument, "batch size must be >= 1");
    const auto lat = latency.find(b);
    if (!lat) raise(Errc::MissingInput, "no latency entry for batch size " + std::to_string(b));
    BenchRow row;
    row.batch_size = b;
    const auto timing = batching_latency({b, frame_period_us, [l = *lat](std::uint32_t) { return l; }});
    row.inference_latency_ms = timing.inference_latency_ms;
    row.worst_case_latency_ms = timing.worst_case_latency_ms;
    row.throughput_fps = timing.throughput_fps;
    row.realtime_feasible = timing.realtime_feasible;
    if (runs != nullptr) {
      const auto it = runs->find(b);
      if (it == runs->end()) raise(Errc::MissingInput, "no power trace for batch size " + std::to_string(b));
      const BatchRun& run = it->second;
      const double t0 = run.t_start.value_or(run.trace.start_time);
      const double t1 = run.t_end.value_or(run.trace.end_time());
      const double joules = trace_energy(run.trace, t0, t1);
      row.energy_per_frame_mj = energy_per_frame(run.trace, t0, t1, run.frames_processed);
      row.mean_power_w = joules / (t1 - t0);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["frame_period_us"] = frame_period_us;
  auto rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["batch_size"] = r.batch_size;
    row["energy_per_frame_mj"] = r.energy_per_frame_mj ? nlohmann::ordered_json(*r.energy_per_frame_mj) : nlohmann::ordered_json(nullptr);
    row["mean_power_w"] = r.mean_power_w ? nlohmann::ordered_json(*r.mean_power_w) : nlohmann::ordered_json(nullptr);
    row["inference_latency_ms"] = r.inference_latency_ms;
    row["worst_case_latency_ms"] = r.worst_case_latency_ms;
    row["throughput_fps"] = r.throughput_fps;
    row["realtime_feasible"] = r.realtime_feasible;
    rows_json.push_back(std::move(row));
  }
  j["rows"] = std::move(rows_json);
  return j.dump();
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  out << std::right << std::setw(6) << "batch" << std::setw(14) << "mJ/frame" << std::setw(10)
      << "mean_W" << std::setw(14) << "infer_ms" << std::setw(16) << "worst_case_ms"
      << std::setw(12) << "fps" << std::setw(10) << "feasible" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::setw(6) << r.batch_size;
    if (r.energy_per_frame_mj) {
      out << std::setw(14) << std::setprecision(2) << *r.energy_per_frame_mj;
    } else {
      out << std::setw(14) << "-";
    }
    if (r.mean_power_w) {
      out << std::setw(10) << std::setprecision(2) << *r.mean_power_w;
    } else {
      out << std::setw(10) << "-";
    }
    out << std::setw(14) << std::setprecision(2) << r.inference_latency_ms << std::setw(16)
        << std::setprecision(2) << r.worst_case_latency_ms << std::setw(12) << std::setprecision(2)
        << r.throughput_fps << std::setw(10) << (r.realtime_feasible ? "yes" : "no") << '\n';
  }
  return out.str();
}

}  // namespace evflow
