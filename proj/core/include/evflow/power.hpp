#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evflow/event_stream.hpp"

namespace evflow {

struct PowerSample {
  double voltage = 0.0;  // V
  double current = 0.0;  // A
  double power() const noexcept { return voltage * current; }
};

// Uniformly sampled voltage/current trace. Sample i was taken at
// start_time + i * sample_period (seconds).
struct PowerTrace {
  double start_time = 0.0;
  double sample_period = 0.0;
  std::vector<PowerSample> samples;

  double end_time() const noexcept {
    return samples.empty() ? start_time
                           : start_time + static_cast<double>(samples.size() - 1) * sample_period;
  }
};

// Analyzer sample period used for the reference measurements: 0.5 ms.
inline constexpr double kAnalyzerSamplePeriod = 0.0005;
inline constexpr std::size_t kDefaultSmoothingWindow = 10;

// CSV `t_s,voltage_v,current_a`. Sampling must be uniform to within 1% of
// the inferred period. Errors: EmptyTrace, TraceTooShort (one row),
// NonUniformSampling, NegativeVoltage.
PowerTrace load_power_trace(std::istream& in);
PowerTrace load_power_trace_file(const std::string& path);
void write_power_trace(std::ostream& out, const PowerTrace& trace);

// Moving average of instantaneous power; N - window + 1 outputs.
std::vector<double> smooth(const PowerTrace& trace, std::size_t window = kDefaultSmoothingWindow);

// Trapezoidal integral of power over [t_start, t_end] in joules, with linear
// interpolation at window edges that fall between samples.
double trace_energy(const PowerTrace& trace, double t_start, double t_end);

// Energy over the window divided by frames_processed, in millijoules.
double energy_per_frame(const PowerTrace& trace, double t_start, double t_end,
                        std::uint64_t frames_processed);

// Inference latency in milliseconds as a function of batch size.
using LatencyModel = std::function<double(std::uint32_t)>;

struct BatchConfig {
  std::uint32_t batch_size = 1;
  Timestamp frame_period_us = 33'333;
  LatencyModel inference_latency_ms;

  bool valid() const;
};

struct BatchingResult {
  double fill_time_ms = 0.0;
  double inference_latency_ms = 0.0;
  double worst_case_latency_ms = 0.0;  // fill time + inference latency
  double throughput_fps = 0.0;
  bool realtime_feasible = false;      // inference fits inside the next fill
};

BatchingResult batching_latency(const BatchConfig& cfg);

class LatencyTable {
 public:
  LatencyTable() = default;
  explicit LatencyTable(std::map<std::uint32_t, double> ms) : ms_(std::move(ms)) {}

  // CSV `batch_size,latency_ms`.
  static LatencyTable load(std::istream& in);
  static LatencyTable load_file(const std::string& path);

  std::optional<double> find(std::uint32_t batch_size) const;
  const std::map<std::uint32_t, double>& entries() const noexcept { return ms_; }
  LatencyModel model() const;

 private:
  std::map<std::uint32_t, double> ms_;
};

// One measured run at a fixed batch size.
struct BatchRun {
  PowerTrace trace;
  std::optional<double> t_start;  // defaults to the trace start
  std::optional<double> t_end;    // defaults to the trace end
  std::uint64_t frames_processed = 0;
};

struct BenchRow {
  std::uint32_t batch_size = 0;
  std::optional<double> energy_per_frame_mj;
  std::optional<double> mean_power_w;
  double inference_latency_ms = 0.0;
  double worst_case_latency_ms = 0.0;
  double throughput_fps = 0.0;
  bool realtime_feasible = false;
};

struct BenchReport {
  Timestamp frame_period_us = 33'333;
  std::vector<BenchRow> rows;  // ascending batch size

  std::string to_json() const;
  std::string to_table() const;
};

// Rows for every requested batch size, sorted and de-duplicated. Latency is
// required for each size; when `runs` is non-null it must also hold a run for
// each size. MissingInput otherwise.
BenchReport sweep_batches(std::span<const std::uint32_t> batch_sizes, const LatencyTable& latency,
                          const std::map<std::uint32_t, BatchRun>* runs,
                          Timestamp frame_period_us = 33'333);

}  // namespace evflow
