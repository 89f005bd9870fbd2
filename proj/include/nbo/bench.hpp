// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nbo/event.hpp"
#include "nbo/wire.hpp"

namespace nbo {

struct BenchConfig {
  std::string host = "127.0.0.1";
  uint16_t port = 0;
  double rate = 100.0;            // total msg/s at the first step
  std::optional<double> ramp;     // final rate; steps interpolate linearly
  int ramp_steps = 4;
  double mix_update = 0.8;        // fraction of load sent to feature_update
  double duration_s = 5.0;
  size_t recommend_connections = 4;
  size_t update_connections = 4;
  uint64_t seed = 7;
  size_t synth_users = 200;
  size_t synth_products = 100;
  std::vector<Transaction> replay;  // optional clock-sorted event file
  bool collect_timings = false;     // keep every response's breakdown
};

/// One load step against one interface.
struct InterfaceResult {
  std::string interface_name;
  double target_rate = 0.0;
  double duration_s = 0.0;
  uint64_t sent = 0;
  uint64_t answered = 0;
  uint64_t ok = 0;
  uint64_t errors = 0;
  uint64_t stale = 0;
  uint64_t in_flight = 0;  // unanswered at cutoff (open loop only)
  double achieved_rps = 0.0;
  // Client-side round trip and server-side decomposition, microseconds.
  std::vector<double> rtt_us;
  std::vector<double> rl_us;  // rl_total (recommend) or process_time (update)
  std::vector<std::vector<double>> stage_us =
      std::vector<std::vector<double>>(11);
  std::vector<TimingBreakdown> timings;  // only when collect_timings
};

struct UtilizationSample {
  double t_s = 0.0;
  double message_pool = 0.0;
  double inference_pool = 0.0;
  bool scale_out = false;
};

struct StepReport {
  int step = 0;
  double target_rate = 0.0;
  InterfaceResult recommend;
  InterfaceResult update;
  std::vector<UtilizationSample> utilization;
};

struct BenchReport {
  std::vector<StepReport> steps;
};

/// Drive the configured load; open-loop on feature_update (send on
/// schedule, drain acks asynchronously) and closed-loop on recommend
/// (request/response per connection, both rate-capped by token buckets).
BenchReport run_bench(const BenchConfig& cfg);

/// CSV rows per step/interface plus utilization trace rows; columns are
/// documented in the README.
void write_report_csv(const BenchReport& report,
                      const std::filesystem::path& path);

}  // namespace nbo
