// SPDX-License-Identifier: Apache-2.0
#include "nbo/utilization.hpp"

#include <algorithm>

#include "nbo/errors.hpp"

namespace nbo {

UtilizationMonitor::UtilizationMonitor(std::vector<Pool> pools,
                                       std::chrono::milliseconds period,
                                       double threshold, int consecutive)
    : pools_(std::move(pools)),
      period_(period),
      threshold_(threshold),
      consecutive_(consecutive) {
  if (period_.count() <= 0)
    throw ConfigError("utilization monitor: period must be positive");
  if (consecutive_ < 1)
    throw ConfigError("utilization monitor: consecutive must be >= 1");
  latest_.assign(pools_.size(), 0.0);
}

UtilizationMonitor::~UtilizationMonitor() { stop(); }

void UtilizationMonitor::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void UtilizationMonitor::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::vector<double> UtilizationMonitor::latest() const {
  std::lock_guard lock(mu_);
  return latest_;
}

std::vector<UtilizationReading> UtilizationMonitor::readings() const {
  std::lock_guard lock(mu_);
  return {history_.begin(), history_.end()};
}

void UtilizationMonitor::run() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<int64_t> prev_busy(pools_.size(), 0);
  for (size_t i = 0; i < pools_.size(); ++i) prev_busy[i] = pools_[i].busy_ns();
  auto prev_t = start;
  int hot_streak = 0;

  std::unique_lock lock(mu_);
  while (running_) {
    cv_.wait_for(lock, period_, [this] { return !running_; });
    if (!running_) break;
    lock.unlock();

    const auto now = std::chrono::steady_clock::now();
    const auto wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(now - prev_t)
            .count();
    UtilizationReading reading;
    reading.t_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       now - start)
                       .count();
    bool any_hot = false;
    for (size_t i = 0; i < pools_.size(); ++i) {
      const int64_t busy = pools_[i].busy_ns();
      const double denom = static_cast<double>(wall_ns) *
                           static_cast<double>(std::max<size_t>(1, pools_[i].workers));
      const double fraction =
          denom > 0 ? static_cast<double>(busy - prev_busy[i]) / denom : 0.0;
      reading.busy_fraction.push_back(fraction);
      prev_busy[i] = busy;
      if (fraction > threshold_) any_hot = true;
    }
    prev_t = now;
    hot_streak = any_hot ? hot_streak + 1 : 0;
    if (hot_streak >= consecutive_)
      signaled_.store(true, std::memory_order_relaxed);

    lock.lock();
    latest_ = reading.busy_fraction;
    history_.push_back(std::move(reading));
    if (history_.size() > 4096) history_.pop_front();
  }
}

}  // namespace nbo
