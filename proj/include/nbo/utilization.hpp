// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace nbo {

/// Accumulates busy nanoseconds for one worker. Workers wrap each unit of
/// work in a Scope; the monitor reads the counter from another thread.
class BusyCounter {
public:
  class Scope {
  public:
    explicit Scope(BusyCounter& c)
        : counter_(c), start_(std::chrono::steady_clock::now()) {}
    ~Scope() {
      const auto dt = std::chrono::steady_clock::now() - start_;
      counter_.busy_ns_.fetch_add(
          std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count(),
          std::memory_order_relaxed);
    }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

  private:
    BusyCounter& counter_;
    std::chrono::steady_clock::time_point start_;
  };

  int64_t busy_ns() const { return busy_ns_.load(std::memory_order_relaxed); }

private:
  std::atomic<int64_t> busy_ns_{0};
};

struct UtilizationReading {
  int64_t t_ms = 0;  // ms since monitor start
  std::vector<double> busy_fraction;  // one entry per pool
};

/// Samples worker-pool busy fractions every period and raises an advisory
/// scale-out signal when any pool stays above the threshold for
/// `consecutive` periods. Signal only: nothing is respawned.
class UtilizationMonitor {
public:
  struct Pool {
    std::string name;
    std::function<int64_t()> busy_ns;  // cumulative across the pool
    size_t workers = 1;
  };

  UtilizationMonitor(std::vector<Pool> pools,
                     std::chrono::milliseconds period, double threshold = 0.8,
                     int consecutive = 3);
  ~UtilizationMonitor();

  void start();
  void stop();

  bool scale_out_signaled() const {
    return signaled_.load(std::memory_order_relaxed);
  }
  std::vector<double> latest() const;
  std::vector<UtilizationReading> readings() const;

private:
  void run();

  std::vector<Pool> pools_;
  std::chrono::milliseconds period_;
  double threshold_;
  int consecutive_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool running_ = false;
  std::thread thread_;
  std::deque<UtilizationReading> history_;
  std::vector<double> latest_;
  std::atomic<bool> signaled_{false};
};

}  // namespace nbo
