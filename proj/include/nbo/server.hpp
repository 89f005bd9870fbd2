// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "nbo/net.hpp"
#include "nbo/snapshot.hpp"
#include "nbo/utilization.hpp"
#include "nbo/wire.hpp"

namespace nbo {

struct ServerConfig {
  std::string host = "127.0.0.1";
  uint16_t port = 0;               // 0 picks an ephemeral port
  size_t partitions = 1;           // P: single-writer update workers
  size_t inference_workers = 1;    // M: single-threaded model workers
  int64_t batch_window_us = 0;     // 0 disables micro-batching
  size_t max_batch = 128;
  bool pin_workers = false;
  double util_threshold = 0.8;
  int64_t util_period_ms = 250;
  int util_consecutive = 3;
};

struct ServerCounters {
  uint64_t recommends = 0;
  uint64_t updates = 0;
  uint64_t stale = 0;
  uint64_t errors = 0;
  uint64_t batches = 0;
  uint64_t max_batch = 0;
  uint64_t connections_total = 0;
  uint64_t open_connections = 0;
};

/// The real-time layer: one acceptor, one serial handler thread per
/// connection, P partition workers owning all writes for their user shard,
/// and M inference workers behind an optional micro-batching queue.
/// Requests from one connection are applied in send order; the recommend
/// path never mutates the store.
class Server {
public:
  Server(Engine& engine, ServerConfig cfg);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();

  uint16_t port() const { return port_; }
  bool running() const { return running_.load(); }
  const ServerConfig& config() const { return cfg_; }

  ServerCounters counters() const;
  bool scale_out_signaled() const;
  std::vector<double> utilization() const;  // {message pool, inference pool}

private:
  struct UpdateOutcome {
    bool ok = true;
    std::string reason;
    int64_t t_pickup = 0, t_computed = 0, t_stored = 0;
    uint64_t steps_seen = 0;
  };
  struct UpdateTask {
    std::string user_id;
    Event event;
    int64_t t_submit = 0;
    std::promise<UpdateOutcome> done;
  };
  struct Partition {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<UpdateTask> queue;
  };

  struct InferOutcome {
    double p_gbdt = 0, p_lstm = 0, score = 0;
    bool decision = false;
    int64_t t_start = 0, t_end = 0;
  };
  struct InferJob {
    std::shared_ptr<const UserRecord> record;
    std::vector<double> features;
    int64_t t_enqueued = 0;
    std::promise<InferOutcome> done;
  };

  void accept_loop();
  void handle_connection(Socket sock, uint64_t conn_id);
  void partition_worker(size_t index);
  void inference_worker(size_t index);

  void handle_recommend(Socket& sock, const Request& req, int64_t t0,
                        int64_t t1);
  void handle_update(Socket& sock, const Request& req, int64_t t0, int64_t t1);
  void handle_stats(Socket& sock, const Request& req);
  void send_error(Socket& sock, uint64_t req_id, const std::string& message);
  void send_frame(Socket& sock, const std::string& body);

  void maybe_pin(std::thread& t, size_t slot);

  Engine& engine_;
  ServerConfig cfg_;
  uint16_t port_ = 0;

  std::unique_ptr<Listener> listener_;
  std::thread acceptor_;
  std::atomic<bool> running_{false};
  // Workers outlive connection handlers: handlers may still be waiting on
  // in-flight tasks while the server drains, so workers stop last.
  std::atomic<bool> workers_stop_{false};

  std::vector<std::unique_ptr<Partition>> partitions_;
  std::vector<std::thread> partition_threads_;
  std::vector<std::unique_ptr<BusyCounter>> partition_busy_;

  std::mutex infer_mu_;
  std::condition_variable infer_cv_;
  std::deque<InferJob> infer_queue_;
  std::vector<std::thread> infer_threads_;
  std::vector<std::unique_ptr<BusyCounter>> infer_busy_;

  std::mutex conns_mu_;
  std::unordered_map<uint64_t, int> conn_fds_;
  std::vector<std::thread> conn_threads_;
  uint64_t next_conn_id_ = 0;

  std::unique_ptr<UtilizationMonitor> monitor_;

  std::atomic<uint64_t> n_recommends_{0}, n_updates_{0}, n_stale_{0},
      n_errors_{0}, n_batches_{0}, max_batch_{0}, n_conns_total_{0},
      n_conns_open_{0};
};

}  // namespace nbo
