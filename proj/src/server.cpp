// SPDX-License-Identifier: Apache-2.0
#include "nbo/server.hpp"

#include <pthread.h>
#include <sys/socket.h>

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "nbo/clock.hpp"
#include "nbo/errors.hpp"

namespace nbo {

Server::Server(Engine& engine, ServerConfig cfg)
    : engine_(engine), cfg_(std::move(cfg)) {
  if (cfg_.partitions == 0 || cfg_.inference_workers == 0)
    throw ConfigError("server: partitions and inference workers must be >= 1");
  if (cfg_.batch_window_us < 0)
    throw ConfigError("server: batch window must be >= 0");
  if (cfg_.max_batch == 0) throw ConfigError("server: max_batch must be >= 1");
  if (engine_.store->partition_count() != cfg_.partitions)
    throw ConfigError("server: store partition count (" +
                      std::to_string(engine_.store->partition_count()) +
                      ") does not match config (" +
                      std::to_string(cfg_.partitions) + ")");
}

Server::~Server() { stop(); }

void Server::start() {
  if (running_.exchange(true)) return;
  workers_stop_.store(false);
  listener_ = std::make_unique<Listener>(cfg_.host, cfg_.port);
  port_ = listener_->port();

  partitions_.clear();
  partition_busy_.clear();
  for (size_t i = 0; i < cfg_.partitions; ++i) {
    partitions_.push_back(std::make_unique<Partition>());
    partition_busy_.push_back(std::make_unique<BusyCounter>());
  }
  for (size_t i = 0; i < cfg_.partitions; ++i) {
    partition_threads_.emplace_back([this, i] { partition_worker(i); });
    maybe_pin(partition_threads_.back(), i);
  }

  infer_busy_.clear();
  for (size_t i = 0; i < cfg_.inference_workers; ++i)
    infer_busy_.push_back(std::make_unique<BusyCounter>());
  for (size_t i = 0; i < cfg_.inference_workers; ++i) {
    infer_threads_.emplace_back([this, i] { inference_worker(i); });
    maybe_pin(infer_threads_.back(), cfg_.partitions + i);
  }

  auto pool_total = [](const std::vector<std::unique_ptr<BusyCounter>>* v) {
    return [v] {
      int64_t total = 0;
      for (const auto& c : *v) total += c->busy_ns();
      return total;
    };
  };
  monitor_ = std::make_unique<UtilizationMonitor>(
      std::vector<UtilizationMonitor::Pool>{
          {"message", pool_total(&partition_busy_), cfg_.partitions},
          {"inference", pool_total(&infer_busy_), cfg_.inference_workers}},
      std::chrono::milliseconds(cfg_.util_period_ms), cfg_.util_threshold,
      cfg_.util_consecutive);
  monitor_->start();

  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;

  if (listener_) listener_->close();
  if (acceptor_.joinable()) acceptor_.join();

  // Unblock connection readers; handlers finish their in-flight request
  // (workers are still up) and exit.
  {
    std::lock_guard lock(conns_mu_);
    for (auto& [id, fd] : conn_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : conn_threads_)
    if (t.joinable()) t.join();
  conn_threads_.clear();

  workers_stop_.store(true);
  for (auto& p : partitions_) p->cv.notify_all();
  for (auto& t : partition_threads_)
    if (t.joinable()) t.join();
  partition_threads_.clear();

  infer_cv_.notify_all();
  for (auto& t : infer_threads_)
    if (t.joinable()) t.join();
  infer_threads_.clear();

  if (monitor_) monitor_->stop();
}

void Server::maybe_pin(std::thread& t, size_t slot) {
  if (!cfg_.pin_workers) return;
  const unsigned n = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(slot % n, &set);
  pthread_setaffinity_np(t.native_handle(), sizeof set, &set);
}

void Server::accept_loop() {
  while (running_.load()) {
    auto sock = listener_->accept();
    if (!sock) break;
    const uint64_t id = next_conn_id_++;
    n_conns_total_.fetch_add(1, std::memory_order_relaxed);
    n_conns_open_.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard lock(conns_mu_);
      conn_fds_[id] = sock->fd();
      conn_threads_.emplace_back(
          [this, id, s = std::move(*sock)]() mutable {
            handle_connection(std::move(s), id);
          });
    }
  }
}

void Server::handle_connection(Socket sock, uint64_t conn_id) {
  while (true) {
    std::array<uint8_t, 4> prefix;
    uint32_t len = 0;
    std::string body;
    try {
      if (!sock.recv_exact(prefix.data(), prefix.size())) break;  // EOF
      len = decode_frame_length(prefix);
      body.resize(len);
      if (!sock.recv_exact(body.data(), len)) break;
    } catch (const Error&) {
      // oversize frame or mid-frame EOF: protocol violation, drop the link
      n_errors_.fetch_add(1, std::memory_order_relaxed);
      break;
    }
    const int64_t t0 = now_us();

    nlohmann::json j;
    Request req;
    try {
      j = parse_body(body);
    } catch (const ParseError& e) {
      send_error(sock, 0, e.what());
      continue;
    }
    try {
      req = request_from_json(j);
    } catch (const ParseError& e) {
      send_error(sock, j.is_object() ? j.value("req_id", uint64_t{0}) : 0,
                 e.what());
      continue;
    }
    const int64_t t1 = now_us();  // T1: frame receive + parse

    try {
      switch (req.kind) {
        case MsgKind::recommend:
          handle_recommend(sock, req, t0, t1);
          break;
        case MsgKind::feature_update:
          handle_update(sock, req, t0, t1);
          break;
        case MsgKind::stats:
          handle_stats(sock, req);
          break;
        default:
          send_error(sock, req.req_id,
                     "unexpected message kind '" +
                         std::string(kind_name(req.kind)) + "'");
          break;
      }
    } catch (const IoError&) {
      break;  // peer went away mid-response
    } catch (const Error& e) {
      send_error(sock, req.req_id, e.what());
    }
  }
  {
    std::lock_guard lock(conns_mu_);
    conn_fds_.erase(conn_id);
  }
  n_conns_open_.fetch_sub(1, std::memory_order_relaxed);
}

void Server::handle_recommend(Socket& sock, const Request& req, int64_t t0,
                              int64_t t1) {
  n_recommends_.fetch_add(1, std::memory_order_relaxed);
  const int64_t t2 = now_us();  // T6: routing onto the read path

  // T7: feature fetch + input preparation. Reads never touch the store's
  // write path; unknown users get an ad-hoc cold record, nothing inserted.
  std::shared_ptr<const UserRecord> rec = engine_.store->find(req.user_id);
  const bool cold = rec == nullptr;
  if (cold) {
    rec = std::make_shared<const UserRecord>(
        cold_record(req.user_id, engine_.store->spec(), *engine_.lstm));
  }
  InferJob job;
  job.record = std::move(rec);
  job.features = job.record->onehot.densify();
  const int64_t t3 = now_us();

  // T8 ends at the enqueue stamp; T9 is queue wait until a worker picks
  // the job up. The stamp is taken before the push so T9 can't go negative.
  std::future<InferOutcome> fut = job.done.get_future();
  job.t_enqueued = now_us();
  const int64_t t4 = job.t_enqueued;
  {
    std::lock_guard lock(infer_mu_);
    infer_queue_.push_back(std::move(job));
  }
  infer_cv_.notify_one();
  const InferOutcome out = fut.get();

  RecommendResponse resp;
  resp.req_id = req.req_id;
  resp.score = out.score;
  resp.p_gbdt = out.p_gbdt;
  resp.p_lstm = out.p_lstm;
  resp.decision = out.decision;
  resp.cold_start = cold;
  resp.timing.t[0] = t1 - t0;
  resp.timing.t[5] = t2 - t1;
  resp.timing.t[6] = t3 - t2;
  resp.timing.t[7] = t4 - t3;
  resp.timing.t[8] = out.t_start - t4;
  resp.timing.t[9] = out.t_end - out.t_start;

  // T11 covers building the response; it is measured on a draft and patched
  // in so that rl_total still telescopes to (serialize end - receive start).
  nlohmann::json body = recommend_response_to_json(resp);
  const int64_t t_serialized = now_us();
  resp.timing.t[10] = t_serialized - out.t_end;
  resp.timing.rl_total = resp.timing.recommend_sum();
  body["timing"]["T11"] = resp.timing.t[10];
  body["timing"]["rl_total"] = resp.timing.rl_total;
  send_frame(sock, body.dump());
}

void Server::handle_update(Socket& sock, const Request& req, int64_t t0,
                           int64_t t1) {
  n_updates_.fetch_add(1, std::memory_order_relaxed);
  const size_t pidx = engine_.store->partition_of(req.user_id);
  Partition& part = *partitions_[pidx];

  UpdateTask task;
  task.user_id = req.user_id;
  task.event = *req.event;
  task.t_submit = t1;
  std::future<UpdateOutcome> fut = task.done.get_future();
  {
    std::lock_guard lock(part.mu);
    part.queue.push_back(std::move(task));
  }
  part.cv.notify_one();
  const UpdateOutcome out = fut.get();

  Ack ack;
  ack.req_id = req.req_id;
  ack.ok = out.ok;
  ack.reason = out.reason;
  ack.timing.t[0] = t1 - t0;
  ack.timing.t[2] = out.t_pickup - t1;
  ack.timing.t[3] = out.t_computed - out.t_pickup;
  ack.timing.t[4] = out.t_stored - out.t_computed;
  ack.process_time = ack.timing.process_time();
  if (!out.ok) n_stale_.fetch_add(1, std::memory_order_relaxed);
  send_frame(sock, ack_to_json(ack).dump());
}

void Server::handle_stats(Socket& sock, const Request& req) {
  const ServerCounters c = counters();
  const auto util = utilization();
  nlohmann::json j{
      {"kind", kind_name(MsgKind::stats)},
      {"req_id", req.req_id},
      {"partitions", cfg_.partitions},
      {"inference_workers", cfg_.inference_workers},
      {"batch_window_us", cfg_.batch_window_us},
      {"users", engine_.store->size()},
      {"scale_out", scale_out_signaled()},
      {"util",
       {{"message", util.size() > 0 ? util[0] : 0.0},
        {"inference", util.size() > 1 ? util[1] : 0.0}}},
      {"counters",
       {{"recommends", c.recommends},
        {"updates", c.updates},
        {"stale", c.stale},
        {"errors", c.errors},
        {"batches", c.batches},
        {"max_batch", c.max_batch},
        {"connections_total", c.connections_total},
        {"open_connections", c.open_connections}}}};
  send_frame(sock, j.dump());
}

void Server::send_error(Socket& sock, uint64_t req_id,
                        const std::string& message) {
  n_errors_.fetch_add(1, std::memory_order_relaxed);
  ErrorMessage e{req_id, message};
  try {
    send_frame(sock, error_to_json(e).dump());
  } catch (const IoError&) {
    // peer already gone; connection loop will notice on the next read
  }
}

void Server::send_frame(Socket& sock, const std::string& body) {
  sock.send_all(encode_frame(body));
}

void Server::partition_worker(size_t index) {
  Partition& part = *partitions_[index];
  while (true) {
    UpdateTask task;
    {
      std::unique_lock lock(part.mu);
      part.cv.wait(lock,
                   [&] { return workers_stop_.load() || !part.queue.empty(); });
      if (part.queue.empty()) {
        if (workers_stop_.load()) return;
        continue;
      }
      task = std::move(part.queue.front());
      part.queue.pop_front();
    }
    BusyCounter::Scope busy(*partition_busy_[index]);
    UpdateOutcome out;
    out.t_pickup = now_us();
    try {
      // Single writer for this partition: read, compute, then swap in the
      // fresh record. Readers keep seeing the old version until the put.
      UserRecord base = engine_.store->get_or_cold(task.user_id);
      UserRecord next = update_features(base, task.event,
                                        engine_.store->spec(), *engine_.lstm);
      out.steps_seen = next.lstm.steps_seen;
      out.t_computed = now_us();
      engine_.store->put(std::move(next));
      out.t_stored = now_us();
      out.ok = true;
    } catch (const StaleEventError& e) {
      out.ok = false;
      out.reason = e.what();
      out.t_computed = now_us();
      out.t_stored = out.t_computed;
    } catch (const Error& e) {
      out.ok = false;
      out.reason = e.what();
      out.t_computed = now_us();
      out.t_stored = out.t_computed;
    }
    task.done.set_value(std::move(out));
  }
}

void Server::inference_worker(size_t index) {
  std::vector<InferJob> batch;
  while (true) {
    batch.clear();
    {
      std::unique_lock lock(infer_mu_);
      infer_cv_.wait(
          lock, [&] { return workers_stop_.load() || !infer_queue_.empty(); });
      if (infer_queue_.empty()) {
        if (workers_stop_.load()) return;
        continue;
      }
      batch.push_back(std::move(infer_queue_.front()));
      infer_queue_.pop_front();
      if (cfg_.batch_window_us > 0) {
        // Micro-batching: keep collecting until the window closes or the
        // batch is full. Results are identical to unbatched execution;
        // only queueing timings change.
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::microseconds(cfg_.batch_window_us);
        while (batch.size() < cfg_.max_batch) {
          if (!infer_queue_.empty()) {
            batch.push_back(std::move(infer_queue_.front()));
            infer_queue_.pop_front();
            continue;
          }
          if (workers_stop_.load()) break;
          if (infer_cv_.wait_until(lock, deadline) ==
              std::cv_status::timeout)
            break;
        }
      }
    }

    n_batches_.fetch_add(1, std::memory_order_relaxed);
    uint64_t prev = max_batch_.load(std::memory_order_relaxed);
    while (prev < batch.size() &&
           !max_batch_.compare_exchange_weak(prev, batch.size())) {
    }

    BusyCounter::Scope busy(*infer_busy_[index]);
    for (InferJob& job : batch) {
      InferOutcome out;
      out.t_start = now_us();
      out.p_gbdt = gbdt_score(*engine_.gbdt, job.features);
      out.p_lstm = lstm_predict(*engine_.lstm, job.record->lstm).second;
      out.score =
          ensemble_score(out.p_gbdt, out.p_lstm, engine_.ensemble.w);
      out.decision = decide(out.score, engine_.ensemble.tau);
      out.t_end = now_us();
      job.done.set_value(out);
    }
  }
}

ServerCounters Server::counters() const {
  ServerCounters c;
  c.recommends = n_recommends_.load();
  c.updates = n_updates_.load();
  c.stale = n_stale_.load();
  c.errors = n_errors_.load();
  c.batches = n_batches_.load();
  c.max_batch = max_batch_.load();
  c.connections_total = n_conns_total_.load();
  c.open_connections = n_conns_open_.load();
  return c;
}

bool Server::scale_out_signaled() const {
  return monitor_ && monitor_->scale_out_signaled();
}

std::vector<double> Server::utilization() const {
  return monitor_ ? monitor_->latest() : std::vector<double>{};
}

}  // namespace nbo
