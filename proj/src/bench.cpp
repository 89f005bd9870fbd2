// SPDX-License-Identifier: Apache-2.0
#include "nbo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "nbo/clock.hpp"
#include "nbo/client.hpp"
#include "nbo/errors.hpp"
#include "nbo/hashing.hpp"
#include "nbo/metrics.hpp"
#include "nbo/rng.hpp"

namespace nbo {

namespace {

/// Hands out evenly spaced send slots to any number of threads. Open loop:
/// slots are scheduled regardless of response progress.
class Pacer {
public:
  Pacer(double rate_per_s, int64_t start_us, int64_t deadline_us)
      : interval_us_(1e6 / rate_per_s),
        next_us_(static_cast<double>(start_us)),
        deadline_us_(deadline_us) {}

  /// Next slot in microseconds, or -1 once the deadline is reached.
  int64_t next_slot() {
    std::lock_guard lock(mu_);
    const int64_t slot = static_cast<int64_t>(next_us_);
    if (slot >= deadline_us_) return -1;
    next_us_ += interval_us_;
    return slot;
  }

private:
  std::mutex mu_;
  double interval_us_;
  double next_us_;
  int64_t deadline_us_;
};

void sleep_until_us(int64_t t_us) {
  const int64_t now = now_us();
  if (t_us > now)
    std::this_thread::sleep_for(std::chrono::microseconds(t_us - now));
}

struct SharedCounters {
  std::atomic<uint64_t> sent{0}, answered{0}, ok{0}, errors{0}, stale{0};
};

struct LatencySink {
  std::mutex mu;
  std::vector<double> rtt_us;
  std::vector<double> rl_us;
  std::vector<std::vector<double>> stage_us =
      std::vector<std::vector<double>>(11);
  std::vector<TimingBreakdown> timings;
  bool keep_timings = false;

  void record(double rtt, double rl, const TimingBreakdown& t) {
    std::lock_guard lock(mu);
    rtt_us.push_back(rtt);
    rl_us.push_back(rl);
    for (size_t i = 0; i < t.t.size(); ++i)
      stage_us[i].push_back(static_cast<double>(t.t[i]));
    if (keep_timings) timings.push_back(t);
  }
};

/// Per-connection event feed. Synthetic mode owns a disjoint user slice so
/// per-user timestamps stay nondecreasing; replay mode walks the slice of
/// the event file owned by this connection, shifting timestamps each lap.
class EventFeed {
public:
  EventFeed(const BenchConfig& cfg, size_t conn_index, size_t conn_count,
            bool updates)
      : rng_(cfg.seed * 1315423911u + conn_index * 2654435761u + updates) {
    if (!cfg.replay.empty()) {
      for (const Transaction& tx : cfg.replay) {
        if (!updates || fnv1a64(tx.user_id) % conn_count == conn_index)
          replay_.push_back(tx);
      }
      if (!replay_.empty()) {
        lap_shift_ms_ = replay_.back().event.ts_ms -
                        replay_.front().event.ts_ms + 1;
      }
      return;
    }
    for (size_t u = updates ? conn_index : 0; u < cfg.synth_users;
         u += updates ? conn_count : 1)
      users_.push_back("u" + std::to_string(u));
    if (users_.empty()) users_.push_back("u" + std::to_string(conn_index));
    n_products_ = std::max<size_t>(1, cfg.synth_products);
  }

  Transaction next() {
    if (!replay_.empty()) {
      Transaction tx = replay_[pos_];
      tx.event.ts_ms += static_cast<int64_t>(lap_) * lap_shift_ms_;
      if (++pos_ == replay_.size()) {
        pos_ = 0;
        ++lap_;
      }
      return tx;
    }
    Transaction tx;
    tx.user_id = users_[pos_ % users_.size()];
    ++pos_;
    const size_t product = rng_.index(n_products_);
    tx.event.ts_ms = now_epoch_ms();
    tx.event.item = "p" + std::to_string(product);
    tx.event.category = "c" + std::to_string(product % 13);
    const double roll = rng_.uniform();
    tx.event.type = roll < 0.45 ? "view" : roll < 0.8 ? "impression" : "order";
    if (tx.event.type == "order")
      tx.event.price = (1.0 + rng_.index(9999)) / 100.0;
    return tx;
  }

private:
  Rng rng_;
  std::vector<Transaction> replay_;
  std::vector<std::string> users_;
  size_t n_products_ = 1;
  size_t pos_ = 0;
  uint64_t lap_ = 0;
  int64_t lap_shift_ms_ = 0;
};

void recommend_worker(const BenchConfig& cfg, size_t index, Pacer& pacer,
                      std::atomic<uint64_t>& req_ids, SharedCounters& counters,
                      LatencySink& sink) {
  try {
    Client client(cfg.host, cfg.port);
    EventFeed feed(cfg, index, cfg.recommend_connections, /*updates=*/false);
    while (true) {
      const int64_t slot = pacer.next_slot();
      if (slot < 0) break;
      sleep_until_us(slot);
      const uint64_t req_id = req_ids.fetch_add(1);
      const Transaction tx = feed.next();
      const int64_t t_send = now_us();
      counters.sent.fetch_add(1);
      try {
        const RecommendResponse resp = client.recommend(req_id, tx.user_id);
        counters.answered.fetch_add(1);
        counters.ok.fetch_add(1);
        sink.record(static_cast<double>(now_us() - t_send),
                    static_cast<double>(resp.timing.rl_total), resp.timing);
      } catch (const Error&) {
        counters.errors.fetch_add(1);
        break;  // connection lost; give up this worker, run is flagged
      }
    }
  } catch (const Error&) {
    counters.errors.fetch_add(1);
  }
}

void update_worker(const BenchConfig& cfg, size_t index, Pacer& pacer,
                   std::atomic<uint64_t>& req_ids, SharedCounters& counters,
                   LatencySink& sink, std::atomic<uint64_t>& in_flight_out) {
  try {
    Client client(cfg.host, cfg.port);
    EventFeed feed(cfg, index, cfg.update_connections, /*updates=*/true);

    std::mutex pending_mu;
    std::unordered_map<uint64_t, int64_t> pending;  // req_id -> send us
    std::atomic<bool> writer_done{false};

    std::thread reader([&] {
      try {
        while (true) {
          Client::Message m = client.read_message();
          const int64_t t_recv = now_us();
          const Ack* ack = std::get_if<Ack>(&m);
          if (!ack) {
            counters.errors.fetch_add(1);
            continue;
          }
          counters.answered.fetch_add(1);
          ack->ok ? counters.ok.fetch_add(1) : counters.stale.fetch_add(1);
          int64_t t_send = 0;
          {
            std::lock_guard lock(pending_mu);
            auto it = pending.find(ack->req_id);
            if (it != pending.end()) {
              t_send = it->second;
              pending.erase(it);
            }
          }
          if (t_send > 0)
            sink.record(static_cast<double>(t_recv - t_send),
                        static_cast<double>(ack->process_time), ack->timing);
          if (writer_done.load()) {
            std::lock_guard lock(pending_mu);
            if (pending.empty()) break;
          }
        }
      } catch (const Error&) {
        // EOF after close() below, or connection loss mid-run
      }
    });

    while (true) {
      const int64_t slot = pacer.next_slot();
      if (slot < 0) break;
      sleep_until_us(slot);
      const uint64_t req_id = req_ids.fetch_add(1);
      const Transaction tx = feed.next();
      Request req;
      req.kind = MsgKind::feature_update;
      req.req_id = req_id;
      req.user_id = tx.user_id;
      req.event = tx.event;
      {
        std::lock_guard lock(pending_mu);
        pending[req_id] = now_us();
      }
      try {
        client.send(req);
        counters.sent.fetch_add(1);
      } catch (const Error&) {
        std::lock_guard lock(pending_mu);
        pending.erase(req_id);
        counters.errors.fetch_add(1);
        break;
      }
    }
    writer_done.store(true);

    // Give stragglers a short drain window, then cut the connection.
    const int64_t drain_deadline = now_us() + 2'000'000;
    while (now_us() < drain_deadline) {
      {
        std::lock_guard lock(pending_mu);
        if (pending.empty()) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    client.close();
    reader.join();
    std::lock_guard lock(pending_mu);
    in_flight_out.fetch_add(pending.size());
  } catch (const Error&) {
    counters.errors.fetch_add(1);
  }
}

InterfaceResult finish_result(std::string name, double target, double duration,
                              const SharedCounters& counters,
                              uint64_t in_flight, LatencySink& sink) {
  InterfaceResult r;
  r.interface_name = std::move(name);
  r.target_rate = target;
  r.duration_s = duration;
  r.sent = counters.sent.load();
  r.answered = counters.answered.load();
  r.ok = counters.ok.load();
  r.errors = counters.errors.load();
  r.stale = counters.stale.load();
  r.in_flight = in_flight;
  r.achieved_rps =
      duration > 0 ? static_cast<double>(r.answered) / duration : 0.0;
  r.rtt_us = std::move(sink.rtt_us);
  r.rl_us = std::move(sink.rl_us);
  r.stage_us = std::move(sink.stage_us);
  r.timings = std::move(sink.timings);
  return r;
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.rate <= 0) throw ConfigError("bench: rate must be positive");
  if (cfg.mix_update < 0 || cfg.mix_update > 1)
    throw ConfigError("bench: mix must be in [0, 1]");
  if (cfg.duration_s <= 0)
    throw ConfigError("bench: duration must be positive");
  if (!cfg.replay.empty()) {
    for (size_t i = 1; i < cfg.replay.size(); ++i)
      if (cfg.replay[i].event.ts_ms < cfg.replay[i - 1].event.ts_ms)
        throw ParseError("bench: replay events out of clock order at record " +
                         std::to_string(i + 1));
  }

  std::vector<double> rates;
  if (cfg.ramp && cfg.ramp_steps > 1) {
    for (int s = 0; s < cfg.ramp_steps; ++s)
      rates.push_back(cfg.rate + (*cfg.ramp - cfg.rate) * s /
                                     (cfg.ramp_steps - 1));
  } else {
    rates.push_back(cfg.rate);
  }

  BenchReport report;
  std::atomic<uint64_t> req_ids{1};
  for (size_t step = 0; step < rates.size(); ++step) {
    const double rate = rates[step];
    const double rate_update = rate * cfg.mix_update;
    const double rate_recommend = rate - rate_update;

    StepReport sr;
    sr.step = static_cast<int>(step);
    sr.target_rate = rate;

    SharedCounters rec_counters, upd_counters;
    LatencySink rec_sink, upd_sink;
    rec_sink.keep_timings = cfg.collect_timings;
    upd_sink.keep_timings = cfg.collect_timings;
    std::atomic<uint64_t> upd_in_flight{0};

    const int64_t start = now_us();
    const int64_t deadline =
        start + static_cast<int64_t>(cfg.duration_s * 1e6);
    Pacer rec_pacer(rate_recommend > 0 ? rate_recommend : 1.0, start,
                    rate_recommend > 0 ? deadline : start);
    Pacer upd_pacer(rate_update > 0 ? rate_update : 1.0, start,
                    rate_update > 0 ? deadline : start);

    // Utilization trace, sampled over a dedicated connection.
    std::vector<UtilizationSample> util;
    std::atomic<bool> util_stop{false};
    std::thread util_thread([&] {
      try {
        Client client(cfg.host, cfg.port);
        uint64_t poll_id = 1;
        while (!util_stop.load()) {
          const nlohmann::json s = client.stats(poll_id++);
          UtilizationSample sample;
          sample.t_s = static_cast<double>(now_us() - start) / 1e6;
          sample.message_pool = s.at("util").at("message").get<double>();
          sample.inference_pool = s.at("util").at("inference").get<double>();
          sample.scale_out = s.at("scale_out").get<bool>();
          util.push_back(sample);
          std::this_thread::sleep_for(std::chrono::milliseconds(250));
        }
      } catch (const Error&) {
        // trace is best-effort
      }
    });

    std::vector<std::thread> workers;
    if (rate_recommend > 0) {
      for (size_t i = 0; i < cfg.recommend_connections; ++i)
        workers.emplace_back([&, i] {
          recommend_worker(cfg, i, rec_pacer, req_ids, rec_counters, rec_sink);
        });
    }
    if (rate_update > 0) {
      for (size_t i = 0; i < cfg.update_connections; ++i)
        workers.emplace_back([&, i] {
          update_worker(cfg, i, upd_pacer, req_ids, upd_counters, upd_sink,
                        upd_in_flight);
        });
    }
    for (auto& t : workers) t.join();
    util_stop.store(true);
    util_thread.join();

    const double elapsed = static_cast<double>(now_us() - start) / 1e6;
    sr.recommend = finish_result("recommend", rate_recommend, elapsed,
                                 rec_counters, 0, rec_sink);
    sr.update = finish_result("feature_update", rate_update, elapsed,
                              upd_counters, upd_in_flight.load(), upd_sink);
    sr.utilization = std::move(util);
    report.steps.push_back(std::move(sr));
  }
  return report;
}

namespace {

void csv_percentiles(std::ofstream& out, const std::vector<double>& v) {
  if (v.empty()) {
    out << ",,,";
    return;
  }
  const double ps[] = {50, 90, 99};
  const auto q = percentiles(v, ps);
  out << ',' << q[0] << ',' << q[1] << ',' << q[2];
}

void csv_interface_row(std::ofstream& out, int step,
                       const InterfaceResult& r) {
  out << step << ',' << r.interface_name << ',' << r.target_rate << ','
      << r.duration_s << ',' << r.sent << ',' << r.answered << ',' << r.ok
      << ',' << r.errors << ',' << r.stale << ',' << r.in_flight << ','
      << r.achieved_rps;
  csv_percentiles(out, r.rtt_us);
  csv_percentiles(out, r.rl_us);
  for (const auto& stage : r.stage_us) csv_percentiles(out, stage);
  out << ",,,,\n";  // t_s, util_message, util_inference, scale_out
}

}  // namespace

void write_report_csv(const BenchReport& report,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("report: cannot write " + path.string());
  out << "step,kind,target_rate,duration_s,sent,answered,ok,errors,stale,"
         "in_flight,achieved_rps,rtt_p50_us,rtt_p90_us,rtt_p99_us,rl_p50_us,"
         "rl_p90_us,rl_p99_us";
  for (int i = 1; i <= 11; ++i)
    out << ",T" << i << "_p50_us,T" << i << "_p90_us,T" << i << "_p99_us";
  out << ",t_s,util_message,util_inference,scale_out\n";
  for (const StepReport& sr : report.steps) {
    csv_interface_row(out, sr.step, sr.recommend);
    csv_interface_row(out, sr.step, sr.update);
    for (const UtilizationSample& u : sr.utilization) {
      out << sr.step << ",utilization," << sr.target_rate << ",,,,,,,,";
      // skip latency columns: 3 rtt + 3 rl + 33 stage percentiles
      for (int i = 0; i < 39; ++i) out << ',';
      out << ',' << u.t_s << ',' << u.message_pool << ',' << u.inference_pool
          << ',' << (u.scale_out ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("report: short write to " + path.string());
}

}  // namespace nbo
