// SPDX-License-Identifier: Apache-2.0
//
// nbo: offer-engine command line. Subcommands cover the whole lifecycle:
// generate synthetic data and toy models, run the batch startup pipeline,
// serve the engine over the framed protocol, and replay load against it.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nbo/bench.hpp"
#include "nbo/csv.hpp"
#include "nbo/errors.hpp"
#include "nbo/generators.hpp"
#include "nbo/metrics.hpp"
#include "nbo/net.hpp"
#include "nbo/server.hpp"
#include "nbo/startup.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int cmd_startup(const std::string& transactions, const std::string& spec,
                const std::string& lstm, const std::string& gbdt,
                const std::string& out, size_t partitions) {
  const auto result =
      nbo::run_startup(transactions, spec, lstm, gbdt, out, partitions);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "startup: users=" << result.users
            << " events=" << result.events
            << " calibrated=" << (result.calibrated ? "yes" : "no") << '\n'
            << "startup: T0 feature build " << result.timing.feature_build_ms
            << " ms, T2 state warm-up + calibration "
            << result.timing.warmup_ms << " ms, execution time "
            << result.timing.total_ms() << " ms\n"
            << "startup: snapshot written to " << out << '\n';
  return 0;
}

int cmd_serve(const std::string& snapshot, const std::string& listen,
              size_t partitions, size_t inference_workers,
              int64_t batch_window_us, bool pin_workers) {
  auto [host, port] = nbo::parse_address(listen);
  nbo::Engine engine = nbo::load_snapshot(snapshot, partitions);

  nbo::ServerConfig cfg;
  cfg.host = host;
  cfg.port = port;
  cfg.partitions = partitions;
  cfg.inference_workers = inference_workers;
  cfg.batch_window_us = batch_window_us;
  cfg.pin_workers = pin_workers;

  nbo::Server server(engine, cfg);
  server.start();
  std::cout << "serving on " << host << ":" << server.port() << " (partitions="
            << partitions << ", inference-workers=" << inference_workers
            << ", batch-window=" << batch_window_us << "us, users="
            << engine.store->size() << ")" << std::endl;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (server.scale_out_signaled()) {
      static bool reported = false;
      if (!reported) {
        std::cerr << "advisory: sustained worker utilization above "
                  << cfg.util_threshold * 100 << "%; consider scaling out\n";
        reported = true;
      }
    }
  }
  std::cout << "shutting down" << std::endl;
  server.stop();
  return 0;
}

int cmd_bench(const std::string& addr, double rate, double ramp, int ramp_steps,
              double mix, double duration, size_t connections,
              const std::string& transactions, const std::string& report_path,
              uint64_t seed) {
  auto [host, port] = nbo::parse_address(addr);
  nbo::BenchConfig cfg;
  cfg.host = host;
  cfg.port = port;
  cfg.rate = rate;
  if (ramp > 0) cfg.ramp = ramp;
  cfg.ramp_steps = ramp_steps;
  cfg.mix_update = mix;
  cfg.duration_s = duration;
  cfg.recommend_connections = connections;
  cfg.update_connections = connections;
  cfg.seed = seed;
  if (!transactions.empty()) cfg.replay = nbo::read_transactions(transactions);

  const nbo::BenchReport report = nbo::run_bench(cfg);
  nbo::write_report_csv(report, report_path);

  for (const auto& step : report.steps) {
    auto summarize = [&](const nbo::InterfaceResult& r) {
      if (r.sent == 0) return;
      std::cout << "step " << step.step << " " << r.interface_name
                << ": target " << r.target_rate << "/s sent " << r.sent
                << " answered " << r.answered << " errors " << r.errors
                << " stale " << r.stale << " achieved " << r.achieved_rps
                << "/s";
      if (!r.rtt_us.empty()) {
        const double ps[] = {50, 90, 99};
        const auto q = nbo::percentiles(r.rtt_us, ps);
        std::cout << " rtt p50/p90/p99 " << q[0] << '/' << q[1] << '/' << q[2]
                  << " us";
      }
      std::cout << '\n';
    };
    summarize(step.recommend);
    summarize(step.update);
  }
  std::cout << "report written to " << report_path << '\n';
  return 0;
}

int cmd_gen_data(uint64_t seed, size_t users, size_t events, size_t products,
                 const std::string& out) {
  nbo::DataGenConfig cfg;
  cfg.seed = seed;
  cfg.n_users = users;
  cfg.n_events = events;
  cfg.n_products = products;
  nbo::write_transactions(nbo::generate_transactions(cfg), out);
  std::cout << "wrote " << events << " events for " << users << " users to "
            << out << '\n';
  return 0;
}

int cmd_gen_model(uint64_t seed, size_t hidden, size_t input_dim, size_t trees,
                  size_t depth, size_t features, const std::string& out_lstm,
                  const std::string& out_gbdt) {
  nbo::save_lstm_weights(nbo::generate_lstm_weights(seed, hidden, input_dim),
                         out_lstm);
  nbo::save_gbdt(nbo::generate_gbdt(seed + 1, trees, depth, features),
                 out_gbdt);
  std::cout << "wrote LSTM (n=" << hidden << ", d=" << input_dim << ") to "
            << out_lstm << " and " << trees << " trees over " << features
            << " features to " << out_gbdt << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-latency next-best-offer engine"};
  app.require_subcommand(1);

  // startup
  std::string transactions, spec, lstm, gbdt, out;
  size_t partitions = 2;
  auto* startup = app.add_subcommand(
      "startup", "batch pipeline: features, state warm-up, calibration");
  startup->add_option("--transactions", transactions)->required();
  startup->add_option("--spec", spec)->required();
  startup->add_option("--lstm", lstm)->required();
  startup->add_option("--gbdt", gbdt)->required();
  startup->add_option("--out", out)->required();
  startup->add_option("--partitions", partitions);

  // serve
  std::string snapshot, listen = "127.0.0.1:7577";
  size_t inference_workers = 2;
  int64_t batch_window_us = 0;
  bool pin_workers = false;
  auto* serve = app.add_subcommand("serve", "serve a snapshot");
  serve->add_option("--snapshot", snapshot)->required();
  serve->add_option("--listen", listen);
  serve->add_option("--partitions", partitions);
  serve->add_option("--inference-workers", inference_workers);
  serve->add_option("--batch-window-us", batch_window_us);
  serve->add_flag("--pin-workers", pin_workers);

  // bench
  std::string addr = "127.0.0.1:7577", report = "bench_report.csv";
  std::string bench_transactions;
  double rate = 100, ramp = 0, mix = 0.8, duration = 10;
  int ramp_steps = 4;
  size_t connections = 4;
  uint64_t seed = 7;
  auto* bench = app.add_subcommand("bench", "replay load and measure");
  bench->add_option("--addr", addr);
  bench->add_option("--rate", rate);
  bench->add_option("--ramp", ramp);
  bench->add_option("--ramp-steps", ramp_steps);
  bench->add_option("--mix", mix, "fraction of load sent to feature_update");
  bench->add_option("--duration", duration, "seconds per step");
  bench->add_option("--connections", connections, "per interface");
  bench->add_option("--transactions", bench_transactions,
                    "replay this event file instead of synthesizing");
  bench->add_option("--report", report);
  bench->add_option("--seed", seed);

  // gen-data
  size_t users = 1000, events = 100000, products = 500;
  auto* gen_data = app.add_subcommand("gen-data", "synthetic transaction CSV");
  gen_data->add_option("--seed", seed);
  gen_data->add_option("--users", users);
  gen_data->add_option("--events", events);
  gen_data->add_option("--products", products);
  gen_data->add_option("--out", out)->required();

  // gen-model
  size_t hidden = 16, input_dim = 33, trees = 20, depth = 4, features = 75;
  std::string out_lstm, out_gbdt;
  auto* gen_model = app.add_subcommand("gen-model", "seeded toy model files");
  gen_model->add_option("--seed", seed);
  gen_model->add_option("--hidden", hidden);
  gen_model->add_option("--input-dim", input_dim);
  gen_model->add_option("--trees", trees);
  gen_model->add_option("--depth", depth);
  gen_model->add_option("--features", features);
  gen_model->add_option("--out-lstm", out_lstm)->required();
  gen_model->add_option("--out-gbdt", out_gbdt)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (startup->parsed())
      return cmd_startup(transactions, spec, lstm, gbdt, out, partitions);
    if (serve->parsed())
      return cmd_serve(snapshot, listen, partitions, inference_workers,
                       batch_window_us, pin_workers);
    if (bench->parsed())
      return cmd_bench(addr, rate, ramp, ramp_steps, mix, duration,
                       connections, bench_transactions, report, seed);
    if (gen_data->parsed())
      return cmd_gen_data(seed, users, events, products, out);
    if (gen_model->parsed())
      return cmd_gen_model(seed, hidden, input_dim, trees, depth, features,
                           out_lstm, out_gbdt);
  } catch (const nbo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
