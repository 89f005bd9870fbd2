// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "nbo/bench.hpp"
#include "nbo/csv.hpp"
#include "nbo/errors.hpp"
#include "nbo/server.hpp"
#include "nbo/snapshot.hpp"
#include "nbo/startup.hpp"
#include "test_util.hpp"

using namespace nbo;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_default_spec(const std::filesystem::path& p) {
  save_feature_spec(default_feature_spec(), p);
}

}  // namespace

TEST_CASE("gen-data is deterministic, clock-sorted and schema-stable") {
  testutil::TempDir tmp;
  DataGenConfig cfg;
  cfg.seed = 42;
  cfg.n_users = 30;
  cfg.n_events = 500;
  cfg.n_products = 50;

  write_transactions(generate_transactions(cfg), tmp.path("a.csv"));
  write_transactions(generate_transactions(cfg), tmp.path("b.csv"));
  CHECK(slurp(tmp.path("a.csv")) == slurp(tmp.path("b.csv")));

  const auto txs = read_transactions(tmp.path("a.csv"));
  REQUIRE(txs.size() == 500);
  for (size_t i = 1; i < txs.size(); ++i)
    CHECK(txs[i].event.ts_ms >= txs[i - 1].event.ts_ms);
  for (const auto& tx : txs) {
    CHECK_FALSE(tx.user_id.empty());
    if (tx.event.type == "order") CHECK(tx.event.price > 0.0);
    else CHECK(tx.event.price == 0.0);
  }
}

TEST_CASE("gen-data with zero events writes a header-only file") {
  testutil::TempDir tmp;
  DataGenConfig cfg;
  cfg.n_events = 0;
  write_transactions(generate_transactions(cfg), tmp.path("empty.csv"));
  CHECK(slurp(tmp.path("empty.csv")) ==
        std::string(kTransactionHeader) + "\n");
  CHECK(read_transactions(tmp.path("empty.csv")).empty());
}

TEST_CASE("transaction CSV round-trips and rejects malformed rows") {
  testutil::TempDir tmp;
  DataGenConfig cfg;
  cfg.seed = 9;
  cfg.n_events = 200;
  const auto txs = generate_transactions(cfg);
  write_transactions(txs, tmp.path("t.csv"));
  CHECK(read_transactions(tmp.path("t.csv")) == txs);

  {
    std::ofstream out(tmp.path("bad_header.csv"));
    out << "ts,user\n1,u\n";
  }
  CHECK_THROWS_AS((void)read_transactions(tmp.path("bad_header.csv")),
                  ParseError);
  {
    std::ofstream out(tmp.path("bad_row.csv"));
    out << kTransactionHeader << "\nnot_a_ts,u1,view,p,c,\n";
  }
  try {
    (void)read_transactions(tmp.path("bad_row.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("gen-model output loads, validates and predicts sanely") {
  testutil::TempDir tmp;
  const auto spec = default_feature_spec();
  save_lstm_weights(
      generate_lstm_weights(7, 8, spec.lstm_input_dim()), tmp.path("l.json"));
  save_gbdt(generate_gbdt(8, 10, 4, spec.n_features()), tmp.path("g.json"));

  const auto lstm = load_lstm_weights(tmp.path("l.json"));
  const auto gbdt_model = load_gbdt(tmp.path("g.json"));
  CHECK(lstm.input_dim == spec.lstm_input_dim());
  CHECK(gbdt_model.n_features == spec.n_features());

  // same seed, same bytes
  save_lstm_weights(
      generate_lstm_weights(7, 8, spec.lstm_input_dim()), tmp.path("l2.json"));
  CHECK(slurp(tmp.path("l.json")) == slurp(tmp.path("l2.json")));

  Rng rng(1);
  LstmState s = lstm_zero_state(lstm);
  for (const auto& x :
       testutil::random_sequence(rng, 10, spec.lstm_input_dim()))
    s = lstm_step(lstm, s, x);
  const auto [p_neg, p_pos] = lstm_predict(lstm, s);
  CHECK(std::isfinite(p_pos));
  CHECK(std::abs(p_neg + p_pos - 1.0) <= 1e-12);
}

TEST_CASE("startup produces a byte-identical snapshot on identical inputs") {
  testutil::TempDir tmp;
  DataGenConfig data;
  data.seed = 11;
  data.n_users = 40;
  data.n_events = 3000;
  write_transactions(generate_transactions(data), tmp.path("tx.csv"));
  write_default_spec(tmp.path("spec.json"));
  const auto spec = default_feature_spec();
  save_lstm_weights(generate_lstm_weights(1, 8, spec.lstm_input_dim()),
                    tmp.path("lstm.json"));
  save_gbdt(generate_gbdt(2, 10, 4, spec.n_features()), tmp.path("gbdt.json"));

  const auto r1 = run_startup(tmp.path("tx.csv"), tmp.path("spec.json"),
                              tmp.path("lstm.json"), tmp.path("gbdt.json"),
                              tmp.path("snap1.bin"), 2);
  const auto r2 = run_startup(tmp.path("tx.csv"), tmp.path("spec.json"),
                              tmp.path("lstm.json"), tmp.path("gbdt.json"),
                              tmp.path("snap2.bin"), 2);
  CHECK(r1.users == 40);
  CHECK(r1.calibrated);
  CHECK(r2.users == r1.users);
  CHECK(slurp(tmp.path("snap1.bin")) == slurp(tmp.path("snap2.bin")));

  const Engine engine = load_snapshot(tmp.path("snap1.bin"), 2);
  CHECK(engine.store->size() == 40);
  CHECK(engine.ensemble.calibrated);
  CHECK(engine.ensemble.w >= 0.0);
  CHECK(engine.ensemble.w <= 1.0);
}

TEST_CASE("startup on an empty stream warns and skips calibration") {
  testutil::TempDir tmp;
  write_transactions({}, tmp.path("tx.csv"));
  write_default_spec(tmp.path("spec.json"));
  const auto spec = default_feature_spec();
  save_lstm_weights(generate_lstm_weights(1, 8, spec.lstm_input_dim()),
                    tmp.path("lstm.json"));
  save_gbdt(generate_gbdt(2, 6, 3, spec.n_features()), tmp.path("gbdt.json"));

  const auto r = run_startup(tmp.path("tx.csv"), tmp.path("spec.json"),
                             tmp.path("lstm.json"), tmp.path("gbdt.json"),
                             tmp.path("snap.bin"), 1);
  CHECK(r.users == 0);
  CHECK_FALSE(r.calibrated);
  CHECK_FALSE(r.warnings.empty());

  const Engine engine = load_snapshot(tmp.path("snap.bin"), 1);
  CHECK(engine.store->size() == 0);
  CHECK(engine.ensemble.w == 0.5);
  CHECK(engine.ensemble.tau == 0.5);
}

TEST_CASE("startup rejects models inconsistent with the spec") {
  const auto spec = default_feature_spec();
  auto lstm = generate_lstm_weights(1, 8, spec.lstm_input_dim() + 1);
  auto gbdt_model = generate_gbdt(2, 6, 3, spec.n_features());
  CHECK_THROWS_AS((void)build_engine({}, spec, std::move(lstm),
                                     std::move(gbdt_model), 1),
                  ConfigError);

  auto lstm_ok = generate_lstm_weights(1, 8, spec.lstm_input_dim());
  auto gbdt_bad = generate_gbdt(2, 6, 3, spec.n_features() + 5);
  CHECK_THROWS_AS((void)build_engine({}, spec, std::move(lstm_ok),
                                     std::move(gbdt_bad), 1),
                  ConfigError);
}

TEST_CASE("snapshots restore to an observably identical engine") {
  testutil::TempDir tmp;
  const auto spec = default_feature_spec();
  DataGenConfig data;
  data.seed = 31;
  data.n_users = 25;
  data.n_events = 2000;
  Engine engine = build_engine(generate_transactions(data), spec,
                               generate_lstm_weights(3, 8, spec.lstm_input_dim()),
                               generate_gbdt(4, 8, 4, spec.n_features()), 2);
  save_snapshot(engine, tmp.path("snap.bin"));

  const Engine back = load_snapshot(tmp.path("snap.bin"), 4);
  CHECK(back.store->fingerprint() == engine.store->fingerprint());
  CHECK(back.ensemble.w == engine.ensemble.w);
  CHECK(back.ensemble.tau == engine.ensemble.tau);
  CHECK(back.lstm->w_in == engine.lstm->w_in);
  CHECK(back.gbdt->trees.size() == engine.gbdt->trees.size());

  // empty store round-trips too
  Engine empty = build_engine({}, spec,
                              generate_lstm_weights(3, 8, spec.lstm_input_dim()),
                              generate_gbdt(4, 8, 4, spec.n_features()), 1);
  save_snapshot(empty, tmp.path("empty.bin"));
  CHECK(load_snapshot(tmp.path("empty.bin"), 1).store->size() == 0);
}

TEST_CASE("corrupt or truncated snapshots are refused") {
  testutil::TempDir tmp;
  const auto spec = default_feature_spec();
  DataGenConfig data;
  data.n_users = 5;
  data.n_events = 100;
  Engine engine = build_engine(generate_transactions(data), spec,
                               generate_lstm_weights(3, 6, spec.lstm_input_dim()),
                               generate_gbdt(4, 4, 3, spec.n_features()), 1);
  save_snapshot(engine, tmp.path("snap.bin"));

  std::string bytes = slurp(tmp.path("snap.bin"));
  {
    std::ofstream out(tmp.path("truncated.bin"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS((void)load_snapshot(tmp.path("truncated.bin"), 1), IoError);

  bytes[bytes.size() / 2] ^= 0x5a;  // flip a payload bit: checksum must catch
  {
    std::ofstream out(tmp.path("flipped.bin"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS((void)load_snapshot(tmp.path("flipped.bin"), 1), IoError);

  CHECK_THROWS_AS((void)load_snapshot(tmp.path("missing.bin"), 1), IoError);
}

TEST_CASE("bench run reconciles counts and honors the workload mix") {
  const auto spec = default_feature_spec();
  DataGenConfig data;
  data.seed = 17;
  data.n_users = 30;
  data.n_events = 1000;
  Engine engine = build_engine(generate_transactions(data), spec,
                               generate_lstm_weights(5, 8, spec.lstm_input_dim()),
                               generate_gbdt(6, 8, 4, spec.n_features()), 2);
  ServerConfig scfg;
  scfg.partitions = 2;
  scfg.inference_workers = 2;
  Server server(engine, scfg);
  server.start();

  BenchConfig bcfg;
  bcfg.host = "127.0.0.1";
  bcfg.port = server.port();
  bcfg.rate = 200;
  bcfg.mix_update = 0.8;
  bcfg.duration_s = 1.5;
  bcfg.recommend_connections = 2;
  bcfg.update_connections = 2;
  const BenchReport report = run_bench(bcfg);
  server.stop();

  REQUIRE(report.steps.size() == 1);
  const auto& step = report.steps[0];

  // sent = answered + errors + in-flight on both interfaces
  CHECK(step.recommend.sent ==
        step.recommend.answered + step.recommend.errors +
            step.recommend.in_flight);
  CHECK(step.update.sent ==
        step.update.answered + step.update.errors + step.update.in_flight);
  CHECK(step.recommend.errors == 0);
  CHECK(step.update.errors == 0);

  // paced split: within 2% of the configured 80/20 mix
  const double total =
      static_cast<double>(step.update.sent + step.recommend.sent);
  CHECK(std::abs(step.update.sent / total - 0.8) < 0.02);

  CHECK_FALSE(step.recommend.rl_us.empty());
  CHECK_FALSE(step.update.rl_us.empty());

  testutil::TempDir tmp;
  write_report_csv(report, tmp.path("report.csv"));
  std::ifstream in(tmp.path("report.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header.find("achieved_rps") != std::string::npos);
  CHECK(header.find("T10_p90_us") != std::string::npos);
  CHECK(header.find("util_inference") != std::string::npos);
  size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows >= 2);  // one row per interface plus the utilization trace
}

TEST_CASE("bench replays an event file without stale rejections") {
  const auto spec = default_feature_spec();
  DataGenConfig data;
  data.seed = 23;
  data.n_users = 16;
  data.n_events = 600;
  const auto txs = generate_transactions(data);
  Engine engine = build_engine({}, spec,
                               generate_lstm_weights(5, 8, spec.lstm_input_dim()),
                               generate_gbdt(6, 8, 4, spec.n_features()), 1);
  ServerConfig scfg;
  Server server(engine, scfg);
  server.start();

  BenchConfig bcfg;
  bcfg.host = "127.0.0.1";
  bcfg.port = server.port();
  bcfg.rate = 300;
  bcfg.mix_update = 1.0;  // updates only
  bcfg.duration_s = 1.0;
  bcfg.update_connections = 2;
  bcfg.replay = txs;
  const BenchReport report = run_bench(bcfg);
  server.stop();

  const auto& step = report.steps[0];
  CHECK(step.update.answered > 0);
  CHECK(step.update.stale == 0);  // per-user order preserved by sharding
}
