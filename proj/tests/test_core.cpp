#include "rlncs/core.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace rlncs;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("rlncs_test_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("empty config file yields the published defaults") {
  const RunConfig cfg = load_config(write_temp("empty.json", ""));
  CHECK(cfg.n_coeffs == 200);
  CHECK(cfg.n_meas == 60);
  CHECK(cfg.discount == 0.1);
  CHECK(cfg.reward_alpha == 0.5);
  CHECK(cfg.ce_weight == 5.0);
  CHECK(cfg.th_up == 0.8);
  CHECK(cfg.th_low == 0.1);
  CHECK(cfg.target_sync_period == 100);
  CHECK(cfg.lambda0 == 1.0);
  CHECK(cfg.lambda_decay == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(cfg.eps_decay == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(cfg.t_max == 30000);
  CHECK(cfg.corr == 0.2);
  CHECK(cfg.sigma_large == 5.0);
  CHECK(cfg.sigma_small == 0.01);
  CHECK(cfg.eta_roi == 0.7);
  CHECK(cfg.eta_nonroi == 0.3);
  CHECK(cfg.lr0 == 0.05);
  CHECK(cfg.lr_factor == 0.75);
  CHECK(cfg.lr_period == 5000);
  CHECK(cfg.lstm_hidden == 200);
  CHECK(cfg.q_hidden1 == 128);
  CHECK(cfg.q_hidden2 == 64);
  // harness defaults
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.replay_capacity == 10000);
  CHECK(cfg.seq_len == 20);
  CHECK(cfg.roi_threshold == 0.1);
  CHECK(cfg.sparsity == 0.1);
  CHECK(cfg == RunConfig{});
}

TEST_CASE("threshold ordering violation names th_up") {
  const auto path = write_temp("bad_th.json", R"({"th_up": 0.05})");
  try {
    load_config(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "th_up");
  }
}

TEST_CASE("overrides keep every other default") {
  const RunConfig cfg = load_config(write_temp("nm.json", R"({"n_coeffs": 100, "n_meas": 30})"));
  RunConfig expect;
  expect.n_coeffs = 100;
  expect.n_meas = 30;
  CHECK(cfg == expect);
}

TEST_CASE("config validation rejects each broken invariant") {
  const auto bad = [](const std::string& json, const std::string& field) {
    try {
      parse_config(json);
      FAIL("accepted " << json);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(e.field() == field, json);
    }
  };
  bad(R"({"sparsity": 0})", "sparsity");
  bad(R"({"sparsity": 1})", "sparsity");
  bad(R"({"tp01": 1.5})", "tp01");
  bad(R"({"n_meas": 300})", "n_meas");
  bad(R"({"discount": 1.2})", "discount");
  bad(R"({"reward_alpha": 1.0})", "reward_alpha");
  bad(R"({"t_max": 0})", "t_max");
  bad(R"({"fault_rate": -0.1})", "fault_rate");
  bad(R"({"corr": 2})", "corr");
  bad(R"({"no_such_key": 1})", "no_such_key");
  bad(R"({"n_coeffs": "many"})", "n_coeffs");
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("config round-trips through serialization") {
  RunConfig cfg;
  cfg.n_coeffs = 64;
  cfg.n_meas = 20;
  cfg.snr_db = kInf;
  cfg.mode = SignalMode::Dct;
  cfg.eps_schedule = EpsilonSchedule::Exponential;
  cfg.lambda_decay = 1.0 / 3.0;
  cfg.seed = 0xfeedfacecafebeefULL;
  cfg.saturate_tp10 = true;
  CHECK(parse_config(serialize_config(cfg)) == cfg);
  CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("split streams are deterministic and independent") {
  const auto draws = [](Rng r) {
    std::vector<double> v;
    for (int i = 0; i < 16; ++i) v.push_back(r.uniform());
    return v;
  };
  CHECK(draws(Rng(7).split("noise")) == draws(Rng(7).split("noise")));
  CHECK(draws(Rng(7).split("noise")) != draws(Rng(7).split("matrix")));
  CHECK(draws(Rng(7).split("x")) != draws(Rng(8).split("x")));

  // the parent's consumption does not move the child stream
  Rng parent(7);
  for (int i = 0; i < 100; ++i) parent.uniform();
  CHECK(draws(parent.split("noise")) == draws(Rng(7).split("noise")));
}

TEST_CASE("indicator and ones_of are inverse") {
  const IndexSet roi{0, 3, 4};
  const Vector s = indicator(roi, 6);
  CHECK(s.sum() == 3.0);
  CHECK(ones_of(s) == roi);
  CHECK_THROWS_AS(indicator({6}, 6), ParameterError);
}
