#include "rlncs/trainer.hpp"

#include <doctest.h>

#include <sstream>

using namespace rlncs;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.n_coeffs = 24;
  cfg.n_meas = 12;
  cfg.t_max = 250;
  cfg.lambda_decay = 1.0 / 100;
  cfg.eps_decay = 1.0 / 150;
  cfg.lstm_hidden = 12;
  cfg.q_hidden1 = 16;
  cfg.q_hidden2 = 8;
  cfg.seq_len = 5;
  cfg.batch_size = 8;
  cfg.replay_capacity = 100;
  cfg.target_sync_period = 20;
  cfg.lr_period = 100;
  return cfg;
}

bool same_log(const std::vector<StepLog>& a, const std::vector<StepLog>& b) {
  if (a.size() != b.size()) return false;
  std::ostringstream sa, sb;
  write_step_log(sa, a);
  write_step_log(sb, b);
  return sa.str() == sb.str();
}

}  // namespace

TEST_CASE("reward examples") {
  const RewardParts perfect = compute_reward({1, 4}, {1, 4}, 0.5);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.reward == 2.0);

  const RewardParts r = compute_reward({1, 2, 3}, {2, 3, 4}, 0.5);
  CHECK(r.precision == doctest::Approx(2.0 / 3));
  CHECK(r.recall == doctest::Approx(2.0 / 3));
  CHECK(r.reward == doctest::Approx(4.0 / 3));

  const RewardParts miss = compute_reward({}, {1}, 0.5);
  CHECK(miss.precision == 0.0);
  CHECK(miss.recall == 0.0);
  CHECK(miss.reward == 0.0);

  CHECK(compute_reward({}, {}, 0.5).reward == 2.0);
  const RewardParts over = compute_reward({1}, {}, 0.3);
  CHECK(over.precision == 0.0);
  CHECK(over.recall == 0.0);
}

TEST_CASE("lambda schedule") {
  CHECK(lambda_at(0, 1.0, 1e-4) == 1.0);
  CHECK(lambda_at(5000, 1.0, 1e-4) == doctest::Approx(0.5));
  CHECK(lambda_at(10000, 1.0, 1e-4) == 0.0);
  CHECK(lambda_at(20000, 1.0, 1e-4) == 0.0);
}

TEST_CASE("lossless square sensing recovers the signal exactly") {
  RunConfig cfg;
  cfg.n_coeffs = 30;
  cfg.n_meas = 30;
  cfg.snr_db = kInf;
  EnvContext ctx(cfg, Rng(1));
  Rng init(2);
  SignalState s = initial_state(cfg, init);
  for (int t = 0; t < 20; ++t) {
    const EnvStepResult r = env_step(s, ones_of(s.d), ctx);
    CHECK(r.nmse < 1e-10);
    CHECK(r.roi_est == extract_roi(r.next.x, cfg.roi_threshold));
    for (Index i : r.roi_est) CHECK(r.next.d[i] == 1.0);
    CHECK(std::abs(r.col_energy_sq_sum - cfg.n_coeffs) < 1e-9);
    s = r.next;
  }
}

TEST_CASE("static support with the true ROI earns full reward") {
  RunConfig cfg;
  cfg.n_coeffs = 60;
  cfg.n_meas = 40;
  cfg.tp01 = 0.0;
  cfg.snr_db = 60.0;
  EnvContext ctx(cfg, Rng(3));
  Rng init(4);
  SignalState s = initial_state(cfg, init);
  const IndexSet roi = ones_of(s.d);
  double total = 0.0;
  const int steps = 50;
  for (int t = 0; t < steps; ++t) {
    const EnvStepResult r = env_step(s, roi, ctx);
    CHECK(r.reward.reward == doctest::Approx(cfg.reward_alpha * r.reward.precision +
                                             (2 - cfg.reward_alpha) * r.reward.recall));
    total += r.reward.reward;
    s = r.next;
  }
  CHECK(total / steps >= 1.95);
}

TEST_CASE("a fully faulty detector reports the complement") {
  RunConfig cfg;
  cfg.n_coeffs = 32;
  cfg.n_meas = 16;
  cfg.mode = SignalMode::Dct;
  cfg.fault_rate = 1.0;
  EnvContext ctx(cfg, Rng(5));
  Rng init(6);
  SignalState s = initial_state(cfg, init);
  for (int t = 0; t < 5; ++t) {
    const EnvStepResult r = env_step(s, ones_of(s.d), ctx);
    CHECK(r.roi_est == complement(ones_of(r.next.d), cfg.n_coeffs));
    CHECK(compute_reward(r.roi_est, ones_of(r.next.d), 0.5).recall == 0.0);
    s = r.next;
  }
}

TEST_CASE("uniform baseline step has no reward") {
  RunConfig cfg = small_config();
  EnvContext ctx(cfg, Rng(7));
  Rng init(8);
  const EnvStepResult r = env_step(initial_state(cfg, init), std::nullopt, ctx);
  CHECK(std::isnan(r.reward.reward));
  CHECK(std::abs(r.col_energy_sq_sum - cfg.n_coeffs) < 1e-12);
  CHECK(std::isfinite(r.nmse));
}

TEST_CASE("training log follows the closed-form schedules") {
  const RunConfig cfg = small_config();
  const TrainOutcome out = run_training(cfg, Rng(cfg.seed));
  REQUIRE(out.log.size() == static_cast<std::size_t>(cfg.t_max));
  const LrSchedule lrs{cfg.lr0, cfg.lr_factor, cfg.lr_period};
  for (const StepLog& s : out.log) {
    CHECK(s.reward == doctest::Approx(cfg.reward_alpha * s.precision + (2 - cfg.reward_alpha) * s.recall)
                          .epsilon(1e-12));
    CHECK(s.reward >= 0.0);
    CHECK(s.reward <= 2.0);
    CHECK(s.epsilon == doctest::Approx(std::max(0.0, 1.0 - (s.t - 1) * cfg.eps_decay)).epsilon(1e-12));
    CHECK(s.lambda == lambda_at(s.t - 1, cfg.lambda0, cfg.lambda_decay));
    CHECK(s.lr == lrs.at(s.t - 1));
  }
  CHECK(out.log.back().lambda == 0.0);
  CHECK(out.log.back().epsilon == 0.0);
  CHECK(out.target_syncs == cfg.t_max / cfg.target_sync_period);
  CHECK(out.episode_tnmse.size() == static_cast<std::size_t>((cfg.t_max + cfg.target_sync_period - 1) /
                                                             cfg.target_sync_period));
  const auto ready = static_cast<long>(batch_ready_size(cfg.batch_size, cfg.seq_len));
  CHECK(out.updates == cfg.t_max - ready + 1);
  // the last sync happened at t = 240; ten online updates came after it
  CHECK(fingerprint(out.online) != fingerprint(out.target));
}

TEST_CASE("target network only changes at multiples of the sync period") {
  RunConfig cfg = small_config();
  cfg.t_max = 60;
  cfg.target_sync_period = 60;
  const TrainOutcome out = run_training(cfg, Rng(1));
  CHECK(fingerprint(out.online) == fingerprint(out.target));
  cfg.t_max = 59;
  const TrainOutcome early = run_training(cfg, Rng(1));
  CHECK(fingerprint(early.online) != fingerprint(early.target));
  CHECK(early.target_syncs == 0);
}

TEST_CASE("training is deterministic") {
  const RunConfig cfg = small_config();
  const TrainOutcome a = run_training(cfg, Rng(11));
  const TrainOutcome b = run_training(cfg, Rng(11));
  CHECK(same_log(a.log, b.log));
  CHECK(fingerprint(a.online) == fingerprint(b.online));
  CHECK(fingerprint(a.lstm) == fingerprint(b.lstm));
  const TrainOutcome c = run_training(cfg, Rng(12));
  CHECK_FALSE(same_log(a.log, c.log));

  RunConfig chunked = cfg;
  chunked.batch_chunks = 4;
  const TrainOutcome d = run_training(chunked, Rng(11));
  const TrainOutcome e = run_training(chunked, Rng(11));
  CHECK(same_log(d.log, e.log));
}

TEST_CASE("static ROI sanity run") {
  RunConfig cfg = small_config();
  cfg.n_coeffs = 40;
  cfg.n_meas = 24;
  cfg.tp01 = 0.0;
  cfg.snr_db = 60.0;
  cfg.t_max = 1600;
  cfg.lambda_decay = 1.0 / 300;
  cfg.eps_decay = 1.0 / 300;
  cfg.replay_capacity = 1000;
  const TrainOutcome out = run_training(cfg, Rng(21));
  double tail = 0.0;
  for (std::size_t k = out.log.size() - 1000; k < out.log.size(); ++k) tail += out.log[k].reward;
  CHECK(tail / 1000.0 >= 1.9);
}

TEST_CASE("evaluation is greedy, frozen and reproducible") {
  const RunConfig cfg = small_config();
  const TrainOutcome out = run_training(cfg, Rng(13));
  const auto a = evaluate_policy(out.online, out.lstm, cfg, 30, out.final_state, Rng(99));
  const auto b = evaluate_policy(out.online, out.lstm, cfg, 30, out.final_state, Rng(99));
  CHECK(a.size() == 30);
  CHECK(same_log(a, b));

  // replay the greedy decisions by hand
  EvalStart st = out.final_state;
  EnvContext ctx(cfg, Rng(99));
  ctx.rng.signal = st.signal_rng;
  for (const StepLog& s : a) {
    const ActionId act = greedy_action(q_forward(out.online, st.view.state()));
    CHECK(s.action == act);
    CHECK(s.epsilon == 0.0);
    EnvStepResult r = env_step(st.signal, predict_roi(act, st.view, out.lstm, cfg), ctx);
    CHECK(r.nmse == s.nmse);
    st.view.push(r.roi_est, r.state_next, static_cast<std::size_t>(cfg.seq_len));
    st.signal = r.next;
  }

  const auto u = evaluate_policy(out.online, out.lstm, cfg, 30, out.final_state, Rng(99), EvalPolicy::Uniform);
  for (const StepLog& s : u) CHECK(std::isnan(s.reward));
}

TEST_CASE("advanced start reproduces the training signal") {
  const RunConfig cfg = small_config();
  const TrainOutcome out = run_training(cfg, Rng(17));
  const EvalStart st = advanced_start(cfg, Rng(17), cfg.t_max);
  CHECK(st.signal.x == out.final_state.signal.x);
  Rng a = st.signal_rng, b = out.final_state.signal_rng;
  CHECK(a.uniform() == b.uniform());
}

TEST_CASE("step log CSV header") {
  std::ostringstream os;
  write_step_log(os, {StepLog{}});
  CHECK(os.str().rfind("t,action,reward,precision,recall,nmse,nmse_roi,epsilon,lambda,lr\n", 0) == 0);
}
