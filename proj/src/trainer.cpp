#include "rlncs/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rlncs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Schedules below 1e-12 snap to zero so that "reached zero" is exact.
double snap(double v) { return v < 1e-12 ? 0.0 : v; }

double nmse_of(const Vector& x, const Vector& x_hat) {
  const double den = x.squaredNorm();
  if (den == 0.0) return kNaN;
  return (x - x_hat).squaredNorm() / den;
}

double nmse_on(const Vector& x, const Vector& x_hat, const Vector& mask) {
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double e = x[i] - x_hat[i];
    num += e * e;
    den += x[i] * x[i];
  }
  if (den == 0.0) return kNaN;
  return num / den;
}

std::vector<Vector> window_of(const AgentView& view) { return {view.history.begin(), view.history.end()}; }

}  // namespace

RewardParts compute_reward(const IndexSet& predicted, const IndexSet& estimated, double alpha) {
  std::size_t tp = 0;
  auto a = predicted.begin();
  auto b = estimated.begin();
  while (a != predicted.end() && b != estimated.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++tp, ++a, ++b;
    }
  }
  RewardParts out;
  const auto ratio = [&](std::size_t den, bool other_empty) {
    if (den == 0) return other_empty ? 1.0 : 0.0;
    return static_cast<double>(tp) / static_cast<double>(den);
  };
  out.precision = ratio(predicted.size(), estimated.empty());
  out.recall = ratio(estimated.size(), predicted.empty());
  out.reward = alpha * out.precision + (2.0 - alpha) * out.recall;
  return out;
}

EnvStreams EnvStreams::from(const Rng& parent) {
  return {parent.split("signal"), parent.split("matrix"), parent.split("noise"), parent.split("fault")};
}

EnvContext::EnvContext(const RunConfig& c, const Rng& parent) : cfg(c), rng(EnvStreams::from(parent)) {
  if (cfg.mode == SignalMode::Dct) theta = dct_matrix(cfg.n_coeffs);
  if (cfg.fixed_gaussian) {
    Rng base_rng = parent.split("base");
    base = build_matrix(cfg.n_meas, cfg.n_coeffs, Vector::Ones(cfg.n_coeffs), base_rng);
  }
}

EnvStepResult env_step(const SignalState& prev, const std::optional<IndexSet>& predicted, EnvContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  EnvStepResult out;
  out.next = step_signal(prev, cfg, ctx.theta, ctx.rng.signal);

  const Vector energy = predicted
                            ? allocate_energy(importance_from_roi(*predicted, cfg.n_coeffs, cfg.eta_roi, cfg.eta_nonroi))
                            : Vector::Ones(cfg.n_coeffs);
  out.col_energy_sq_sum = energy.squaredNorm();
  const Matrix phi = cfg.fixed_gaussian ? scale_columns(ctx.base, energy)
                                        : build_matrix(cfg.n_meas, cfg.n_coeffs, energy, ctx.rng.matrix);
  const Measurement meas = measure(phi, out.next.x, cfg.snr_db, ctx.rng.noise);
  const double mu = meas.sigma_n * std::sqrt(static_cast<double>(cfg.n_meas));

  try {
    const RecoveryResult rec =
        cfg.mode == SignalMode::Dct ? bpdn_solve_dct(phi, ctx.theta, meas.y, mu) : bpdn_solve(phi, meas.y, mu);
    out.x_hat = rec.x_hat;
    out.solver_converged = rec.converged;
  } catch (const ParameterError&) {
    out.x_hat = Vector::Zero(cfg.n_coeffs);
    out.solver_converged = false;
  }

  if (cfg.mode == SignalMode::Dct) {
    out.roi_est = ones_of(observe_roi(out.next.d, cfg.fault_rate, ctx.rng.fault).d_obs);
  } else {
    out.roi_est = extract_roi(out.x_hat, cfg.roi_threshold);
  }
  out.state_next = state_from_roi(out.roi_est, cfg.n_coeffs);

  if (predicted) {
    out.reward = compute_reward(*predicted, out.roi_est, cfg.reward_alpha);
  } else {
    out.reward = {kNaN, kNaN, kNaN};
  }
  out.nmse = nmse_of(out.next.x, out.x_hat);
  out.nmse_roi = nmse_on(out.next.x, out.x_hat, out.next.d);
  return out;
}

void AgentView::push(IndexSet next_roi, Vector next_state, std::size_t max_len) {
  roi = std::move(next_roi);
  history.push_back(std::move(next_state));
  while (history.size() > max_len) history.pop_front();
}

AgentView random_view(const RunConfig& cfg, Rng& rng) {
  Vector s(cfg.n_coeffs);
  for (Index i = 0; i < s.size(); ++i) s[i] = rng.bernoulli(cfg.sparsity) ? 1.0 : 0.0;
  AgentView view;
  view.push(ones_of(s), s, static_cast<std::size_t>(cfg.seq_len));
  return view;
}

EvalStart advanced_start(const RunConfig& cfg, const Rng& run_rng, long steps) {
  if (steps < 0) throw ParameterError("advanced_start: negative step count");
  Rng sig = EnvStreams::from(run_rng).signal;
  const Matrix theta = cfg.mode == SignalMode::Dct ? dct_matrix(cfg.n_coeffs) : Matrix();
  SignalState s = initial_state(cfg, sig);
  for (long k = 0; k < steps; ++k) s = step_signal(s, cfg, theta, sig);
  Rng view_rng = run_rng.split("eval-view");
  return {std::move(s), std::move(sig), random_view(cfg, view_rng)};
}

double lambda_at(long t, double lambda0, double decay) {
  return snap(std::max(0.0, lambda0 - static_cast<double>(t) * decay));
}

IndexSet predict_roi(ActionId action, const AgentView& view, const LstmParams& lstm, const RunConfig& cfg) {
  if (action == ActionId::Direct) return action_direct(view.roi);
  const Vector out = lstm_forward(lstm, window_of(view)).first;
  return action_learned(view.roi, complement(view.roi, cfg.n_coeffs), out, cfg.th_up, cfg.th_low);
}

TrainOutcome run_training(const RunConfig& cfg, const Rng& rng) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();

  EnvContext ctx(cfg, rng);
  Rng init_rng = rng.split("init");
  Rng agent_rng = rng.split("agent");

  TrainOutcome result;
  result.config = cfg;
  result.online = make_qnet(cfg.n_coeffs, cfg.q_hidden1, cfg.q_hidden2, cfg.q_max(), init_rng, cfg.paper_init);
  result.target = sync_target(result.online);
  result.lstm = make_lstm(cfg.n_coeffs, cfg.lstm_hidden, cfg.lstm_layers, init_rng, cfg.paper_init);

  SignalState signal = initial_state(cfg, ctx.rng.signal);
  AgentView view = random_view(cfg, init_rng);
  ReplayMemory memory(static_cast<std::size_t>(cfg.replay_capacity));
  const LrSchedule lrs{cfg.lr0, cfg.lr_factor, cfg.lr_period};
  const auto z = static_cast<std::size_t>(cfg.batch_size);
  const auto len = static_cast<std::size_t>(cfg.seq_len);

  result.log.reserve(static_cast<std::size_t>(cfg.t_max));
  double window_sum = 0.0;
  int window_count = 0;

  for (long t = 1; t <= cfg.t_max; ++t) {
    const double eps = snap(epsilon_at(t - 1, cfg.eps_decay, cfg.eps_schedule));
    const double lambda = lambda_at(t - 1, cfg.lambda0, cfg.lambda_decay);
    const double lr = lrs.at(t - 1);

    const Vector q = q_forward(result.online, view.state());
    const ActionId action = select_action(q, eps, agent_rng);
    const IndexSet predicted = predict_roi(action, view, result.lstm, cfg);
    EnvStepResult step = env_step(signal, predicted, ctx);
    if (!step.solver_converged) ++result.solver_failures;

    memory.push({view.state(), action, step.state_next, step.reward.reward, t});
    view.push(std::move(step.roi_est), step.state_next, len);
    signal = std::move(step.next);

    if (auto batch = sample_batch(memory, z, len, agent_rng)) {
      const kernels::LearnerBatch lb = kernels::gather_batch(memory, *batch);
      kernels::BatchGradients g = kernels::batch_gradients_omp(result.online, result.target, result.lstm, lb,
                                                                {cfg.discount, cfg.ce_weight, lambda},
                                                                cfg.batch_chunks);
      if (!std::isfinite(g.joint_loss))
        throw std::runtime_error("run_training: non-finite loss at step " + std::to_string(t) +
                                 " (dqn=" + std::to_string(g.dqn_loss) + ", lstm=" + std::to_string(g.lstm_loss) + ")");
      if (lambda < 1.0) sgd_step(result.online, g.q, lr);
      if (lambda > 0.0) {
        clip_by_global_norm(g.lstm, cfg.grad_clip);
        sgd_step(result.lstm, g.lstm, lr);
      }
      ++result.updates;
    }

    result.log.push_back({t, action, step.reward.reward, step.reward.precision, step.reward.recall, step.nmse,
                          step.nmse_roi, eps, lambda, lr});
    window_sum += step.nmse;
    ++window_count;

    if (t % cfg.target_sync_period == 0) {
      result.target = sync_target(result.online);
      ++result.target_syncs;
      result.episode_tnmse.push_back(window_sum / window_count);
      window_sum = 0.0;
      window_count = 0;
    }
  }
  if (window_count > 0) result.episode_tnmse.push_back(window_sum / window_count);

  require_finite(result.online, "online Q-network");
  require_finite(result.lstm, "LSTM");
  result.final_state = {std::move(signal), ctx.rng.signal, std::move(view)};
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<StepLog> evaluate_policy(const QNetParams& qnet, const LstmParams& lstm, const RunConfig& cfg, int horizon,
                                     EvalStart start, const Rng& rng, EvalPolicy policy) {
  if (horizon < 1) throw ParameterError("evaluate_policy: horizon must be positive");
  EnvContext ctx(cfg, rng);
  ctx.rng.signal = std::move(start.signal_rng);
  SignalState signal = std::move(start.signal);
  AgentView view = std::move(start.view);
  const auto len = static_cast<std::size_t>(cfg.seq_len);

  std::vector<StepLog> log;
  log.reserve(static_cast<std::size_t>(horizon));
  for (long t = 1; t <= horizon; ++t) {
    std::optional<IndexSet> predicted;
    ActionId action = ActionId::Direct;
    if (policy == EvalPolicy::Agent) {
      action = greedy_action(q_forward(qnet, view.state()));
      predicted = predict_roi(action, view, lstm, cfg);
    } else if (policy == EvalPolicy::DirectOnly) {
      predicted = action_direct(view.roi);
    }
    EnvStepResult step = env_step(signal, predicted, ctx);
    log.push_back({t, action, step.reward.reward, step.reward.precision, step.reward.recall, step.nmse,
                   step.nmse_roi, 0.0, 0.0, 0.0});
    view.push(std::move(step.roi_est), std::move(step.state_next), len);
    signal = std::move(step.next);
  }
  return log;
}

void write_step_log(std::ostream& out, const std::vector<StepLog>& log) {
  out << "t,action,reward,precision,recall,nmse,nmse_roi,epsilon,lambda,lr\n";
  char buf[512];
  for (const StepLog& s : log) {
    std::snprintf(buf, sizeof buf, "%ld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                  static_cast<int>(s.action), s.reward, s.precision, s.recall, s.nmse, s.nmse_roi, s.epsilon, s.lambda,
                  s.lr);
    out << buf;
  }
}

}  // namespace rlncs
