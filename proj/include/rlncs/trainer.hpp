#pragma once

#include "rlncs/agent.hpp"
#include "rlncs/core.hpp"
#include "rlncs/kernels.hpp"
#include "rlncs/neural.hpp"
#include "rlncs/recovery.hpp"
#include "rlncs/roi_policy.hpp"
#include "rlncs/sensing.hpp"
#include "rlncs/signal_model.hpp"

#include <deque>
#include <iosfwd>
#include <optional>

namespace rlncs {

struct StepLog {
  long t = 0;
  ActionId action = ActionId::Direct;
  double reward = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double nmse = 0.0;
  double nmse_roi = 0.0;  // NaN when the true ROI is empty
  double epsilon = 0.0;
  double lambda = 0.0;
  double lr = 0.0;
};

struct RewardParts {
  double reward = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// alpha * precision + (2 - alpha) * recall with TP = |predicted ∩ estimated|.
/// A ratio with an empty denominator is 1 when the other set is also empty and
/// 0 otherwise.
RewardParts compute_reward(const IndexSet& predicted, const IndexSet& estimated, double alpha);

/// Independent random streams of one environment.
struct EnvStreams {
  Rng signal;
  Rng matrix;
  Rng noise;
  Rng fault;

  static EnvStreams from(const Rng& parent);
};

/// Everything env_step needs besides the previous signal.
struct EnvContext {
  RunConfig cfg;
  Matrix theta;  // DCT basis (DCT mode only)
  Matrix base;   // reused Gaussian matrix when cfg.fixed_gaussian
  EnvStreams rng;

  EnvContext(const RunConfig& cfg, const Rng& parent);
};

struct EnvStepResult {
  SignalState next;
  IndexSet roi_est;
  Vector state_next;
  RewardParts reward;  // NaN fields for the uniform baseline
  double nmse = 0.0;
  double nmse_roi = 0.0;
  Vector x_hat;
  double col_energy_sq_sum = 0.0;
  bool solver_converged = true;
};

/// Advances the signal, senses it with a matrix designed for `predicted`
/// (unit-norm columns when nullopt), recovers it, and scores the prediction
/// against the ROI estimated after recovery.
EnvStepResult env_step(const SignalState& prev, const std::optional<IndexSet>& predicted, EnvContext& ctx);

/// Agent-side view of the environment: the latest ROI estimate and the last
/// seq_len states (oldest first) that feed the LSTM.
struct AgentView {
  IndexSet roi;
  std::deque<Vector> history;

  const Vector& state() const { return history.back(); }
  void push(IndexSet next_roi, Vector next_state, std::size_t max_len);
};

/// Point from which a frozen policy is evaluated.
struct EvalStart {
  SignalState signal;
  Rng signal_rng;
  AgentView view;
};

/// Random binary initial state, Bernoulli(sparsity) per coordinate.
AgentView random_view(const RunConfig& cfg, Rng& rng);

/// Signal drawn exactly as a training run seeded by `run_rng` would have it
/// after `steps` environment steps; the view is random.
EvalStart advanced_start(const RunConfig& cfg, const Rng& run_rng, long steps);

struct TrainOutcome {
  QNetParams online;
  QNetParams target;
  LstmParams lstm;
  std::vector<StepLog> log;
  std::vector<double> episode_tnmse;  // mean nmse per target_sync_period window
  RunConfig config;
  double wall_seconds = 0.0;
  long solver_failures = 0;
  long updates = 0;
  long target_syncs = 0;
  EvalStart final_state;
};

double lambda_at(long t, double lambda0, double decay);

/// Predicted next ROI for an action given the current view.
IndexSet predict_roi(ActionId action, const AgentView& view, const LstmParams& lstm, const RunConfig& cfg);

/// The closed training loop: act, sense, recover, store, learn, sync.
TrainOutcome run_training(const RunConfig& cfg, const Rng& rng);

enum class EvalPolicy { Agent, DirectOnly, Uniform };

/// Runs `horizon` greedy steps from `start` with no learning. Matrix, noise
/// and fault draws come from `rng`.
std::vector<StepLog> evaluate_policy(const QNetParams& qnet, const LstmParams& lstm, const RunConfig& cfg, int horizon,
                                     EvalStart start, const Rng& rng, EvalPolicy policy = EvalPolicy::Agent);

/// CSV with columns t,action,reward,precision,recall,nmse,nmse_roi,epsilon,lambda,lr.
void write_step_log(std::ostream& out, const std::vector<StepLog>& log);

}  // namespace rlncs
