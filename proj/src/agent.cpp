#include "rlncs/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rlncs {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ParameterError("ReplayMemory: capacity must be positive");
}

void ReplayMemory::push(Experience e) {
  if (!items_.empty() && e.step_index <= items_.back().step_index)
    throw ParameterError("ReplayMemory: step_index must be strictly increasing");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::size_t batch_ready_size(std::size_t batch_size, std::size_t seq_len) {
  return std::max(batch_size + seq_len - 1, seq_len + 1);
}

std::optional<Batch> sample_batch(const ReplayMemory& memory, std::size_t batch_size, std::size_t seq_len, Rng& rng) {
  if (batch_size == 0 || seq_len == 0) throw ParameterError("sample_batch: sizes must be positive");
  if (memory.size() < batch_ready_size(batch_size, seq_len)) return std::nullopt;

  // Eligible end positions are seq_len-1 .. size-1; partial Fisher-Yates.
  const std::size_t first = seq_len - 1;
  std::vector<std::size_t> pool(memory.size() - first);
  std::iota(pool.begin(), pool.end(), first);
  Batch batch;
  batch.positions.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t pick = k + rng.index(pool.size() - k);
    std::swap(pool[k], pool[pick]);
    batch.positions.push_back(pool[k]);
  }
  batch.windows.reserve(batch_size);
  for (std::size_t end : batch.positions) {
    std::vector<std::size_t> w(seq_len);
    std::iota(w.begin(), w.end(), end + 1 - seq_len);
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

Matrix batch_states(const ReplayMemory& memory, const Batch& batch) {
  Matrix s(memory[0].state.size(), static_cast<Index>(batch.positions.size()));
  for (std::size_t k = 0; k < batch.positions.size(); ++k) s.col(static_cast<Index>(k)) = memory[batch.positions[k]].state;
  return s;
}

Matrix batch_next_states(const ReplayMemory& memory, const Batch& batch) {
  Matrix s(memory[0].state.size(), static_cast<Index>(batch.positions.size()));
  for (std::size_t k = 0; k < batch.positions.size(); ++k)
    s.col(static_cast<Index>(k)) = memory[batch.positions[k]].next_state;
  return s;
}

std::vector<Matrix> batch_sequences(const ReplayMemory& memory, const Batch& batch) {
  const std::size_t len = batch.windows.empty() ? 0 : batch.windows.front().size();
  const Index n = memory[0].state.size();
  std::vector<Matrix> seq(len, Matrix(n, static_cast<Index>(batch.windows.size())));
  for (std::size_t b = 0; b < batch.windows.size(); ++b)
    for (std::size_t k = 0; k < len; ++k) seq[k].col(static_cast<Index>(b)) = memory[batch.windows[b][k]].state;
  return seq;
}

ActionId greedy_action(const Vector& q_values) {
  return q_values[1] > q_values[0] ? ActionId::Learned : ActionId::Direct;
}

ActionId select_action(const Vector& q_values, double epsilon, Rng& rng) {
  if (q_values.size() != kNumActions) throw ParameterError("select_action: expected two action values");
  if (rng.uniform() < epsilon) return static_cast<ActionId>(rng.index(kNumActions));
  return greedy_action(q_values);
}

double epsilon_at(long t, double decay, EpsilonSchedule schedule) {
  if (t < 0) throw ParameterError("epsilon_at: negative step");
  if (schedule == EpsilonSchedule::Exponential) return std::pow(1.0 - decay, static_cast<double>(t));
  return std::max(0.0, 1.0 - static_cast<double>(t) * decay);
}

double q_target(double reward, double gamma, const Vector& q_next_target) {
  return reward + gamma * q_next_target.maxCoeff();
}

QNetParams sync_target(const QNetParams& online) { return online; }

}  // namespace rlncs
