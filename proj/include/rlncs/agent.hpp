#pragma once

#include "rlncs/core.hpp"
#include "rlncs/neural.hpp"
#include "rlncs/roi_policy.hpp"

#include <deque>
#include <optional>

namespace rlncs {

struct Experience {
  Vector state;
  ActionId action = ActionId::Direct;
  Vector next_state;
  double reward = 0.0;
  long step_index = 0;
};

/// FIFO buffer of the most recent transitions in insertion order.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  /// Appends; evicts the oldest entry when full. step_index must increase.
  void push(Experience e);

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Experience& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

/// Z transitions for the Q head, and for each one the window of L states
/// ending at its `state`, with the LSTM target equal to its `next_state`.
struct Batch {
  std::vector<std::size_t> positions;
  std::vector<std::vector<std::size_t>> windows;  // memory positions, oldest first
};

/// Minimum fill before sample_batch can return Z full-length windows.
std::size_t batch_ready_size(std::size_t batch_size, std::size_t seq_len);

/// Uniform sample without replacement among transitions that have L - 1
/// predecessors in the buffer. Returns nullopt while the memory holds fewer
/// than batch_ready_size() items.
std::optional<Batch> sample_batch(const ReplayMemory& memory, std::size_t batch_size, std::size_t seq_len, Rng& rng);

/// Column-stacked Q-head inputs: state (N x Z) and next_state (N x Z).
Matrix batch_states(const ReplayMemory& memory, const Batch& batch);
Matrix batch_next_states(const ReplayMemory& memory, const Batch& batch);

/// L inputs of N x Z for the LSTM head, oldest first.
std::vector<Matrix> batch_sequences(const ReplayMemory& memory, const Batch& batch);

/// With probability epsilon a uniformly random action; otherwise the argmax,
/// ties resolved to Direct.
ActionId select_action(const Vector& q_values, double epsilon, Rng& rng);

ActionId greedy_action(const Vector& q_values);

/// Linear: max(0, 1 - t decay). Exponential: (1 - decay)^t.
double epsilon_at(long t, double decay, EpsilonSchedule schedule = EpsilonSchedule::Linear);

/// reward + gamma max_a q_next_target[a].
double q_target(double reward, double gamma, const Vector& q_next_target);

/// Bitwise copy of the online parameters.
QNetParams sync_target(const QNetParams& online);

}  // namespace rlncs
