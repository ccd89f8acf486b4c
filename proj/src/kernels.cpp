#include "rlncs/kernels.hpp"

#include <algorithm>

namespace rlncs::kernels {

int max_threads() { return omp_get_max_threads(); }

LearnerBatch gather_batch(const ReplayMemory& memory, const Batch& batch) {
  LearnerBatch lb;
  lb.states = batch_states(memory, batch);
  lb.next_states = batch_next_states(memory, batch);
  lb.rewards.resize(static_cast<Index>(batch.positions.size()));
  for (std::size_t k = 0; k < batch.positions.size(); ++k) {
    const Experience& e = memory[batch.positions[k]];
    lb.actions.push_back(e.action);
    lb.rewards[static_cast<Index>(k)] = e.reward;
  }
  lb.sequences = batch_sequences(memory, batch);
  return lb;
}

namespace {

// Gradient of (1/total) * sum over columns [begin, end) of the joint loss.
BatchGradients block_gradients(const QNetParams& online, const QNetParams& target, const LstmParams& lstm,
                               const LearnerBatch& batch, const LearnerSpec& spec, Index begin, Index end,
                               Index total) {
  const Index cols = end - begin;
  const double inv_total = 1.0 / static_cast<double>(total);
  BatchGradients out;

  // Q head: targets from the frozen network, loss on the taken action only.
  const QTape tape = q_forward_batch(online, batch.states.middleCols(begin, cols));
  const Matrix q_next = q_forward_batch(target, batch.next_states.middleCols(begin, cols)).q;
  Matrix dq = Matrix::Zero(2, cols);
  for (Index b = 0; b < cols; ++b) {
    const double beta = batch.rewards[begin + b] + spec.gamma * q_next.col(b).maxCoeff();
    const int a = static_cast<int>(batch.actions[static_cast<std::size_t>(begin + b)]);
    const double q = tape.q(a, b);
    out.dqn_loss += dqn_loss(q, beta) * inv_total;
    dq(a, b) = 2.0 * (q - beta) * inv_total * (1.0 - spec.lambda);
  }
  out.q = spec.lambda < 1.0 ? q_backward(online, tape, dq) : zeros_like(online);

  // LSTM head: predict next_state from the window ending at state.
  if (spec.lambda > 0.0) {
    std::vector<Matrix> seq;
    seq.reserve(batch.sequences.size());
    for (const Matrix& m : batch.sequences) seq.push_back(m.middleCols(begin, cols));
    const LstmTape lt = lstm_forward_batch(lstm, seq);
    const Matrix targets = batch.next_states.middleCols(begin, cols);
    out.lstm_loss = lstm_loss(lt.output, targets, spec.omega) * static_cast<double>(cols) * inv_total;
    // lstm_loss_grad_logits divides by cols; rescale to the full batch.
    Matrix dlogits = lstm_loss_grad_logits(lt.output, targets, spec.omega);
    dlogits *= spec.lambda * static_cast<double>(cols) * inv_total;
    out.lstm = lstm_backward(lstm, lt, dlogits);
  } else {
    out.lstm = zeros_like(lstm);
  }
  out.joint_loss = joint_loss(out.dqn_loss, out.lstm_loss, spec.lambda);
  return out;
}

}  // namespace

BatchGradients batch_gradients_serial(const QNetParams& online, const QNetParams& target, const LstmParams& lstm,
                                      const LearnerBatch& batch, const LearnerSpec& spec) {
  const Index z = batch.states.cols();
  return block_gradients(online, target, lstm, batch, spec, 0, z, z);
}

BatchGradients batch_gradients_omp(const QNetParams& online, const QNetParams& target, const LstmParams& lstm,
                                   const LearnerBatch& batch, const LearnerSpec& spec, int chunks) {
  const Index z = batch.states.cols();
  const Index n_blocks = std::clamp<Index>(chunks, 1, z);
  if (n_blocks == 1) return batch_gradients_serial(online, target, lstm, batch, spec);

  std::vector<BatchGradients> parts(static_cast<std::size_t>(n_blocks));
  parallel_for(static_cast<std::size_t>(n_blocks), Exec::OpenMP, [&](std::size_t k) {
    const Index kk = static_cast<Index>(k);
    const Index begin = kk * z / n_blocks;
    const Index end = (kk + 1) * z / n_blocks;
    parts[k] = block_gradients(online, target, lstm, batch, spec, begin, end, z);
  });

  BatchGradients total = std::move(parts.front());
  for (std::size_t k = 1; k < parts.size(); ++k) {
    add_into(total.q, parts[k].q);
    add_into(total.lstm, parts[k].lstm);
    total.dqn_loss += parts[k].dqn_loss;
    total.lstm_loss += parts[k].lstm_loss;
  }
  total.joint_loss = joint_loss(total.dqn_loss, total.lstm_loss, spec.lambda);
  return total;
}

}  // namespace rlncs::kernels
