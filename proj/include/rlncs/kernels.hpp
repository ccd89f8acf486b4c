#pragma once

// Data-parallel kernels. Every OpenMP kernel has a serial reference with the
// same contract; tests compare the two and the benchmark target times them.

#include "rlncs/agent.hpp"
#include "rlncs/neural.hpp"

#include <omp.h>

#include <cstddef>
#include <exception>
#include <vector>

namespace rlncs::kernels {

enum class Exec { Serial, OpenMP };

int max_threads();

/// Calls fn(i) for every i in [0, n). Under OpenMP, iterations are scheduled
/// dynamically; fn must only write state owned by index i. The first exception
/// thrown by any iteration is rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(rlncs_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// One learner update's inputs, column b holding mini-batch sample b.
struct LearnerBatch {
  Matrix states;                 // N x Z
  Matrix next_states;            // N x Z, also the LSTM targets
  std::vector<ActionId> actions;
  Vector rewards;                // Z
  std::vector<Matrix> sequences; // L inputs of N x Z, oldest first
};

LearnerBatch gather_batch(const ReplayMemory& memory, const Batch& batch);

struct BatchGradients {
  QNetParams q;     // (1 - lambda) d J_dqn / d theta
  LstmParams lstm;  // lambda d J_ls / d psi
  double dqn_loss = 0.0;
  double lstm_loss = 0.0;
  double joint_loss = 0.0;
};

struct LearnerSpec {
  double gamma = 0.1;
  double omega = 5.0;
  double lambda = 1.0;
};

/// Gradients of the joint loss over the whole batch in one pass.
BatchGradients batch_gradients_serial(const QNetParams& online, const QNetParams& target, const LstmParams& lstm,
                                      const LearnerBatch& batch, const LearnerSpec& spec);

/// Same quantity with the batch split into `chunks` contiguous column blocks
/// evaluated concurrently and summed in block order. The result depends on
/// `chunks` only through floating-point summation order and is independent of
/// the thread count.
BatchGradients batch_gradients_omp(const QNetParams& online, const QNetParams& target, const LstmParams& lstm,
                                   const LearnerBatch& batch, const LearnerSpec& spec, int chunks);

}  // namespace rlncs::kernels
