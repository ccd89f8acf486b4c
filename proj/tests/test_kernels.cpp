#include "oracles.hpp"
#include "rlncs/kernels.hpp"

#include <doctest.h>

#include <atomic>
#include <stdexcept>

using namespace rlncs;
using namespace rlncs::kernels;

namespace {

LearnerBatch random_batch(Index n, Index z, int len, Rng& rng) {
  const auto bits = [&] {
    Matrix m(n, z);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    return m;
  };
  LearnerBatch b;
  b.states = bits();
  b.next_states = bits();
  b.rewards = Vector(z);
  for (Index k = 0; k < z; ++k) {
    b.rewards[k] = 2.0 * rng.uniform();
    b.actions.push_back(rng.bernoulli(0.5) ? ActionId::Learned : ActionId::Direct);
  }
  for (int k = 0; k < len; ++k) b.sequences.push_back(bits());
  b.sequences.back() = b.states;
  return b;
}

}  // namespace

TEST_CASE("parallel_for visits every index once in both modes") {
  for (Exec e : {Exec::Serial, Exec::OpenMP}) {
    std::vector<int> seen(257, 0);
    parallel_for(seen.size(), e, [&](std::size_t i) { seen[i] += 1; });
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("parallel_for rethrows a task exception") {
  std::atomic<int> done{0};
  CHECK_THROWS_AS(parallel_for(64, Exec::OpenMP,
                               [&](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("task failed");
                                 ++done;
                               }),
                  std::runtime_error);
  CHECK(done.load() == 63);
}

TEST_CASE("chunked gradients agree with the serial reference") {
  Rng rng(1);
  const QNetParams online = make_qnet(12, 10, 6, 2.2, rng);
  const QNetParams target = make_qnet(12, 10, 6, 2.2, rng);
  const LstmParams lstm = make_lstm(12, 8, 1, rng);
  const LearnerBatch batch = random_batch(12, 9, 5, rng);
  for (double lambda : {0.0, 0.35, 1.0}) {
    const LearnerSpec spec{0.1, 5.0, lambda};
    const BatchGradients ref = batch_gradients_serial(online, target, lstm, batch, spec);
    for (int chunks : {1, 2, 3, 9, 50}) {
      const BatchGradients g = batch_gradients_omp(online, target, lstm, batch, spec, chunks);
      CHECK(g.joint_loss == doctest::Approx(ref.joint_loss).epsilon(1e-12));
      CHECK(g.dqn_loss == doctest::Approx(ref.dqn_loss).epsilon(1e-12));
      CHECK(g.lstm_loss == doctest::Approx(ref.lstm_loss).epsilon(1e-12));
      QNetParams dq = g.q;
      scale(dq, -1.0);
      add_into(dq, ref.q);
      CHECK(global_norm(dq) <= 1e-12 * std::max(1.0, global_norm(ref.q)));
      LstmParams dl = g.lstm;
      scale(dl, -1.0);
      add_into(dl, ref.lstm);
      CHECK(global_norm(dl) <= 1e-12 * std::max(1.0, global_norm(ref.lstm)));
    }
    // thread-count independence of a fixed chunking
    const BatchGradients a = batch_gradients_omp(online, target, lstm, batch, spec, 3);
    const BatchGradients b = batch_gradients_omp(online, target, lstm, batch, spec, 3);
    CHECK(fingerprint(a.q) == fingerprint(b.q));
    CHECK(fingerprint(a.lstm) == fingerprint(b.lstm));
  }
}

TEST_CASE("joint-loss gradients match central differences") {
  Rng rng(2);
  for (int draw = 0; draw < 3; ++draw) {
    QNetParams online = make_qnet(6, 5, 4, 2.2, rng);
    oracle::jitter_biases(online, rng);
    const QNetParams target = make_qnet(6, 5, 4, 2.2, rng);
    LstmParams lstm = make_lstm(6, 4, 1, rng);
    const LearnerBatch batch = random_batch(6, 4, 6, rng);
    const LearnerSpec spec{0.1, 5.0, 0.2 + 0.6 * rng.uniform()};
    const BatchGradients g = batch_gradients_serial(online, target, lstm, batch, spec);
    const auto joint_q = [&](const QNetParams& p) {
      return batch_gradients_serial(p, target, lstm, batch, spec).joint_loss;
    };
    const auto joint_l = [&](const LstmParams& p) {
      return batch_gradients_serial(online, target, p, batch, spec).joint_loss;
    };
    CHECK(oracle::max_relative_error(online, g.q, joint_q) < 1e-4);
    CHECK(oracle::max_relative_error(lstm, g.lstm, joint_l) < 1e-4);
  }
}
