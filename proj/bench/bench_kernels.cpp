// Serial reference vs OpenMP for the two parallel kernels.

#include "rlncs/kernels.hpp"
#include "rlncs/recovery.hpp"
#include "rlncs/sensing.hpp"
#include "rlncs/signal_model.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace rlncs;

struct GradFixture {
  QNetParams online, target;
  LstmParams lstm;
  kernels::LearnerBatch batch;

  GradFixture(Index n, Index z, Index len) {
    Rng rng(7);
    online = make_qnet(n, 128, 64, 2.0 / 0.9, rng);
    target = online;
    lstm = make_lstm(n, 200, 1, rng);
    const auto bits = [&] {
      Matrix m(n, z);
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.1) ? 1.0 : 0.0;
      return m;
    };
    batch.states = bits();
    batch.next_states = bits();
    batch.rewards = Vector::Constant(z, 1.0);
    for (Index b = 0; b < z; ++b) batch.actions.push_back(b % 2 ? ActionId::Learned : ActionId::Direct);
    for (Index k = 0; k < len; ++k) batch.sequences.push_back(bits());
  }
};

void BM_BatchGradients(benchmark::State& state) {
  static const GradFixture fx(100, 32, 20);
  const auto chunks = static_cast<int>(state.range(0));
  const kernels::LearnerSpec spec{0.1, 5.0, 0.5};
  for (auto _ : state) {
    auto g = chunks == 0 ? kernels::batch_gradients_serial(fx.online, fx.target, fx.lstm, fx.batch, spec)
                         : kernels::batch_gradients_omp(fx.online, fx.target, fx.lstm, fx.batch, spec, chunks);
    benchmark::DoNotOptimize(g.joint_loss);
  }
  state.SetLabel(chunks == 0 ? "serial" : "omp");
}
BENCHMARK(BM_BatchGradients)->Arg(0)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

// Independent noisy recoveries, one per loop index.
void BM_RecoveryTrials(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? kernels::Exec::Serial : kernels::Exec::OpenMP;
  RunConfig cfg;
  cfg.n_coeffs = 100;
  cfg.n_meas = 30;
  constexpr std::size_t trials = 32;
  std::vector<double> err(trials);
  for (auto _ : state) {
    kernels::parallel_for(trials, exec, [&](std::size_t i) {
      Rng rng = Rng(3).split("trial/" + std::to_string(i));
      const SignalState s = initial_state(cfg, rng);
      const SensingPlan plan = make_plan(ones_of(s.d), cfg, rng);
      const Measurement y = measure(plan.phi, s.x, cfg.snr_db, rng);
      const RecoveryResult r = bpdn_solve(plan.phi, y.y, y.sigma_n * std::sqrt(30.0));
      err[i] = (r.x_hat - s.x).squaredNorm();
    });
    benchmark::DoNotOptimize(err.data());
  }
  state.SetLabel(exec == kernels::Exec::Serial ? "serial" : "omp");
}
BENCHMARK(BM_RecoveryTrials)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
