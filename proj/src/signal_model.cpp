#include "rlncs/signal_model.hpp"

#include <cmath>
#include <numbers>

namespace rlncs {

double transition_down(double tp01, double kappa, bool literal, bool saturate) {
  if (!(tp01 >= 0.0 && tp01 <= 1.0)) throw ParameterError("tp01 must lie in [0, 1]");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ParameterError("sparsity must lie in (0, 1)");
  const double tp10 = literal ? kappa * tp01 / (1.0 - kappa) : tp01 * (1.0 - kappa) / kappa;
  if (tp10 > 1.0) {
    if (saturate) return 1.0;
    throw ParameterError("tp10 = " + std::to_string(tp10) + " exceeds 1 for tp01 = " + std::to_string(tp01) +
                         ", sparsity = " + std::to_string(kappa));
  }
  return tp10;
}

Vector step_support_rates(const Vector& d_prev, double tp01, double tp10, Rng& rng) {
  Vector d(d_prev.size());
  for (Index n = 0; n < d.size(); ++n) {
    const double u = rng.uniform();
    if (d_prev[n] > 0.5)
      d[n] = u < tp10 ? 0.0 : 1.0;
    else
      d[n] = u < tp01 ? 1.0 : 0.0;
  }
  return d;
}

Vector step_support(const Vector& d_prev, double tp01, double kappa, Rng& rng) {
  return step_support_rates(d_prev, tp01, transition_down(tp01, kappa), rng);
}

Vector step_values(const Vector& w_prev, double corr, double sigma_large, Rng& rng) {
  if (!(corr >= 0.0 && corr <= 1.0)) throw ParameterError("corr must lie in [0, 1]");
  Vector w(w_prev.size());
  for (Index n = 0; n < w.size(); ++n) w[n] = (1.0 - corr) * w_prev[n] + corr * rng.normal(0.0, sigma_large);
  return w;
}

Vector step_small(const Vector& b_prev, double sigma_small, Rng& rng) {
  Vector b(b_prev.size());
  for (Index n = 0; n < b.size(); ++n) b[n] = rng.normal(0.0, sigma_small);
  return b;
}

Vector compose_signal(const Vector& w, const Vector& d, const Vector& b) {
  if (w.size() != d.size() || w.size() != b.size()) throw ParameterError("compose_signal: length mismatch");
  return w.cwiseProduct(d) + b.cwiseProduct(Vector::Ones(d.size()) - d);
}

Matrix dct_matrix(Index n) {
  if (n < 1) throw ParameterError("dct_matrix: size must be positive");
  Matrix theta(n, n);
  const double nd = static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (Index i = 0; i < n; ++i)
      theta(k, i) = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                     static_cast<double>(k) / (2.0 * nd));
  }
  return theta;
}

Vector to_dct(const Matrix& theta, const Vector& x) { return theta * x; }

Vector from_dct(const Matrix& theta, const Vector& z) { return theta.transpose() * z; }

namespace {

Vector bernoulli_vector(Index n, double p, Rng& rng) {
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  return d;
}

double leave_rate(const RunConfig& cfg) {
  return transition_down(cfg.tp01, cfg.sparsity, cfg.paper_literal_tp10, cfg.saturate_tp10);
}

}  // namespace

SignalState initial_state(const RunConfig& cfg, Rng& rng) {
  const Index n = cfg.n_coeffs;
  SignalState s;
  const double rho = cfg.corr;
  const double w_std = rho > 0.0 ? cfg.sigma_large * std::sqrt(rho / (2.0 - rho)) : 0.0;
  Vector support = bernoulli_vector(n, cfg.sparsity, rng);
  s.w = Vector(n);
  for (Index i = 0; i < n; ++i) s.w[i] = rng.normal(0.0, w_std);
  s.b = step_small(Vector::Zero(n), cfg.sigma_small, rng);
  if (cfg.mode == SignalMode::Canonical) {
    s.d = std::move(support);
    s.x = compose_signal(s.w, s.d, s.b);
  } else {
    s.z_support = std::move(support);
    s.z = compose_signal(s.w, s.z_support, s.b);
    s.d = bernoulli_vector(n, cfg.sparsity, rng);
    s.x = from_dct(dct_matrix(n), s.z);
  }
  return s;
}

SignalState step_canonical(const SignalState& prev, const RunConfig& cfg, Rng& rng) {
  SignalState s;
  s.d = step_support_rates(prev.d, cfg.tp01, leave_rate(cfg), rng);
  s.w = step_values(prev.w, cfg.corr, cfg.sigma_large, rng);
  s.b = step_small(prev.b, cfg.sigma_small, rng);
  s.x = compose_signal(s.w, s.d, s.b);
  return s;
}

SignalState step_dct_mode(const SignalState& prev, const RunConfig& cfg, const Matrix& theta, Rng& rng) {
  if (prev.z_support.size() != prev.d.size()) throw ParameterError("step_dct_mode: state is not in DCT mode");
  const double tp10 = leave_rate(cfg);
  SignalState s;
  s.z_support = step_support_rates(prev.z_support, cfg.tp01, tp10, rng);
  s.d = step_support_rates(prev.d, cfg.tp01, tp10, rng);
  s.w = step_values(prev.w, cfg.corr, cfg.sigma_large, rng);
  s.b = step_small(prev.b, cfg.sigma_small, rng);
  s.z = compose_signal(s.w, s.z_support, s.b);
  s.x = from_dct(theta, s.z);
  return s;
}

SignalState step_signal(const SignalState& prev, const RunConfig& cfg, const Matrix& theta, Rng& rng) {
  return cfg.mode == SignalMode::Canonical ? step_canonical(prev, cfg, rng) : step_dct_mode(prev, cfg, theta, rng);
}

RoiObservation observe_roi(const Vector& d_true, double fault_rate, Rng& rng) {
  if (!(fault_rate >= 0.0 && fault_rate <= 1.0)) throw ParameterError("fault_rate must lie in [0, 1]");
  RoiObservation obs{d_true, fault_rate};
  for (Index n = 0; n < obs.d_obs.size(); ++n)
    if (rng.uniform() < fault_rate) obs.d_obs[n] = 1.0 - obs.d_obs[n];
  return obs;
}

}  // namespace rlncs
