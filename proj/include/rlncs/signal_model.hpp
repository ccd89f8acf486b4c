#pragma once

#include "rlncs/core.hpp"

namespace rlncs {

/// One time step of the simulated signal.
///
/// Canonical mode: `d` is both the support and the ROI, and
/// x = w*d + b*(1-d) elementwise. DCT mode: `z` = Theta x is the sparse
/// representation with support `z_support`, composed from w and b the same way,
/// while `d` is an independent ROI indicator over the x-domain coefficients.
struct SignalState {
  Vector x;
  Vector d;
  Vector w;
  Vector b;
  Vector z;          // empty in canonical mode
  Vector z_support;  // empty in canonical mode
};

struct RoiObservation {
  Vector d_obs;
  double fault_rate = 0.0;
};

/// Probability of leaving the ROI given (tp01, kappa).
///
/// The default keeps the stationary occupancy at kappa:
/// tp10 = tp01 (1 - kappa) / kappa. `literal` uses kappa tp01 / (1 - kappa),
/// whose stationary occupancy is 1 - kappa. Throws ParameterError when the
/// result exceeds 1 unless `saturate` clamps it.
double transition_down(double tp01, double kappa, bool literal = false, bool saturate = false);

/// Advances each coordinate of the two-state chain one step, with an explicit
/// leave probability.
Vector step_support_rates(const Vector& d_prev, double tp01, double tp10, Rng& rng);

/// Advances each coordinate of the two-state chain one step.
Vector step_support(const Vector& d_prev, double tp01, double kappa, Rng& rng);

/// w_t = (1 - rho) w_{t-1} + rho v_t with v_t ~ N(0, sigma_large^2).
Vector step_values(const Vector& w_prev, double corr, double sigma_large, Rng& rng);

/// Fresh i.i.d. N(0, sigma_small^2) draw; `b_prev` only fixes the length.
Vector step_small(const Vector& b_prev, double sigma_small, Rng& rng);

Vector compose_signal(const Vector& w, const Vector& d, const Vector& b);

/// Orthonormal type-II DCT matrix (rows are basis functions).
Matrix dct_matrix(Index n);
Vector to_dct(const Matrix& theta, const Vector& x);
Vector from_dct(const Matrix& theta, const Vector& z);

/// Stationary initial state for either mode.
SignalState initial_state(const RunConfig& cfg, Rng& rng);

SignalState step_canonical(const SignalState& prev, const RunConfig& cfg, Rng& rng);

/// `theta` must be dct_matrix(cfg.n_coeffs).
SignalState step_dct_mode(const SignalState& prev, const RunConfig& cfg, const Matrix& theta, Rng& rng);

/// Dispatches on cfg.mode; `theta` is ignored in canonical mode.
SignalState step_signal(const SignalState& prev, const RunConfig& cfg, const Matrix& theta, Rng& rng);

/// Flips each bit independently with probability fault_rate.
RoiObservation observe_roi(const Vector& d_true, double fault_rate, Rng& rng);

}  // namespace rlncs
