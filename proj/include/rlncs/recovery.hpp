#pragma once

#include "rlncs/core.hpp"

namespace rlncs {

struct RecoveryResult {
  Vector x_hat;
  Vector z_hat;  // set by bpdn_solve_dct only
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  // Optimality certificate. A^T dual lies in [-1, 1] elementwise and equals
  // sign(x_hat) on the support (A = phi, or phi theta^T in the DCT variant).
  // nu is the multiplier of the data constraint; when nu > 0,
  // dual = (y - A x_hat) / nu and the residual sits on the ball boundary.
  Vector dual;
  double nu = 0.0;
};

struct SolverOptions {
  int max_iterations = 5000;
};

/// min ||x||_1 subject to ||y - phi x||_2 <= mu.
///
/// Follows the piecewise-linear Lasso solution path from x = 0 downward in the
/// regularization weight, stopping at the breakpoint segment where the
/// residual norm reaches mu. Throws ParameterError for mu < 0 or when no
/// feasible point exists (y outside range(phi) with mu too small).
RecoveryResult bpdn_solve(const Matrix& phi, const Vector& y, double mu, const SolverOptions& opts = {});

/// Same problem over DCT coefficients: min ||z||_1 s.t. ||y - phi theta^T z|| <= mu,
/// with x_hat = theta^T z_hat.
RecoveryResult bpdn_solve_dct(const Matrix& phi, const Matrix& theta, const Vector& y, double mu,
                              const SolverOptions& opts = {});

/// { n : |x_hat[n]| > theta_roi }.
IndexSet extract_roi(const Vector& x_hat, double theta_roi);

}  // namespace rlncs
