#pragma once

#include "rlncs/core.hpp"

namespace rlncs {

/// Measurement design for one time step.
struct SensingPlan {
  Vector eta;         // importance level per coefficient
  Vector col_energy;  // column l2 norms, sum of squares equals N
  Matrix phi;         // M x N
  double sigma_n = 0.0;
};

struct Measurement {
  Vector y;
  double sigma_n = 0.0;
};

/// Column norms e_n = sqrt(N) eta_n / ||eta||_2. Throws on any eta_n <= 0.
Vector allocate_energy(const Vector& eta);

/// eta_roi on the ROI coordinates, eta_nonroi elsewhere.
Vector importance_from_roi(const IndexSet& roi, Index n, double eta_roi, double eta_nonroi);

/// Fresh i.i.d. Gaussian M x N matrix with column n rescaled to norm energy[n].
Matrix build_matrix(Index m, Index n, const Vector& energy, Rng& rng);

/// Rescales the columns of an existing base matrix to the given norms.
Matrix scale_columns(const Matrix& base, const Vector& energy);

/// y = phi x + noise with sigma_n^2 = ||phi x||^2 / (M 10^(snr/10)). An
/// infinite SNR returns the noiseless product.
Measurement measure(const Matrix& phi, const Vector& x, double snr_db, Rng& rng);

/// Importance -> energy -> matrix for a predicted ROI.
SensingPlan make_plan(const IndexSet& roi, const RunConfig& cfg, Rng& rng);

/// Uniform baseline: unit-norm columns.
SensingPlan make_uniform_plan(const RunConfig& cfg, Rng& rng);

}  // namespace rlncs
