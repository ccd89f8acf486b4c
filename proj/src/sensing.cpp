#include "rlncs/sensing.hpp"

#include <cmath>

namespace rlncs {

Vector allocate_energy(const Vector& eta) {
  if (eta.size() == 0) throw ParameterError("allocate_energy: empty importance vector");
  if ((eta.array() <= 0.0).any() || !eta.allFinite())
    throw ParameterError("allocate_energy: importance levels must be positive");
  const double n = static_cast<double>(eta.size());
  return (std::sqrt(n) / eta.norm()) * eta;
}

Vector importance_from_roi(const IndexSet& roi, Index n, double eta_roi, double eta_nonroi) {
  Vector eta = Vector::Constant(n, eta_nonroi);
  for (Index i : roi) {
    if (i < 0 || i >= n) throw ParameterError("importance_from_roi: index " + std::to_string(i) + " out of range");
    eta[i] = eta_roi;
  }
  return eta;
}

Matrix scale_columns(const Matrix& base, const Vector& energy) {
  if (base.cols() != energy.size()) throw ParameterError("scale_columns: size mismatch");
  Matrix phi(base.rows(), base.cols());
  for (Index j = 0; j < base.cols(); ++j) {
    const double norm = base.col(j).norm();
    if (norm == 0.0) throw ParameterError("scale_columns: zero-norm column");
    phi.col(j) = base.col(j) * (energy[j] / norm);
  }
  return phi;
}

Matrix build_matrix(Index m, Index n, const Vector& energy, Rng& rng) {
  if (m > n || m < 1) throw ParameterError("build_matrix: need 1 <= M <= N");
  if (energy.size() != n) throw ParameterError("build_matrix: energy length must equal N");
  Matrix g(m, n);
  for (Index j = 0; j < n; ++j) {
    do {
      for (Index i = 0; i < m; ++i) g(i, j) = rng.normal();
    } while (g.col(j).squaredNorm() == 0.0);
  }
  return scale_columns(g, energy);
}

Measurement measure(const Matrix& phi, const Vector& x, double snr_db, Rng& rng) {
  if (phi.cols() != x.size()) throw ParameterError("measure: dimension mismatch");
  Measurement out;
  out.y = phi * x;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  const double power = out.y.squaredNorm();
  if (power == 0.0) throw ParameterError("measure: noise level undefined for zero measurement power");
  const double m = static_cast<double>(phi.rows());
  out.sigma_n = std::sqrt(power / (m * std::pow(10.0, snr_db / 10.0)));
  for (Index i = 0; i < out.y.size(); ++i) out.y[i] += rng.normal(0.0, out.sigma_n);
  return out;
}

SensingPlan make_plan(const IndexSet& roi, const RunConfig& cfg, Rng& rng) {
  SensingPlan plan;
  plan.eta = importance_from_roi(roi, cfg.n_coeffs, cfg.eta_roi, cfg.eta_nonroi);
  plan.col_energy = allocate_energy(plan.eta);
  plan.phi = build_matrix(cfg.n_meas, cfg.n_coeffs, plan.col_energy, rng);
  return plan;
}

SensingPlan make_uniform_plan(const RunConfig& cfg, Rng& rng) {
  SensingPlan plan;
  plan.eta = Vector::Ones(cfg.n_coeffs);
  plan.col_energy = Vector::Ones(cfg.n_coeffs);
  plan.phi = build_matrix(cfg.n_meas, cfg.n_coeffs, plan.col_energy, rng);
  return plan;
}

}  // namespace rlncs
