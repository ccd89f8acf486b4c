#include "rlncs/recovery.hpp"

#include <algorithm>
#include <cmath>

namespace rlncs {

namespace {

struct ActiveSystem {
  Matrix cols;  // phi restricted to the active set
  Eigen::LDLT<Matrix> gram;
};

ActiveSystem factor(const Matrix& phi, const std::vector<Index>& active) {
  ActiveSystem sys;
  sys.cols.resize(phi.rows(), static_cast<Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) sys.cols.col(static_cast<Index>(k)) = phi.col(active[k]);
  sys.gram.compute(sys.cols.transpose() * sys.cols);
  return sys;
}

}  // namespace

RecoveryResult bpdn_solve(const Matrix& phi, const Vector& y, double mu, const SolverOptions& opts) {
  if (!(mu >= 0.0)) throw ParameterError("bpdn_solve: mu must be non-negative");
  if (phi.rows() != y.size()) throw ParameterError("bpdn_solve: dimension mismatch");
  const Index n = phi.cols();
  const double feas_tol = 1e-6 * std::max(1.0, y.norm());

  RecoveryResult res;
  res.x_hat = Vector::Zero(n);
  res.dual = Vector::Zero(y.size());

  if (y.norm() <= mu) {
    res.residual_norm = y.norm();
    res.converged = true;
    return res;
  }

  Vector corr = phi.transpose() * y;
  double lambda = corr.cwiseAbs().maxCoeff();
  if (lambda <= 0.0) throw ParameterError("bpdn_solve: infeasible, y is orthogonal to range(phi)");

  std::vector<Index> active;
  std::vector<double> sign;
  std::vector<char> in_active(static_cast<std::size_t>(n), 0);
  for (Index j = 0; j < n; ++j) {
    if (std::abs(corr[j]) >= lambda * (1.0 - 1e-12)) {
      active.push_back(j);
      sign.push_back(corr[j] > 0 ? 1.0 : -1.0);
      in_active[static_cast<std::size_t>(j)] = 1;
    }
  }

  const double tiny = 1e-14 * lambda;
  Vector x = Vector::Zero(n);
  Vector resid = y;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    res.iterations = iter;
    const ActiveSystem sys = factor(phi, active);
    const Index k = static_cast<Index>(active.size());
    Vector s(k);
    for (Index i = 0; i < k; ++i) s[i] = sign[static_cast<std::size_t>(i)];

    // Exact point on the path for this active set, and its direction as the
    // weight decreases.
    const Vector dir = sys.gram.solve(s);
    const Vector x_active = sys.gram.solve(sys.cols.transpose() * y - lambda * s);
    x.setZero();
    for (Index i = 0; i < k; ++i) x[active[static_cast<std::size_t>(i)]] = x_active[i];
    resid = y - sys.cols * x_active;
    corr = phi.transpose() * resid;

    const Vector v = sys.cols * dir;
    const Vector a = phi.transpose() * v;

    double step = lambda;
    enum class Event { End, Stop, Join, Drop } event = Event::End;

    // Residual reaches the ball: ||resid - g v||^2 = mu^2. For mu = 0 that is
    // the end of the path.
    const double vv = v.squaredNorm();
    const double rv = resid.dot(v);
    const double rr = resid.squaredNorm();
    if (mu > 0.0 && vv > 0.0 && rv > 0.0) {
      const double disc = std::max(rv * rv - vv * (rr - mu * mu), 0.0);
      if (rr - mu * mu <= 0.0 || rv * rv - vv * (rr - mu * mu) >= -1e-12 * rv * rv) {
        // smaller root, in the form that stays exact when mu is zero
        const double g = std::max(rr - mu * mu, 0.0) / (rv + std::sqrt(disc));
        if (g <= step) {
          step = g;
          event = Event::Stop;
        }
      }
    }

    std::vector<double> join_step(static_cast<std::size_t>(n), kInf);
    for (Index j = 0; j < n; ++j) {
      if (in_active[static_cast<std::size_t>(j)]) continue;
      double g = kInf;
      if (1.0 - a[j] > 1e-15) {
        const double cand = (lambda - corr[j]) / (1.0 - a[j]);
        if (cand > tiny) g = std::min(g, cand);
      }
      if (1.0 + a[j] > 1e-15) {
        const double cand = (lambda + corr[j]) / (1.0 + a[j]);
        if (cand > tiny) g = std::min(g, cand);
      }
      join_step[static_cast<std::size_t>(j)] = g;
      if (g < step) {
        step = g;
        event = Event::Join;
      }
    }

    std::vector<double> drop_step(static_cast<std::size_t>(k), kInf);
    for (Index i = 0; i < k; ++i) {
      if (dir[i] == 0.0) continue;
      const double g = -x_active[i] / dir[i];
      if (g > tiny) {
        drop_step[static_cast<std::size_t>(i)] = g;
        if (g < step) {
          step = g;
          event = Event::Drop;
        }
      }
    }

    // Joins and drops that tie with the end of the path are degenerate; finish
    // there if the current set already fits the data.
    if ((event == Event::Join || event == Event::Drop) && step >= lambda * (1.0 - 1e-9)) {
      const Vector r0 = y - sys.cols * sys.gram.solve(sys.cols.transpose() * y);
      if (r0.norm() <= mu + feas_tol) {
        step = lambda;
        event = Event::End;
      }
    }

    lambda -= step;
    if (event == Event::End || event == Event::Stop || lambda <= 0.0) {
      lambda = std::max(lambda, 0.0);
      const Vector xa = sys.gram.solve(sys.cols.transpose() * y - lambda * s);
      x.setZero();
      for (Index i = 0; i < k; ++i) x[active[static_cast<std::size_t>(i)]] = xa[i];
      resid = y - sys.cols * xa;
      res.x_hat = x;
      res.residual_norm = resid.norm();
      res.nu = lambda;
      res.dual = lambda > 0.0 ? Vector(resid / lambda) : v;
      if (res.residual_norm > mu + feas_tol) {
        if (lambda <= 0.0) throw ParameterError("bpdn_solve: infeasible, no x satisfies the residual bound");
        res.converged = false;
      } else {
        res.converged = true;
      }
      return res;
    }

    const double slack = 1e-10 * step + tiny;
    if (event == Event::Drop) {
      std::vector<Index> keep_idx;
      std::vector<double> keep_sign;
      for (Index i = 0; i < k; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        if (drop_step[iu] <= step + slack) {
          in_active[static_cast<std::size_t>(active[iu])] = 0;
        } else {
          keep_idx.push_back(active[iu]);
          keep_sign.push_back(sign[iu]);
        }
      }
      active = std::move(keep_idx);
      sign = std::move(keep_sign);
    } else {
      for (Index j = 0; j < n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!in_active[ju] && join_step[ju] <= step + slack) {
          const double c_new = corr[j] - step * a[j];
          active.push_back(j);
          sign.push_back(c_new > 0 ? 1.0 : -1.0);
          in_active[ju] = 1;
        }
      }
    }
    // Cannot happen on an exact path below the entry weight; bail out as
    // unconverged if rounding produces it.
    if (active.empty()) break;
  }

  res.x_hat = x;
  res.residual_norm = resid.norm();
  res.nu = lambda;
  res.dual = lambda > 0.0 ? Vector(resid / lambda) : Vector::Zero(y.size());
  res.converged = false;
  return res;
}

RecoveryResult bpdn_solve_dct(const Matrix& phi, const Matrix& theta, const Vector& y, double mu,
                              const SolverOptions& opts) {
  if (theta.rows() != phi.cols() || theta.cols() != phi.cols())
    throw ParameterError("bpdn_solve_dct: theta must be N x N");
  const Matrix effective = phi * theta.transpose();
  RecoveryResult res = bpdn_solve(effective, y, mu, opts);
  res.z_hat = std::move(res.x_hat);
  res.x_hat = theta.transpose() * res.z_hat;
  return res;
}

IndexSet extract_roi(const Vector& x_hat, double theta_roi) {
  if (!(theta_roi > 0.0)) throw ParameterError("extract_roi: threshold must be positive");
  IndexSet roi;
  for (Index n = 0; n < x_hat.size(); ++n)
    if (std::abs(x_hat[n]) > theta_roi) roi.push_back(n);
  return roi;
}

}  // namespace rlncs
