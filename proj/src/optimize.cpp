#include "rgrst/optimize.hpp"

#include <cmath>
#include <limits>

namespace rgrst {

namespace {

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                   int* evaluations) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = safe_eval(f, probe);
    probe[i] = x[i] - h;
    const double fm = safe_eval(f, probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  if (evaluations) *evaluations += static_cast<int>(2 * x.size());
  return g;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = rel_step * std::max(1.0, std::abs(x[i]));
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd p = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = x[i] + h[i];
    const double fp = f(p);
    p[i] = x[i] - h[i];
    const double fm = f(p);
    p[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      auto at = [&](double si, double sj) {
        p[i] = x[i] + si * h[i];
        p[j] = x[j] + sj * h[j];
        const double v = f(p);
        p[i] = x[i];
        p[j] = x[j];
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return H;
}

BfgsResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts) {
  BfgsResult res;
  res.x = std::move(x0);
  res.f = safe_eval(f, res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.message = "objective not finite at start";
    return res;
  }
  const Eigen::Index n = res.x.size();
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = numerical_gradient(f, res.x, opts.grad_rel_step, &res.evaluations);
  bool scaled = false;
  int small_steps = 0;

  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    Eigen::VectorXd dir = -Hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      Hinv.setIdentity();
      dir = -g;
      slope = g.dot(dir);
      if (!(slope < 0.0)) {
        res.converged = true;
        res.message = "zero gradient";
        return res;
      }
    }
    const double norm = dir.lpNorm<Eigen::Infinity>();
    double alpha = norm > opts.max_step ? opts.max_step / norm : 1.0;

    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      x_new = res.x + alpha * dir;
      f_new = safe_eval(f, x_new);
      ++res.evaluations;
      if (f_new <= res.f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Gradient noise dominates near the optimum; treat as converged when the
      // predicted decrease is negligible.
      res.converged = -slope < 1e3 * opts.f_rel_tol * std::max(1.0, std::abs(res.f));
      res.message = res.converged ? "line search stalled at optimum" : "line search failed";
      return res;
    }

    const Eigen::VectorXd g_new = numerical_gradient(f, x_new, opts.grad_rel_step, &res.evaluations);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double decrease = res.f - f_new;
    res.x = x_new;
    res.f = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        Hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }

    small_steps = decrease <= opts.f_rel_tol * std::max(1.0, std::abs(res.f)) ? small_steps + 1 : 0;
    if (small_steps >= 2) {
      res.converged = true;
      res.message = "relative decrease below tolerance";
      ++res.iterations;
      return res;
    }
  }
  res.message = "iteration limit";
  return res;
}

}  // namespace rgrst
