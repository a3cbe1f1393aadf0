#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace rgrst {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct BfgsOptions {
  int max_iters = 500;
  double grad_rel_step = 1e-6;  ///< central-difference step, relative per coordinate
  double f_rel_tol = 1e-8;      ///< stop when the decrease falls below this times max(1,|f|)
  double max_step = 4.0;        ///< cap on the infinity norm of a single step
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Quasi-Newton minimization with numerical gradients and backtracking Armijo
/// line search. Non-finite objective values are treated as +inf and rejected
/// by the line search. The returned f never exceeds f(x0).
BfgsResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts = {});

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                   int* evaluations = nullptr);

/// Central-difference Hessian with per-coordinate steps rel_step*max(1,|x_i|);
/// the mixed-partial stencil is symmetric in (i, j), so the result is exactly
/// symmetric.
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

}  // namespace rgrst
