#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rgrst/numeric.hpp"
#include "rgrst/phasetype.hpp"

namespace rgrst {

struct Lognormal {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Mixture parameters: component n pairs a log-normal charge threshold with a
/// Coxian stay time, weighted by theta[n]. Charge grows at rate a*y from a
/// half-Cauchy(gamma) initial charge.
struct RgrstParams {
  std::vector<double> theta;
  std::vector<Lognormal> lognormals;
  std::vector<CoxianParams> coxians;
  double a = 1.0;
  double gamma = 1.0;

  std::size_t components() const { return theta.size(); }

  /// Throws ParameterError unless the lengths agree, theta lies on the simplex
  /// (tolerance 1e-12), sigma, a and gamma are positive and every s vector
  /// has length 2d-1.
  void validate() const;

  /// One component with a d=1 Coxian of rate exp(s).
  static RgrstParams single(double mu, double sigma, double s, double a = 1.0, double gamma = 1.0);
};

/// Parametric RGRST model with q(y) = a*y, half-Cauchy initial charge and the
/// log-normal x Coxian mixture for q1. Generators are built once; all methods
/// are const and thread-safe.
class RgrstModel {
public:
  explicit RgrstModel(RgrstParams params);

  const RgrstParams& params() const { return p_; }
  const Eigen::MatrixXd& generator(std::size_t n) const { return gens_[n]; }

  double q_tilde(double y) const;
  double initial_density(double y) const;
  double log_initial_density(double y) const;
  double p_tilde(double y, double t) const;
  double log_p_tilde(double y, double t) const;

  /// q1(y, t); y = 0 returns the limit sum theta_n S_n(t).
  double q1_tilde(double y, double t) const;

  /// (dq1/dy, dq1/dt).
  std::pair<double, double> q1_partials(double y, double t) const;

  /// p_tilde(y,t) * (-dq1/dy * a*y - dq1/dt). Large t is handled through the
  /// log-scaled phase terms.
  double joint_density(double y, double t) const;

  /// log of joint_density evaluated in the log domain (stable far in the
  /// tails); -inf when the density is not positive.
  double log_joint_density(double y, double t) const;

  /// Density of Y_t for the process stopped at T: mass already stopped below t
  /// plus the surviving part q1 * p_tilde.
  double time_dependent_density(double y, double t) const;

  double marginal_los(double t) const;
  double marginal_charge(double y) const;

  /// Coxian-mixture approximation to marginal_los.
  double ph_mixture_los_approx(double t) const;

  /// Constant C in |marginal_los - approx| <= C exp(-a t).
  double ph_approx_bound_constant() const;

  /// Probability of T > 0, i.e. the integral of p0(y) q1(y, 0). Computed by
  /// adaptive quadrature in ln y.
  double total_mass() const;

  /// Same quantity by a fixed Gauss-Legendre rule over the log-normal
  /// variable. Smooth in the parameters; used inside likelihoods.
  double total_mass_smooth() const;

  /// E[ln Y_T | T = t]; throws ConditioningError when the slice mass is
  /// below min_mass.
  double conditional_mean_log_charge(double t, double min_mass = 1e-12) const;

  /// E[ln T | Y_T = y].
  double conditional_mean_log_los(double y, double min_mass = 1e-12) const;

  /// Slice masses (integral of the joint density over the other variable).
  double slice_mass_at_los(double t) const { return marginal_los(t); }
  double slice_mass_at_charge(double y) const { return marginal_charge(y); }

  num::QuadOptions quad_options{1e-10, 0.0, 12};
  num::TruncationOptions trunc_options{};

private:
  struct Component {
    double log_theta;
    double mu;
    double sigma;
    double scale;  // largest diagonal entry of S_n (log-scale rate)
    Eigen::VectorXd row_sums;
  };

  PhaseTerms terms(std::size_t n, double t) const;

  RgrstParams p_;
  std::vector<Eigen::MatrixXd> gens_;
  std::vector<Component> comps_;
};

}  // namespace rgrst
