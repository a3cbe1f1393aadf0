#pragma once

#include <functional>
#include <vector>

#include "rgrst/grid.hpp"
#include "rgrst/numeric.hpp"

namespace rgrst {

/// q(y, t): expected growth rate given the potential charge y at time t.
using RateFn = std::function<double(double y, double t)>;
/// q1(y, t): stay probability surface.
using SurfaceFn = std::function<double(double y, double t)>;
/// p0(y): initial charge density.
using DensityFn = std::function<double(double y)>;

struct OdeOptions {
  double rel_tol = 1e-10;
  std::size_t max_steps = 200000;
};

/// Charge at time t - s on the potential path that has charge y at time t:
/// solves dy/dtau = -q(y, t - tau), y(0) = y, for tau in [0, s]. Requires
/// 0 <= s <= t. Throws NumericError if the step size collapses or the
/// solution leaves the finite range.
double gtilde_solve(const RateFn& q, double y, double t, double s, const OdeOptions& opts = {});

/// Forward flow: charge at time t + s of the path that has charge y at time t.
double gtilde_inverse(const RateFn& q, double y, double t, double s, const OdeOptions& opts = {});

/// d gtilde / dy by central differences with step 1e-5*max(1, y). The three
/// trajectories are integrated as one system so they share a step sequence.
double gtilde_dy(const RateFn& q, double y, double t, double s, const OdeOptions& opts = {});

/// p_tilde(y, t) = dg/dy(y,t,t) * p0(g(y,t,t)).
double p_tilde_general(const RateFn& q, const DensityFn& p0, double y, double t, const OdeOptions& opts = {});

/// p_tilde * (-dq1/dy * q - dq1/dt) with the partials of q1 by fourth-order
/// finite differences (one-sided near t = 0). Throws ModelValidityError when
/// the value is below -1e-9; small negative noise above that is returned as 0.
double joint_density_general(const RateFn& q, const SurfaceFn& q1, const DensityFn& p0, double y, double t,
                             const OdeOptions& opts = {});

/// Initial density and stay surface reconstructed from a target joint density.
/// Both are tabulated on the target's axes; p0() and q1() interpolate in ln y
/// (and t), clamping outside the grid.
struct CalibrationResult {
  std::vector<double> y_grid;
  std::vector<double> p0_values;
  DensityGrid q1_grid;
  double p0_mass = 0.0;      // trapezoid integral of p0 over the y grid plus the edge below it
  std::size_t feet = 0;      // characteristics traced

  double p0(double y) const;
  double q1(double y, double t) const;

  void build_interpolants();

private:
  num::HermiteInterpolator1D p0_interp_;
  num::HermiteInterpolator2D q1_interp_;
};

struct CalibrationOptions {
  double mass_tol = 1e-3;
  OdeOptions ode{};
};

/// Builds p0 and q1 for which the general joint density reproduces `target`.
/// Each characteristic is traced from its initial charge x with its Jacobian;
/// p0(x) is the integral of target*Jacobian along it and q1 is one minus the
/// cumulative share of that integral. The target is interpolated in ln y,
/// held flat below the grid and zero above it. Throws ParameterError when the
/// target is negative, does not integrate to 1 or q(0, t) != 0, and
/// CalibrationError when the target has no mass.
CalibrationResult calibrate_from_target(const DensityGrid& target, const RateFn& q,
                                        const CalibrationOptions& opts = {});

/// Mass of a grid density: trapezoid in ln y (with the y factor) and t, plus
/// the strip below the first y node treated as flat.
double grid_mass(const DensityGrid& g);

}  // namespace rgrst
