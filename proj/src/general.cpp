#include "rgrst/general.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <string>

#include "rgrst/error.hpp"
#include "rgrst/parallel.hpp"

namespace rgrst {

namespace odeint = boost::numeric::odeint;

namespace {

// Relative error control only; the tiny absolute term guards against 0/0.
constexpr double kAbsTol = 1e-300;

// Central-difference step for derivatives in y, kept inside (0, inf).
double y_step(double y) { return std::min(1e-5 * std::max(1.0, y), 0.5 * y); }

template <std::size_t N, class Sys>
void integrate(Sys sys, std::array<double, N>& x, double t0, double t1, const OdeOptions& opts) {
  if (t1 == t0) return;
  std::size_t calls = 0;
  auto guarded = [&](const std::array<double, N>& s, std::array<double, N>& ds, double tau) {
    if (++calls > 12 * opts.max_steps) throw NumericError("ODE: step budget exhausted (step size collapse)");
    sys(s, ds, tau);
    for (std::size_t i = 0; i < N; ++i)
      if (!std::isfinite(s[i]) || !std::isfinite(ds[i])) throw NumericError("ODE: solution left the finite range");
  };
  auto stepper = odeint::make_controlled(kAbsTol, opts.rel_tol, odeint::runge_kutta_dopri5<std::array<double, N>>());
  try {
    odeint::integrate_adaptive(stepper, guarded, x, t0, t1, 1e-3 * (t1 - t0));
  } catch (const odeint::odeint_error& e) {
    throw NumericError(std::string("ODE: ") + e.what());
  }
}

void check_flow_args(double y, double t, double s, bool backward) {
  if (!std::isfinite(y) || !std::isfinite(t) || !std::isfinite(s)) throw ParameterError("gtilde: non-finite argument");
  if (s < 0.0) throw ParameterError("gtilde: s must be nonnegative");
  if (backward && s > t) throw ParameterError("gtilde: s must not exceed t");
}

// Backward flow of y - h, y, y + h sharing one step sequence.
std::array<double, 3> backward3(const RateFn& q, double y, double h, double t, double s, const OdeOptions& opts) {
  std::array<double, 3> x{y - h, y, y + h};
  auto sys = [&](const std::array<double, 3>& v, std::array<double, 3>& dv, double tau) {
    for (int i = 0; i < 3; ++i) dv[i] = -q(v[i], t - tau);
  };
  integrate<3>(sys, x, 0.0, s, opts);
  return x;
}

}  // namespace

double gtilde_solve(const RateFn& q, double y, double t, double s, const OdeOptions& opts) {
  check_flow_args(y, t, s, true);
  std::array<double, 1> x{y};
  integrate<1>([&](const std::array<double, 1>& v, std::array<double, 1>& dv, double tau) { dv[0] = -q(v[0], t - tau); },
               x, 0.0, s, opts);
  return x[0];
}

double gtilde_inverse(const RateFn& q, double y, double t, double s, const OdeOptions& opts) {
  check_flow_args(y, t, s, false);
  std::array<double, 1> x{y};
  integrate<1>([&](const std::array<double, 1>& v, std::array<double, 1>& dv, double tau) { dv[0] = q(v[0], t + tau); },
               x, 0.0, s, opts);
  return x[0];
}

double gtilde_dy(const RateFn& q, double y, double t, double s, const OdeOptions& opts) {
  check_flow_args(y, t, s, true);
  const double h = y_step(y);
  const auto x = backward3(q, y, h, t, s, opts);
  return (x[2] - x[0]) / (2.0 * h);
}

double p_tilde_general(const RateFn& q, const DensityFn& p0, double y, double t, const OdeOptions& opts) {
  check_flow_args(y, t, t, true);
  const double h = y_step(y);
  const auto x = backward3(q, y, h, t, t, opts);
  return (x[2] - x[0]) / (2.0 * h) * p0(x[1]);
}

double joint_density_general(const RateFn& q, const SurfaceFn& q1, const DensityFn& p0, double y, double t,
                             const OdeOptions& opts) {
  if (!(y > 0.0) || !(t >= 0.0)) throw ParameterError("joint_density_general: need y > 0 and t >= 0");
  const double hy = 1e-3 * y;
  const double dy = (-q1(y + 2 * hy, t) + 8 * q1(y + hy, t) - 8 * q1(y - hy, t) + q1(y - 2 * hy, t)) / (12 * hy);
  const double ht = 1e-3 * std::max(1.0, t);
  double dt;
  if (t >= 2 * ht) {
    dt = (-q1(y, t + 2 * ht) + 8 * q1(y, t + ht) - 8 * q1(y, t - ht) + q1(y, t - 2 * ht)) / (12 * ht);
  } else {
    dt = (-25 * q1(y, t) + 48 * q1(y, t + ht) - 36 * q1(y, t + 2 * ht) + 16 * q1(y, t + 3 * ht) -
          3 * q1(y, t + 4 * ht)) /
         (12 * ht);
  }
  const double v = p_tilde_general(q, p0, y, t, opts) * (-dy * q(y, t) - dt);
  if (v < -1e-9)
    throw ModelValidityError("joint_density_general: negative density " + std::to_string(v) + " at y=" +
                             std::to_string(y) + ", t=" + std::to_string(t) +
                             " (q1 must be non-increasing along characteristics)");
  return std::max(v, 0.0);
}

double CalibrationResult::p0(double y) const { return p0_interp_(std::log(std::max(y, 1e-300))); }

double CalibrationResult::q1(double y, double t) const {
  return std::clamp(q1_interp_(std::log(std::max(y, 1e-300)), t), 0.0, 1.0);
}

void CalibrationResult::build_interpolants() {
  std::vector<double> ly(y_grid.size());
  std::transform(y_grid.begin(), y_grid.end(), ly.begin(), [](double y) { return std::log(y); });
  p0_interp_ = num::HermiteInterpolator1D(ly, p0_values);
  q1_interp_ = num::HermiteInterpolator2D(ly, q1_grid.t_grid, q1_grid.values);
}

double grid_mass(const DensityGrid& g) {
  std::vector<double> col(g.nt(), 0.0);
  for (std::size_t k = 0; k < g.nt(); ++k) {
    double acc = g.at(0, k) * g.y_grid[0];
    for (std::size_t i = 1; i < g.ny(); ++i) {
      const double w = std::log(g.y_grid[i] / g.y_grid[i - 1]);
      acc += 0.5 * w * (g.at(i, k) * g.y_grid[i] + g.at(i - 1, k) * g.y_grid[i - 1]);
    }
    col[k] = acc;
  }
  double mass = 0.0;
  for (std::size_t k = 1; k < g.nt(); ++k) mass += 0.5 * (g.t_grid[k] - g.t_grid[k - 1]) * (col[k] + col[k - 1]);
  return mass;
}

CalibrationResult calibrate_from_target(const DensityGrid& target, const RateFn& q, const CalibrationOptions& opts) {
  target.validate();
  if (target.ny() < 3 || target.nt() < 2) throw ParameterError("calibrate_from_target: grid too small");
  if (target.t_grid.front() != 0.0) throw ParameterError("calibrate_from_target: t grid must start at 0");
  for (double v : target.values)
    if (v < 0.0) throw ParameterError("calibrate_from_target: negative target density");
  for (double t : target.t_grid)
    if (std::abs(q(0.0, t)) > 1e-12) throw ParameterError("calibrate_from_target: q(0, t) must vanish");
  if (std::all_of(target.values.begin(), target.values.end(), [](double v) { return v == 0.0; }))
    throw CalibrationError("calibrate_from_target: target has no mass");
  const double mass = grid_mass(target);
  if (std::abs(mass - 1.0) > opts.mass_tol)
    throw ParameterError("calibrate_from_target: target integrates to " + std::to_string(mass) + ", not 1");

  const std::size_t ny = target.ny(), nt = target.nt();
  const double t_max = target.t_grid.back();
  const double y_min = target.y_grid.front();
  std::vector<double> ly(ny);
  for (std::size_t i = 0; i < ny; ++i) ly[i] = std::log(target.y_grid[i]);

  // Feet: the y grid plus a log-uniform extension down to the foot whose
  // characteristic reaches y_min at t_max.
  const double step = (ly.back() - ly.front()) / static_cast<double>(ny - 1);
  const double lowest = gtilde_solve(q, y_min, t_max, t_max, opts.ode);
  if (!(lowest > 0.0)) throw CalibrationError("calibrate_from_target: characteristics reach y = 0 within the horizon");
  std::vector<double> feet;
  for (double u = ly.front() - step; u > std::log(lowest) - step; u -= step) feet.push_back(std::exp(u));
  const std::size_t ext = feet.size();
  std::reverse(feet.begin(), feet.end());
  feet.insert(feet.end(), target.y_grid.begin(), target.y_grid.end());
  const std::size_t nf = feet.size();

  // Target columns interpolated in ln y.
  std::vector<num::HermiteInterpolator1D> cols(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> v(ny);
    for (std::size_t i = 0; i < ny; ++i) v[i] = target.at(i, k);
    cols[k] = num::HermiteInterpolator1D(ly, v);
  }
  auto f_at = [&](double y, std::size_t k) {
    const double u = std::log(y);
    if (u > ly.back()) return 0.0;
    return std::max(0.0, cols[k](u));
  };

  // Trace each characteristic with its Jacobian dY/dx and accumulate the
  // target mass carried along it.
  std::vector<double> logY(nf * nt), H(nf * nt);
  parallel_for(nf, [&](std::size_t j) {
    std::array<double, 2> x{feet[j], 1.0};
    auto sys = [&](const std::array<double, 2>& s, std::array<double, 2>& ds, double tau) {
      const double h = y_step(s[0]);
      ds[0] = q(s[0], tau);
      ds[1] = (q(s[0] + h, tau) - q(s[0] - h, tau)) / (2.0 * h) * s[1];
    };
    double prev_h = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      if (k > 0) integrate<2>(sys, x, target.t_grid[k - 1], target.t_grid[k], opts.ode);
      const double hk = f_at(x[0], k) * x[1];
      if (k > 0) acc += 0.5 * (target.t_grid[k] - target.t_grid[k - 1]) * (hk + prev_h);
      prev_h = hk;
      logY[j * nt + k] = std::log(x[0]);
      H[j * nt + k] = acc;
    }
  });

  CalibrationResult out;
  out.feet = nf;
  out.y_grid = target.y_grid;
  out.p0_values.resize(ny);
  for (std::size_t i = 0; i < ny; ++i) out.p0_values[i] = H[(ext + i) * nt + nt - 1];
  out.p0_mass = out.p0_values[0] * y_min;
  for (std::size_t i = 1; i < ny; ++i)
    out.p0_mass += 0.5 * (ly[i] - ly[i - 1]) *
                   (out.p0_values[i] * target.y_grid[i] + out.p0_values[i - 1] * target.y_grid[i - 1]);

  // q1 = 1 - (share of the characteristic's mass released by t); a
  // characteristic without mass keeps q1 = 1, the solution of the transport
  // equation with zero source.
  out.q1_grid = DensityGrid::zeros(target.y_grid, target.t_grid);
  parallel_for(nt, [&](std::size_t k) {
    std::vector<double> pos(nf), share(nf);
    for (std::size_t j = 0; j < nf; ++j) {
      pos[j] = logY[j * nt + k];
      const double total = H[j * nt + nt - 1];
      share[j] = total > 1e-300 ? std::clamp(1.0 - H[j * nt + k] / total, 0.0, 1.0) : 1.0;
    }
    num::HermiteInterpolator1D along(pos, share);
    for (std::size_t i = 0; i < ny; ++i)
      out.q1_grid.at(i, k) = k == 0 ? 1.0 : std::clamp(along(ly[i]), 0.0, 1.0);
  });
  out.build_interpolants();
  return out;
}

}  // namespace rgrst
