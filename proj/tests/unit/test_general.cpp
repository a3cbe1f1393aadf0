#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "../common/fixtures.hpp"
#include "rgrst/error.hpp"
#include "rgrst/general.hpp"
#include "rgrst/grid.hpp"
#include "rgrst/model.hpp"

using namespace rgrst;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("characteristic flow of a linear rate", "[general]") {
  const double a = 0.7;
  RateFn q = [a](double y, double) { return a * y; };
  for (double y : {1e-3, 0.5, 3.0, 800.0}) {
    for (double s : {0.0, 0.3, 2.0, 9.0}) {
      CHECK_THAT(gtilde_solve(q, y, 10.0, s), WithinRel(y * std::exp(-a * s), 1e-8));
      CHECK_THAT(gtilde_inverse(q, y, 0.0, s), WithinRel(y * std::exp(a * s), 1e-8));
    }
    CHECK(gtilde_solve(q, y, 4.0, 0.0) == y);
  }
}

TEST_CASE("characteristic flow of a time-dependent rate", "[general]") {
  // dy/dtau = -b y / (1 + t - tau) gives g(y,t,s) = y ((1 + t - s) / (1 + t))^b.
  const double b = 1.3;
  RateFn q = [b](double y, double t) { return b * y / (1.0 + t); };
  for (double y : {0.2, 7.0}) {
    for (double t : {0.5, 4.0, 12.0}) {
      for (double s : {0.1 * t, 0.5 * t, t}) {
        CHECK_THAT(gtilde_solve(q, y, t, s), WithinRel(y * std::pow((1.0 + t - s) / (1.0 + t), b), 1e-8));
      }
      CHECK_THAT(gtilde_inverse(q, gtilde_solve(q, y, t, t), 0.0, t), WithinRel(y, 1e-7));
      CHECK_THAT(gtilde_dy(q, y, t, t), WithinRel(std::pow(1.0 / (1.0 + t), b), 1e-7));
    }
  }
}

TEST_CASE("general flow rejects bad inputs", "[general]") {
  RateFn q = [](double y, double) { return y; };
  CHECK_THROWS_AS(gtilde_solve(q, 1.0, 1.0, 2.0), ParameterError);
  CHECK_THROWS_AS(gtilde_solve(q, 1.0, 1.0, -0.1), ParameterError);
  RateFn blow = [](double y, double) { return y * y * y; };
  CHECK_THROWS_AS(gtilde_inverse(blow, 10.0, 0.0, 5.0), NumericError);
}

TEST_CASE("general pathway specializes to the parametric density", "[general]") {
  for (std::uint64_t seed : {3u, 4u}) {
    RgrstModel m(testing::random_params(seed));
    const double a = m.params().a;
    RateFn q = [a](double y, double) { return a * y; };
    SurfaceFn q1 = [&](double y, double t) { return m.q1_tilde(y, t); };
    DensityFn p0 = [&](double y) { return m.initial_density(y); };
    double worst = 0.0;
    for (double y : log_space(1e-2, 1e3, 50)) {
      for (double t : lin_space(0.0, 10.0, 50)) {
        const double ref = m.joint_density(y, t);
        const double got = joint_density_general(q, q1, p0, y, t);
        worst = std::max(worst, std::abs(got - ref) / std::max(std::abs(ref), 1e-6));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("general density flags invalid decision surfaces", "[general]") {
  RateFn q = [](double y, double) { return y; };
  DensityFn p0 = [](double y) { return 2.0 / (M_PI * (1.0 + y * y)); };
  SurfaceFn rising = [](double y, double t) { return std::exp(-y) * (0.1 + 0.8 * std::tanh(t)); };
  CHECK_THROWS_AS(joint_density_general(q, rising, p0, 0.3, 0.2), ModelValidityError);
  SurfaceFn ok = [](double y, double t) { return std::exp(-y - t); };
  CHECK(joint_density_general(q, ok, p0, 0.3, 0.0) >= 0.0);
}

TEST_CASE("calibration reproduces a parametric target", "[general]") {
  const auto params = testing::reference_point();
  RgrstModel m(params);
  const double mass = m.total_mass();
  auto target = DensityGrid::zeros(log_space(1e-2, 1e4, 256), lin_space(0.0, 15.0, 301));
  for (std::size_t i = 0; i < target.ny(); ++i)
    for (std::size_t k = 0; k < target.nt(); ++k)
      target.at(i, k) = m.joint_density(target.y_grid[i], target.t_grid[k]) / mass;

  RateFn q = [&](double y, double) { return params.a * y; };
  const auto cal = calibrate_from_target(target, q);

  // Conditioning on T > 0 moves the atom's mass out of the initial density.
  double p0_err = 0.0;
  for (std::size_t i = 0; i < target.ny(); ++i) {
    const double y = target.y_grid[i];
    p0_err = std::max(p0_err, std::abs(cal.p0_values[i] - m.initial_density(y) * m.q1_tilde(y, 0.0) / mass));
  }
  CHECK(p0_err < 1e-2);
  CHECK_THAT(cal.p0_mass, WithinAbs(1.0, 1e-2));

  for (double v : cal.q1_grid.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (std::size_t i = 0; i < target.ny(); ++i) CHECK(cal.q1_grid.at(i, 0) == 1.0);

  SurfaceFn q1 = [&](double y, double t) { return cal.q1(y, t); };
  DensityFn p0 = [&](double y) { return cal.p0(y); };
  double f_err = 0.0;
  for (std::size_t i = 0; i < target.ny(); i += 5)
    for (std::size_t k = 0; k < target.nt(); k += 6)
      f_err = std::max(f_err, std::abs(joint_density_general(q, q1, p0, target.y_grid[i], target.t_grid[k]) -
                                       target.at(i, k)));
  CHECK(f_err < 1e-2);
}

TEST_CASE("calibration input checks", "[general]") {
  RateFn q = [](double y, double) { return y; };
  auto empty = DensityGrid::zeros(log_space(1e-2, 10.0, 20), lin_space(0.0, 5.0, 11));
  CHECK_THROWS_AS(calibrate_from_target(empty, q), CalibrationError);
  auto neg = empty;
  neg.values[3] = -1.0;
  CHECK_THROWS_AS(calibrate_from_target(neg, q), ParameterError);
  RateFn shifted = [](double y, double) { return y + 1.0; };
  auto flat = empty;
  for (auto& v : flat.values) v = 1.0;
  CHECK_THROWS_AS(calibrate_from_target(flat, shifted), ParameterError);
}
