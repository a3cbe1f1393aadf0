#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rgrst/cohort.hpp"
#include "rgrst/design.hpp"
#include "rgrst/model.hpp"
#include "rgrst/rng.hpp"

namespace rgrst {

/// Half-Cauchy(gamma) by inversion: gamma * tan(pi u / 2).
double initial_from_uniform(double gamma, double u);
double sample_initial(double gamma, StreamRng& rng);

struct StoppingResult {
  double T = 0.0;
  bool censored = false;
  bool converged = true;  // false if bisection hit its iteration cap
  int iterations = 0;
};

/// T = inf{s >= 0 : q1(y0 e^{a s}, s) < omega}, by bracket doubling from [0, 1]
/// and bisection to 1e-9 days (at most 200 halvings). T = 0 when
/// q1(y0, 0) < omega. A stop after t_max (or none within 10 t_max) is reported
/// as censored at t_max.
StoppingResult stopping_time(double omega, double y0, const RgrstModel& model, double t_max = 365.0);

/// Categorical covariate distributions; defaults are the population shares of
/// a large state inpatient database.
struct CovariateSampler {
  std::vector<double> mdc;        // weights for codes 0..25
  std::vector<double> severity;   // weights for codes 0..4
  std::vector<double> mortality;  // weights for codes 1..4
  static CovariateSampler population();
};

struct SimRegression {
  Eigen::VectorXd beta_charge;
  Eigen::VectorXd beta_los;
  DesignSchema schema;
  CovariateSampler sampler = CovariateSampler::population();
};

struct SimConfig {
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  RgrstParams params;
  std::optional<SimRegression> regression{};
  double t_max = 365.0;
};

struct SimRecord {
  double y0 = 0.0;
  double omega = 0.0;
  double T = 0.0;
  double Y_T = 0.0;
  bool censored = false;
  PatientRecord codes{};  // covariate codes; charge/LOS fields unused
};

/// One record per path, ordered by path index. Path i draws (u, omega) from
/// stream (seed, i, 0) and covariates from (seed, i, 1), so results do not
/// depend on the thread count. With a regression the baseline draws are
/// scaled: Y_T and y0 by exp(x . beta_charge), T by exp(x' . beta_los).
std::vector<SimRecord> simulate_cohort(const SimConfig& cfg);

/// Covariate columns the config emits (none without a regression).
CovariateColumns simulated_columns(const SimConfig& cfg);

/// CSV `y0,omega,T,Y_T,censored[,mdc][,severity][,mortality]`.
void write_simulation(std::ostream& os, const std::vector<SimRecord>& recs, const CovariateColumns& cols);

/// Uncensored records with T > 0 as a cohort.
Cohort to_cohort(const std::vector<SimRecord>& recs, const CovariateColumns& cols);

}  // namespace rgrst
