#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rgrst {

/// One Coxian component. s holds 2d-1 unconstrained reals: s[2i] is the log
/// of the i-th total rate, s[2i+1] the log of the forward rate i -> i+1.
struct CoxianParams {
  int d = 1;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(1);

  CoxianParams() = default;
  CoxianParams(int dim, Eigen::VectorXd raw) : d(dim), s(std::move(raw)) {}
  /// d = 1 component with rate exp(s0).
  static CoxianParams exponential(double s0);
};

/// Upper-bidiagonal generator with S_ii = -exp(s_{2i-1}), S_{i,i+1} = exp(s_{2i})
/// (1-based). Throws ParameterError on a length mismatch.
Eigen::MatrixXd build_generator(const CoxianParams& p);

/// True when every row sum is <= 0, i.e. all exit rates are nonnegative.
bool generator_valid(const Eigen::MatrixXd& S);

/// Exit-rate vector -S 1.
Eigen::VectorXd exit_rates(const Eigen::MatrixXd& S);

/// exp(S t) by scaling and squaring around a Taylor core.
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& S, double t);

/// e_1 exp(S t) split as exp(log_scale) * row, with row of order one. The
/// shift is the largest diagonal entry of S, so nothing under/overflows for
/// large t.
struct PhaseRow {
  double log_scale = 0.0;
  Eigen::RowVectorXd row;
};
PhaseRow phase_row(const Eigen::MatrixXd& S, double t);

/// Survival e1 e^{St} 1 and its derivative e1 e^{St} S 1, both carrying the
/// common factor exp(log_scale).
struct PhaseTerms {
  double log_scale = 0.0;
  double survival = 1.0;
  double derivative = 0.0;
  double survival_value() const;
  double derivative_value() const;
};
PhaseTerms phase_terms(const Eigen::MatrixXd& S, double t);

/// phase_terms at each time of a sorted (non-decreasing) sequence, propagating
/// the row vector across gaps instead of restarting from t = 0.
std::vector<PhaseTerms> phase_terms_sorted(const Eigen::MatrixXd& S, std::span<const double> times);

double ph_survival(const CoxianParams& p, double t);
double ph_pdf(const CoxianParams& p, double t);
double ph_cdf(const CoxianParams& p, double t);

struct PhFitOptions {
  int n_starts = 8;
  std::uint64_t seed = 1;
  int max_iters = 500;
  /// Keep invalid (positive row sum) generators out of the final answer. A
  /// start whose raw optimum is invalid is projected back and re-solved.
  bool require_valid = true;
};

struct PhStartRecord {
  Eigen::VectorXd start;
  double start_log_likelihood = 0.0;
  double unconstrained_log_likelihood = 0.0;  ///< optimum of the raw-s search
  double log_likelihood = 0.0;                ///< final value, after projection if any
  bool valid = false;
  bool projected = false;  ///< raw optimum was invalid and was re-solved inside the valid set
  bool converged = false;
  int iterations = 0;
};

struct PhFitResult {
  CoxianParams params;
  double log_likelihood = 0.0;
  bool valid = false;
  int best_start = -1;
  std::vector<PhStartRecord> starts;
};

/// Sum of log ph_pdf over the sample; -inf when any density is nonpositive.
double ph_log_likelihood(const CoxianParams& p, std::span<const double> samples);

/// Multi-start maximum likelihood on the raw s vector. Throws DataError for an
/// empty or nonpositive sample and OptimizationError when no start produces a
/// finite (and, if required, valid) optimum.
PhFitResult ph_fit_mle(std::span<const double> samples, int d, const PhFitOptions& opts = {});

struct LognormalFit {
  double mu = 0.0;
  double sigma = 0.0;
  double log_likelihood = 0.0;
};

/// Moment estimates of log-samples (population sd). Throws DataError on any
/// nonpositive sample.
LognormalFit lognormal_fit(std::span<const double> samples);

}  // namespace rgrst
