#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgrst/cohort.hpp"
#include "rgrst/design.hpp"
#include "rgrst/gof.hpp"
#include "rgrst/model.hpp"

namespace rgrst {

/// Coxian dimension per mixture component, written "N:d1,...,dN".
struct ModelDims {
  std::vector<int> d{1};

  std::size_t components() const { return d.size(); }
  std::string str() const;
  /// Throws ParameterError on malformed text or a count mismatch.
  static ModelDims parse(std::string_view text);
};

/// Observations with their design matrices.
struct FitData {
  Eigen::VectorXd y;  // total charge
  Eigen::VectorXd t;  // LOS
  Eigen::MatrixXd Xc;
  Eigen::MatrixXd Xl;
  std::vector<std::string> charge_names;
  std::vector<std::string> los_names;
  std::size_t dropped = 0;  // records with T <= 0 or a nonpositive charge
};

FitData make_fit_data(const Cohort& c, const DesignSchema& schema);

inline constexpr double kLogLikSentinel = -1e300;

/// Sum over records of log P(y e^{-c}, t e^{-tau}) - c - tau with
/// c = x . beta_charge and tau = x' . beta_los, P the base joint density.
/// Returns kLogLikSentinel when any term is not finite. Throws DataError on
/// nonpositive or non-finite observations and non-finite covariates.
double log_likelihood(const RegressionModel& m, const FitData& data);

/// log_likelihood minus n log m(theta), the likelihood given T > 0.
double conditional_log_likelihood(const RegressionModel& m, const FitData& data);

/// Weights exp(z_i) / sum exp(z_j), renormalized so they sum to one.
std::vector<double> softmax(std::span<const double> z);

/// Free-parameter vector: N-1 logits (the first is fixed at 0), then per
/// component mu, log sigma and the raw Coxian s, then the charge and LOS
/// coefficients. a and gamma stay at 1.
class ParamLayout {
public:
  ParamLayout(ModelDims dims, int n_charge, int n_los);

  int size() const { return size_; }
  RegressionModel unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(const RegressionModel& m) const;
  std::vector<std::string> names() const;
  const ModelDims& dims() const { return dims_; }
  int charge_offset() const { return size_ - n_charge_ - n_los_; }
  int los_offset() const { return size_ - n_los_; }

private:
  ModelDims dims_;
  int n_charge_, n_los_, size_;
};

enum class FitObjective {
  Conditional,    // default: likelihood given T > 0
  Unconditional,  // raw sum of log densities
};

struct FitConfig {
  int n_starts = 16;
  int max_iters = 500;
  double grad_step = 1e-6;
  double f_rel_tol = 1e-8;
  double hessian_step = 1e-4;
  std::uint64_t seed = 1;
  FitObjective objective = FitObjective::Conditional;
  bool inference = true;
};

struct StartRecord {
  int index = 0;
  double start_log_likelihood = 0.0;  // objective value, not divided by n
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct Estimate {
  std::string name;
  double value = 0.0;
  double se = std::nan("");
  double p_value = std::nan("");
};

struct FitReport {
  ModelDims dims;
  FitObjective objective = FitObjective::Conditional;
  RegressionModel model;
  Eigen::VectorXd free_params;
  std::vector<std::string> free_names;

  double log_likelihood = 0.0;              // raw sum of log densities
  double conditional_log_likelihood = 0.0;  // minus n log m
  double total_mass = 0.0;
  std::size_t n = 0;
  std::size_t dropped = 0;
  int k = 0;
  double aic = 0.0;
  double bic = 0.0;

  std::vector<Estimate> base_estimates;  // theta_n, mu_n, sigma_n, s_n_j
  std::vector<Estimate> charge_coefs;
  std::vector<Estimate> los_coefs;
  std::vector<bool> generator_valid;

  bool hessian_pd = false;
  bool pseudo_inverse = false;
  double hessian_asymmetry = 0.0;
  Eigen::MatrixXd covariance;  // free-parameter space

  std::vector<StartRecord> starts;
  int best_start = -1;

  std::optional<GofResults> gof;
  std::optional<GofResults> holdout_gof;

  /// Log-likelihood the fit maximized.
  double objective_log_likelihood() const;
};

/// Multi-start BFGS maximum likelihood. Starts run in parallel; the winner is
/// the best objective with ties broken by start index, so the result does not
/// depend on the thread count. Throws DataError on empty data,
/// ParameterError on a bad config and OptimizationError when no start
/// reaches a finite objective.
FitReport fit(const FitData& data, const ModelDims& dims, const FitConfig& cfg = {});

/// Fills standard errors and p-values from the Hessian of the maximized
/// log-likelihood in the free parameters (pseudo-inverse when it is not
/// negative definite), mapped to natural parameters by the delta method.
void fisher_inference(FitReport& rep, const FitData& data, double step = 1e-4);

/// AIC = 2k - 2L, BIC = k ln n - 2L.
std::pair<double, double> information_criteria(double log_lik, int k, std::size_t n);

/// Charge and LOS curves at the reference covariates: f(t) = E[ln Y | T = t]
/// minus the charge intercept and g(y) = E[ln T | Y = y] minus the LOS
/// intercept. Slices below min_mass give NaN.
struct FgCurves {
  std::vector<double> t, f, y, g;
};
FgCurves estimate_fg(const RgrstParams& base, std::span<const double> t_grid, std::span<const double> y_grid,
                     double charge_intercept = 0.0, double los_intercept = 0.0, double min_mass = 1e-12);
/// Same, with the intercepts taken from the columns named "Intercept".
FgCurves estimate_fg(const FitReport& rep, std::span<const double> t_grid, std::span<const double> y_grid,
                     double min_mass = 1e-12);

/// JSON report with schema_version and a fixed key order.
std::string report_to_json(const FitReport& rep);

/// CSV `regressor,charge_coef,charge_p,los_coef,los_p`; a blank cell means the
/// regressor is absent on that side.
void write_coefficients_csv(std::ostream& os, const FitReport& rep);

std::string_view objective_name(FitObjective o);

/// Parameters of the process (e^c Y, e^tau T): a e^{-tau}, gamma e^c, mu + c
/// and every Coxian log rate minus tau.
RgrstParams scaled_params(const RgrstParams& base, double c, double tau);

/// Model read back from report_to_json output. Throws SchemaError when the
/// text is not a report.
struct LoadedModel {
  ModelDims dims;
  RegressionModel model;
  std::vector<std::string> charge_names;
  std::vector<std::string> los_names;
};
LoadedModel load_report_model(const std::string& json_text);

}  // namespace rgrst
