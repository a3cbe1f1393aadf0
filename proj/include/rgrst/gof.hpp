#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgrst/design.hpp"
#include "rgrst/model.hpp"

namespace rgrst {

/// Uniform partition of [lo, hi) into `bins` cells.
struct Partition {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;

  double width() const { return (hi - lo) / bins; }
  double edge(int i) const { return lo + (hi - lo) * i / bins; }
  /// Cell index, or -1 outside [lo, hi). The upper edge hi belongs to the last cell.
  int index(double x) const;
  void validate() const;

  /// "lo:hi:bins"; throws ParameterError on bad text.
  static Partition parse(std::string_view text);
};

/// Product partition; cells are ordered x-major.
struct Partition2D {
  Partition x, y;
};

/// Default partitions: log-charge residual on [-10, 10] in 200 cells and
/// rescaled LOS on [0, 30] in 30 cells.
inline Partition charge_partition() { return {-10.0, 10.0, 200}; }
inline Partition los_partition() { return {0.0, 30.0, 30}; }

struct ChiSquareResult {
  double statistic_standard = 0.0;    // sum (O - E)^2 / E over the merged cells
  double statistic_normalized = 0.0;  // statistic_standard / n
  int dof = 0;
  double p_value = 1.0;
  std::size_t n = 0;
  int cells_used = 0;     // after merging, including the overflow cell
  int cells_merged = 0;   // cells folded into a neighbour
  double overflow_expected = 0.0;
  std::size_t overflow_observed = 0;
};

enum class ExpectedRule { Quadrature, Midpoint };

struct ChiSquareOptions {
  ExpectedRule rule = ExpectedRule::Quadrature;
  int fitted_params = 0;           // subtracted from the degrees of freedom
  double merge_threshold = 1e-12;  // cells with E < threshold * n are merged
};

/// Pearson test of samples against a normalized density on a partition. Mass
/// outside the partition forms an overflow cell. Cells with too little
/// expected mass are merged left to right into the next cell (the last one
/// into its predecessor). dof = cells - 1 - fitted_params; p-values are
/// upper chi-square tails (1 when dof <= 0). Throws RangeError when the
/// density puts no mass on the partition and DataError on an empty sample.
ChiSquareResult pearson_chisquare(std::span<const double> samples, const std::function<double(double)>& density,
                                  const Partition& part, const ChiSquareOptions& opts = {});

/// Two-dimensional version; expected counts use a 6 x 6 Gauss-Legendre rule
/// per cell (or the midpoint rule).
ChiSquareResult pearson_chisquare(std::span<const double> xs, std::span<const double> ys,
                                  const std::function<double(double, double)>& density, const Partition2D& part,
                                  const ChiSquareOptions& opts = {});

/// Gaussian kernel density estimate on a grid. Throws DataError on an empty
/// sample and ParameterError on a nonpositive bandwidth.
std::vector<double> kde_gaussian(std::span<const double> samples, double bandwidth, std::span<const double> grid);

/// Product-kernel estimate on gx x gy, row-major (x outer).
std::vector<double> kde_gaussian_2d(std::span<const double> xs, std::span<const double> ys, double bx, double by,
                                    std::span<const double> gx, std::span<const double> gy);

/// Default kernel widths for log-charge and LOS.
inline constexpr double kKdeChargeWidth = 0.15;
inline constexpr double kKdeLosWidth = 1.0;

/// Residual pairs: zeta_Y = ln y - x . beta_charge and t / exp(x' . beta_los).
struct Residuals {
  std::vector<double> log_charge;
  std::vector<double> los;
};

Residuals residual_transform(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                             const Eigen::MatrixXd& Xl, const RegressionModel& model);

/// Densities of the residuals under the base process conditioned on T > 0:
/// log-charge marginal, LOS marginal and the joint density of
/// (log-charge, LOS).
struct ResidualDensities {
  explicit ResidualDensities(const RgrstParams& base);
  double log_charge(double u) const;
  double los(double t) const;
  double joint(double u, double t) const;

  RgrstModel model;
  double mass;
};

struct GofResults {
  ChiSquareResult charge;
  ChiSquareResult los;
  ChiSquareResult joint;
  bool holdout = false;
};

struct GofOptions {
  Partition charge = charge_partition();
  Partition los = los_partition();
  ChiSquareOptions chi{};
};

/// The three tests on residuals of (y, t) under the fitted model.
GofResults evaluate_fit(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                        const Eigen::MatrixXd& Xl, const RegressionModel& model, const GofOptions& opts = {});

/// Same tests on held-out data; the caller guarantees disjointness from the
/// training data, and the result is flagged as holdout.
GofResults out_sample_eval(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                           const Eigen::MatrixXd& Xl, const RegressionModel& model, const GofOptions& opts = {});

}  // namespace rgrst
