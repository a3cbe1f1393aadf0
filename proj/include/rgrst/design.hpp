#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rgrst/cohort.hpp"
#include "rgrst/model.hpp"

namespace rgrst {

enum class InterceptMode { Auto, Always, Never };

/// Covariates entering the charge and LOS linear predictors. MDC is
/// dummy-coded for levels 1..24 (levels 0 and 25 are the reference),
/// mortality is ordinal 1..4 and severity enters as its code. The LOS side
/// reuses the charge covariates unless `los` is set. In Auto mode each side
/// gets an intercept iff it has covariates.
struct DesignSchema {
  CovariateColumns charge{};
  std::optional<CovariateColumns> los{};
  InterceptMode intercept = InterceptMode::Auto;

  /// MDC, mortality and severity on both sides.
  static DesignSchema full() { return {CovariateColumns::all(), std::nullopt, InterceptMode::Auto}; }

  CovariateColumns los_columns() const { return los.value_or(charge); }
  std::vector<std::string> charge_names() const;
  std::vector<std::string> los_names() const;
};

struct Design {
  Eigen::MatrixXd charge;  // rows = records
  Eigen::MatrixXd los;
  std::vector<std::string> charge_names;
  std::vector<std::string> los_names;
};

/// Design row for one record; throws SchemaError on codes outside their range.
Eigen::RowVectorXd design_row(const PatientRecord& r, const CovariateColumns& cols, bool intercept);

/// Throws SchemaError when the schema uses a column the cohort lacks or a
/// code is out of range.
Design design_matrix(const Cohort& c, const DesignSchema& schema);

bool schema_has_intercept(const DesignSchema& s, const CovariateColumns& cols);

/// Charge scale exp(x . beta_charge) and time scale exp(x' . beta_los) on top
/// of a baseline process with a = gamma = 1. Empty coefficient vectors mean
/// no covariates.
struct RegressionModel {
  Eigen::VectorXd beta_charge;
  Eigen::VectorXd beta_los;
  RgrstParams base;
};

}  // namespace rgrst
