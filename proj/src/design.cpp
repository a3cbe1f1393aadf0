#include "rgrst/design.hpp"

#include "rgrst/error.hpp"

namespace rgrst {

namespace {

std::vector<std::string> names_for(const CovariateColumns& c, bool intercept) {
  std::vector<std::string> out;
  if (intercept) out.emplace_back("Intercept");
  if (c.mdc)
    for (int k = 1; k <= 24; ++k) out.push_back("MDC_" + std::to_string(k));
  if (c.mortality) out.emplace_back("Mortality");
  if (c.severity) out.emplace_back("Severity");
  return out;
}

void require(const CovariateColumns& used, const CovariateColumns& have) {
  if ((used.mdc && !have.mdc) || (used.severity && !have.severity) || (used.mortality && !have.mortality))
    throw SchemaError("design_matrix: schema uses a covariate the cohort does not carry");
}

}  // namespace

bool schema_has_intercept(const DesignSchema& s, const CovariateColumns& cols) {
  switch (s.intercept) {
    case InterceptMode::Always: return true;
    case InterceptMode::Never: return false;
    case InterceptMode::Auto: break;
  }
  return cols.any();
}

std::vector<std::string> DesignSchema::charge_names() const {
  return names_for(charge, schema_has_intercept(*this, charge));
}

std::vector<std::string> DesignSchema::los_names() const {
  return names_for(los_columns(), schema_has_intercept(*this, los_columns()));
}

Eigen::RowVectorXd design_row(const PatientRecord& r, const CovariateColumns& cols, bool intercept) {
  const int n = (intercept ? 1 : 0) + (cols.mdc ? 24 : 0) + (cols.mortality ? 1 : 0) + (cols.severity ? 1 : 0);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(n);
  int j = 0;
  if (intercept) x[j++] = 1.0;
  if (cols.mdc) {
    if (r.mdc < 0 || r.mdc > 25) throw SchemaError("unknown MDC level " + std::to_string(r.mdc));
    if (r.mdc >= 1 && r.mdc <= 24) x[j + r.mdc - 1] = 1.0;
    j += 24;
  }
  if (cols.mortality) {
    if (r.mortality < 1 || r.mortality > 4) throw SchemaError("unknown mortality level " + std::to_string(r.mortality));
    x[j++] = r.mortality;
  }
  if (cols.severity) {
    if (r.severity < 0 || r.severity > 4) throw SchemaError("unknown severity level " + std::to_string(r.severity));
    x[j++] = r.severity;
  }
  return x;
}

Design design_matrix(const Cohort& c, const DesignSchema& schema) {
  const auto lc = schema.los_columns();
  require(schema.charge, c.columns);
  require(lc, c.columns);
  const bool ic = schema_has_intercept(schema, schema.charge);
  const bool il = schema_has_intercept(schema, lc);
  Design d;
  d.charge_names = names_for(schema.charge, ic);
  d.los_names = names_for(lc, il);
  d.charge.resize(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(d.charge_names.size()));
  d.los.resize(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(d.los_names.size()));
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    d.charge.row(i) = design_row(c.records[k], schema.charge, ic);
    d.los.row(i) = design_row(c.records[k], lc, il);
  }
  return d;
}

}  // namespace rgrst
