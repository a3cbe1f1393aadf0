#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rgrst {

/// Ordinal risk-of-mortality codes.
enum class Mortality : int { Minor = 1, Moderate = 2, Major = 3, Extreme = 4 };

std::string_view mortality_name(int code);
/// Accepts the names (case-insensitive) or the integer codes 1..4; throws
/// DataError otherwise.
int parse_mortality(std::string_view text);

struct PatientRecord {
  double total_charge = 0.0;  // USD
  double los = 0.0;           // days
  int mdc = 0;                // 0..25
  int severity = 0;           // 0..4
  int mortality = 1;          // 1..4, see Mortality
};

/// Which covariate columns a cohort carries.
struct CovariateColumns {
  bool mdc = false;
  bool severity = false;
  bool mortality = false;

  static CovariateColumns all() { return {true, true, true}; }
  bool any() const { return mdc || severity || mortality; }
  bool operator==(const CovariateColumns&) const = default;
};

struct Cohort {
  std::vector<PatientRecord> records;
  CovariateColumns columns{};

  std::size_t size() const { return records.size(); }
};

struct Reject {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ReadResult {
  Cohort cohort;
  std::vector<Reject> rejects;
};

/// Reads either layout:
///   records:    total_charge,los_days,mdc,severity,mortality
///   simulation: y0,omega,T,Y_T,censored[,mdc][,severity][,mortality]
/// (detected from the header; column order is free, extra columns are
/// ignored). Simulation rows map Y_T to the charge and T to the LOS. Rows
/// with bad numbers, nonpositive values, out-of-range codes, T = 0 or the
/// censored flag go to the rejects list. Throws SchemaError when a required
/// column is missing and IoError when the file cannot be read.
ReadResult read_cohort(const std::string& path);
ReadResult read_cohort(std::istream& is);

/// Writes the records layout (mortality as its name) with only the columns
/// the cohort carries. Charges and LOS are written with round-trip precision.
void write_cohort(std::ostream& os, const Cohort& c);
void write_cohort(const std::string& path, const Cohort& c);

/// CSV `line,reason`.
void write_rejects(std::ostream& os, const std::vector<Reject>& rejects);

/// n records drawn uniformly without replacement (partial Fisher-Yates on a
/// seeded stream), in draw order. Throws ParameterError when n > size.
Cohort subsample(const Cohort& c, std::size_t n, std::uint64_t seed);

struct GroupStats {
  std::string characteristic;  // "All Patients", "MDC", "Severity", "Mortality"
  std::string group;           // level label; empty for the total row
  std::size_t n = 0;
  double percent = 0.0;
  double los_mean = 0.0, los_sd = 0.0;
  double charge_mean = 0.0, charge_sd = 0.0;
};

/// Table-style summary: one total row and one row per observed level of each
/// carried covariate. Standard deviations are sample (n - 1) values, 0 for a
/// single record. Throws DataError on an empty cohort.
struct CohortSummary {
  std::vector<GroupStats> rows;
};

CohortSummary describe(const Cohort& c);
void write_summary(std::ostream& os, const CohortSummary& s);

}  // namespace rgrst
