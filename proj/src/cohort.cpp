#include "rgrst/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rgrst/error.hpp"
#include "rgrst/rng.hpp"

namespace rgrst {

namespace {

constexpr std::string_view kMortalityNames[] = {"Minor", "Moderate", "Major", "Extreme"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV line; double quotes group a field and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

bool parse_real(std::string_view s, double& v) {
  s = trim(s);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && ptr == end && std::isfinite(v);
}

// Integer codes may be written as "5" or "5.0".
bool parse_code(std::string_view s, int& v) {
  double d = 0.0;
  if (!parse_real(s, d) || d != std::floor(d) || std::abs(d) > 1e6) return false;
  v = static_cast<int>(d);
  return true;
}

bool parse_flag(std::string_view s, bool& v) {
  const auto t = lower(trim(s));
  if (t == "1" || t == "true") v = true;
  else if (t == "0" || t == "false") v = false;
  else return false;
  return true;
}

enum class Layout { Records, Simulation };

}  // namespace

std::string_view mortality_name(int code) {
  if (code < 1 || code > 4) throw DataError("mortality code out of range: " + std::to_string(code));
  return kMortalityNames[code - 1];
}

int parse_mortality(std::string_view text) {
  const auto t = lower(trim(text));
  for (int k = 0; k < 4; ++k)
    if (t == lower(kMortalityNames[k])) return k + 1;
  int code = 0;
  if (parse_code(t, code) && code >= 1 && code <= 4) return code;
  throw DataError("unknown mortality level '" + std::string(text) + "'");
}

ReadResult read_cohort(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("cohort CSV: missing header");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  auto has = [&](const char* name) { return col.count(name) > 0; };

  Layout layout;
  if (has("total_charge") || has("los_days")) {
    layout = Layout::Records;
    for (const char* need : {"total_charge", "los_days"})
      if (!has(need)) throw SchemaError(std::string("cohort CSV: missing column '") + need + "'");
  } else if (has("Y_T") || has("T")) {
    layout = Layout::Simulation;
    for (const char* need : {"T", "Y_T", "censored"})
      if (!has(need)) throw SchemaError(std::string("cohort CSV: missing column '") + need + "'");
  } else {
    throw SchemaError("cohort CSV: header has neither total_charge/los_days nor T/Y_T");
  }

  ReadResult out;
  out.cohort.columns = {has("mdc"), has("severity"), has("mortality")};
  const std::size_t charge_col = col[layout == Layout::Records ? "total_charge" : "Y_T"];
  const std::size_t los_col = col[layout == Layout::Records ? "los_days" : "T"];
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    auto reject = [&](std::string reason) { out.rejects.push_back({lineno, std::move(reason)}); };
    if (f.size() < header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
      continue;
    }
    PatientRecord r;
    if (!parse_real(f[charge_col], r.total_charge)) {
      reject("bad charge '" + f[charge_col] + "'");
      continue;
    }
    if (!parse_real(f[los_col], r.los)) {
      reject("bad LOS '" + f[los_col] + "'");
      continue;
    }
    if (layout == Layout::Simulation) {
      bool censored = false;
      if (!parse_flag(f[col["censored"]], censored)) {
        reject("bad censored flag '" + f[col["censored"]] + "'");
        continue;
      }
      if (censored) {
        reject("censored record");
        continue;
      }
    }
    if (!(r.total_charge > 0.0)) {
      reject("nonpositive charge");
      continue;
    }
    if (!(r.los > 0.0)) {
      reject("nonpositive LOS");
      continue;
    }
    if (out.cohort.columns.mdc && (!parse_code(f[col["mdc"]], r.mdc) || r.mdc < 0 || r.mdc > 25)) {
      reject("bad mdc '" + f[col["mdc"]] + "'");
      continue;
    }
    if (out.cohort.columns.severity &&
        (!parse_code(f[col["severity"]], r.severity) || r.severity < 0 || r.severity > 4)) {
      reject("bad severity '" + f[col["severity"]] + "'");
      continue;
    }
    if (out.cohort.columns.mortality) {
      try {
        r.mortality = parse_mortality(f[col["mortality"]]);
      } catch (const DataError&) {
        reject("bad mortality '" + f[col["mortality"]] + "'");
        continue;
      }
    }
    out.cohort.records.push_back(r);
  }
  return out;
}

ReadResult read_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_cohort(in);
}

void write_cohort(std::ostream& os, const Cohort& c) {
  os << "total_charge,los_days";
  if (c.columns.mdc) os << ",mdc";
  if (c.columns.severity) os << ",severity";
  if (c.columns.mortality) os << ",mortality";
  os << '\n' << std::setprecision(17);
  for (const auto& r : c.records) {
    os << r.total_charge << ',' << r.los;
    if (c.columns.mdc) os << ',' << r.mdc;
    if (c.columns.severity) os << ',' << r.severity;
    if (c.columns.mortality) os << ',' << mortality_name(r.mortality);
    os << '\n';
  }
}

void write_cohort(const std::string& path, const Cohort& c) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_cohort(out, c);
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_rejects(std::ostream& os, const std::vector<Reject>& rejects) {
  os << "line,reason\n";
  for (const auto& r : rejects) {
    std::string reason = r.reason;
    std::string quoted;
    for (char ch : reason) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    os << r.line << ",\"" << quoted << "\"\n";
  }
}

Cohort subsample(const Cohort& c, std::size_t n, std::uint64_t seed) {
  if (n > c.size())
    throw ParameterError("subsample: n = " + std::to_string(n) + " exceeds cohort size " + std::to_string(c.size()));
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  StreamRng rng(seed, 0, 0x5a3b);
  Cohort out;
  out.columns = c.columns;
  out.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(c.size() - i));
    std::swap(idx[i], idx[j]);
    out.records.push_back(c.records[idx[i]]);
  }
  return out;
}

namespace {

// Two-pass statistics for one group.
GroupStats stats_for(const std::vector<const PatientRecord*>& g, std::size_t total, std::string ch,
                     std::string label) {
  GroupStats s;
  s.characteristic = std::move(ch);
  s.group = std::move(label);
  s.n = g.size();
  s.percent = 100.0 * static_cast<double>(g.size()) / static_cast<double>(total);
  for (const auto* r : g) {
    s.los_mean += r->los;
    s.charge_mean += r->total_charge;
  }
  s.los_mean /= static_cast<double>(g.size());
  s.charge_mean /= static_cast<double>(g.size());
  if (g.size() > 1) {
    double lv = 0, cv = 0;
    for (const auto* r : g) {
      lv += (r->los - s.los_mean) * (r->los - s.los_mean);
      cv += (r->total_charge - s.charge_mean) * (r->total_charge - s.charge_mean);
    }
    s.los_sd = std::sqrt(lv / static_cast<double>(g.size() - 1));
    s.charge_sd = std::sqrt(cv / static_cast<double>(g.size() - 1));
  }
  return s;
}

}  // namespace

CohortSummary describe(const Cohort& c) {
  if (c.records.empty()) throw DataError("describe: empty cohort");
  CohortSummary out;
  std::vector<const PatientRecord*> all;
  for (const auto& r : c.records) all.push_back(&r);
  out.rows.push_back(stats_for(all, all.size(), "All Patients", ""));
  auto grouped = [&](const char* name, auto key, auto label) {
    std::map<int, std::vector<const PatientRecord*>> groups;
    for (const auto& r : c.records) groups[key(r)].push_back(&r);
    for (const auto& [k, g] : groups) out.rows.push_back(stats_for(g, all.size(), name, label(k)));
  };
  if (c.columns.mdc)
    grouped("MDC", [](const PatientRecord& r) { return r.mdc; }, [](int k) { return std::to_string(k); });
  if (c.columns.severity)
    grouped("Severity", [](const PatientRecord& r) { return r.severity; }, [](int k) { return std::to_string(k); });
  if (c.columns.mortality)
    grouped("Mortality", [](const PatientRecord& r) { return r.mortality; },
            [](int k) { return std::string(mortality_name(k)); });
  return out;
}

void write_summary(std::ostream& os, const CohortSummary& s) {
  os << "characteristic,group,n,percent,los_mean,los_sd,charge_mean,charge_sd\n" << std::setprecision(10);
  for (const auto& r : s.rows)
    os << r.characteristic << ',' << r.group << ',' << r.n << ',' << r.percent << ',' << r.los_mean << ','
       << r.los_sd << ',' << r.charge_mean << ',' << r.charge_sd << '\n';
}

}  // namespace rgrst
