#include "rgrst/grid.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "rgrst/error.hpp"

namespace rgrst {

DensityGrid DensityGrid::zeros(std::vector<double> y, std::vector<double> t) {
  DensityGrid g;
  g.values.assign(y.size() * t.size(), 0.0);
  g.y_grid = std::move(y);
  g.t_grid = std::move(t);
  return g;
}

void DensityGrid::validate() const {
  if (y_grid.empty() || t_grid.empty()) throw ParameterError("DensityGrid: empty axis");
  if (values.size() != ny() * nt()) throw ParameterError("DensityGrid: value count does not match the axes");
  for (std::size_t i = 0; i < ny(); ++i) {
    if (!(y_grid[i] > 0.0) || (i > 0 && !(y_grid[i] > y_grid[i - 1])))
      throw ParameterError("DensityGrid: y grid must be positive and strictly increasing");
  }
  for (std::size_t k = 0; k < nt(); ++k) {
    if (!(t_grid[k] >= 0.0) || (k > 0 && !(t_grid[k] > t_grid[k - 1])))
      throw ParameterError("DensityGrid: t grid must be nonnegative and strictly increasing");
  }
  for (double v : values)
    if (!std::isfinite(v)) throw ParameterError("DensityGrid: non-finite value");
}

void write_grid_csv(std::ostream& os, const DensityGrid& g) {
  os << "y,t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.ny(); ++i)
    for (std::size_t k = 0; k < g.nt(); ++k) os << g.y_grid[i] << ',' << g.t_grid[k] << ',' << g.at(i, k) << '\n';
}

namespace {

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("grid CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

// Axis position of each distinct value, in first-seen order.
std::vector<double> unique_in_order(const std::vector<double>& v, std::map<double, std::size_t>& index) {
  std::vector<double> out;
  for (double x : v) {
    if (index.emplace(x, out.size()).second) out.push_back(x);
  }
  return out;
}

}  // namespace

DensityGrid read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("grid CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "y,t,value") throw SchemaError("grid CSV: expected header 'y,t,value'");
  std::vector<double> ys, ts, vs;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw DataError("grid CSV line " + std::to_string(n) + ": expected three fields");
    ys.push_back(parse_double(a, n));
    ts.push_back(parse_double(b, n));
    vs.push_back(parse_double(c, n));
  }
  std::map<double, std::size_t> yi, ti;
  DensityGrid g;
  g.y_grid = unique_in_order(ys, yi);
  g.t_grid = unique_in_order(ts, ti);
  if (g.ny() * g.nt() != vs.size()) throw DataError("grid CSV: rows do not form a full rectangular grid");
  g.values.assign(vs.size(), std::nan(""));
  for (std::size_t r = 0; r < vs.size(); ++r) g.at(yi[ys[r]], ti[ts[r]]) = vs[r];
  g.validate();
  return g;
}

std::string grid_to_json(const DensityGrid& g) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["y_grid"] = g.y_grid;
  j["t_grid"] = g.t_grid;
  j["values"] = g.values;
  return j.dump(2);
}

DensityGrid grid_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("grid JSON: ") + e.what());
  }
  DensityGrid g;
  try {
    g.y_grid = j.at("y_grid").get<std::vector<double>>();
    g.t_grid = j.at("t_grid").get<std::vector<double>>();
    g.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("grid JSON: ") + e.what());
  }
  g.validate();
  return g;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ParameterError("log_space: need 0 < lo < hi and n >= 2");
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::vector<double> lin_space(double lo, double hi, std::size_t n) {
  if (!(hi > lo) || n < 2) throw ParameterError("lin_space: need lo < hi and n >= 2");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = hi;
  return v;
}

}  // namespace rgrst
