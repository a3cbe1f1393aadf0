#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rgrst {

/// Values tabulated on y_grid x t_grid, row-major: values[i * t_grid.size() + k]
/// holds the value at (y_grid[i], t_grid[k]).
struct DensityGrid {
  std::vector<double> y_grid;
  std::vector<double> t_grid;
  std::vector<double> values;

  std::size_t ny() const { return y_grid.size(); }
  std::size_t nt() const { return t_grid.size(); }
  double& at(std::size_t i, std::size_t k) { return values[i * nt() + k]; }
  double at(std::size_t i, std::size_t k) const { return values[i * nt() + k]; }

  /// Grid with the given axes and zero values.
  static DensityGrid zeros(std::vector<double> y, std::vector<double> t);

  /// Throws ParameterError unless y_grid is strictly increasing and positive,
  /// t_grid strictly increasing and nonnegative, sizes agree and every value
  /// is finite.
  void validate() const;
};

/// CSV with header `y,t,value`, one row per node, y-major.
void write_grid_csv(std::ostream& os, const DensityGrid& g);
DensityGrid read_grid_csv(std::istream& is);

std::string grid_to_json(const DensityGrid& g);
DensityGrid grid_from_json(const std::string& text);

/// Log-spaced and uniform axes.
std::vector<double> log_space(double lo, double hi, std::size_t n);
std::vector<double> lin_space(double lo, double hi, std::size_t n);

}  // namespace rgrst
