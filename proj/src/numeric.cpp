#include "rgrst/numeric.hpp"

#include "rgrst/error.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cassert>
#include <limits>
#include <sstream>

namespace rgrst::num {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 32;
  if (values.size() <= kBlock) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw NumericError("integrate: non-finite limits");
  if (a == b) return {};
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  double err = 0.0;
  double l1 = 0.0;
  const double value = GK::integrate(f, a, b, opts.max_depth, opts.rel_tol, &err, &l1);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "integrate: non-finite result on [" << a << ", " << b << "]";
    throw NumericError(msg.str());
  }
  // Boost stops refining at max_depth without complaint; a small slack
  // factor separates genuine failure from estimate noise.
  const double target = std::max(opts.rel_tol * l1, opts.abs_tol);
  if (err > 10.0 * target && err > 1e-300) {
    std::ostringstream msg;
    msg << "integrate: no convergence on [" << a << ", " << b << "], estimate " << value
        << ", error " << err << ", target " << target;
    throw NumericError(msg.str());
  }
  return {value, err};
}

namespace {

// Walks from `start` in direction `dir` and returns the last abscissa reached.
double scan_edge(const std::function<double(double)>& f, double start, double dir,
                 const TruncationOptions& trunc, double& peak,
                 double limit = -std::numeric_limits<double>::infinity()) {
  double v = f(start);
  if (!std::isfinite(v)) throw NumericError("integrate: non-finite integrand while scanning");
  peak = std::max(peak, v);
  int quiet = 0;
  double x = start;
  for (double offset = trunc.step; offset <= trunc.max_extent; offset += trunc.step) {
    x = start + dir * offset;
    if (x <= limit) return limit;
    v = f(x);
    if (!std::isfinite(v)) throw NumericError("integrate: non-finite integrand while scanning");
    peak = std::max(peak, v);
    if (peak > 0.0 && v < trunc.rel_floor * peak) {
      if (++quiet >= 2) return x;
    } else {
      quiet = 0;
    }
  }
  return x;
}

}  // namespace

Support find_support_upper(const std::function<double(double)>& f, double a,
                           const TruncationOptions& trunc) {
  Support s;
  s.lo = a;
  s.hi = scan_edge(f, a, 1.0, trunc, s.peak);
  return s;
}

Support find_support_from(const std::function<double(double)>& f, double a, double start,
                          const TruncationOptions& trunc) {
  Support s;
  start = std::max(a, start);
  s.hi = scan_edge(f, start, 1.0, trunc, s.peak);
  s.lo = start > a ? scan_edge(f, start, -1.0, trunc, s.peak, a) : a;
  return s;
}

Support find_support_real_line(const std::function<double(double)>& f, double center,
                               const TruncationOptions& trunc) {
  Support s;
  s.hi = scan_edge(f, center, 1.0, trunc, s.peak);
  s.lo = scan_edge(f, center, -1.0, trunc, s.peak);
  return s;
}

QuadResult integrate_over(const std::function<double(double)>& f, const Support& range,
                          const QuadOptions& opts, const TruncationOptions& trunc) {
  QuadResult total;
  if (range.peak <= 0.0 || range.hi <= range.lo) return total;
  const double chunk = 8.0 * trunc.step;
  const auto pieces = static_cast<std::size_t>(std::ceil((range.hi - range.lo) / chunk));
  const double width = (range.hi - range.lo) / static_cast<double>(pieces);
  QuadOptions local = opts;
  local.abs_tol = std::max(opts.abs_tol, trunc.rel_floor * range.peak * width);
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = range.lo + width * static_cast<double>(i);
    const double b = i + 1 == pieces ? range.hi : a + width;
    const auto part = integrate(f, a, b, local);
    total.value += part.value;
    total.error += part.error;
  }
  return total;
}

QuadResult integrate_upper_tail(const std::function<double(double)>& f, double a,
                                const QuadOptions& opts, const TruncationOptions& trunc) {
  return integrate_over(f, find_support_upper(f, a, trunc), opts, trunc);
}

QuadResult integrate_real_line(const std::function<double(double)>& f, double center,
                               const QuadOptions& opts, const TruncationOptions& trunc) {
  return integrate_over(f, find_support_real_line(f, center, trunc), opts, trunc);
}

GaussLegendre::GaussLegendre(int n) : nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n)) {
  assert(n >= 1);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = w;
  }
}

std::size_t locate_cell(std::span<const double> grid, double x) {
  assert(grid.size() >= 2);
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - grid.begin() - 1, 0));
  return std::min(idx, grid.size() - 2);
}

namespace {

template <class Value>
double slope_at(std::span<const double> x, Value&& v, std::size_t k) {
  const std::size_t n = x.size();
  if (n == 2) return (v(1) - v(0)) / (x[1] - x[0]);
  std::size_t c = k;
  if (k == 0) c = 1;
  if (k == n - 1) c = n - 2;
  // Derivative at x[k] of the quadratic through nodes c-1, c, c+1.
  const double x0 = x[c - 1], x1 = x[c], x2 = x[c + 1];
  const double f0 = v(c - 1), f1 = v(c), f2 = v(c + 1);
  const double xk = x[k];
  const double d0 = ((xk - x1) + (xk - x2)) / ((x0 - x1) * (x0 - x2));
  const double d1 = ((xk - x0) + (xk - x2)) / ((x1 - x0) * (x1 - x2));
  const double d2 = ((xk - x0) + (xk - x1)) / ((x2 - x0) * (x2 - x1));
  return f0 * d0 + f1 * d1 + f2 * d2;
}

double hermite(double x0, double x1, double f0, double f1, double m0, double m1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * f1 +
         (s3 - s2) * h * m1;
}

}  // namespace

double node_slope(std::span<const double> x, std::span<const double> v, std::size_t k) {
  return slope_at(x, [&](std::size_t i) { return v[i]; }, k);
}

HermiteInterpolator1D::HermiteInterpolator1D(std::vector<double> x, std::vector<double> v)
    : x_(std::move(x)), v_(std::move(v)) {
  if (x_.size() < 2 || x_.size() != v_.size()) throw ParameterError("interpolator: need >= 2 matching nodes");
  slope_.resize(x_.size());
  for (std::size_t k = 0; k < x_.size(); ++k) slope_[k] = node_slope(x_, v_, k);
}

double HermiteInterpolator1D::operator()(double x) const {
  if (x <= x_.front()) return v_.front();
  if (x >= x_.back()) return v_.back();
  const std::size_t i = locate_cell(x_, x);
  return hermite(x_[i], x_[i + 1], v_[i], v_[i + 1], slope_[i], slope_[i + 1], x);
}

HermiteInterpolator2D::HermiteInterpolator2D(std::vector<double> x, std::vector<double> y,
                                             std::vector<double> values)
    : x_(std::move(x)), y_(std::move(y)), v_(std::move(values)) {
  if (x_.size() < 2 || y_.size() < 2 || v_.size() != x_.size() * y_.size())
    throw ParameterError("interpolator: inconsistent 2-D grid");
}

double HermiteInterpolator2D::row_at(std::size_t j, double x) const {
  const std::size_t ny = y_.size();
  auto val = [&](std::size_t i) { return v_[i * ny + j]; };
  if (x <= x_.front()) return val(0);
  if (x >= x_.back()) return val(x_.size() - 1);
  const std::size_t i = locate_cell(x_, x);
  return hermite(x_[i], x_[i + 1], val(i), val(i + 1), slope_at(x_, val, i), slope_at(x_, val, i + 1), x);
}

double HermiteInterpolator2D::operator()(double x, double y) const {
  const std::size_t ny = y_.size();
  const double yc = std::clamp(y, y_.front(), y_.back());
  const std::size_t j = locate_cell(y_, yc);
  const std::size_t lo = j == 0 ? 0 : j - 1;
  const std::size_t hi = std::min(ny - 1, j + 2);
  double rows[4];
  for (std::size_t k = lo; k <= hi; ++k) rows[k - lo] = row_at(k, x);
  auto val = [&](std::size_t k) { return rows[k - lo]; };
  return hermite(y_[j], y_[j + 1], val(j), val(j + 1), slope_at(y_, val, j), slope_at(y_, val, j + 1), yc);
}

}  // namespace rgrst::num
