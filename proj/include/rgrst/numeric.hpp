#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace rgrst::num {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684759;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

/// 1 - Phi(z), accurate in the upper tail.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Pairwise summation; result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// log(sum(exp(values))) with the maximum factored out; -inf for empty or all -inf input.
double log_sum_exp(std::span<const double> values);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  unsigned max_depth = 12;  ///< bisection depth; kept modest because nested integrands are noisy
};

/// Adaptive Gauss-Kronrod (G10/K21) on a finite interval. Throws NumericError
/// when the error estimate does not reach max(rel_tol*|I|, abs_tol).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts = {});

struct TruncationOptions {
  double step = 0.5;        ///< scan spacing used to locate the support
  double rel_floor = 1e-14; ///< integrand below rel_floor * peak is treated as zero
  double max_extent = 1e4;  ///< give up scanning past this distance from the start
};

/// Range outside of which a nonnegative integrand is negligible.
struct Support {
  double lo = 0.0;
  double hi = 0.0;
  double peak = 0.0;
};

/// Scans f from `a` upwards until two consecutive samples past the running peak
/// fall below rel_floor * peak.
Support find_support_upper(const std::function<double(double)>& f, double a,
                           const TruncationOptions& trunc = {});

/// Support on [a, inf) found by scanning both ways from `start`, for integrands
/// whose mass sits away from a.
Support find_support_from(const std::function<double(double)>& f, double a, double start,
                          const TruncationOptions& trunc);

/// Two-sided version of find_support_upper starting at `center`.
Support find_support_real_line(const std::function<double(double)>& f, double center,
                               const TruncationOptions& trunc = {});

/// Adaptive quadrature over a support range, split into chunks of `chunk`
/// width. The absolute tolerance is floored at rel_floor * peak * width so that
/// negligible tails do not trigger convergence failures.
QuadResult integrate_over(const std::function<double(double)>& f, const Support& range,
                          const QuadOptions& opts = {}, const TruncationOptions& trunc = {});

/// Integrates a nonnegative f over [a, +inf), truncating where the integrand
/// drops below rel_floor times its observed peak.
QuadResult integrate_upper_tail(const std::function<double(double)>& f, double a,
                                const QuadOptions& opts = {}, const TruncationOptions& trunc = {});

/// Same as integrate_upper_tail but over the whole real line, scanning both ways
/// from `center`.
QuadResult integrate_real_line(const std::function<double(double)>& f, double center,
                               const QuadOptions& opts = {}, const TruncationOptions& trunc = {});

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
  explicit GaussLegendre(int n);
  /// Integral of f over [a, b] with this fixed rule.
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
    return acc * half;
  }
};

/// Cubic Hermite interpolation on a strictly increasing, possibly nonuniform
/// grid. Node slopes come from the quadratic through the node and its two
/// neighbours (one-sided at the ends), so the interpolant is C1 and its
/// derivative at a node equals a second-order finite difference of the data.
class HermiteInterpolator1D {
public:
  HermiteInterpolator1D() = default;
  HermiteInterpolator1D(std::vector<double> x, std::vector<double> v);
  /// Arguments outside the grid are clamped to the end nodes.
  double operator()(double x) const;
  std::span<const double> nodes() const { return x_; }

private:
  std::vector<double> x_, v_, slope_;
};

/// Tensor-product cubic Hermite interpolation on a rectangular grid with
/// values(i, j) at (x_i, y_j), row-major storage of size nx*ny.
class HermiteInterpolator2D {
public:
  HermiteInterpolator2D() = default;
  HermiteInterpolator2D(std::vector<double> x, std::vector<double> y, std::vector<double> values);
  double operator()(double x, double y) const;

private:
  double row_at(std::size_t j, double x) const;
  std::vector<double> x_, y_, v_;
};

/// Index of the cell [x_i, x_{i+1}] containing x (clamped to [0, n-2]).
std::size_t locate_cell(std::span<const double> grid, double x);

/// Derivative at node k of the quadratic through nodes (k-1, k, k+1), or the
/// one-sided triple at the ends.
double node_slope(std::span<const double> x, std::span<const double> v, std::size_t k);

}  // namespace rgrst::num
