#include "rgrst/gof.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <charconv>
#include <cmath>
#include <string>

#include "rgrst/error.hpp"
#include "rgrst/parallel.hpp"

namespace rgrst {

int Partition::index(double x) const {
  if (!(x >= lo && x <= hi)) return -1;
  const int i = static_cast<int>(std::floor((x - lo) / width()));
  return std::min(i, bins - 1);
}

void Partition::validate() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi) || bins < 1)
    throw ParameterError("partition needs finite lo < hi and at least one bin");
}

Partition Partition::parse(std::string_view text) {
  double v[3];
  for (int k = 0; k < 3; ++k) {
    const auto colon = text.find(':');
    if ((k < 2) == (colon == std::string_view::npos))
      throw ParameterError("partition must look like lo:hi:bins, got '" + std::string(text) + "'");
    const auto part = k < 2 ? text.substr(0, colon) : text;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v[k]);
    if (ec != std::errc{} || end != part.data() + part.size())
      throw ParameterError("bad partition field '" + std::string(part) + "'");
    if (k < 2) text.remove_prefix(colon + 1);
  }
  if (v[2] != std::floor(v[2]) || v[2] > 1e6) throw ParameterError("partition bin count must be an integer");
  Partition p{v[0], v[1], static_cast<int>(v[2])};
  p.validate();
  return p;
}

namespace {

// Folds cells with E below threshold into the next one; a trailing remainder
// goes into the last emitted cell.
ChiSquareResult finish(const std::vector<double>& expected, const std::vector<std::size_t>& observed, std::size_t n,
                       const ChiSquareOptions& opts) {
  const double thr = opts.merge_threshold * static_cast<double>(n);
  std::vector<double> e;
  std::vector<double> o;
  ChiSquareResult r;
  double pe = 0.0, po = 0.0;
  int pending = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    pe += expected[i];
    po += static_cast<double>(observed[i]);
    ++pending;
    if (pe >= thr && pe > 0.0) {
      e.push_back(pe);
      o.push_back(po);
      r.cells_merged += pending - 1;
      pe = po = 0.0;
      pending = 0;
    }
  }
  if (e.empty()) throw RangeError("partition carries none of the model mass");
  if (pending > 0) {
    e.back() += pe;
    o.back() += po;
    r.cells_merged += pending;
  }
  double x2 = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) x2 += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  r.statistic_standard = x2;
  r.statistic_normalized = x2 / static_cast<double>(n);
  r.n = n;
  r.cells_used = static_cast<int>(e.size());
  r.dof = r.cells_used - 1 - opts.fitted_params;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * x2) : 1.0;
  return r;
}

void append_overflow(std::vector<double>& expected, std::vector<std::size_t>& observed, std::size_t n,
                     std::size_t inside, ChiSquareResult* out_stats) {
  double covered = 0.0;
  for (double e : expected) covered += e;
  if (!(covered > 0.0)) throw RangeError("partition carries none of the model mass");
  const double over = std::max(0.0, static_cast<double>(n) - covered);
  expected.push_back(over);
  observed.push_back(n - inside);
  out_stats->overflow_expected = over;
  out_stats->overflow_observed = n - inside;
}

}  // namespace

ChiSquareResult pearson_chisquare(std::span<const double> samples, const std::function<double(double)>& density,
                                  const Partition& part, const ChiSquareOptions& opts) {
  part.validate();
  if (samples.empty()) throw DataError("chi-square test needs at least one sample");
  const std::size_t n = samples.size();
  const double dn = static_cast<double>(n);

  std::vector<std::size_t> observed(part.bins, 0);
  std::size_t inside = 0;
  for (double x : samples) {
    const int i = part.index(x);
    if (i >= 0) {
      ++observed[i];
      ++inside;
    }
  }

  std::vector<double> expected(part.bins);
  parallel_for(part.bins, [&](std::size_t i) {
    const double a = part.edge(static_cast<int>(i)), b = part.edge(static_cast<int>(i) + 1);
    double p;
    if (opts.rule == ExpectedRule::Midpoint) {
      p = density(0.5 * (a + b)) * (b - a);
    } else {
      p = num::integrate(density, a, b, {1e-8, 1e-15 * (b - a), 14}).value;
    }
    expected[i] = dn * std::max(0.0, p);
  });

  ChiSquareResult stats;
  append_overflow(expected, observed, n, inside, &stats);
  auto r = finish(expected, observed, n, opts);
  r.overflow_expected = stats.overflow_expected;
  r.overflow_observed = stats.overflow_observed;
  return r;
}

ChiSquareResult pearson_chisquare(std::span<const double> xs, std::span<const double> ys,
                                  const std::function<double(double, double)>& density, const Partition2D& part,
                                  const ChiSquareOptions& opts) {
  part.x.validate();
  part.y.validate();
  if (xs.size() != ys.size()) throw DataError("chi-square samples differ in length");
  if (xs.empty()) throw DataError("chi-square test needs at least one sample");
  const std::size_t n = xs.size();
  const double dn = static_cast<double>(n);
  const std::size_t nx = part.x.bins, ny = part.y.bins;

  std::vector<std::size_t> observed(nx * ny, 0);
  std::size_t inside = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const int i = part.x.index(xs[k]), j = part.y.index(ys[k]);
    if (i >= 0 && j >= 0) {
      ++observed[i * ny + j];
      ++inside;
    }
  }

  static const num::GaussLegendre gl(6);
  std::vector<double> expected(nx * ny);
  parallel_for(nx, [&](std::size_t i) {
    const double xa = part.x.edge(static_cast<int>(i)), xb = part.x.edge(static_cast<int>(i) + 1);
    for (std::size_t j = 0; j < ny; ++j) {
      const double ya = part.y.edge(static_cast<int>(j)), yb = part.y.edge(static_cast<int>(j) + 1);
      double p;
      if (opts.rule == ExpectedRule::Midpoint) {
        p = density(0.5 * (xa + xb), 0.5 * (ya + yb)) * (xb - xa) * (yb - ya);
      } else {
        p = gl.integrate([&](double x) { return gl.integrate([&](double y) { return density(x, y); }, ya, yb); },
                         xa, xb);
      }
      expected[i * ny + j] = dn * std::max(0.0, p);
    }
  });

  ChiSquareResult stats;
  append_overflow(expected, observed, n, inside, &stats);
  auto r = finish(expected, observed, n, opts);
  r.overflow_expected = stats.overflow_expected;
  r.overflow_observed = stats.overflow_observed;
  return r;
}

std::vector<double> kde_gaussian(std::span<const double> samples, double bandwidth, std::span<const double> grid) {
  if (samples.empty()) throw DataError("kernel estimate needs at least one sample");
  if (!(bandwidth > 0.0)) throw ParameterError("kernel bandwidth must be positive");
  std::vector<double> out(grid.size());
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth);
  parallel_for(grid.size(), [&](std::size_t g) {
    double acc = 0.0;
    for (double x : samples) acc += num::normal_pdf((grid[g] - x) / bandwidth);
    out[g] = acc * norm;
  });
  return out;
}

std::vector<double> kde_gaussian_2d(std::span<const double> xs, std::span<const double> ys, double bx, double by,
                                    std::span<const double> gx, std::span<const double> gy) {
  if (xs.empty()) throw DataError("kernel estimate needs at least one sample");
  if (xs.size() != ys.size()) throw DataError("kernel samples differ in length");
  if (!(bx > 0.0 && by > 0.0)) throw ParameterError("kernel bandwidth must be positive");
  const std::size_t n = xs.size();
  std::vector<double> out(gx.size() * gy.size());
  const double norm = 1.0 / (static_cast<double>(n) * bx * by);
  parallel_for(gx.size(), [&](std::size_t i) {
    std::vector<double> kx(n);
    for (std::size_t k = 0; k < n; ++k) kx[k] = num::normal_pdf((gx[i] - xs[k]) / bx);
    for (std::size_t j = 0; j < gy.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (kx[k] > 0.0) acc += kx[k] * num::normal_pdf((gy[j] - ys[k]) / by);
      out[i * gy.size() + j] = acc * norm;
    }
  });
  return out;
}

Residuals residual_transform(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                             const Eigen::MatrixXd& Xl, const RegressionModel& model) {
  const auto n = y.size();
  if (t.size() != n || Xc.rows() != n || Xl.rows() != n) throw DataError("residual inputs differ in length");
  if (Xc.cols() != model.beta_charge.size() || Xl.cols() != model.beta_los.size())
    throw ParameterError("coefficient count does not match the design");
  Residuals r;
  r.log_charge.resize(n);
  r.los.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = Xc.cols() ? Xc.row(i).dot(model.beta_charge) : 0.0;
    const double l = Xl.cols() ? Xl.row(i).dot(model.beta_los) : 0.0;
    r.log_charge[i] = std::log(y[i]) - c;
    r.los[i] = t[i] / std::exp(l);
  }
  return r;
}

ResidualDensities::ResidualDensities(const RgrstParams& base) : model(base), mass(model.total_mass_smooth()) {
  if (!(mass > 0.0)) throw NumericError("base process puts no mass on T > 0");
}

double ResidualDensities::log_charge(double u) const {
  const double y = std::exp(u);
  if (!(y > 0.0) || !std::isfinite(y)) return 0.0;
  return model.marginal_charge(y) * y / mass;
}

double ResidualDensities::los(double t) const { return t <= 0.0 ? 0.0 : model.marginal_los(t) / mass; }

double ResidualDensities::joint(double u, double t) const {
  if (t <= 0.0) return 0.0;
  const double l = model.log_joint_density(std::exp(u), t);
  return std::isfinite(l) ? std::exp(l + u) / mass : 0.0;
}

namespace {

GofResults run_tests(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                     const Eigen::MatrixXd& Xl, const RegressionModel& model, const GofOptions& opts) {
  const auto res = residual_transform(y, t, Xc, Xl, model);
  const ResidualDensities d(model.base);
  GofResults g;
  g.charge = pearson_chisquare(res.log_charge, [&](double u) { return d.log_charge(u); }, opts.charge, opts.chi);
  g.los = pearson_chisquare(res.los, [&](double s) { return d.los(s); }, opts.los, opts.chi);
  g.joint = pearson_chisquare(res.log_charge, res.los, [&](double u, double s) { return d.joint(u, s); },
                              Partition2D{opts.charge, opts.los}, opts.chi);
  return g;
}

}  // namespace

GofResults evaluate_fit(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                        const Eigen::MatrixXd& Xl, const RegressionModel& model, const GofOptions& opts) {
  return run_tests(y, t, Xc, Xl, model, opts);
}

GofResults out_sample_eval(const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& Xc,
                           const Eigen::MatrixXd& Xl, const RegressionModel& model, const GofOptions& opts) {
  auto g = run_tests(y, t, Xc, Xl, model, opts);
  g.holdout = true;
  return g;
}

}  // namespace rgrst
