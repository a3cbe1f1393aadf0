#include "rgrst/model.hpp"

#include "rgrst/error.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rgrst {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kYFloor = 1e-300;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double safe_log_y(double y) { return std::log(std::max(y, kYFloor)); }

// Mills ratio (1 - Phi(z)) / phi(z) for z > 5.
double mills_ratio(double z) {
  if (z <= 30.0) return num::normal_sf(z) / num::normal_pdf(z);
  const double w = 1.0 / (z * z);
  return (1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)))) / z;
}

// log(A*phi(z) + B*sf(z)) for A, B >= 0 without underflow in the upper tail.
double log_phi_sf_combo(double A, double B, double z) {
  if (z <= 5.0) {
    const double v = A * num::normal_pdf(z) + B * num::normal_sf(z);
    return v > 0.0 ? std::log(v) : kNegInf;
  }
  const double inner = A + B * mills_ratio(z);
  if (!(inner > 0.0)) return kNegInf;
  return -0.5 * z * z - kLogSqrt2Pi + std::log(inner);
}

// Signed log-sum: returns log(sum sign_i exp(l_i)) or -inf if the sum is not positive.
double signed_log_sum(const std::vector<double>& logs, const std::vector<int>& signs) {
  double hi = kNegInf;
  for (double l : logs) hi = std::max(hi, l);
  if (!std::isfinite(hi)) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) acc += signs[i] * std::exp(logs[i] - hi);
  return acc > 0.0 ? hi + std::log(acc) : kNegInf;
}

}  // namespace

void RgrstParams::validate() const {
  const std::size_t n = theta.size();
  if (n == 0) throw ParameterError("RgrstParams: need at least one component");
  if (lognormals.size() != n || coxians.size() != n)
    throw ParameterError("RgrstParams: theta, lognormals and coxians must have equal length");
  double total = 0.0;
  for (double w : theta) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("RgrstParams: theta entries must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "RgrstParams: theta must sum to 1 (sum " << total << ")";
    throw ParameterError(msg.str());
  }
  for (const auto& ln : lognormals) {
    if (!std::isfinite(ln.mu)) throw ParameterError("RgrstParams: mu must be finite");
    if (!(ln.sigma > 0.0) || !std::isfinite(ln.sigma)) throw ParameterError("RgrstParams: sigma must be positive");
  }
  for (const auto& c : coxians) {
    if (c.d < 1 || c.s.size() != 2 * c.d - 1) throw ParameterError("RgrstParams: Coxian s must have length 2d-1");
    if (!c.s.allFinite()) throw ParameterError("RgrstParams: Coxian s must be finite");
  }
  if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("RgrstParams: a must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("RgrstParams: gamma must be positive");
}

RgrstParams RgrstParams::single(double mu, double sigma, double s, double a, double gamma) {
  RgrstParams p;
  p.theta = {1.0};
  p.lognormals = {{mu, sigma}};
  p.coxians = {CoxianParams::exponential(s)};
  p.a = a;
  p.gamma = gamma;
  return p;
}

RgrstModel::RgrstModel(RgrstParams params) : p_(std::move(params)) {
  p_.validate();
  for (std::size_t n = 0; n < p_.components(); ++n) {
    gens_.push_back(build_generator(p_.coxians[n]));
    const auto& S = gens_.back();
    comps_.push_back({std::log(p_.theta[n]), p_.lognormals[n].mu, p_.lognormals[n].sigma,
                      S.diagonal().maxCoeff(), S.rowwise().sum()});
  }
}

PhaseTerms RgrstModel::terms(std::size_t n, double t) const {
  const auto& S = gens_[n];
  if (S.rows() == 1) return {S(0, 0) * t, 1.0, S(0, 0)};
  return phase_terms(S, t);
}

double RgrstModel::q_tilde(double y) const { return p_.a * y; }

double RgrstModel::initial_density(double y) const {
  const double x = y / p_.gamma;
  return 2.0 / (num::kPi * p_.gamma * (1.0 + x * x));
}

double RgrstModel::log_initial_density(double y) const {
  const double x = std::abs(y) / p_.gamma;
  const double base = std::log(2.0 / (num::kPi * p_.gamma));
  if (x > 1e150) return base - 2.0 * std::log(x);
  return base - std::log1p(x * x);
}

double RgrstModel::p_tilde(double y, double t) const {
  const double decay = std::exp(-p_.a * t);
  return initial_density(y * decay) * decay;
}

double RgrstModel::log_p_tilde(double y, double t) const {
  // y * exp(-a t) evaluated in logs so huge t does not underflow prematurely.
  const double shrunk = y > 0.0 ? std::exp(safe_log_y(y) - p_.a * t) : 0.0;
  return log_initial_density(shrunk) - p_.a * t;
}

double RgrstModel::q1_tilde(double y, double t) const {
  if (y < 0.0 || t < 0.0) throw ParameterError("q1_tilde: arguments must be nonnegative");
  double acc = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const PhaseTerms pt = terms(n, t);
    const double tail = y == 0.0 ? 1.0 : num::normal_sf((safe_log_y(y) - c.mu) / c.sigma);
    acc += p_.theta[n] * pt.survival_value() * tail;
  }
  return acc;
}

std::pair<double, double> RgrstModel::q1_partials(double y, double t) const {
  double dy = 0.0;
  double dt = 0.0;
  const double ly = safe_log_y(y);
  const double yy = std::max(y, kYFloor);
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const PhaseTerms pt = terms(n, t);
    const double z = (ly - c.mu) / c.sigma;
    const double scale = std::exp(pt.log_scale);
    dy -= p_.theta[n] * scale * pt.survival * num::normal_pdf(z) / (c.sigma * yy);
    dt += p_.theta[n] * scale * pt.derivative * num::normal_sf(z);
  }
  return {dy, dt};
}

double RgrstModel::joint_density(double y, double t) const {
  if (y < 0.0 || t < 0.0) throw ParameterError("joint_density: arguments must be nonnegative");
  const double ly = safe_log_y(y);
  const double lp = log_p_tilde(y, t);
  double acc = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const PhaseTerms pt = terms(n, t);
    const double z = (ly - c.mu) / c.sigma;
    const double bracket = p_.a * pt.survival * num::normal_pdf(z) / c.sigma - pt.derivative * num::normal_sf(z);
    acc += p_.theta[n] * std::exp(lp + pt.log_scale) * bracket;
  }
  return acc;
}

double RgrstModel::log_joint_density(double y, double t) const {
  if (y < 0.0 || t < 0.0) throw ParameterError("log_joint_density: arguments must be nonnegative");
  const double ly = safe_log_y(y);
  std::vector<double> logs;
  std::vector<int> signs;
  logs.reserve(comps_.size());
  signs.reserve(comps_.size());
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const PhaseTerms pt = terms(n, t);
    const double z = (ly - c.mu) / c.sigma;
    const double A = p_.a * pt.survival / c.sigma;
    const double B = -pt.derivative;
    double l;
    int sign = 1;
    if (A >= 0.0 && B >= 0.0) {
      l = log_phi_sf_combo(A, B, z);
    } else {
      // Invalid generator: fall back to the direct signed value.
      const double v = A * num::normal_pdf(z) + B * num::normal_sf(z);
      sign = v >= 0.0 ? 1 : -1;
      l = v != 0.0 ? std::log(std::abs(v)) : kNegInf;
    }
    logs.push_back(c.log_theta + pt.log_scale + l);
    signs.push_back(sign);
  }
  const double mix = signed_log_sum(logs, signs);
  if (!std::isfinite(mix)) return kNegInf;
  return log_p_tilde(y, t) + mix;
}

double RgrstModel::time_dependent_density(double y, double t) const {
  const double alive = q1_tilde(y, t) * p_tilde(y, t);
  if (t == 0.0) return alive;
  const auto stopped = num::integrate([&](double s) { return joint_density(y, s); }, 0.0, t, quad_options);
  return stopped.value + alive;
}

namespace {

num::TruncationOptions log_axis(num::TruncationOptions t) {
  t.max_extent = std::min(t.max_extent, 600.0);
  return t;
}

}  // namespace

double RgrstModel::marginal_los(double t) const {
  double center = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) center += p_.theta[n] * comps_[n].mu;
  auto f = [&](double u) { return joint_density(std::exp(u), t) * std::exp(u); };
  return num::integrate_real_line(f, center, quad_options, log_axis(trunc_options)).value;
}

double RgrstModel::marginal_charge(double y) const {
  double slowest = std::numeric_limits<double>::infinity();
  for (const auto& c : comps_) slowest = std::min(slowest, -c.scale);
  auto trunc = trunc_options;
  trunc.step = std::min(trunc.step, 0.5 / (p_.a + slowest));
  // The slice peaks near the time at which the initial charge was about gamma.
  const double t0 = std::max(0.0, std::log(y / p_.gamma) / p_.a);
  if (log_joint_density(y, t0) < -720.0) return 0.0;
  auto f = [&](double t) { return joint_density(y, t); };
  return num::integrate_over(f, num::find_support_from(f, 0.0, t0, trunc), quad_options, trunc).value;
}

double RgrstModel::ph_mixture_los_approx(double t) const {
  double acc = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const PhaseTerms pt = terms(n, t);
    const double En = std::exp(c.mu + 0.5 * c.sigma * c.sigma);
    acc += p_.theta[n] * En * std::exp(pt.log_scale - p_.a * t) * (p_.a * pt.survival - pt.derivative);
  }
  return 2.0 / (num::kPi * p_.gamma) * acc;
}

double RgrstModel::ph_approx_bound_constant() const {
  double max_E = 0.0;
  double max_D = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    max_E = std::max(max_E, std::exp(c.mu + 0.5 * c.sigma * c.sigma));
    const auto& S = gens_[n];
    if (S.rows() == 1) {
      max_D = std::max(max_D, -S(0, 0));
      continue;
    }
    // sup_t |e1 e^{St} S 1| by a dense grid, refined with Brent around the best node.
    const double horizon = 40.0 / -c.scale;
    const int nodes = 4000;
    std::vector<double> ts(nodes + 1);
    for (int k = 0; k <= nodes; ++k) ts[k] = horizon * k / nodes;
    const auto seq = phase_terms_sorted(S, ts);
    int best = 0;
    double best_v = 0.0;
    for (int k = 0; k <= nodes; ++k) {
      const double v = std::abs(seq[k].derivative_value());
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    const double lo = ts[std::max(0, best - 1)];
    const double hi = ts[std::min(nodes, best + 1)];
    const auto r = boost::math::tools::brent_find_minima(
        [&](double t) { return -std::abs(phase_terms(S, t).derivative_value()); }, lo, hi, 52);
    max_D = std::max({max_D, best_v, -r.second});
  }
  return 2.0 / (num::kPi * p_.gamma) * max_E * (p_.a + max_D);
}

double RgrstModel::total_mass() const {
  auto f = [&](double u) {
    const double y = std::exp(u);
    return initial_density(y) * q1_tilde(y, 0.0) * y;
  };
  return num::integrate_real_line(f, std::log(p_.gamma), quad_options, log_axis(trunc_options)).value;
}

// m_n = E[sf((V - v*) / sigma)] with V = ln(Y0 / gamma), whose density is
// sech(v) / pi, and v* = mu - ln gamma. Panels are graded around v* on the
// scale of sigma, so the step in the survival factor is resolved for any
// spread; the rule is fixed, which keeps the value smooth in the parameters.
double RgrstModel::total_mass_smooth() const {
  static const num::GaussLegendre rule(16);
  constexpr double kReach = 42.0;  // sech(42) < 1e-17
  double acc = 0.0;
  std::vector<double> cuts;
  for (std::size_t n = 0; n < comps_.size(); ++n) {
    const auto& c = comps_[n];
    const double vs = c.mu - std::log(p_.gamma);
    const double lo = -kReach;
    const double hi = std::min(kReach, vs + 40.0 * c.sigma);
    if (hi <= lo) continue;
    cuts.clear();
    for (double v = lo; v < hi; v += 2.0) cuts.push_back(v);
    cuts.push_back(hi);
    const double h = std::min(c.sigma, 1.0) / 8.0;
    for (double d = h; d < 2.0 * kReach; d *= 2.0) {
      cuts.push_back(vs - d);
      cuts.push_back(vs + d);
    }
    cuts.push_back(vs);
    std::sort(cuts.begin(), cuts.end());
    double part = 0.0;
    double prev = lo;
    auto f = [&](double v) {
      const double e = std::exp(-std::abs(v));
      return 2.0 * e / (1.0 + e * e) * num::normal_sf((v - vs) / c.sigma);
    };
    for (double x : cuts) {
      const double b = std::min(x, hi);
      if (b - prev > 1e-12) {
        part += rule.integrate(f, prev, b);
        prev = b;
      }
    }
    acc += p_.theta[n] * part;
  }
  return acc / num::kPi;
}

namespace {

double conditional_mean(const std::function<double(double)>& f, double center, double min_mass,
                        const num::QuadOptions& q, const num::TruncationOptions& trunc, const char* what) {
  const auto range = num::find_support_real_line(f, center, trunc);
  const double mass = num::integrate_over(f, range, q, trunc).value;
  if (!(mass >= min_mass) || mass <= 0.0) {
    std::ostringstream msg;
    msg << what << ": slice mass " << mass << " below threshold " << min_mass;
    throw ConditioningError(msg.str());
  }
  const double first = num::integrate_over([&](double u) { return u * f(u); }, range, q, trunc).value;
  return first / mass;
}

}  // namespace

double RgrstModel::conditional_mean_log_charge(double t, double min_mass) const {
  double center = 0.0;
  for (std::size_t n = 0; n < comps_.size(); ++n) center += p_.theta[n] * comps_[n].mu;
  auto f = [&](double u) { return joint_density(std::exp(u), t) * std::exp(u); };
  return conditional_mean(f, center, min_mass, quad_options, log_axis(trunc_options),
                          "conditional_mean_log_charge");
}

double RgrstModel::conditional_mean_log_los(double y, double min_mass) const {
  double slowest = std::numeric_limits<double>::infinity();
  for (const auto& c : comps_) slowest = std::min(slowest, -c.scale);
  auto f = [&](double v) { return joint_density(y, std::exp(v)) * std::exp(v); };
  return conditional_mean(f, -std::log(p_.a + slowest), min_mass, quad_options, log_axis(trunc_options),
                          "conditional_mean_log_los");
}

}  // namespace rgrst
