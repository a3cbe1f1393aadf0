#include "rgrst/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

#include "rgrst/error.hpp"
#include "rgrst/optimize.hpp"
#include "rgrst/parallel.hpp"
#include "rgrst/phasetype.hpp"
#include "rgrst/rng.hpp"
#include "rgrst/simulate.hpp"

namespace rgrst {

std::string ModelDims::str() const {
  std::string s = std::to_string(d.size()) + ":";
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s;
}

ModelDims ModelDims::parse(std::string_view text) {
  auto fail = [&] { return ParameterError("model dims must look like N:d1,...,dN, got '" + std::string(text) + "'"); };
  auto to_int = [&](std::string_view v) {
    int out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size() || out < 1) throw fail();
    return out;
  };
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw fail();
  const int n = to_int(text.substr(0, colon));
  ModelDims dims;
  dims.d.clear();
  std::string_view rest = text.substr(colon + 1);
  while (true) {
    const auto comma = rest.find(',');
    dims.d.push_back(to_int(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (static_cast<int>(dims.d.size()) != n) throw fail();
  return dims;
}

FitData make_fit_data(const Cohort& c, const DesignSchema& schema) {
  Cohort kept;
  kept.columns = c.columns;
  std::size_t dropped = 0;
  for (const auto& r : c.records) {
    if (std::isfinite(r.total_charge) && r.total_charge > 0.0 && std::isfinite(r.los) && r.los > 0.0)
      kept.records.push_back(r);
    else
      ++dropped;
  }
  auto design = design_matrix(kept, schema);
  FitData d;
  const auto n = static_cast<Eigen::Index>(kept.size());
  d.y.resize(n);
  d.t.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y[i] = kept.records[i].total_charge;
    d.t[i] = kept.records[i].los;
  }
  d.Xc = std::move(design.charge);
  d.Xl = std::move(design.los);
  d.charge_names = std::move(design.charge_names);
  d.los_names = std::move(design.los_names);
  d.dropped = dropped;
  return d;
}

namespace {

void check_data(const RegressionModel& m, const FitData& d) {
  const auto n = d.y.size();
  if (d.t.size() != n || d.Xc.rows() != n || d.Xl.rows() != n) throw DataError("fit data columns differ in length");
  if (d.Xc.cols() != m.beta_charge.size() || d.Xl.cols() != m.beta_los.size())
    throw ParameterError("coefficient count does not match the design");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(std::isfinite(d.y[i]) && d.y[i] > 0.0 && std::isfinite(d.t[i]) && d.t[i] > 0.0))
      throw DataError("observations must be positive and finite (record " + std::to_string(i) + ")");
  if (!d.Xc.allFinite() || !d.Xl.allFinite()) throw DataError("covariates must be finite");
}

// Unchecked sum; the sentinel stands in for any non-finite term.
double sum_log_density(const RgrstModel& model, const RegressionModel& m, const FitData& d) {
  const auto n = d.y.size();
  std::vector<double> terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = d.Xc.cols() ? d.Xc.row(i).dot(m.beta_charge) : 0.0;
    const double tau = d.Xl.cols() ? d.Xl.row(i).dot(m.beta_los) : 0.0;
    const double v = model.log_joint_density(d.y[i] * std::exp(-c), d.t[i] * std::exp(-tau)) - c - tau;
    if (!std::isfinite(v)) return kLogLikSentinel;
    terms[i] = v;
  }
  return num::pairwise_sum(terms);
}

double objective_value(const RegressionModel& m, const FitData& d, FitObjective obj) {
  const RgrstModel model(m.base);
  const double ll = sum_log_density(model, m, d);
  if (ll == kLogLikSentinel || obj == FitObjective::Unconditional) return ll;
  const double mass = model.total_mass_smooth();
  if (!(mass > 0.0)) return kLogLikSentinel;
  return ll - static_cast<double>(d.y.size()) * std::log(mass);
}

}  // namespace

double log_likelihood(const RegressionModel& m, const FitData& data) {
  check_data(m, data);
  return sum_log_density(RgrstModel(m.base), m, data);
}

double conditional_log_likelihood(const RegressionModel& m, const FitData& data) {
  check_data(m, data);
  return objective_value(m, data, FitObjective::Conditional);
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) return {};
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) w[i] = std::exp(z[i] - top);
  double sum = num::pairwise_sum(w);
  for (auto& v : w) v /= sum;
  // a second pass pulls the rounding residue of the sum to within an ulp
  sum = num::pairwise_sum(w);
  for (auto& v : w) v /= sum;
  return w;
}

ParamLayout::ParamLayout(ModelDims dims, int n_charge, int n_los)
    : dims_(std::move(dims)), n_charge_(n_charge), n_los_(n_los) {
  int k = static_cast<int>(dims_.components()) - 1;
  for (int d : dims_.d) k += 2 + (2 * d - 1);
  size_ = k + n_charge_ + n_los_;
}

RegressionModel ParamLayout::unpack(const Eigen::VectorXd& x) const {
  const auto N = dims_.components();
  std::vector<double> logits(N, 0.0);
  int pos = 0;
  for (std::size_t i = 1; i < N; ++i) logits[i] = x[pos++];
  RegressionModel m;
  m.base.theta = softmax(logits);
  for (std::size_t c = 0; c < N; ++c) {
    const double mu = x[pos++];
    const double sigma = std::exp(x[pos++]);
    m.base.lognormals.push_back({mu, sigma});
    const int len = 2 * dims_.d[c] - 1;
    m.base.coxians.emplace_back(dims_.d[c], x.segment(pos, len));
    pos += len;
  }
  m.beta_charge = x.segment(pos, n_charge_);
  m.beta_los = x.segment(pos + n_charge_, n_los_);
  return m;
}

Eigen::VectorXd ParamLayout::pack(const RegressionModel& m) const {
  Eigen::VectorXd x(size_);
  const auto N = dims_.components();
  int pos = 0;
  for (std::size_t i = 1; i < N; ++i) x[pos++] = std::log(m.base.theta[i]) - std::log(m.base.theta[0]);
  for (std::size_t c = 0; c < N; ++c) {
    x[pos++] = m.base.lognormals[c].mu;
    x[pos++] = std::log(m.base.lognormals[c].sigma);
    const int len = 2 * dims_.d[c] - 1;
    x.segment(pos, len) = m.base.coxians[c].s;
    pos += len;
  }
  x.segment(pos, n_charge_) = m.beta_charge;
  x.segment(pos + n_charge_, n_los_) = m.beta_los;
  return x;
}

std::vector<std::string> ParamLayout::names() const {
  std::vector<std::string> out;
  const auto N = dims_.components();
  for (std::size_t i = 1; i < N; ++i) out.push_back("logit_" + std::to_string(i + 1));
  for (std::size_t c = 0; c < N; ++c) {
    const auto tag = std::to_string(c + 1);
    out.push_back("mu_" + tag);
    out.push_back("log_sigma_" + tag);
    for (int j = 0; j < 2 * dims_.d[c] - 1; ++j) out.push_back("s_" + tag + "_" + std::to_string(j + 1));
  }
  for (int j = 0; j < n_charge_; ++j) out.push_back("charge_" + std::to_string(j + 1));
  for (int j = 0; j < n_los_; ++j) out.push_back("los_" + std::to_string(j + 1));
  return out;
}

double FitReport::objective_log_likelihood() const {
  return objective == FitObjective::Conditional ? conditional_log_likelihood : log_likelihood;
}

std::pair<double, double> information_criteria(double log_lik, int k, std::size_t n) {
  return {2.0 * k - 2.0 * log_lik, k * std::log(static_cast<double>(n)) - 2.0 * log_lik};
}

std::string_view objective_name(FitObjective o) { return o == FitObjective::Unconditional ? "unconditional" : "conditional"; }

namespace {

int find_intercept(const std::vector<std::string>& names) {
  const auto it = std::find(names.begin(), names.end(), "Intercept");
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

struct SideStart {
  Eigen::VectorXd beta;  // least-squares coefficients of the log response
  std::vector<double> level;  // log response minus slopes, intercept kept
  int intercept = -1;
  double mean = 0.0, sd = 1.0;
};

SideStart side_start(const Eigen::VectorXd& log_resp, const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  SideStart s;
  s.intercept = find_intercept(names);
  s.beta = X.cols() ? Eigen::VectorXd(X.colPivHouseholderQr().solve(log_resp)) : Eigen::VectorXd();
  const auto n = log_resp.size();
  s.level.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = log_resp[i];
    if (X.cols()) v -= X.row(i).dot(s.beta);
    if (s.intercept >= 0) v += s.beta[s.intercept];
    s.level[i] = v;
  }
  s.mean = num::pairwise_sum(s.level) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : s.level) ss += (v - s.mean) * (v - s.mean);
  s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
  if (!(s.sd > 1e-3)) s.sd = 1.0;
  return s;
}

// Start k: thresholds sit above the observed charges by a spread of offsets,
// rates come from the mean stay.
RgrstParams base_start(const ModelDims& dims, const SideStart& charge, double mean_los, std::uint64_t seed, int k) {
  StreamRng rng(seed, static_cast<std::uint64_t>(k), 0x5e7);
  const bool jitter = k > 0;
  const double offset = jitter ? -1.0 + 5.0 * rng.uniform() : 2.0;
  const double sigma = std::clamp(charge.sd * (jitter ? std::exp(0.3 * rng.normal()) : 1.0), 0.05, 5.0);
  const double s0 = -std::log(mean_los) + (jitter ? 0.5 * rng.normal() : 0.0);
  RgrstParams p;
  const auto N = dims.components();
  for (std::size_t c = 0; c < N; ++c) {
    const double spread = static_cast<double>(c) - 0.5 * static_cast<double>(N - 1);
    p.theta.push_back(1.0 / static_cast<double>(N));
    p.lognormals.push_back({charge.mean + offset + spread * charge.sd, sigma});
    const int d = dims.d[c];
    Eigen::VectorXd s(2 * d - 1);
    for (int i = 0; i < d; ++i) {
      s[2 * i] = s0 + std::log(static_cast<double>(d)) + 0.5 * spread;
      if (i + 1 < d) s[2 * i + 1] = s[2 * i] + std::log(0.5);
    }
    p.coxians.emplace_back(d, s);
  }
  p.theta = softmax(std::vector<double>(N, 0.0));
  return p;
}

// E[ln Y_T] and E[ln T] given T > 0 under the base, by a small simulation.
std::pair<double, double> base_log_means(const RgrstParams& base, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n_paths = 4000;
  cfg.seed = seed;
  cfg.params = base;
  double sy = 0.0, st = 0.0;
  std::size_t n = 0;
  for (const auto& r : simulate_cohort(cfg))
    if (!r.censored && r.T > 0.0) {
      sy += std::log(r.Y_T);
      st += std::log(r.T);
      ++n;
    }
  if (n == 0) return {0.0, 0.0};
  return {sy / static_cast<double>(n), st / static_cast<double>(n)};
}

void fill_estimates(FitReport& rep, const ParamLayout& layout, const std::vector<std::string>& charge_names,
                    const std::vector<std::string>& los_names) {
  const auto& x = rep.free_params;
  const bool have_cov = rep.covariance.rows() == x.size();
  auto se_of = [&](int i) { return have_cov ? std::sqrt(std::max(0.0, rep.covariance(i, i))) : std::nan(""); };
  auto make = [](std::string name, double v, double se) {
    Estimate e{std::move(name), v, se, std::nan("")};
    if (se > 0.0) e.p_value = 2.0 * num::normal_sf(std::abs(v / se));
    return e;
  };

  rep.base_estimates.clear();
  const auto N = rep.dims.components();
  const auto& theta = rep.model.base.theta;
  // dtheta_i / dz_j for logits z_2..z_N
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N - 1);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 1; j < N; ++j) J(i, j - 1) = theta[i] * ((i == j ? 1.0 : 0.0) - theta[j]);
  Eigen::MatrixXd cov_theta;
  if (have_cov && N > 1) cov_theta = J * rep.covariance.topLeftCorner(N - 1, N - 1) * J.transpose();
  for (std::size_t i = 0; i < N; ++i) {
    double se = have_cov ? 0.0 : std::nan("");
    if (have_cov && N > 1) se = std::sqrt(std::max(0.0, cov_theta(i, i)));
    rep.base_estimates.push_back(make("theta_" + std::to_string(i + 1), theta[i], se));
  }
  int pos = static_cast<int>(N) - 1;
  for (std::size_t c = 0; c < N; ++c) {
    const auto tag = std::to_string(c + 1);
    const auto& ln = rep.model.base.lognormals[c];
    rep.base_estimates.push_back(make("mu_" + tag, ln.mu, se_of(pos)));
    rep.base_estimates.push_back(make("sigma_" + tag, ln.sigma, ln.sigma * se_of(pos + 1)));
    pos += 2;
    const auto& s = rep.model.base.coxians[c].s;
    for (int j = 0; j < s.size(); ++j, ++pos)
      rep.base_estimates.push_back(make("s_" + tag + "_" + std::to_string(j + 1), s[j], se_of(pos)));
  }
  rep.charge_coefs.clear();
  rep.los_coefs.clear();
  for (std::size_t j = 0; j < charge_names.size(); ++j) {
    const int i = layout.charge_offset() + static_cast<int>(j);
    rep.charge_coefs.push_back(make(charge_names[j], x[i], se_of(i)));
  }
  for (std::size_t j = 0; j < los_names.size(); ++j) {
    const int i = layout.los_offset() + static_cast<int>(j);
    rep.los_coefs.push_back(make(los_names[j], x[i], se_of(i)));
  }
}

}  // namespace

FitReport fit(const FitData& data, const ModelDims& dims, const FitConfig& cfg) {
  if (cfg.n_starts < 1 || cfg.max_iters < 1 || !(cfg.grad_step > 0.0) || !(cfg.f_rel_tol > 0.0))
    throw ParameterError("fit needs n_starts >= 1, max_iters >= 1 and positive tolerances");
  if (data.y.size() == 0) throw DataError("no observations to fit");
  for (int d : dims.d)
    if (d < 1) throw ParameterError("Coxian dimensions must be at least 1");
  const auto pc = static_cast<int>(data.Xc.cols()), pl = static_cast<int>(data.Xl.cols());
  if (static_cast<int>(data.charge_names.size()) != pc || static_cast<int>(data.los_names.size()) != pl)
    throw ParameterError("design names do not match the design columns");
  {
    RegressionModel probe;
    probe.beta_charge = Eigen::VectorXd::Zero(pc);
    probe.beta_los = Eigen::VectorXd::Zero(pl);
    check_data(probe, data);
  }

  const ParamLayout layout(dims, pc, pl);
  const double n = static_cast<double>(data.y.size());
  const auto charge = side_start(data.y.array().log().matrix(), data.Xc, data.charge_names);
  const auto los = side_start(data.t.array().log().matrix(), data.Xl, data.los_names);
  double mean_los = 0.0;
  for (double v : los.level) mean_los += std::exp(v);
  mean_los /= n;

  const Objective objective = [&](const Eigen::VectorXd& x) {
    try {
      const double v = objective_value(layout.unpack(x), data, cfg.objective);
      return v == kLogLikSentinel ? std::numeric_limits<double>::infinity() : -v / n;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<StartRecord> records(cfg.n_starts);
  std::vector<BfgsResult> results(cfg.n_starts);
  parallel_for(cfg.n_starts, [&](std::size_t k) {
    RegressionModel start;
    start.base = base_start(dims, charge, mean_los, cfg.seed, static_cast<int>(k));
    start.beta_charge = charge.beta;
    start.beta_los = los.beta;
    if (charge.intercept >= 0 || los.intercept >= 0) {
      const auto [ey, et] = base_log_means(start.base, cfg.seed);
      if (charge.intercept >= 0) start.beta_charge[charge.intercept] = charge.mean - ey;
      if (los.intercept >= 0) start.beta_los[los.intercept] = los.mean - et;
    }
    const Eigen::VectorXd x0 = layout.pack(start);
    auto& rec = records[k];
    rec.index = static_cast<int>(k);
    const double f0 = objective(x0);
    rec.start_log_likelihood = -f0 * n;
    if (!std::isfinite(f0)) {
      rec.log_likelihood = -std::numeric_limits<double>::infinity();
      rec.message = "objective not finite at the start";
      results[k].f = std::numeric_limits<double>::infinity();
      return;
    }
    BfgsOptions bo;
    bo.max_iters = cfg.max_iters;
    bo.grad_rel_step = cfg.grad_step;
    bo.f_rel_tol = cfg.f_rel_tol;
    results[k] = bfgs_minimize(objective, x0, bo);
    rec.log_likelihood = -results[k].f * n;
    rec.iterations = results[k].iterations;
    rec.converged = results[k].converged;
    rec.message = results[k].message;
  });

  int best = -1;
  for (int k = 0; k < cfg.n_starts; ++k)
    if (std::isfinite(results[k].f) && (best < 0 || results[k].f < results[best].f)) best = k;
  if (best < 0) {
    std::string msg = "every optimizer start failed:";
    for (const auto& r : records) msg += " [" + std::to_string(r.index) + "] " + r.message + ";";
    throw OptimizationError(msg);
  }

  FitReport rep;
  rep.dims = dims;
  rep.objective = cfg.objective;
  rep.free_params = results[best].x;
  rep.free_names = layout.names();
  rep.model = layout.unpack(rep.free_params);
  const RgrstModel fitted(rep.model.base);
  rep.log_likelihood = sum_log_density(fitted, rep.model, data);
  rep.total_mass = fitted.total_mass_smooth();
  rep.conditional_log_likelihood = rep.log_likelihood - n * std::log(rep.total_mass);
  rep.n = static_cast<std::size_t>(data.y.size());
  rep.dropped = data.dropped;
  rep.k = layout.size();
  std::tie(rep.aic, rep.bic) = information_criteria(rep.objective_log_likelihood(), rep.k, rep.n);
  for (std::size_t c = 0; c < dims.components(); ++c) rep.generator_valid.push_back(generator_valid(fitted.generator(c)));
  rep.starts = std::move(records);
  rep.best_start = best;
  if (cfg.inference)
    fisher_inference(rep, data, cfg.hessian_step);
  else
    fill_estimates(rep, layout, data.charge_names, data.los_names);
  return rep;
}

void fisher_inference(FitReport& rep, const FitData& data, double step) {
  const ParamLayout layout(rep.dims, static_cast<int>(data.Xc.cols()), static_cast<int>(data.Xl.cols()));
  if (layout.size() != rep.free_params.size()) throw ParameterError("report does not match the data design");
  const Objective neg_ll = [&](const Eigen::VectorXd& x) {
    try {
      const double v = objective_value(layout.unpack(x), data, rep.objective);
      return v == kLogLikSentinel ? std::numeric_limits<double>::infinity() : -v;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const Eigen::MatrixXd H = numerical_hessian(neg_ll, rep.free_params, step);
  const auto k = H.rows();
  rep.hessian_asymmetry = (H - H.transpose()).cwiseAbs().maxCoeff();
  rep.covariance = Eigen::MatrixXd::Constant(k, k, std::nan(""));
  rep.hessian_pd = false;
  rep.pseudo_inverse = false;
  if (H.allFinite()) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    const auto& ev = es.eigenvalues();
    rep.hessian_pd = ev.minCoeff() > 0.0;
    const double floor = 1e-10 * ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i)
      if (ev[i] > floor) inv[i] = 1.0 / ev[i];
    rep.pseudo_inverse = !rep.hessian_pd || ev.minCoeff() <= floor;
    rep.covariance = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }
  fill_estimates(rep, layout, data.charge_names, data.los_names);
}

FgCurves estimate_fg(const RgrstParams& base, std::span<const double> t_grid, std::span<const double> y_grid,
                     double charge_intercept, double los_intercept, double min_mass) {
  const RgrstModel m(base);
  FgCurves out;
  out.t.assign(t_grid.begin(), t_grid.end());
  out.y.assign(y_grid.begin(), y_grid.end());
  out.f.resize(t_grid.size());
  out.g.resize(y_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t i) {
    try {
      out.f[i] = m.conditional_mean_log_charge(t_grid[i] * std::exp(-los_intercept), min_mass);
    } catch (const ConditioningError&) {
      out.f[i] = std::nan("");
    }
  });
  parallel_for(y_grid.size(), [&](std::size_t i) {
    try {
      out.g[i] = m.conditional_mean_log_los(y_grid[i] * std::exp(-charge_intercept), min_mass);
    } catch (const ConditioningError&) {
      out.g[i] = std::nan("");
    }
  });
  return out;
}

FgCurves estimate_fg(const FitReport& rep, std::span<const double> t_grid, std::span<const double> y_grid,
                     double min_mass) {
  auto intercept = [](const std::vector<Estimate>& coefs) {
    for (const auto& e : coefs)
      if (e.name == "Intercept") return e.value;
    return 0.0;
  };
  return estimate_fg(rep.model.base, t_grid, y_grid, intercept(rep.charge_coefs), intercept(rep.los_coefs),
                     min_mass);
}

namespace {

nlohmann::ordered_json num_or_null(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); }

nlohmann::ordered_json estimates_json(const std::vector<Estimate>& es) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : es)
    arr.push_back({{"name", e.name}, {"value", num_or_null(e.value)}, {"se", num_or_null(e.se)},
                   {"p_value", num_or_null(e.p_value)}});
  return arr;
}

nlohmann::ordered_json chi_json(const ChiSquareResult& r) {
  return {{"statistic_standard", num_or_null(r.statistic_standard)},
          {"statistic_normalized", num_or_null(r.statistic_normalized)},
          {"dof", r.dof},
          {"p_value", num_or_null(r.p_value)},
          {"n", r.n},
          {"cells_used", r.cells_used},
          {"cells_merged", r.cells_merged},
          {"overflow_expected", num_or_null(r.overflow_expected)},
          {"overflow_observed", r.overflow_observed}};
}

nlohmann::ordered_json gof_json(const GofResults& g) {
  return {{"holdout", g.holdout}, {"charge", chi_json(g.charge)}, {"los", chi_json(g.los)}, {"joint", chi_json(g.joint)}};
}

}  // namespace

std::string report_to_json(const FitReport& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["dims"] = rep.dims.str();
  j["objective"] = objective_name(rep.objective);
  j["n"] = rep.n;
  j["dropped"] = rep.dropped;
  j["k"] = rep.k;
  j["log_likelihood"] = num_or_null(rep.log_likelihood);
  j["conditional_log_likelihood"] = num_or_null(rep.conditional_log_likelihood);
  j["total_mass"] = num_or_null(rep.total_mass);
  j["aic"] = num_or_null(rep.aic);
  j["bic"] = num_or_null(rep.bic);
  j["base"] = estimates_json(rep.base_estimates);
  j["charge_coefficients"] = estimates_json(rep.charge_coefs);
  j["los_coefficients"] = estimates_json(rep.los_coefs);
  j["generator_valid"] = rep.generator_valid;
  j["inference"] = {{"hessian_pd", rep.hessian_pd},
                    {"pseudo_inverse", rep.pseudo_inverse},
                    {"hessian_asymmetry", num_or_null(rep.hessian_asymmetry)}};
  auto starts = nlohmann::ordered_json::array();
  for (const auto& s : rep.starts)
    starts.push_back({{"index", s.index},
                      {"start_log_likelihood", num_or_null(s.start_log_likelihood)},
                      {"log_likelihood", num_or_null(s.log_likelihood)},
                      {"iterations", s.iterations},
                      {"converged", s.converged},
                      {"message", s.message}});
  j["optimizer"] = {{"best_start", rep.best_start}, {"starts", starts}};
  auto free = nlohmann::ordered_json::object();
  for (Eigen::Index i = 0; i < rep.free_params.size(); ++i)
    free[rep.free_names.at(static_cast<std::size_t>(i))] = num_or_null(rep.free_params[i]);
  j["free_parameters"] = free;
  if (rep.gof) j["goodness_of_fit"] = gof_json(*rep.gof);
  if (rep.holdout_gof) j["holdout_goodness_of_fit"] = gof_json(*rep.holdout_gof);
  return j.dump(2);
}

void write_coefficients_csv(std::ostream& os, const FitReport& rep) {
  std::vector<std::string> names;
  for (const auto& e : rep.charge_coefs) names.push_back(e.name);
  for (const auto& e : rep.los_coefs)
    if (std::find(names.begin(), names.end(), e.name) == names.end()) names.push_back(e.name);
  auto cell = [&](double v) {
    if (std::isfinite(v)) os << std::setprecision(10) << v;
  };
  auto side = [&](const std::vector<Estimate>& es, const std::string& name) {
    for (const auto& e : es)
      if (e.name == name) {
        cell(e.value);
        os << ',';
        cell(e.p_value);
        return;
      }
    os << ',';
  };
  os << "regressor,charge_coef,charge_p,los_coef,los_p\n";
  for (const auto& name : names) {
    os << name << ',';
    side(rep.charge_coefs, name);
    os << ',';
    side(rep.los_coefs, name);
    os << '\n';
  }
}

}  // namespace rgrst

namespace rgrst {

RgrstParams scaled_params(const RgrstParams& base, double c, double tau) {
  RgrstParams q = base;
  q.a = base.a * std::exp(-tau);
  q.gamma = base.gamma * std::exp(c);
  for (auto& ln : q.lognormals) ln.mu += c;
  for (auto& cx : q.coxians) cx.s.array() -= tau;
  return q;
}

LoadedModel load_report_model(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (j.at("schema_version").get<int>() != 1) throw SchemaError("unsupported report schema_version");
    LoadedModel out;
    out.dims = ModelDims::parse(j.at("dims").get<std::string>());
    for (const auto& e : j.at("charge_coefficients")) out.charge_names.push_back(e.at("name").get<std::string>());
    for (const auto& e : j.at("los_coefficients")) out.los_names.push_back(e.at("name").get<std::string>());
    const ParamLayout layout(out.dims, static_cast<int>(out.charge_names.size()),
                             static_cast<int>(out.los_names.size()));
    const auto& free = j.at("free_parameters");
    const auto names = layout.names();
    if (free.size() != names.size()) throw SchemaError("report free parameters do not match its dims");
    Eigen::VectorXd x(layout.size());
    for (std::size_t i = 0; i < names.size(); ++i) x[static_cast<Eigen::Index>(i)] = free.at(names[i]).get<double>();
    out.model = layout.unpack(x);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("not a fit report: ") + e.what());
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("not a fit report: ") + e.what());
  }
}

}  // namespace rgrst
