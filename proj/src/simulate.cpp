#include "rgrst/simulate.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "rgrst/error.hpp"
#include "rgrst/numeric.hpp"
#include "rgrst/parallel.hpp"

namespace rgrst {

double initial_from_uniform(double gamma, double u) { return gamma * std::tan(0.5 * num::kPi * u); }

double sample_initial(double gamma, StreamRng& rng) { return initial_from_uniform(gamma, rng.uniform()); }

StoppingResult stopping_time(double omega, double y0, const RgrstModel& model, double t_max) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw ParameterError("stopping_time: omega must lie in [0, 1]");
  if (!(y0 >= 0.0)) throw ParameterError("stopping_time: y0 must be nonnegative");
  if (!(t_max > 0.0)) throw ParameterError("stopping_time: t_max must be positive");
  const double a = model.params().a;
  auto stay = [&](double s) { return model.q1_tilde(y0 * std::exp(a * s), s) >= omega; };

  StoppingResult r;
  if (!stay(0.0)) return r;
  double lo = 0.0, hi = 1.0;
  while (stay(hi)) {
    lo = hi;
    hi *= 2.0;
    if (lo > 10.0 * t_max) {
      r.T = t_max;
      r.censored = true;
      return r;
    }
  }
  while (hi - lo > 1e-9) {
    if (r.iterations == 200) {
      r.converged = false;
      break;
    }
    ++r.iterations;
    const double mid = 0.5 * (lo + hi);
    (stay(mid) ? lo : hi) = mid;
  }
  r.T = 0.5 * (lo + hi);
  if (r.T > t_max) {
    r.T = t_max;
    r.censored = true;
  }
  return r;
}

CovariateSampler CovariateSampler::population() {
  CovariateSampler s;
  s.mdc = {17,     142651, 4138,   32743, 206374, 320765, 211325, 65928, 201134, 66120, 74993, 103597, 11181,
           31682, 257203, 236599, 37899, 22289,  108416, 116683, 75432, 30203,  1929,  46924, 8733,   3916};
  s.severity = {40, 881300, 929347, 479712, 128475};
  s.mortality = {1482115, 519083, 311482, 106154};
  return s;
}

namespace {

int draw_categorical(const std::vector<double>& w, double u) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u * total < acc) return static_cast<int>(k);
  }
  return static_cast<int>(w.size()) - 1;
}

}  // namespace

CovariateColumns simulated_columns(const SimConfig& cfg) {
  if (!cfg.regression) return {};
  const auto& s = cfg.regression->schema;
  const auto l = s.los_columns();
  return {s.charge.mdc || l.mdc, s.charge.severity || l.severity, s.charge.mortality || l.mortality};
}

std::vector<SimRecord> simulate_cohort(const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw ParameterError("simulate_cohort: n_paths must be at least 1");
  if (!(cfg.t_max > 0.0)) throw ParameterError("simulate_cohort: t_max must be positive");
  cfg.params.validate();
  const RgrstModel model(cfg.params);
  const SimRegression* reg = cfg.regression ? &*cfg.regression : nullptr;
  CovariateColumns lc{};
  bool ic = false, il = false;
  if (reg) {
    lc = reg->schema.los_columns();
    ic = schema_has_intercept(reg->schema, reg->schema.charge);
    il = schema_has_intercept(reg->schema, lc);
    const auto nc = static_cast<Eigen::Index>(reg->schema.charge_names().size());
    const auto nl = static_cast<Eigen::Index>(reg->schema.los_names().size());
    if (reg->beta_charge.size() != nc || reg->beta_los.size() != nl)
      throw ParameterError("simulate_cohort: coefficient lengths do not match the design schema");
    if (reg->sampler.mdc.size() != 26 || reg->sampler.severity.size() != 5 || reg->sampler.mortality.size() != 4)
      throw ParameterError("simulate_cohort: covariate sampler needs 26/5/4 weights");
  }

  std::vector<SimRecord> out(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t i) {
    StreamRng rng(cfg.seed, i, 0);
    SimRecord& r = out[i];
    r.y0 = sample_initial(cfg.params.gamma, rng);
    r.omega = rng.uniform();
    const auto st = stopping_time(r.omega, r.y0, model, cfg.t_max);
    r.T = st.T;
    r.censored = st.censored || !st.converged;
    r.Y_T = r.y0 * std::exp(cfg.params.a * r.T);
    if (reg) {
      StreamRng crng(cfg.seed, i, 1);
      r.codes.mdc = draw_categorical(reg->sampler.mdc, crng.uniform());
      r.codes.severity = draw_categorical(reg->sampler.severity, crng.uniform());
      r.codes.mortality = 1 + draw_categorical(reg->sampler.mortality, crng.uniform());
      const double cs = std::exp(design_row(r.codes, reg->schema.charge, ic).dot(reg->beta_charge));
      const double ts = std::exp(design_row(r.codes, lc, il).dot(reg->beta_los));
      r.y0 *= cs;
      r.Y_T *= cs;
      r.T *= ts;
    }
  });
  return out;
}

void write_simulation(std::ostream& os, const std::vector<SimRecord>& recs, const CovariateColumns& cols) {
  os << "y0,omega,T,Y_T,censored";
  if (cols.mdc) os << ",mdc";
  if (cols.severity) os << ",severity";
  if (cols.mortality) os << ",mortality";
  os << '\n' << std::setprecision(17);
  for (const auto& r : recs) {
    os << r.y0 << ',' << r.omega << ',' << r.T << ',' << r.Y_T << ',' << (r.censored ? 1 : 0);
    if (cols.mdc) os << ',' << r.codes.mdc;
    if (cols.severity) os << ',' << r.codes.severity;
    if (cols.mortality) os << ',' << r.codes.mortality;
    os << '\n';
  }
}

Cohort to_cohort(const std::vector<SimRecord>& recs, const CovariateColumns& cols) {
  Cohort c;
  c.columns = cols;
  for (const auto& r : recs) {
    if (r.censored || !(r.T > 0.0)) continue;
    PatientRecord p = r.codes;
    p.total_charge = r.Y_T;
    p.los = r.T;
    c.records.push_back(p);
  }
  return c;
}

}  // namespace rgrst
