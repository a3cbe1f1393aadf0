#include "rgrst/phasetype.hpp"

#include "rgrst/error.hpp"
#include "rgrst/numeric.hpp"
#include "rgrst/optimize.hpp"
#include "rgrst/parallel.hpp"
#include "rgrst/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rgrst {

CoxianParams CoxianParams::exponential(double s0) {
  Eigen::VectorXd s(1);
  s << s0;
  return {1, s};
}

Eigen::MatrixXd build_generator(const CoxianParams& p) {
  if (p.d < 1 || p.s.size() != 2 * p.d - 1)
    throw ParameterError("Coxian: s must have length 2d-1 (d=" + std::to_string(p.d) +
                         ", got " + std::to_string(p.s.size()) + ")");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p.d, p.d);
  for (int i = 0; i < p.d; ++i) {
    S(i, i) = -std::exp(p.s[2 * i]);
    if (i + 1 < p.d) S(i, i + 1) = std::exp(p.s[2 * i + 1]);
  }
  return S;
}

bool generator_valid(const Eigen::MatrixXd& S) { return (S.rowwise().sum().array() <= 0.0).all(); }

Eigen::VectorXd exit_rates(const Eigen::MatrixXd& S) { return -S.rowwise().sum(); }

namespace {

double norm1(const Eigen::MatrixXd& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); }

// Taylor series for small arguments (norm <= 0.5): 20 terms leave a
// remainder below 0.5^21/21! ~ 1e-26.
Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& B) {
  const Eigen::Index n = B.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 20; ++k) {
    term = term * B / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * result.cwiseAbs().maxCoeff()) break;
  }
  return result;
}

double max_diagonal(const Eigen::MatrixXd& S) { return S.diagonal().maxCoeff(); }

}  // namespace

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& S, double t) {
  if (S.rows() != S.cols()) throw ParameterError("mat_exp: matrix must be square");
  if (!S.allFinite() || !std::isfinite(t)) throw NumericError("mat_exp: non-finite input");
  if (t < 0.0) throw ParameterError("mat_exp: t must be nonnegative");
  const Eigen::MatrixXd A = S * t;
  const double nrm = norm1(A);
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  Eigen::MatrixXd E = taylor_exp(A / std::ldexp(1.0, squarings));
  for (int k = 0; k < squarings; ++k) E = E * E;
  return E;
}

double PhaseTerms::survival_value() const { return std::exp(log_scale) * survival; }
double PhaseTerms::derivative_value() const { return std::exp(log_scale) * derivative; }

PhaseRow phase_row(const Eigen::MatrixXd& S, double t) {
  PhaseRow out;
  if (S.rows() == 1) {
    out.log_scale = S(0, 0) * t;
    out.row = Eigen::RowVectorXd::Ones(1);
    return out;
  }
  const double c = max_diagonal(S);
  const Eigen::MatrixXd shifted = S - c * Eigen::MatrixXd::Identity(S.rows(), S.cols());
  out.row = mat_exp(shifted, t).row(0);
  out.log_scale = c * t;
  return out;
}

PhaseTerms phase_terms(const Eigen::MatrixXd& S, double t) {
  const PhaseRow r = phase_row(S, t);
  PhaseTerms out;
  out.log_scale = r.log_scale;
  out.survival = r.row.sum();
  out.derivative = r.row.dot(S.rowwise().sum());
  return out;
}

std::vector<PhaseTerms> phase_terms_sorted(const Eigen::MatrixXd& S, std::span<const double> times) {
  if (!std::is_sorted(times.begin(), times.end()))
    throw ParameterError("phase_terms_sorted: times must be non-decreasing");
  std::vector<PhaseTerms> out(times.size());
  if (times.empty()) return out;
  if (times.front() < 0.0) throw ParameterError("phase_terms_sorted: negative time");
  const Eigen::Index d = S.rows();
  const Eigen::VectorXd row_sums = S.rowwise().sum();
  if (d == 1) {
    for (std::size_t i = 0; i < times.size(); ++i)
      out[i] = {S(0, 0) * times[i], 1.0, S(0, 0)};
    return out;
  }
  const double c = max_diagonal(S);
  const Eigen::MatrixXd A = S - c * Eigen::MatrixXd::Identity(d, d);
  const double normA = norm1(A);
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(d);
  v[0] = 1.0;
  double log_scale = 0.0;
  double t_prev = 0.0;
  double cached_gap = -1.0;
  Eigen::MatrixXd cached;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double gap = times[i] - t_prev;
    if (gap > 0.0) {
      if (normA * gap <= 0.5) {
        Eigen::RowVectorXd term = v;
        Eigen::RowVectorXd acc = v;
        for (int k = 1; k <= 20; ++k) {
          term = term * A * (gap / k);
          acc += term;
          if (term.cwiseAbs().maxCoeff() < 1e-18 * acc.cwiseAbs().maxCoeff()) break;
        }
        v = acc;
      } else {
        if (gap != cached_gap) {
          cached = mat_exp(A, gap);
          cached_gap = gap;
        }
        v = v * cached;
      }
      log_scale += c * gap;
      const double m = v.cwiseAbs().maxCoeff();
      if (m > 0.0) {
        v /= m;
        log_scale += std::log(m);
      }
      t_prev = times[i];
    }
    out[i] = {log_scale, v.sum(), v.dot(row_sums)};
  }
  return out;
}

double ph_survival(const CoxianParams& p, double t) {
  if (t < 0.0) throw ParameterError("ph_survival: t must be nonnegative");
  const Eigen::MatrixXd S = build_generator(p);
  if (p.d == 1) return std::exp(S(0, 0) * t);
  return std::clamp(phase_terms(S, t).survival_value(), 0.0, 1.0);
}

double ph_cdf(const CoxianParams& p, double t) { return 1.0 - ph_survival(p, t); }

double ph_pdf(const CoxianParams& p, double t) {
  if (t < 0.0) throw ParameterError("ph_pdf: t must be nonnegative");
  const Eigen::MatrixXd S = build_generator(p);
  if (p.d == 1) return -S(0, 0) * std::exp(S(0, 0) * t);
  return -phase_terms(S, t).derivative_value();
}

double ph_log_likelihood(const CoxianParams& p, std::span<const double> samples) {
  const Eigen::MatrixXd S = build_generator(p);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto terms = phase_terms_sorted(S, sorted);
  std::vector<double> logs(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double dens = -terms[i].derivative;
    if (!(dens > 0.0) || !std::isfinite(dens)) return -std::numeric_limits<double>::infinity();
    logs[i] = std::log(dens) + terms[i].log_scale;
  }
  return num::pairwise_sum(logs);
}

PhFitResult ph_fit_mle(std::span<const double> samples, int d, const PhFitOptions& opts) {
  if (samples.empty()) throw DataError("ph_fit_mle: empty sample");
  for (double x : samples)
    if (!(x > 0.0) || !std::isfinite(x)) throw DataError("ph_fit_mle: samples must be positive and finite");
  if (d < 1 || d > 5) throw ParameterError("ph_fit_mle: d must be in [1, 5]");
  if (opts.n_starts < 1) throw ParameterError("ph_fit_mle: need at least one start");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  const double base = std::log(d / mean);

  auto neg_ll = [&](const Eigen::VectorXd& s) {
    return -ph_log_likelihood(CoxianParams(d, s), sorted) / n;
  };

  PhFitResult result;
  result.starts.resize(static_cast<std::size_t>(opts.n_starts));
  std::vector<Eigen::VectorXd> finals(result.starts.size());
  parallel_for(result.starts.size(), [&](std::size_t k) {
    StreamRng rng(opts.seed, k, 0x50480001);
    Eigen::VectorXd s(2 * d - 1);
    const double jitter = k == 0 ? 0.0 : 0.5;
    for (int i = 0; i < d; ++i) {
      s[2 * i] = base + jitter * rng.normal();
      if (i + 1 < d) s[2 * i + 1] = s[2 * i] + std::log(k == 0 ? 0.5 : 0.2 + 0.6 * rng.uniform());
    }
    auto& rec = result.starts[k];
    rec.start = s;
    rec.start_log_likelihood = -neg_ll(s) * n;
    BfgsOptions bo;
    bo.max_iters = opts.max_iters;
    const auto r = bfgs_minimize(neg_ll, s, bo);
    finals[k] = r.x;
    rec.unconstrained_log_likelihood = -r.f * n;
    rec.log_likelihood = rec.unconstrained_log_likelihood;
    rec.converged = r.converged;
    rec.iterations = r.iterations;
    rec.valid = generator_valid(build_generator(CoxianParams(d, r.x)));
    if (!rec.valid && opts.require_valid) {
      // Clamp forward rates to the total rates, then polish with the forward
      // share squashed into (0,1) so the search cannot leave the valid set.
      Eigen::VectorXd w = r.x;
      for (int i = 0; i + 1 < d; ++i) {
        const double share = std::min(std::exp(r.x[2 * i + 1] - r.x[2 * i]), 1.0 - 1e-6);
        w[2 * i + 1] = std::log(share / (1.0 - share));
      }
      auto to_raw = [d](const Eigen::VectorXd& v) {
        Eigen::VectorXd raw = v;
        for (int i = 0; i + 1 < d; ++i) raw[2 * i + 1] = v[2 * i] - std::log1p(std::exp(-v[2 * i + 1]));
        return raw;
      };
      const auto rv = bfgs_minimize([&](const Eigen::VectorXd& v) { return neg_ll(to_raw(v)); }, w, bo);
      finals[k] = to_raw(rv.x);
      rec.log_likelihood = -rv.f * n;
      rec.converged = rv.converged;
      rec.iterations += rv.iterations;
      rec.projected = true;
      rec.valid = generator_valid(build_generator(CoxianParams(d, finals[k])));
    }
  });

  for (std::size_t k = 0; k < result.starts.size(); ++k) {
    const auto& rec = result.starts[k];
    if (!std::isfinite(rec.log_likelihood)) continue;
    if (opts.require_valid && !rec.valid) continue;
    if (result.best_start < 0 || rec.log_likelihood > result.log_likelihood) {
      result.best_start = static_cast<int>(k);
      result.log_likelihood = rec.log_likelihood;
    }
  }
  if (result.best_start < 0)
    throw OptimizationError("ph_fit_mle: no start reached a finite" +
                            std::string(opts.require_valid ? ", valid" : "") + " optimum");
  result.params = CoxianParams(d, finals[static_cast<std::size_t>(result.best_start)]);
  result.valid = result.starts[static_cast<std::size_t>(result.best_start)].valid;
  return result;
}

LognormalFit lognormal_fit(std::span<const double> samples) {
  if (samples.empty()) throw DataError("lognormal_fit: empty sample");
  std::vector<double> logs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] > 0.0) || !std::isfinite(samples[i]))
      throw DataError("lognormal_fit: samples must be positive and finite");
    logs[i] = std::log(samples[i]);
  }
  const double n = static_cast<double>(logs.size());
  LognormalFit f;
  f.mu = num::pairwise_sum(logs) / n;
  std::vector<double> sq(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) sq[i] = (logs[i] - f.mu) * (logs[i] - f.mu);
  f.sigma = std::sqrt(num::pairwise_sum(sq) / n);
  if (f.sigma > 0.0) {
    // sum of log densities of y: -ln y - ln sigma - ln sqrt(2 pi) - z^2/2, with sum z^2 = n
    f.log_likelihood = -num::pairwise_sum(logs) - n * std::log(f.sigma) -
                       n * 0.5 * std::log(2.0 * num::kPi) - 0.5 * n;
  } else {
    f.log_likelihood = std::numeric_limits<double>::infinity();
  }
  return f;
}

}  // namespace rgrst
