#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "rgrst/cohort.hpp"
#include "rgrst/error.hpp"
#include "rgrst/estimate.hpp"
#include "rgrst/gof.hpp"
#include "rgrst/grid.hpp"
#include "rgrst/parallel.hpp"
#include "rgrst/simulate.hpp"

namespace rgrst::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

class ConfigError : public Error {
public:
  using Error::Error;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string_view rest = text;
  while (!rest.empty() || out.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || end != item.data() + item.size() || !std::isfinite(v))
      throw ConfigError(flag + ": bad number '" + std::string(item) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
    if (rest.empty()) throw ConfigError(flag + ": trailing comma");
  }
  return out;
}

// "none", "all" or a comma list of mdc, severity, mortality.
CovariateColumns parse_columns(const std::string& text, const std::string& flag) {
  if (text == "none") return {};
  if (text == "all") return CovariateColumns::all();
  CovariateColumns c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "mdc")
      c.mdc = true;
    else if (item == "severity")
      c.severity = true;
    else if (item == "mortality")
      c.mortality = true;
    else
      throw ConfigError(flag + ": unknown covariate '" + item + "' (use mdc, severity, mortality, all or none)");
  }
  return c;
}

InterceptMode parse_intercept(const std::string& s) {
  if (s == "always") return InterceptMode::Always;
  if (s == "never") return InterceptMode::Never;
  return InterceptMode::Auto;
}

Partition parse_partition(const std::string& text, const std::string& flag) {
  try {
    return Partition::parse(text);
  } catch (const ParameterError& e) {
    throw ConfigError(flag + ": " + e.what());
  }
}

void check_output(const std::string& path, const std::string& flag) {
  if (path.empty()) return;
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw ConfigError(flag + ": directory " + parent.string() + " does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(is), {}};
}

template <class F>
std::string to_string_with(F&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

// Baseline process either from flags or from a saved fit report.
struct ModelFlags {
  std::string mu, sigma, s, theta;
  std::string dims = "1:1";
  double a = 1.0;
  double gamma = 1.0;
  std::string report;

  void add(CLI::App* app, bool allow_report) {
    app->add_option("--mu", mu, "log-normal location, one per component (comma list)");
    app->add_option("--sigma", sigma, "log-normal scale, one per component");
    app->add_option("--s", s, "raw Coxian parameters, 2d-1 per component, concatenated");
    app->add_option("--theta", theta, "mixture weights (default uniform)");
    app->add_option("--dims", dims, "components and Coxian dimensions, N:d1,...,dN")->capture_default_str();
    app->add_option("--a", a, "charge growth rate")->capture_default_str();
    app->add_option("--gamma", gamma, "half-Cauchy scale of the initial charge")->capture_default_str();
    if (allow_report) app->add_option("--model", report, "fit report JSON to take the model from")->check(CLI::ExistingFile);
  }

  bool from_report() const { return !report.empty(); }

  RgrstParams params() const {
    if (mu.empty() || sigma.empty() || s.empty())
      throw ConfigError("--mu, --sigma and --s are required");
    ModelDims d;
    try {
      d = ModelDims::parse(dims);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("--dims: ") + e.what());
    }
    const auto N = d.components();
    const auto mus = parse_list(mu, "--mu"), sigmas = parse_list(sigma, "--sigma"), raw = parse_list(s, "--s");
    if (mus.size() != N || sigmas.size() != N) throw ConfigError("--mu and --sigma need one value per component");
    std::size_t need = 0;
    for (int k : d.d) need += 2 * k - 1;
    if (raw.size() != need) throw ConfigError("--s needs " + std::to_string(need) + " values for dims " + dims);
    RgrstParams p;
    p.theta = theta.empty() ? std::vector<double>(N, 1.0 / N) : parse_list(theta, "--theta");
    if (p.theta.size() != N) throw ConfigError("--theta needs one weight per component");
    std::size_t pos = 0;
    for (std::size_t c = 0; c < N; ++c) {
      p.lognormals.push_back({mus[c], sigmas[c]});
      const int len = 2 * d.d[c] - 1;
      p.coxians.emplace_back(d.d[c], Eigen::Map<const Eigen::VectorXd>(raw.data() + pos, len));
      pos += len;
    }
    p.a = a;
    p.gamma = gamma;
    try {
      p.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    return p;
  }
};

DesignSchema schema_from_names(const std::vector<std::string>& charge, const std::vector<std::string>& los) {
  auto cols = [](const std::vector<std::string>& names) {
    CovariateColumns c;
    for (const auto& n : names) {
      if (n.rfind("MDC_", 0) == 0) c.mdc = true;
      if (n == "Severity") c.severity = true;
      if (n == "Mortality") c.mortality = true;
    }
    return c;
  };
  auto has_icpt = [](const std::vector<std::string>& names) {
    return std::find(names.begin(), names.end(), "Intercept") != names.end();
  };
  DesignSchema s;
  s.charge = cols(charge);
  s.los = cols(los);
  const bool ic = has_icpt(charge), il = has_icpt(los);
  if (ic != il) throw SchemaError("report mixes intercept settings between sides");
  if (ic == s.charge.any() && il == s.los->any())
    s.intercept = InterceptMode::Auto;
  else
    s.intercept = ic ? InterceptMode::Always : InterceptMode::Never;
  if (s.charge_names() != charge || s.los_names() != los) throw SchemaError("report coefficients do not form a known design");
  return s;
}

struct LoadedFromFlags {
  RegressionModel model;
  DesignSchema schema;
};

LoadedFromFlags model_from(const ModelFlags& flags) {
  if (!flags.from_report()) {
    LoadedFromFlags l;
    l.model.base = flags.params();
    return l;
  }
  try {
    const auto loaded = load_report_model(read_text(flags.report));
    return {loaded.model, schema_from_names(loaded.charge_names, loaded.los_names)};
  } catch (const Error& e) {
    throw ConfigError(std::string("--model: ") + e.what());
  }
}

double named(const RegressionModel& m, const std::vector<std::string>& names, bool charge) {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == "Intercept") return charge ? m.beta_charge[j] : m.beta_los[j];
  return 0.0;
}

Json chi_json(const ChiSquareResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"statistic_standard", num(r.statistic_standard)},
          {"statistic_normalized", num(r.statistic_normalized)},
          {"dof", r.dof},
          {"p_value", num(r.p_value)},
          {"n", r.n},
          {"cells_used", r.cells_used},
          {"cells_merged", r.cells_merged},
          {"overflow_expected", num(r.overflow_expected)},
          {"overflow_observed", r.overflow_observed}};
}

Json gof_json(const GofResults& g) {
  return {{"holdout", g.holdout}, {"charge", chi_json(g.charge)}, {"los", chi_json(g.los)}, {"joint", chi_json(g.joint)}};
}

std::string partition_text(const Partition& p) {
  std::ostringstream os;
  os << std::setprecision(17) << p.lo << ':' << p.hi << ':' << p.bins;
  return os.str();
}

// ---- subcommands -------------------------------------------------------

struct SimulateFlags {
  std::size_t n = 0;
  ModelFlags model;
  std::string covariates = "none";
  std::string beta_charge, beta_los;
  std::string intercept = "auto";
  double t_max = 365.0;
  std::string format = "paths";
  std::string output;
};

std::function<void()> prepare_simulate(const SimulateFlags& f, std::uint64_t seed) {
  check_output(f.output, "--output");
  if (f.n == 0) throw ConfigError("--n must be positive");
  if (!(f.t_max > 0.0)) throw ConfigError("--t-max must be positive");
  SimConfig cfg;
  cfg.n_paths = f.n;
  cfg.seed = seed;
  cfg.params = f.model.params();
  cfg.t_max = f.t_max;
  const auto cols = parse_columns(f.covariates, "--covariates");
  if (cols.any()) {
    SimRegression reg;
    reg.schema.charge = cols;
    reg.schema.intercept = parse_intercept(f.intercept);
    const auto bc = f.beta_charge.empty() ? std::vector<double>{} : parse_list(f.beta_charge, "--beta-charge");
    const auto bl = f.beta_los.empty() ? std::vector<double>{} : parse_list(f.beta_los, "--beta-los");
    const auto nc = reg.schema.charge_names(), nl = reg.schema.los_names();
    if (bc.size() != nc.size() || bl.size() != nl.size())
      throw ConfigError("--beta-charge/--beta-los need " + std::to_string(nc.size()) + "/" + std::to_string(nl.size()) +
                        " values for this design");
    reg.beta_charge = Eigen::Map<const Eigen::VectorXd>(bc.data(), static_cast<Eigen::Index>(bc.size()));
    reg.beta_los = Eigen::Map<const Eigen::VectorXd>(bl.data(), static_cast<Eigen::Index>(bl.size()));
    cfg.regression = reg;
  } else if (!f.beta_charge.empty() || !f.beta_los.empty()) {
    throw ConfigError("--beta-charge/--beta-los need --covariates");
  }
  return [cfg, f] {
    spdlog::info("simulating {} paths", cfg.n_paths);
    const auto recs = simulate_cohort(cfg);
    const auto cols = simulated_columns(cfg);
    write_text(f.output, to_string_with([&](std::ostream& os) {
                 if (f.format == "records")
                   write_cohort(os, to_cohort(recs, cols));
                 else
                   write_simulation(os, recs, cols);
               }));
  };
}

struct FitFlags {
  std::string input, output, coef, rejects;
  std::string dims = "1:1";
  int starts = 16;
  int max_iters = 500;
  std::string objective = "conditional";
  std::string covariates = "auto";
  std::string los_covariates;
  std::string intercept = "auto";
  bool gof = false;
  bool no_inference = false;
  double holdout = 0.0;
  std::string partition_charge, partition_los;
};

GofOptions gof_options(const std::string& pc, const std::string& pl) {
  GofOptions o;
  if (!pc.empty()) o.charge = parse_partition(pc, "--partition-charge");
  if (!pl.empty()) o.los = parse_partition(pl, "--partition-los");
  return o;
}

std::function<void()> prepare_fit(const FitFlags& f, std::uint64_t seed) {
  check_output(f.output, "--output");
  check_output(f.coef, "--coef");
  check_output(f.rejects, "--rejects");
  ModelDims dims;
  try {
    dims = ModelDims::parse(f.dims);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("--dims: ") + e.what());
  }
  if (f.starts < 1) throw ConfigError("--starts must be at least 1");
  if (f.max_iters < 1) throw ConfigError("--max-iters must be at least 1");
  if (!(f.holdout >= 0.0 && f.holdout < 1.0)) throw ConfigError("--holdout-fraction must lie in [0, 1)");
  const auto gopts = gof_options(f.partition_charge, f.partition_los);
  std::optional<CovariateColumns> cols, los_cols;
  if (f.covariates != "auto") cols = parse_columns(f.covariates, "--covariates");
  if (!f.los_covariates.empty()) los_cols = parse_columns(f.los_covariates, "--los-covariates");

  FitConfig cfg;
  cfg.n_starts = f.starts;
  cfg.max_iters = f.max_iters;
  cfg.seed = seed;
  cfg.objective = f.objective == "unconditional" ? FitObjective::Unconditional : FitObjective::Conditional;
  cfg.inference = !f.no_inference;

  return [=] {
    const auto read = read_cohort(f.input);
    spdlog::info("read {} records, {} rejected", read.cohort.size(), read.rejects.size());
    DesignSchema schema;
    schema.charge = cols.value_or(read.cohort.columns);
    schema.los = los_cols;
    schema.intercept = parse_intercept(f.intercept);

    Cohort train = read.cohort, hold;
    if (f.holdout > 0.0) {
      const auto perm = subsample(read.cohort, read.cohort.size(), seed);
      const auto n_hold = static_cast<std::size_t>(std::llround(f.holdout * static_cast<double>(perm.size())));
      hold.columns = train.columns = read.cohort.columns;
      hold.records.assign(perm.records.begin(), perm.records.begin() + static_cast<std::ptrdiff_t>(n_hold));
      train.records.assign(perm.records.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.records.end());
    }
    auto data = make_fit_data(train, schema);
    data.dropped += read.rejects.size();
    auto rep = fit(data, dims, cfg);
    spdlog::info("best start {} log-likelihood {}", rep.best_start, rep.objective_log_likelihood());
    if (f.gof) {
      auto in_opts = gopts;
      in_opts.chi.fitted_params = rep.k;
      rep.gof = evaluate_fit(data.y, data.t, data.Xc, data.Xl, rep.model, in_opts);
      if (!hold.records.empty()) {
        const auto hd = make_fit_data(hold, schema);
        rep.holdout_gof = out_sample_eval(hd.y, hd.t, hd.Xc, hd.Xl, rep.model, gopts);
      }
    }
    write_text(f.output, report_to_json(rep) + "\n");
    if (!f.coef.empty()) write_text(f.coef, to_string_with([&](std::ostream& os) { write_coefficients_csv(os, rep); }));
    if (!f.rejects.empty())
      write_text(f.rejects, to_string_with([&](std::ostream& os) { write_rejects(os, read.rejects); }));
  };
}

struct GofFlags {
  std::string input, holdout_input, output, plots;
  ModelFlags model;
  std::string partition_charge, partition_los;
  double kde_charge = kKdeChargeWidth;
  double kde_los = kKdeLosWidth;
};

void write_plots(const fs::path& dir, const std::string& prefix, const Residuals& res, const ResidualDensities& dens,
                 const GofOptions& o, double bw_charge, double bw_los) {
  auto marginal = [&](const Partition& p, const std::vector<double>& xs, double bw, auto&& model_density) {
    std::vector<double> mids(p.bins), hist(p.bins, 0.0);
    for (int i = 0; i < p.bins; ++i) mids[i] = 0.5 * (p.edge(i) + p.edge(i + 1));
    for (double x : xs)
      if (const int i = p.index(x); i >= 0) hist[i] += 1.0;
    const double scale = 1.0 / (static_cast<double>(xs.size()) * p.width());
    const auto kde = kde_gaussian(xs, bw, mids);
    std::vector<double> model(p.bins);
    parallel_for(p.bins, [&](std::size_t i) { model[i] = model_density(mids[i]); });
    return to_string_with([&](std::ostream& os) {
      os << "x,model,histogram,kde\n" << std::setprecision(12);
      for (int i = 0; i < p.bins; ++i) os << mids[i] << ',' << model[i] << ',' << hist[i] * scale << ',' << kde[i] << '\n';
    });
  };
  write_text(dir / (prefix + "charge_marginal.csv"),
             marginal(o.charge, res.log_charge, bw_charge, [&](double u) { return dens.log_charge(u); }));
  write_text(dir / (prefix + "los_marginal.csv"), marginal(o.los, res.los, bw_los, [&](double t) { return dens.los(t); }));

  const auto &pc = o.charge, &pl = o.los;
  std::vector<double> hist(static_cast<std::size_t>(pc.bins) * pl.bins, 0.0);
  for (std::size_t k = 0; k < res.los.size(); ++k) {
    const int i = pc.index(res.log_charge[k]), j = pl.index(res.los[k]);
    if (i >= 0 && j >= 0) hist[static_cast<std::size_t>(i) * pl.bins + j] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(res.los.size()) * pc.width() * pl.width());
  write_text(dir / (prefix + "joint.csv"), to_string_with([&](std::ostream& os) {
               os << "u,t,model,histogram\n" << std::setprecision(12);
               for (int i = 0; i < pc.bins; ++i)
                 for (int j = 0; j < pl.bins; ++j) {
                   const double u = 0.5 * (pc.edge(i) + pc.edge(i + 1)), t = 0.5 * (pl.edge(j) + pl.edge(j + 1));
                   os << u << ',' << t << ',' << dens.joint(u, t) << ','
                      << hist[static_cast<std::size_t>(i) * pl.bins + j] * scale << '\n';
                 }
             }));
}

std::function<void()> prepare_gof(const GofFlags& f) {
  check_output(f.output, "--output");
  if (!f.plots.empty() && fs::exists(f.plots) && !fs::is_directory(f.plots))
    throw ConfigError("--plots: " + f.plots + " is not a directory");
  if (!f.model.from_report() && f.model.mu.empty()) throw ConfigError("give --model or --mu/--sigma/--s");
  if (!(f.kde_charge > 0.0 && f.kde_los > 0.0)) throw ConfigError("kernel widths must be positive");
  const auto loaded = model_from(f.model);
  const auto opts = gof_options(f.partition_charge, f.partition_los);

  return [=] {
    const ResidualDensities dens(loaded.model.base);
    Json j;
    j["schema_version"] = 1;
    j["kde"] = {{"charge", f.kde_charge}, {"los", f.kde_los}};
    j["partitions"] = {{"charge", partition_text(opts.charge)}, {"los", partition_text(opts.los)}};
    auto one = [&](const std::string& path, bool holdout) {
      const auto read = read_cohort(path);
      const auto data = make_fit_data(read.cohort, loaded.schema);
      const auto g = holdout ? out_sample_eval(data.y, data.t, data.Xc, data.Xl, loaded.model, opts)
                             : evaluate_fit(data.y, data.t, data.Xc, data.Xl, loaded.model, opts);
      j[holdout ? "out_sample" : "in_sample"] = gof_json(g);
      if (!f.plots.empty()) {
        fs::create_directories(f.plots);
        const auto res = residual_transform(data.y, data.t, data.Xc, data.Xl, loaded.model);
        write_plots(f.plots, holdout ? "holdout_" : "", res, dens, opts, f.kde_charge, f.kde_los);
      }
    };
    one(f.input, false);
    if (!f.holdout_input.empty()) one(f.holdout_input, true);
    write_text(f.output, j.dump(2) + "\n");
  };
}

struct DensityFlags {
  ModelFlags model;
  std::string surface = "joint";
  std::string y_range = "0.01:10000:200";
  std::string t_range = "0:30:301";
  std::string format = "csv";
  std::string output;
};

std::function<void()> prepare_density(const DensityFlags& f) {
  check_output(f.output, "--output");
  const auto loaded = model_from(f.model);
  const auto yr = parse_partition(f.y_range, "--y-range"), tr = parse_partition(f.t_range, "--t-range");
  if (!(yr.lo > 0.0) || yr.bins < 2) throw ConfigError("--y-range needs lo > 0 and at least 2 points");
  if (tr.lo < 0.0 || tr.bins < 2) throw ConfigError("--t-range needs lo >= 0 and at least 2 points");
  // reference covariates: only the intercepts act
  const auto params = scaled_params(loaded.model.base, named(loaded.model, loaded.schema.charge_names(), true),
                                    named(loaded.model, loaded.schema.los_names(), false));

  return [=] {
    const RgrstModel m(params);
    auto g = DensityGrid::zeros(log_space(yr.lo, yr.hi, yr.bins), lin_space(tr.lo, tr.hi, tr.bins));
    std::function<double(double, double)> value;
    if (f.surface == "q1")
      value = [&](double y, double t) { return m.q1_tilde(y, t); };
    else if (f.surface == "time")
      value = [&](double y, double t) { return m.time_dependent_density(y, t); };
    else if (f.surface == "survival")
      value = [&](double y, double t) { return m.q1_tilde(y, t) * m.p_tilde(y, t); };
    else
      value = [&](double y, double t) { return m.joint_density(y, t); };
    parallel_for(g.ny(), [&](std::size_t i) {
      for (std::size_t k = 0; k < g.nt(); ++k) g.at(i, k) = value(g.y_grid[i], g.t_grid[k]);
    });
    if (f.format == "json")
      write_text(f.output, grid_to_json(g) + "\n");
    else
      write_text(f.output, to_string_with([&](std::ostream& os) { write_grid_csv(os, g); }));
  };
}

struct SummaryFlags {
  std::string input, output;
};

std::function<void()> prepare_summary(const SummaryFlags& f) {
  check_output(f.output, "--output");
  return [=] {
    const auto read = read_cohort(f.input);
    write_text(f.output, to_string_with([&](std::ostream& os) { write_summary(os, describe(read.cohort)); }));
  };
}

spdlog::level::level_enum log_level() {
  const char* env = std::getenv("RGRST_LOG");
  if (!env || !*env) return spdlog::level::warn;
  const auto lvl = spdlog::level::from_str(env);
  return lvl;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RGRST model of hospital charge and length of stay"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  unsigned threads = 0;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker cap, 0 = all cores")->capture_default_str();

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "simulate stays from the model");
  sim->add_option("--n", sf.n, "number of paths")->required();
  sf.model.add(sim, false);
  sim->add_option("--covariates", sf.covariates, "covariates to draw: none, all or a list of mdc,severity,mortality")
      ->capture_default_str();
  sim->add_option("--beta-charge", sf.beta_charge, "charge coefficients in design order");
  sim->add_option("--beta-los", sf.beta_los, "LOS coefficients in design order");
  sim->add_option("--intercept", sf.intercept, "intercept mode")->check(CLI::IsMember({"auto", "always", "never"}));
  sim->add_option("--t-max", sf.t_max, "censoring horizon in days")->capture_default_str();
  sim->add_option("--format", sf.format, "paths (every path) or records (stays with T > 0)")
      ->check(CLI::IsMember({"paths", "records"}))
      ->capture_default_str();
  sim->add_option("-o,--output", sf.output, "output CSV")->required();

  FitFlags ff;
  auto* fitc = app.add_subcommand("fit", "maximum-likelihood fit of a cohort");
  fitc->add_option("--input", ff.input, "cohort CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("-o,--output", ff.output, "report JSON")->required();
  fitc->add_option("--coef", ff.coef, "coefficient CSV");
  fitc->add_option("--rejects", ff.rejects, "rejected-rows CSV");
  fitc->add_option("--dims", ff.dims, "N:d1,...,dN")->capture_default_str();
  fitc->add_option("--starts", ff.starts, "optimizer starts")->capture_default_str();
  fitc->add_option("--max-iters", ff.max_iters, "iterations per start")->capture_default_str();
  fitc->add_option("--objective", ff.objective, "conditional (given T > 0) or unconditional")
      ->check(CLI::IsMember({"conditional", "unconditional"}))
      ->capture_default_str();
  fitc->add_option("--covariates", ff.covariates, "auto (every column present), none, all or a list")
      ->capture_default_str();
  fitc->add_option("--los-covariates", ff.los_covariates, "LOS-side covariates if different");
  fitc->add_option("--intercept", ff.intercept, "intercept mode")->check(CLI::IsMember({"auto", "always", "never"}));
  fitc->add_flag("--gof", ff.gof, "append chi-square tests to the report");
  fitc->add_flag("--no-inference", ff.no_inference, "skip standard errors");
  fitc->add_option("--holdout-fraction", ff.holdout, "share of records held out for out-of-sample tests");
  fitc->add_option("--partition-charge", ff.partition_charge, "log-charge partition lo:hi:bins");
  fitc->add_option("--partition-los", ff.partition_los, "LOS partition lo:hi:bins");

  GofFlags gf;
  auto* gofc = app.add_subcommand("gof", "chi-square tests and plot data");
  gofc->add_option("--input", gf.input, "cohort CSV")->required()->check(CLI::ExistingFile);
  gofc->add_option("--holdout-input", gf.holdout_input, "held-out cohort CSV")->check(CLI::ExistingFile);
  gofc->add_option("-o,--output", gf.output, "results JSON")->required();
  gofc->add_option("--plots", gf.plots, "directory for histogram, kernel and model CSVs");
  gf.model.add(gofc, true);
  gofc->add_option("--partition-charge", gf.partition_charge, "log-charge partition lo:hi:bins");
  gofc->add_option("--partition-los", gf.partition_los, "LOS partition lo:hi:bins");
  gofc->add_option("--kde-charge", gf.kde_charge, "kernel width for log-charge")->capture_default_str();
  gofc->add_option("--kde-los", gf.kde_los, "kernel width for LOS")->capture_default_str();

  DensityFlags df;
  auto* den = app.add_subcommand("density", "density surfaces on a grid");
  df.model.add(den, true);
  den->add_option("--surface", df.surface, "joint, time (stopped process), survival (still in hospital) or q1")
      ->check(CLI::IsMember({"joint", "time", "survival", "q1"}))
      ->capture_default_str();
  den->add_option("--y-range", df.y_range, "log-spaced charge axis lo:hi:n")->capture_default_str();
  den->add_option("--t-range", df.t_range, "uniform LOS axis lo:hi:n")->capture_default_str();
  den->add_option("--format", df.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  den->add_option("-o,--output", df.output, "output file")->required();

  SummaryFlags mf;
  auto* sum = app.add_subcommand("summary", "descriptive statistics by covariate group");
  sum->add_option("--input", mf.input, "cohort CSV")->required()->check(CLI::ExistingFile);
  sum->add_option("-o,--output", mf.output, "summary CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("rgrst", sink);
  logger->set_level(log_level());
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  std::function<void()> job;
  try {
    if (*sim) job = prepare_simulate(sf, seed);
    if (*fitc) job = prepare_fit(ff, seed);
    if (*gofc) job = prepare_gof(gf);
    if (*den) job = prepare_density(df);
    if (*sum) job = prepare_summary(mf);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  set_max_threads(threads);
  int code = 0;
  try {
    job();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 3;
  }
  set_max_threads(0);
  // the sink refers to `err`, which may not outlive this call
  spdlog::set_default_logger(std::make_shared<spdlog::logger>("rgrst_idle"));
  return code;
}

}  // namespace rgrst::cli
