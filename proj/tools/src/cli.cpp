#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "countssm/errors.hpp"
#include "countssm/estimate.hpp"
#include "countssm/io.hpp"
#include "countssm/metrics.hpp"
#include "countssm/parallel.hpp"
#include "countssm/regression.hpp"
#include "countssm/simulate.hpp"

namespace countssm::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kPanelSchemaHelp =
    "Panel CSV: header `id,period,count,exposure,<covariates...>`. `period` is an\n"
    "integer label and periods of a series must be contiguous; an empty `count`\n"
    "marks an unobserved period. `exposure` is the fraction of the period at\n"
    "risk, in (0, 1], and multiplies the Poisson intensity; empty or absent\n"
    "means 1. Covariates are numeric unless declared categorical (config keys\n"
    "categorical.<col> and reference.<col>, or --schema lgpif). Lines starting\n"
    "with '#' are comments.";

constexpr const char* kRegimeHelp =
    "Regimes (q* and q** are the state discount factors applied each period):\n"
    "  independent        state redrawn from the prior every period\n"
    "  shared             q* = q** = 1, one time-invariant effect\n"
    "  increasing         q* = q** = q, variance grows with t\n"
    "  decreasing         q* = p, q** = 1, variance shrinks to 0\n"
    "  converging|bounded q* = p*q, q** = q\n"
    "  constant_variance  q** = beta0 / (p^2 beta0 + (1 - p^2) beta_t), q* = p q**\n"
    "Admissible values: beta0 > 0, 0 < q <= 1, 0 <= p <= 1.";

/// Every option a subcommand may carry; unset optionals defer to the config
/// file and then to built-in defaults.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> regime;
  std::optional<double> beta0;
  std::optional<double> p;
  std::optional<double> q;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> paths;
  std::optional<std::string> lambda;
  std::optional<std::string> schema;
  std::optional<std::string> holdout;
  std::optional<std::string> bic_n;
  std::optional<std::string> regimes;
  std::optional<double> tol;
  std::optional<int> max_iter;
  bool pooled_beta = false;
};

struct Resolved {
  RunConfig config;
  std::uint64_t seed = 0;
  bool entropy_seed = false;
  unsigned threads = 1;
  bool holdout_requested = false;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RegimeKind regime_or_throw(const std::string& name) {
  const auto kind = parse_regime_kind(name);
  if (!kind) {
    std::string valid;
    for (RegimeKind k : all_regime_kinds()) {
      valid += (valid.empty() ? "" : ", ") + std::string(to_string(k));
    }
    throw InputError("unknown regime '" + name + "'; valid: " + valid);
  }
  return *kind;
}

/// Parameters a regime does not use are pinned so that headers and model
/// files do not carry stale values.
RegimeSpec canonical(RegimeSpec spec) {
  switch (spec.kind) {
    case RegimeKind::Independent:
      spec.p = 0.0;
      spec.q = 1.0;
      break;
    case RegimeKind::Shared:
      spec.p = 1.0;
      spec.q = 1.0;
      break;
    case RegimeKind::Increasing:
      spec.p = 1.0;
      break;
    case RegimeKind::Decreasing:
    case RegimeKind::ConstantVariance:
      spec.q = 1.0;
      break;
    case RegimeKind::Converging:
    case RegimeKind::Bounded:
      break;
  }
  return spec;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Resolved resolve(const Common& c) {
  Resolved r;
  RunConfig& cfg = r.config;
  if (!c.config.empty()) cfg = load_config(c.config);
  r.holdout_requested = std::any_of(cfg.entries.begin(), cfg.entries.end(),
                                    [](const auto& kv) { return kv.first == "holdout"; });

  if (c.regime) cfg.regime.kind = regime_or_throw(*c.regime);
  if (c.beta0) cfg.regime.beta0 = *c.beta0;
  if (c.p) cfg.regime.p = *c.p;
  if (c.q) cfg.regime.q = *c.q;
  if (c.horizon) cfg.horizon = *c.horizon;
  if (c.paths) cfg.paths = *c.paths;
  if (c.lambda) {
    cfg.intensities.clear();
    for (const auto& v : split_commas(*c.lambda)) {
      try {
        cfg.intensities.push_back(std::stod(v));
      } catch (const std::exception&) {
        throw InputError("--lambda: not a number: '" + v + "'");
      }
    }
  }
  if (c.schema) {
    if (*c.schema == "lgpif") {
      const double max_exposure = cfg.schema.max_exposure;
      cfg.schema = lgpif_schema();
      cfg.schema.max_exposure = max_exposure;
    } else if (*c.schema != "plain") {
      throw InputError("--schema must be 'plain' or 'lgpif'");
    }
  }
  if (c.holdout) {
    r.holdout_requested = true;
    if (*c.holdout == "last") {
      cfg.holdout = HoldoutRule::last();
    } else {
      try {
        std::size_t used = 0;
        const long long label = std::stoll(*c.holdout, &used);
        if (used != c.holdout->size()) throw std::invalid_argument("trailing");
        cfg.holdout = HoldoutRule::at(label);
      } catch (const std::exception&) {
        throw InputError("--holdout must be 'last' or an integer period label");
      }
    }
  }
  if (c.bic_n) {
    if (*c.bic_n == "observations") {
      cfg.bic = BicConvention::Observations;
    } else if (*c.bic_n == "series") {
      cfg.bic = BicConvention::Series;
    } else {
      throw InputError("--bic-n must be 'observations' or 'series'");
    }
  }
  if (c.regimes) {
    cfg.regimes.clear();
    for (const auto& name : split_commas(*c.regimes)) cfg.regimes.push_back(regime_or_throw(name));
  }
  if (c.tol) cfg.tol = *c.tol;
  if (c.max_iter) cfg.max_iter = *c.max_iter;
  if (c.pooled_beta) cfg.pooled_beta = true;
  cfg.regime = canonical(cfg.regime);
  cfg.validate();

  if (c.seed) {
    r.seed = *c.seed;
  } else if (cfg.seed) {
    r.seed = *cfg.seed;
  } else {
    r.seed = entropy_seed();
    r.entropy_seed = true;
  }

  unsigned threads = 0;
  if (c.threads) {
    threads = *c.threads;
  } else if (cfg.threads) {
    threads = *cfg.threads;
  } else if (const char* env = std::getenv("COUNT_SSM_THREADS"); env && *env) {
    try {
      threads = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw InputError("COUNT_SSM_THREADS must be a nonnegative integer");
    }
  }
  r.threads = resolve_threads(threads);
  return r;
}

std::string regime_line(const RegimeSpec& spec) {
  return "regime=" + std::string(to_string(spec.kind)) + " beta0=" + format_double(spec.beta0) +
         " p=" + format_double(spec.p) + " q=" + format_double(spec.q);
}

/// Header comment lines: command, resolved settings and seed. The thread
/// count is deliberately absent so outputs do not depend on it.
std::vector<std::string> header(const std::string& command, const Resolved& r,
                                std::vector<std::string> extra) {
  std::vector<std::string> lines;
  lines.push_back("count_ssm " + command + " schema_version=" + std::to_string(kSchemaVersion));
  lines.push_back("seed=" + std::to_string(r.seed) + (r.entropy_seed ? " (entropy)" : ""));
  for (auto& e : extra) lines.push_back(std::move(e));
  for (const auto& [k, v] : r.config.entries) lines.push_back("config " + k + "=" + v);
  return lines;
}

void add_seed_threads(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Flat key=value config file; flags override it")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed,
                  "Seed for all randomness; without it an entropy seed is drawn and recorded");
  app->add_option("--threads", c.threads,
                  "Worker threads (0 = all cores; default COUNT_SSM_THREADS or all cores). "
                  "Results do not depend on this");
}

void add_regime(CLI::App* app, Common& c) {
  app->add_option("--regime", c.regime, "Variance regime (see below)");
  app->add_option("--beta0", c.beta0, "Prior shape and rate beta_{1|0} (> 0)");
  app->add_option("--p", c.p, "Regime parameter p in [0, 1]");
  app->add_option("--q", c.q, "Regime parameter q in (0, 1]");
}

void add_panel_options(CLI::App* app, Common& c) {
  app->add_option("--schema", c.schema,
                  "plain (numeric covariates) or lgpif (categorical `type`, reference "
                  "Miscellaneous)");
  app->add_option("--tol", c.tol, "Score-norm tolerance of the regression fit");
  app->add_option("--max-iter", c.max_iter, "Iteration cap of the regression fit");
  app->add_option("--bic-n", c.bic_n,
                  "Sample size in BIC: observations (observed records, default) or series");
  app->add_flag("--pooled-beta", c.pooled_beta,
                "constant_variance reads a beta_t pooled over series instead of each "
                "series' own");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  return out;
}

// --------------------------------------------------------------- estimation

struct TwoStep {
  GlmFit glm;
  Intensities intensities;
  std::vector<std::string> warnings;
};

TwoStep fit_regression(const Panel& panel, const Resolved& r) {
  GlmOptions opts;
  opts.tol = r.config.tol;
  opts.max_iter = r.config.max_iter;
  opts.column_names.push_back("(intercept)");
  for (const auto& n : panel.covariate_names) opts.column_names.push_back(n);
  const auto rows = design_rows(panel);
  TwoStep ts;
  ts.glm = fit_nb_glm(rows, opts);
  if (!ts.glm.converged) {
    ts.warnings.push_back("regression fit stopped at score norm " +
                          format_double(ts.glm.score_norm) + " after " +
                          std::to_string(ts.glm.iterations) + " iterations");
  }
  ts.intensities = compute_intensities(panel, ts.glm.eta);
  return ts;
}

FitOptions fit_options(const Resolved& r, const TwoStep& ts) {
  FitOptions fo;
  fo.likelihood.threads = r.threads;
  fo.likelihood.pooled_beta = r.config.pooled_beta;
  fo.regression_params = static_cast<int>(ts.glm.eta.size());
  fo.bic = r.config.bic;
  return fo;
}

ModelFile model_file(const Panel& train, const TwoStep& ts, const DynamicsFit& fit,
                     const Eigen::VectorXd& eta, std::uint64_t seed) {
  ModelFile m;
  m.regime = canonical(fit.regime);
  m.covariate_names = train.covariate_names;
  m.eta = eta;
  m.dispersion = ts.glm.dispersion;
  m.loglik = fit.loglik;
  m.aic = fit.aic;
  m.bic = fit.bic;
  m.k = fit.k;
  m.n_obs = train.n_observed();
  m.seed = seed;
  m.boundary = fit.boundary;
  return m;
}

Panel training_part(const Panel& panel, const Resolved& r, std::ostream& err) {
  if (!r.holdout_requested) return panel;
  SplitResult split = split_panel(panel, r.config.holdout);
  for (const auto& w : split.warnings) err << "warning: " << w << '\n';
  if (split.train.series.empty()) throw InputError("holdout rule leaves no training data");
  return std::move(split.train);
}

void warn_boundary(const DynamicsFit& fit, std::ostream& err) {
  for (DynParam p : fit.boundary) {
    const char* name = p == DynParam::Beta0 ? "beta0" : p == DynParam::P ? "p" : "q";
    err << "note: " << to_string(fit.regime.kind) << ": " << name
        << " estimate is at the boundary of its range\n";
  }
}

std::vector<RegimeKind> table_regimes(const Resolved& r) {
  if (!r.config.regimes.empty()) return r.config.regimes;
  return {RegimeKind::Independent, RegimeKind::Shared, RegimeKind::Increasing,
          RegimeKind::Decreasing, RegimeKind::ConstantVariance};
}

// ------------------------------------------------------------- subcommands

struct SimulateArgs {
  std::string out_dir;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (!c.regime && c.config.empty()) throw InputError("simulate: --regime is required");
  const Resolved r = resolve(c);
  SimStudyConfig sc;
  sc.regime = r.config.regime;
  sc.horizon = r.config.horizon;
  sc.n_paths = r.config.paths;
  sc.intensities = r.config.intensities;
  sc.seed = r.seed;
  sc.trajectory_paths = std::min<std::size_t>(4, sc.n_paths);
  sc.density_times.clear();
  for (std::size_t t : {1, 5, 20, 50}) {
    if (t <= sc.horizon) sc.density_times.push_back(t);
  }
  sc.threads = r.threads;
  const StudyTables tables = run_study(sc);
  fs::create_directories(a.out_dir);
  std::string lambdas;
  for (double l : sc.intensities) lambdas += (lambdas.empty() ? "" : ",") + format_double(l);
  const auto lines = header("simulate", r,
                            {regime_line(sc.regime), "T=" + std::to_string(sc.horizon) +
                                                         " paths=" + std::to_string(sc.n_paths) +
                                                         " lambda=" + lambdas});
  write_study(tables, a.out_dir, lines);
  out << "wrote trajectories.csv, moments.csv, density.csv to " << a.out_dir << '\n';
  (void)err;
  return kExitOk;
}

int cmd_study(const Common& c, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  Common base = c;
  const double beta0 = c.beta0.value_or(3.0);
  struct Case {
    const char* dir;
    RegimeSpec spec;
  };
  const Case cases[] = {
      {"increasing", RegimeSpec::increasing(beta0, 0.8)},
      {"decreasing", RegimeSpec::decreasing(beta0, 0.8)},
      {"converging", RegimeSpec::converging(beta0, 0.8 / 0.9, 0.9)},
      {"constant_variance", RegimeSpec::constant_variance(beta0, 0.9)},
  };
  for (const auto& cs : cases) {
    Common one = base;
    one.regime = std::string(to_string(cs.spec.kind));
    one.beta0 = cs.spec.beta0;
    one.p = cs.spec.p;
    one.q = cs.spec.q;
    SimulateArgs sub{(fs::path(a.out_dir) / cs.dir).string()};
    if (const int code = cmd_simulate(one, sub, out, err); code != kExitOk) return code;
  }
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  std::string truth;
  std::size_t series = 100;
  std::string eta = "0";
  double missing = 0.0;
  bool static_covariates = false;
};

int cmd_synth(const Common& c, const SynthArgs& a, std::ostream& out, std::ostream& err) {
  Common cc = c;
  if (!cc.regime && c.config.empty()) cc.regime = "shared";
  if (!cc.horizon) cc.horizon = 6;
  const Resolved r = resolve(cc);
  SynthSpec spec;
  spec.n_series = a.series;
  spec.horizon = r.config.horizon;
  spec.regime = r.config.regime;
  const auto eta = split_commas(a.eta);
  if (eta.empty()) throw InputError("--eta needs at least the intercept");
  spec.eta.resize(static_cast<Eigen::Index>(eta.size()));
  for (std::size_t j = 0; j < eta.size(); ++j) {
    try {
      spec.eta(static_cast<Eigen::Index>(j)) = std::stod(eta[j]);
    } catch (const std::exception&) {
      throw InputError("--eta: not a number: '" + eta[j] + "'");
    }
  }
  spec.time_varying_covariates = !a.static_covariates;
  spec.missing_fraction = a.missing;
  const SynthResult result = synth_panel(spec, r.seed);

  const auto lines = header("synth", r,
                            {regime_line(spec.regime), "series=" + std::to_string(a.series) +
                                                           " T=" + std::to_string(spec.horizon) +
                                                           " eta=" + a.eta});
  {
    auto f = open_out(a.out);
    for (const auto& l : lines) f << "# " << l << '\n';
    write_panel(f, result.panel);
  }
  if (!a.truth.empty()) {
    auto f = open_out(a.truth);
    for (const auto& l : lines) f << "# " << l << '\n';
    f << "id,period,intensity,theta\n";
    for (std::size_t i = 0; i < result.panel.series.size(); ++i) {
      const auto& s = result.panel.series[i];
      for (std::size_t t = 0; t < s.records.size(); ++t) {
        f << s.id << ',' << s.records[t].period << ',' << format_double(result.intensities[i][t])
          << ',' << format_double(result.theta[i][t]) << '\n';
      }
    }
  }
  out << "wrote " << result.panel.series.size() << " series to " << a.out << '\n';
  (void)err;
  return kExitOk;
}

struct FitArgs {
  std::string input;
  std::string out;
  bool joint = false;
};

int cmd_fit(const Common& c, const FitArgs& a, std::ostream& out, std::ostream& err) {
  if (!c.regime && c.config.empty()) throw InputError("fit: --regime is required");
  const Resolved r = resolve(c);
  const Panel panel = load_panel(a.input, r.config.schema);
  const Panel train = training_part(panel, r, err);
  const TwoStep ts = fit_regression(train, r);
  for (const auto& w : ts.warnings) err << "warning: " << w << '\n';
  const FitOptions fo = fit_options(r, ts);
  DynamicsFit fit = fit_dynamics(train, ts.intensities, r.config.regime.kind, fo);
  Eigen::VectorXd eta = ts.glm.eta;
  if (a.joint) {
    const JointFit jf = fit_joint(train, eta, fit, fo);
    fit = jf.dynamics;
    eta = jf.eta;
  }
  warn_boundary(fit, err);
  const ModelFile m = model_file(train, ts, fit, eta, r.seed);
  auto f = open_out(a.out);
  for (const auto& l : header("fit", r, {"input=" + a.input, a.joint ? "method=joint" : "method=two-step"})) {
    f << "# " << l << '\n';
  }
  write_model(f, m);
  out << to_string(fit.regime.kind) << ": loglik " << format_double(fit.loglik) << ", AIC "
      << format_double(fit.aic) << ", BIC " << format_double(fit.bic) << '\n';
  return kExitOk;
}

struct CompareArgs {
  std::string input;
  std::string out;
  std::string models_dir;
};

int cmd_compare(const Common& c, const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(c);
  const Panel panel = load_panel(a.input, r.config.schema);
  const Panel train = training_part(panel, r, err);
  const TwoStep ts = fit_regression(train, r);
  for (const auto& w : ts.warnings) err << "warning: " << w << '\n';
  const FitOptions fo = fit_options(r, ts);
  std::vector<DynamicsFit> fits;
  for (RegimeKind kind : table_regimes(r)) {
    fits.push_back(fit_dynamics(train, ts.intensities, kind, fo));
    warn_boundary(fits.back(), err);
  }
  const auto lines = header("compare", r, {"input=" + a.input});
  {
    auto f = open_out(a.out);
    write_comparison_csv(f, fits, lines);
  }
  if (!a.models_dir.empty()) {
    fs::create_directories(a.models_dir);
    for (const auto& fit : fits) {
      auto f = open_out((fs::path(a.models_dir) / (std::string(to_string(fit.regime.kind)) +
                                                    ".model"))
                            .string());
      for (const auto& l : lines) f << "# " << l << '\n';
      write_model(f, model_file(train, ts, fit, ts.glm.eta, r.seed));
    }
  }
  write_comparison_csv(out, fits, {});
  return kExitOk;
}

/// Panel covariates must line up with the model's coefficient vector.
void check_columns(const Panel& panel, const ModelFile& m, const std::string& model_path) {
  if (panel.covariate_names != m.covariate_names) {
    throw InputError("covariate columns of the panel do not match model " + model_path);
  }
}

struct ForecastArgs {
  std::string input;
  std::string model;
  std::string out;
};

int cmd_forecast(const Common& c, const ForecastArgs& a, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(c);
  const ModelFile m = load_model(a.model);
  const Panel panel = load_panel(a.input, r.config.schema);
  check_columns(panel, m, a.model);
  LikelihoodOptions lo;
  lo.threads = r.threads;
  lo.pooled_beta = r.config.pooled_beta;
  const auto forecasts = forecast_next(panel, m.eta, m.regime, lo);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out.empty()) {
    file = open_out(a.out);
    sink = &file;
  }
  for (const auto& l : header("forecast", r, {"input=" + a.input, "model=" + a.model})) {
    *sink << "# " << l << '\n';
  }
  *sink << "id,period,mean\n";
  for (const auto& f : forecasts) {
    *sink << f.id << ',' << f.period << ',' << format_double(f.mean) << '\n';
  }
  (void)err;
  return kExitOk;
}

struct ValidateArgs {
  std::string input;
  std::vector<std::string> models;
  std::string out;
};

int cmd_validate(const Common& c, const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(c);
  const Panel panel = load_panel(a.input, r.config.schema);
  const SplitResult split = split_panel(panel, r.config.holdout);
  for (const auto& w : split.warnings) err << "warning: " << w << '\n';
  if (split.holdout.empty()) throw InputError("holdout rule selects no observed records");
  LikelihoodOptions lo;
  lo.threads = r.threads;
  lo.pooled_beta = r.config.pooled_beta;

  std::vector<std::pair<std::string, std::pair<Eigen::VectorXd, RegimeSpec>>> models;
  if (!a.models.empty()) {
    for (const auto& path : a.models) {
      const ModelFile m = load_model(path);
      check_columns(split.train, m, path);
      models.push_back({std::string(to_string(m.regime.kind)), {m.eta, m.regime}});
    }
  } else {
    const TwoStep ts = fit_regression(split.train, r);
    for (const auto& w : ts.warnings) err << "warning: " << w << '\n';
    const FitOptions fo = fit_options(r, ts);
    for (RegimeKind kind : table_regimes(r)) {
      const DynamicsFit fit = fit_dynamics(split.train, ts.intensities, kind, fo);
      models.push_back({std::string(to_string(kind)), {ts.glm.eta, fit.regime}});
    }
  }

  std::vector<ValidationColumn> columns;
  for (const auto& [name, model] : models) {
    const auto pairs = holdout_forecasts(split, model.first, model.second, lo);
    columns.push_back({name, rmse(pairs), mae(pairs), pdl(pairs)});
  }
  const auto lines = header("validate", r,
                            {"input=" + a.input,
                             "holdout_records=" + std::to_string(split.holdout.size())});
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    write_validation_csv(f, columns, lines);
  }
  out << std::left << std::setw(8) << "";
  for (const auto& col : columns) out << std::setw(20) << col.model;
  out << '\n';
  auto row = [&](const char* label, double ValidationColumn::*field) {
    out << std::setw(8) << label;
    for (const auto& col : columns) {
      std::ostringstream v;
      v << std::fixed << std::setprecision(4) << col.*field;
      out << std::setw(20) << v.str();
    }
    out << '\n';
  };
  row("RMSE", &ValidationColumn::rmse);
  row("MAE", &ValidationColumn::mae);
  row("PDL", &ValidationColumn::pdl);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"count_ssm: Poisson-gamma state-space models for panel count data", "count_ssm"};
  app.require_subcommand(1);
  app.footer(std::string(kRegimeHelp) + "\n\nExit codes: 0 success, 2 input or validation "
                                        "error, 3 numerical or estimation failure.");

  Common common;
  SimulateArgs sim_args;
  SynthArgs synth_args;
  FitArgs fit_args;
  CompareArgs compare_args;
  ForecastArgs forecast_args;
  ValidateArgs validate_args;

  auto* simulate = app.add_subcommand(
      "simulate", "Simulate state and count paths of one regime and summarize them");
  add_seed_threads(simulate, common);
  add_regime(simulate, common);
  simulate->add_option("--T", common.horizon, "Horizon in periods (default 50)");
  simulate->add_option("--paths", common.paths, "Independent paths (default 5000)");
  simulate->add_option("--lambda", common.lambda,
                       "Comma-separated intensities lambda_t; the last is reused (default 1)");
  simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();
  simulate->footer(std::string(kRegimeHelp) +
                   "\n\nOutputs (CSV, '#' header lines record the resolved settings):\n"
                   "  trajectories.csv  path_id,t,theta,y   first min(4, paths) paths\n"
                   "  moments.csv       t,mean,var,se       over all paths; se is the\n"
                   "                                        standard error of the mean\n"
                   "  density.csv       t,grid,density      Gaussian kernel estimate at\n"
                   "                                        t in {1,5,20,50}");

  auto* study = app.add_subcommand(
      "study", "Run the four reference regimes (increasing q=0.8, decreasing p=0.8, "
               "converging q*=0.8 q**=0.9, constant variance p=0.9)");
  add_seed_threads(study, common);
  study->add_option("--beta0", common.beta0, "Prior shape and rate (default 3)");
  study->add_option("--T", common.horizon, "Horizon in periods (default 50)");
  study->add_option("--paths", common.paths, "Independent paths (default 5000)");
  study->add_option("--out", sim_args.out_dir,
                    "Output directory; one subdirectory per regime with the simulate CSVs")
      ->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel with known parameters");
  add_seed_threads(synth, common);
  add_regime(synth, common);
  synth->add_option("--series", synth_args.series, "Number of series (default 100)");
  synth->add_option("--T", common.horizon, "Periods per series (default 6)");
  synth->add_option("--eta", synth_args.eta,
                    "Comma-separated regression coefficients, intercept first; one standard "
                    "normal covariate x1, x2, ... per further entry (default 0)");
  synth->add_option("--missing", synth_args.missing,
                    "Probability that a count is left unobserved (default 0)");
  synth->add_flag("--static-covariates", synth_args.static_covariates,
                  "Draw covariates once per series instead of every period");
  synth->add_option("--out", synth_args.out, "Panel CSV to write")->required();
  synth->add_option("--truth", synth_args.truth,
                    "Optional CSV of true intensities and states: id,period,intensity,theta");
  synth->footer(kPanelSchemaHelp);

  const std::string model_help =
      "Model file: UTF-8 key=value lines (schema_version, regime, beta0, p, q, "
      "covariates, eta with the intercept first, dispersion, loglik, aic, bic, k, "
      "n_obs, seed, boundary).";

  auto* fit = app.add_subcommand(
      "fit", "Two-step fit: negative binomial regression, then the regime's dynamics");
  add_seed_threads(fit, common);
  add_regime(fit, common);
  add_panel_options(fit, common);
  fit->add_option("--input", fit_args.input, "Panel CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--holdout", common.holdout,
                  "Fit only on records before the holdout: 'last' or a period label");
  fit->add_option("--out", fit_args.out, "Model file to write")->required();
  fit->add_flag("--joint", fit_args.joint,
                "Refine by maximizing over regression and dynamics jointly (slow)");
  fit->footer(std::string(kPanelSchemaHelp) + "\n\n" + model_help + "\n\n" + kRegimeHelp);

  auto* compare = app.add_subcommand(
      "compare", "Fit several regimes on one panel and tabulate loglik, AIC and BIC");
  add_seed_threads(compare, common);
  add_panel_options(compare, common);
  compare->add_option("--input", compare_args.input, "Panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--regimes", common.regimes,
                      "Comma-separated regimes (default independent,shared,increasing,"
                      "decreasing,constant_variance)");
  compare->add_option("--holdout", common.holdout,
                      "Fit only on records before the holdout: 'last' or a period label");
  compare->add_option("--out", compare_args.out, "Comparison CSV to write")->required();
  compare->add_option("--models-dir", compare_args.models_dir,
                      "Also write one <regime>.model file per regime here");
  compare->footer(std::string(kPanelSchemaHelp) +
                  "\n\nComparison CSV: rows beta0, p, q, loglik, aic, bic, k, n_bic, "
                  "aic_rank, boundary; one column per regime.\n\n" + kRegimeHelp);

  auto* forecast = app.add_subcommand(
      "forecast", "One-step-ahead predictive mean of every series' next period");
  add_seed_threads(forecast, common);
  forecast->add_option("--schema", common.schema, "plain or lgpif");
  forecast->add_flag("--pooled-beta", common.pooled_beta, "As for fit");
  forecast->add_option("--input", forecast_args.input, "Panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  forecast->add_option("--model", forecast_args.model, "Model file")
      ->required()
      ->check(CLI::ExistingFile);
  forecast->add_option("--out", forecast_args.out, "CSV id,period,mean (default stdout)");
  forecast->footer(std::string(kPanelSchemaHelp) +
                   "\n\nThe forecast for period last+1 uses the covariates and exposure of "
                   "each series' last record. Means are expected counts per period.");

  auto* validate = app.add_subcommand(
      "validate", "Out-of-sample RMSE, MAE and Poisson deviance loss on a holdout period");
  add_seed_threads(validate, common);
  add_panel_options(validate, common);
  validate->add_option("--input", validate_args.input, "Panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  validate->add_option("--holdout", common.holdout, "'last' (default) or a period label");
  validate->add_option("--model", validate_args.models,
                       "Model file(s) fitted on the training part; repeatable. Without it "
                       "every --regimes entry is fitted on the training part");
  validate->add_option("--regimes", common.regimes, "Comma-separated regimes to fit");
  validate->add_option("--out", validate_args.out,
                       "Validation CSV: rows RMSE, MAE, PDL; one column per model");
  validate->footer(std::string(kPanelSchemaHelp) +
                   "\n\nPDL = (2/n) sum [Y log(Y/Yhat) - (Y - Yhat)], with the Y = 0 term "
                   "taken as 2 Yhat / n. Forecasts are predictive means in counts per "
                   "period.");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(common, sim_args, out, err);
    if (*study) return cmd_study(common, sim_args, out, err);
    if (*synth) return cmd_synth(common, synth_args, out, err);
    if (*fit) return cmd_fit(common, fit_args, out, err);
    if (*compare) return cmd_compare(common, compare_args, out, err);
    if (*forecast) return cmd_forecast(common, forecast_args, out, err);
    if (*validate) return cmd_validate(common, validate_args, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitEstimation;
  }
  return kExitInput;
}

}  // namespace countssm::cli
