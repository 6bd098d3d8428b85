// Acceptance gate: one PASS / FAIL / SKIP line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7        run only the listed criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "countssm/dist.hpp"
#include "countssm/estimate.hpp"
#include "countssm/filter.hpp"
#include "countssm/io.hpp"
#include "countssm/metrics.hpp"
#include "countssm/regression.hpp"
#include "countssm/simulate.hpp"
#include "stats.hpp"

namespace fs = std::filesystem;
using namespace countssm;
using countssm::testing::ks_critical;
using countssm::testing::ks_statistic;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }

std::string fmt(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// ------------------------------------------------------------------ 1

Outcome conjugacy_oracle() {
  double worst = 0.0;
  std::string where;
  for (double alpha : {0.5, 1.0, 3.0, 10.0}) {
    for (double beta : {0.5, 1.0, 3.0, 10.0}) {
      for (double lambda : {0.1, 1.0, 5.0}) {
        const NBLaw law(lambda * alpha / beta, alpha);
        for (std::int64_t y = 0; y <= 20; ++y) {
          const double err =
              std::abs(std::exp(nb_log_pmf(y, law)) - nb_pmf_oracle(y, alpha, beta, lambda));
          if (err > worst) {
            worst = err;
            where = "alpha=" + fmt(alpha) + " beta=" + fmt(beta) + " lambda=" + fmt(lambda) +
                    " y=" + std::to_string(y);
          }
        }
      }
    }
  }
  const std::string d = "max abs error " + fmt(worst) + " at " + where + " (tol 1e-8)";
  return worst <= 1e-8 ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 2

Outcome thinning_property() {
  struct Case {
    double alpha, beta, qstar;
  };
  constexpr std::size_t kDraws = 100000;
  constexpr double kLevel = 1e-3;
  const double critical = ks_critical(kDraws, kDraws, kLevel);
  bool ok = true;
  std::string d;
  std::uint64_t stream = 0;
  for (const Case c : {Case{3, 3, 0.8}, Case{5, 2, 0.5}, Case{1, 1, 0.99}}) {
    Rng rng(20240501, stream++);
    std::vector<double> product(kDraws), direct(kDraws);
    const GammaLaw theta_law(c.alpha, c.beta);
    const BetaLaw b_law(c.qstar * c.alpha, (1.0 - c.qstar) * c.alpha);
    const GammaLaw target(c.qstar * c.alpha, c.beta);
    for (std::size_t i = 0; i < kDraws; ++i) {
      product[i] = sample_gamma(theta_law, rng) * sample_beta(b_law, rng);
      direct[i] = sample_gamma(target, rng);
    }
    const double ks = ks_statistic(product, direct);
    ok = ok && ks < critical;
    d += (d.empty() ? "" : ", ") + std::string("D=") + fmt(ks, 4);
  }
  d += " (critical " + fmt(critical, 4) + ")";
  return ok ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 3

StudyTables study(const RegimeSpec& regime) {
  SimStudyConfig sc;
  sc.regime = regime;
  sc.horizon = 50;
  sc.n_paths = 5000;
  sc.intensities = {1.0};
  sc.seed = 31415;
  sc.trajectory_paths = 0;
  sc.density_times.clear();
  sc.threads = 0;
  return run_study(sc);
}

std::vector<double> exact_variance(const RegimeSpec& regime) {
  const std::vector<double> one{1.0};
  return variance_recursion(regime, one, 50).variance;
}

Outcome study_reproduction() {
  const RegimeSpec inc = RegimeSpec::increasing(3, 0.8);
  const RegimeSpec dec = RegimeSpec::decreasing(3, 0.8);
  const RegimeSpec conv = RegimeSpec::converging(3, 0.8 / 0.9, 0.9);
  const RegimeSpec con = RegimeSpec::constant_variance(3, 0.9);
  const StudyTables t_inc = study(inc), t_dec = study(dec), t_conv = study(conv),
                    t_con = study(con);
  std::vector<std::string> failures;

  // (a) mean one
  double worst_z = 0.0;
  for (const StudyTables* t : {&t_inc, &t_dec, &t_conv, &t_con}) {
    for (const MomentRow& m : t->moments) worst_z = std::max(worst_z, std::abs(m.mean - 1) / m.se);
  }
  if (worst_z >= 4.0) failures.push_back("(a) mean z=" + fmt(worst_z));

  // (b) constant variance
  const auto v_con = exact_variance(con);
  double worst_exact = 0.0, worst_con_z = 0.0;
  for (std::size_t t = 0; t < 50; ++t) {
    worst_exact = std::max(worst_exact, std::abs(v_con[t] - 1.0 / 3.0));
    const MomentRow& m = t_con.moments[t];
    worst_con_z = std::max(worst_con_z, std::abs(m.var - 1.0 / 3.0) / m.var_se);
  }
  if (worst_exact > 1e-12) failures.push_back("(b) exact dev " + fmt(worst_exact));
  if (worst_con_z >= 4.0) failures.push_back("(b) var z=" + fmt(worst_con_z));

  // (c) increasing
  const auto v_inc = exact_variance(inc);
  for (std::size_t t = 1; t < 50; ++t) {
    if (!(v_inc[t] > v_inc[t - 1])) failures.push_back("(c) not increasing at t=" + fmt(t + 1.0));
  }
  double worst_inc_z = 0.0;
  for (std::size_t t : {1, 5, 20, 50}) {
    const MomentRow& m = t_inc.moments[t - 1];
    worst_inc_z = std::max(worst_inc_z, std::abs(m.var - v_inc[t - 1]) / m.var_se);
  }
  if (worst_inc_z >= 4.0) failures.push_back("(c) var z=" + fmt(worst_inc_z));

  // (d) decreasing: the empirical variance is checked against the recursion
  // first, then the recursion's shape.
  const auto v_dec = exact_variance(dec);
  double worst_dec_z = 0.0;
  for (std::size_t t : {1, 5, 20, 50}) {
    const MomentRow& m = t_dec.moments[t - 1];
    worst_dec_z = std::max(worst_dec_z, std::abs(m.var - v_dec[t - 1]) / m.var_se);
  }
  if (worst_dec_z >= 4.0) failures.push_back("(d) var z=" + fmt(worst_dec_z));
  for (std::size_t t = 1; t < 50; ++t) {
    if (!(v_dec[t] < v_dec[t - 1])) failures.push_back("(d) not decreasing at t=" + fmt(t + 1.0));
  }
  if (!(v_dec[49] < 0.05)) failures.push_back("(d) Var(Theta_50)=" + fmt(v_dec[49]));

  // (e) converging between decreasing and constant
  const auto v_conv = exact_variance(conv);
  for (std::size_t t = 19; t < 50; ++t) {
    if (!(v_dec[t] < v_conv[t] && v_conv[t] < v_con[t])) {
      failures.push_back("(e) ordering fails at t=" + fmt(t + 1.0));
      break;
    }
  }

  std::string d = "max |mean-1|/SE " + fmt(worst_z) + "; constant var z " + fmt(worst_con_z) +
                  "; increasing var z " + fmt(worst_inc_z) + "; Var50 inc " + fmt(v_inc[49]) +
                  " dec " + fmt(v_dec[49]) + " conv " + fmt(v_conv[49]);
  if (failures.empty()) return pass(d);
  for (const auto& f : failures) d += "; " + f;
  return fail(d);
}

// ------------------------------------------------------------------ 4

Outcome martingale_identity() {
  Rng rng(777);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RegimeSpec hf = RegimeSpec::increasing(0.5 + 9.5 * rng.uniform(), 0.01 + 0.99 * rng.uniform());
    FilterState s = init_state(hf.beta0);
    const int steps = 1 + static_cast<int>(rng.uniform() * 10);
    for (int k = 0; k < steps; ++k) {
      if (k > 0) s = advance(s, hf);
      const double lambda = 0.1 + 4.9 * rng.uniform();
      s = update(s, {static_cast<std::int64_t>(rng.uniform() * 6), lambda});
    }
    const double before = s.post->mean();
    const FilterState next = advance(s, hf);
    worst = std::max(worst, std::abs(next.pred.mean() - before));
  }
  const std::string d = "max |E pred - E post| " + fmt(worst) + " (tol 1e-12)";
  return worst <= 1e-12 ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 5

Outcome nested_equalities() {
  SynthSpec spec;
  spec.n_series = 50;
  spec.horizon = 8;
  spec.regime = RegimeSpec::increasing(2.0, 0.85);
  spec.eta = Eigen::Vector2d(-0.2, 0.4);
  spec.missing_fraction = 0.1;
  const SynthResult data = synth_panel(spec, 99);
  const Intensities lambdas = compute_intensities(data.panel, spec.eta);
  double worst = 0.0;
  for (double beta0 : {0.4, 1.0, 3.0, 12.0}) {
    const double shared = panel_loglik(data.panel, lambdas, RegimeSpec::shared(beta0));
    const double inc = panel_loglik(data.panel, lambdas, RegimeSpec::increasing(beta0, 1.0));
    const double dec = panel_loglik(data.panel, lambdas, RegimeSpec::decreasing(beta0, 1.0));
    worst = std::max({worst, std::abs(inc - shared), std::abs(dec - shared)});
  }
  const std::string d = "max |diff| " + fmt(worst) + " over 4 beta0 values (tol 1e-10)";
  return worst <= 1e-10 ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 6

Outcome importance_oracle() {
  const RegimeSpec regime = RegimeSpec::converging(3.0, 0.8 / 0.9, 0.9);
  constexpr std::size_t kT = 10;
  const std::vector<double> lambda(kT + 1, 1.3);
  PathConfig pc;
  pc.regime = regime;
  pc.horizon = kT;
  pc.intensities = lambda;
  Rng path_rng(4242);
  const SimPath path = simulate_path(pc, path_rng);

  std::vector<Observation> obs;
  for (std::size_t t = 0; t < kT; ++t) obs.push_back({path.counts[t], lambda[t]});
  const FilterTrace trace = run_filter(obs, regime);
  const double analytic = predictive_mean(advance(trace.terminal, regime), lambda[kT]);

  // Simulate Theta forward under the data-determined transition laws, weight
  // by the Poisson likelihood of the observed counts.
  constexpr std::size_t kReps = 100000;
  std::vector<double> log_w(kReps), value(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    Rng rng(5151, r);
    double theta = sample_gamma(GammaLaw(regime.beta0, regime.beta0), rng);
    double lw = 0.0;
    for (std::size_t t = 0; t < kT; ++t) {
      const double m = lambda[t] * theta;
      lw += static_cast<double>(*obs[t].count) * std::log(m) - m;
      const GammaLaw& post = trace.steps[t].post;
      const auto [qstar, q2] = q_pair(regime, {post.rate()});
      theta = step_theta(theta, post, qstar, q2, rng);
    }
    log_w[r] = lw;
    value[r] = lambda[kT] * theta;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double sw = 0.0, swx = 0.0, sw2 = 0.0;
  for (std::size_t r = 0; r < kReps; ++r) {
    const double w = std::exp(log_w[r] - top);
    sw += w;
    swx += w * value[r];
    sw2 += w * w;
  }
  const double estimate = swx / sw;
  double num = 0.0;
  for (std::size_t r = 0; r < kReps; ++r) {
    const double w = std::exp(log_w[r] - top);
    num += w * w * (value[r] - estimate) * (value[r] - estimate);
  }
  const double se = std::sqrt(num) / sw;
  const double ess = sw * sw / sw2;
  const double z = std::abs(estimate - analytic) / se;
  const std::string d = "analytic " + fmt(analytic, 6) + ", weighted " + fmt(estimate, 6) +
                        " +- " + fmt(se, 3) + " (z=" + fmt(z) + ", ESS " + fmt(ess, 5) + ")";
  return z < 3.0 ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 7

struct TwoStepEstimate {
  double beta0, q, eta0, eta1;
};

TwoStepEstimate two_step(const Panel& panel) {
  const GlmFit glm = fit_nb_glm(design_rows(panel));
  const Intensities lambdas = compute_intensities(panel, glm.eta);
  FitOptions fo;
  fo.regression_params = static_cast<int>(glm.eta.size());
  const DynamicsFit fit = fit_dynamics(panel, lambdas, RegimeKind::Increasing, fo);
  return {fit.regime.beta0, fit.regime.q, glm.eta(0), glm.eta(1)};
}

Outcome estimator_recovery() {
  constexpr std::size_t kBoot = 25;
  const TwoStepEstimate truth{3.0, 0.8, -0.5, 0.3};
  std::string d;
  bool ok = true;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    SynthSpec spec;
    spec.n_series = 500;
    spec.horizon = 10;
    spec.regime = RegimeSpec::increasing(truth.beta0, truth.q);
    spec.eta = Eigen::Vector2d(truth.eta0, truth.eta1);
    const SynthResult data = synth_panel(spec, seed);
    const TwoStepEstimate est = two_step(data.panel);

    // Parametric bootstrap at the estimate.
    const RegimeSpec fitted = RegimeSpec::increasing(est.beta0, est.q);
    const Eigen::Vector2d eta_hat(est.eta0, est.eta1);
    std::vector<std::vector<double>> draws(4);
    for (std::size_t b = 0; b < kBoot; ++b) {
      const SynthResult boot = resimulate_panel(data.panel, eta_hat, fitted, seed * 1000 + b);
      const TwoStepEstimate e = two_step(boot.panel);
      draws[0].push_back(e.beta0);
      draws[1].push_back(e.q);
      draws[2].push_back(e.eta0);
      draws[3].push_back(e.eta1);
    }
    const double values[] = {est.beta0, est.q, est.eta0, est.eta1};
    const double truths[] = {truth.beta0, truth.q, truth.eta0, truth.eta1};
    double worst = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt(countssm::testing::moments(draws[j]).var);
      worst = std::max(worst, std::abs(values[j] - truths[j]) / se);
    }
    ok = ok && worst < 3.0;
    d += (d.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": beta0 " +
         fmt(est.beta0) + " q " + fmt(est.q) + " eta (" + fmt(est.eta0) + ", " + fmt(est.eta1) +
         ") max |err|/SE " + fmt(worst);
  }
  return ok ? pass(d) : fail(d);
}

// ------------------------------------------------------------------ 8

std::string find_lgpif() {
  if (const char* env = std::getenv("COUNT_SSM_LGPIF"); env && *env) return env;
  const fs::path local = fs::path(COUNTSSM_SOURCE_DIR) / "data" / "lgpif.csv";
  return fs::exists(local) ? local.string() : "";
}

Outcome dataset_reproduction() {
  const std::string path = find_lgpif();
  if (path.empty()) {
    return {Status::Skip,
            "LGPIF panel not found (set COUNT_SSM_LGPIF or place it at data/lgpif.csv)"};
  }
  const Panel panel = load_panel(path, lgpif_schema());
  const SplitResult split = split_panel(panel, HoldoutRule::at(2011));
  const GlmFit glm = fit_nb_glm(design_rows(split.train));
  const Intensities lambdas = compute_intensities(split.train, glm.eta);
  FitOptions fo;
  fo.regression_params = static_cast<int>(glm.eta.size());

  struct Row {
    RegimeKind kind;
    double loglik, beta0;
  };
  const Row table[] = {{RegimeKind::Independent, -934.135, 0.488},
                       {RegimeKind::Shared, -905.357, 0.651},
                       {RegimeKind::Increasing, -904.317, 0.786},
                       {RegimeKind::Decreasing, -905.357, 0.651},
                       {RegimeKind::ConstantVariance, -902.019, 0.603}};
  std::vector<std::string> failures;
  std::string d;
  for (const Row& row : table) {
    const DynamicsFit fit = fit_dynamics(split.train, lambdas, row.kind, fo);
    const std::string name(to_string(row.kind));
    d += (d.empty() ? "" : ", ") + name + " " + fmt(fit.loglik, 7);
    if (std::abs(fit.loglik - row.loglik) > 0.5) failures.push_back(name + " loglik");
    if (std::abs(fit.regime.beta0 - row.beta0) > 0.01) failures.push_back(name + " beta0");
    if (row.kind == RegimeKind::Increasing) {
      if (std::abs(fit.regime.q - 0.830) > 0.01) failures.push_back("increasing q");
      const auto pairs = holdout_forecasts(split, glm.eta, fit.regime);
      const double r = rmse(pairs), a = mae(pairs), p = pdl(pairs);
      d += " (RMSE " + fmt(r, 4) + " MAE " + fmt(a, 4) + " PDL " + fmt(p, 4) + ")";
      if (std::abs(r - 0.5896) > 1e-2 || std::abs(a - 0.1048) > 1e-2 ||
          std::abs(p - 0.2425) > 1e-2) {
        failures.push_back("increasing holdout metrics");
      }
    }
    if (row.kind == RegimeKind::ConstantVariance && std::abs(fit.regime.p - 0.937) > 0.01) {
      failures.push_back("constant p");
    }
    if (row.kind == RegimeKind::Decreasing && !fit.at_boundary(DynParam::P)) {
      failures.push_back("decreasing p not flagged at the boundary");
    }
  }
  if (failures.empty()) return pass(d);
  for (const auto& f : failures) d += "; " + f;
  return fail(d);
}

// ------------------------------------------------------------------ 9

Outcome metrics_checks() {
  std::vector<std::string> failures;
  auto expect = [&](double got, double want, const char* what) {
    if (!(std::abs(got - want) <= 1e-12)) failures.push_back(what);
  };
  const std::vector<ForecastPair> off{{0, 1.0}, {2, 1.0}};
  expect(rmse(off), 1.0, "rmse off");
  expect(mae(off), 1.0, "mae off");
  expect(pdl(off), (2.0 + 2.0 * (-1.0 + 2.0 * std::log(2.0))) / 2.0, "pdl off");
  const std::vector<ForecastPair> mixed{{3, 1.5}, {0, 0.2}, {1, 0.25}};
  expect(rmse(mixed), std::sqrt((2.25 + 0.04 + 0.5625) / 3.0), "rmse mixed");
  expect(mae(mixed), (1.5 + 0.2 + 0.75) / 3.0, "mae mixed");
  expect(pdl(mixed),
         (2 * (1.5 - 3 - 3 * std::log(0.5)) + 2 * 0.2 + 2 * (0.25 - 1 - std::log(0.25))) / 3.0,
         "pdl mixed");
  const std::vector<ForecastPair> perfect{{1, 1.0}, {4, 4.0}};
  expect(rmse(perfect), 0.0, "rmse perfect");
  expect(pdl(perfect), 0.0, "pdl perfect");

  Rng rng(9);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 30);
    std::vector<ForecastPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      pairs.push_back({static_cast<std::int64_t>(rng.uniform() * 8), 0.01 + 6 * rng.uniform()});
    }
    if (!(rmse(pairs) >= mae(pairs))) ++violations;
  }
  if (violations > 0) failures.push_back(std::to_string(violations) + " RMSE < MAE cases");
  std::string d = "8 hand values, 10000 fuzz trials";
  if (failures.empty()) return pass(d);
  for (const auto& f : failures) d += "; " + f;
  return fail(d);
}

// ------------------------------------------------------------------ 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "countssm_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream out, err;
  const std::string panel = (dir / "panel.csv").string();
  if (cli::run({"synth", "--regime", "increasing", "--q", "0.85", "--series", "120", "--eta",
                "-0.2,0.5", "--missing", "0.05", "--seed", "17", "--out", panel},
               out, err) != cli::kExitOk) {
    return fail("synth failed: " + err.str());
  }
  std::string files[2];
  int i = 0;
  for (const char* threads : {"1", "8"}) {
    const std::string csv = (dir / (std::string("compare_") + threads + ".csv")).string();
    if (cli::run({"compare", "--input", panel, "--seed", "23", "--threads", threads, "--out", csv},
                 out, err) != cli::kExitOk) {
      return fail("compare failed: " + err.str());
    }
    files[i++] = slurp(csv);
  }
  fs::remove_all(dir);
  const bool same = !files[0].empty() && files[0] == files[1];
  const std::string d = std::to_string(files[0].size()) + " bytes, " +
                        (same ? "identical" : "different");
  return same ? pass(d) : fail(d);
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  ///< 0 = no runtime requirement
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "conjugacy oracle", 10.0, conjugacy_oracle},
      {2, "beta thinning of gamma (KS)", 0.0, thinning_property},
      {3, "simulation study reproduction", 60.0, study_reproduction},
      {4, "martingale identity", 0.0, martingale_identity},
      {5, "nested-model equalities", 0.0, nested_equalities},
      {6, "sequential-importance oracle", 0.0, importance_oracle},
      {7, "estimator recovery", 300.0, estimator_recovery},
      {8, "dataset-conditional reproduction", 0.0, dataset_reproduction},
      {9, "forecast metrics", 0.0, metrics_checks},
      {10, "thread-count determinism", 0.0, determinism},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Status::Pass && c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      o = fail(o.detail + "; runtime " + fmt(seconds) + " s exceeds " + fmt(c.budget_seconds) +
               " s");
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    if (o.status == Status::Fail) ++failures;
    std::printf("%s [%2d] %-34s %7.2fs  %s\n", tag, c.id, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
