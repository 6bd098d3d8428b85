#include "countssm/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "countssm/errors.hpp"
#include "countssm/filter.hpp"
#include "countssm/optimize.hpp"
#include "countssm/parallel.hpp"

namespace countssm {

namespace {

constexpr double kBoundaryCoordinate = 8.0;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Coordinates for p = 1 or q = 1 sit at the optimizer box edge.
double logit_clamped(double p) {
  constexpr double kEdge = 30.0;
  if (p >= logistic(kEdge)) return kEdge;
  if (p <= logistic(-kEdge)) return -kEdge;
  return logit(p);
}

void check_alignment(const Panel& panel, const Intensities& intensities) {
  if (intensities.size() != panel.series.size()) {
    throw InputError("intensities do not match the number of series");
  }
  for (std::size_t i = 0; i < panel.series.size(); ++i) {
    if (intensities[i].size() != panel.series[i].records.size()) {
      throw InputError("intensities for series '" + panel.series[i].id +
                       "' do not match its records");
    }
  }
}

}  // namespace

bool DynamicsFit::at_boundary(DynParam param) const noexcept {
  return std::find(boundary.begin(), boundary.end(), param) != boundary.end();
}

std::vector<double> pooled_context_beta(const Intensities& intensities,
                                        const RegimeSpec& regime) {
  std::size_t horizon = 0;
  for (const auto& s : intensities) horizon = std::max(horizon, s.size());
  std::vector<double> mean_lambda(horizon, 0.0);
  std::vector<double> counts(horizon, 0.0);
  for (const auto& s : intensities) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      mean_lambda[t] += s[t];
      counts[t] += 1.0;
    }
  }
  for (std::size_t t = 0; t < horizon; ++t) mean_lambda[t] /= counts[t];

  std::vector<double> beta(horizon);
  if (horizon == 0) return beta;
  beta[0] = regime.beta0 + mean_lambda[0];
  for (std::size_t t = 1; t < horizon; ++t) {
    const auto [qstar, q2] = detail::q_pair_unchecked(regime, {beta[t - 1]});
    (void)qstar;
    beta[t] = q2 * beta[t - 1] + mean_lambda[t];
  }
  return beta;
}

double panel_loglik(const Panel& panel, const Intensities& intensities,
                    const RegimeSpec& regime, const LikelihoodOptions& options) {
  check_alignment(panel, intensities);
  regime.validate();
  std::vector<double> pooled;
  FilterOptions filter_options;
  if (options.pooled_beta && regime.kind == RegimeKind::ConstantVariance) {
    pooled = pooled_context_beta(intensities, regime);
    filter_options.context_beta = pooled;
  }
  std::vector<double> per_series(panel.series.size(), 0.0);
  parallel_for(panel.series.size(), options.threads, [&](std::size_t i) {
    const auto obs = observations(panel.series[i], intensities[i]);
    per_series[i] = series_loglik(obs, regime, filter_options);
  });
  return pairwise_sum(per_series.data(), per_series.size());
}

RegimeSpec regime_from_transformed(RegimeKind kind, const Eigen::VectorXd& u) {
  const auto params = free_parameters(kind);
  if (u.size() != static_cast<Eigen::Index>(params.size())) {
    throw std::invalid_argument("regime_from_transformed: dimension mismatch");
  }
  RegimeSpec spec;
  spec.kind = kind;
  spec.p = 1.0;
  spec.q = 1.0;
  if (kind == RegimeKind::Independent) spec.p = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double v = u(static_cast<Eigen::Index>(j));
    switch (params[j]) {
      case DynParam::Beta0:
        spec.beta0 = std::exp(v);
        break;
      case DynParam::P:
        spec.p = logistic(v);
        break;
      case DynParam::Q:
        spec.q = logistic(v);
        break;
    }
  }
  return spec;
}

Eigen::VectorXd transformed_from_regime(const RegimeSpec& regime) {
  const auto params = free_parameters(regime.kind);
  Eigen::VectorXd u(static_cast<Eigen::Index>(params.size()));
  for (std::size_t j = 0; j < params.size(); ++j) {
    double v = 0.0;
    switch (params[j]) {
      case DynParam::Beta0:
        v = std::log(regime.beta0);
        break;
      case DynParam::P:
        v = logit_clamped(regime.p);
        break;
      case DynParam::Q:
        v = logit_clamped(regime.q);
        break;
    }
    u(static_cast<Eigen::Index>(j)) = v;
  }
  return u;
}

std::vector<RegimeSpec> start_grid(RegimeKind kind) {
  static constexpr double kBeta0[] = {0.25, 1.0, 4.0};
  static constexpr double kUnit[] = {0.3, 0.7, 0.95};
  const auto params = free_parameters(kind);
  std::vector<RegimeSpec> grid;
  for (double b : kBeta0) {
    RegimeSpec base;
    base.kind = kind;
    base.beta0 = b;
    base.p = kind == RegimeKind::Independent ? 0.0 : 1.0;
    base.q = 1.0;
    grid.push_back(base);
  }
  for (DynParam param : params) {
    if (param == DynParam::Beta0) continue;
    std::vector<RegimeSpec> crossed;
    for (const RegimeSpec& g : grid) {
      for (double v : kUnit) {
        RegimeSpec s = g;
        (param == DynParam::P ? s.p : s.q) = v;
        crossed.push_back(s);
      }
    }
    grid = std::move(crossed);
  }
  return grid;
}

DynamicsFit fit_dynamics(const Panel& panel, const Intensities& intensities,
                         RegimeKind kind, const FitOptions& options) {
  check_alignment(panel, intensities);
  const auto params = free_parameters(kind);

  auto objective = [&](const Eigen::VectorXd& u) {
    const RegimeSpec spec = regime_from_transformed(kind, u);
    try {
      return -panel_loglik(panel, intensities, spec, options.likelihood);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.max_evals = options.max_evals_per_start;

  int evaluations = 0;
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const RegimeSpec& start : start_grid(kind)) {
    NelderMeadResult r = nelder_mead(objective, transformed_from_regime(start), nm);
    evaluations += r.evaluations;
    if (r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value)) {
    throw EstimationError("fit_dynamics(" + std::string(to_string(kind)) +
                          "): no start produced a finite log-likelihood");
  }
  // Polish: restart from the incumbent with a small simplex until the value
  // stops improving.
  for (int round = 0; round < 5; ++round) {
    NelderMeadOptions polish = nm;
    polish.initial_step = 0.05;
    NelderMeadResult r = nelder_mead(objective, best.x, polish);
    evaluations += r.evaluations;
    const bool improved = r.value < best.value - 1e-12;
    if (r.value < best.value) best = std::move(r);
    if (!improved) break;
  }

  DynamicsFit fit;
  fit.regime = regime_from_transformed(kind, best.x);
  fit.loglik = -best.value;
  fit.transformed = best.x;
  fit.evaluations = evaluations;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (std::fabs(best.x(static_cast<Eigen::Index>(j))) > kBoundaryCoordinate) {
      fit.boundary.push_back(params[j]);
    }
  }
  fit.k = options.regression_params + static_cast<int>(params.size());
  fit.n_bic = options.bic == BicConvention::Observations ? panel.n_observed()
                                                         : panel.series.size();
  fit.aic = -2.0 * fit.loglik + 2.0 * fit.k;
  fit.bic = -2.0 * fit.loglik + fit.k * std::log(static_cast<double>(fit.n_bic));
  return fit;
}

std::vector<DynamicsFit> compare_models(const Panel& panel, const Intensities& intensities,
                                        std::span<const RegimeKind> kinds,
                                        const FitOptions& options) {
  if (kinds.empty()) throw InputError("compare_models: no regimes requested");
  std::vector<DynamicsFit> fits;
  fits.reserve(kinds.size());
  for (RegimeKind kind : kinds) fits.push_back(fit_dynamics(panel, intensities, kind, options));
  std::stable_sort(fits.begin(), fits.end(),
                   [](const DynamicsFit& a, const DynamicsFit& b) { return a.aic < b.aic; });
  return fits;
}

double max_ascent_slope(const Panel& panel, const Intensities& intensities,
                        const DynamicsFit& fit, const LikelihoodOptions& options,
                        double h) {
  const RegimeKind kind = fit.regime.kind;
  const Eigen::VectorXd u0 = transformed_from_regime(fit.regime);
  const double f0 = panel_loglik(panel, intensities, fit.regime, options);
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < u0.size(); ++j) {
    for (double sign : {-1.0, 1.0}) {
      Eigen::VectorXd u = u0;
      u(j) += sign * h;
      const double f = panel_loglik(panel, intensities, regime_from_transformed(kind, u), options);
      worst = std::max(worst, (f - f0) / h);
    }
  }
  return worst;
}

JointFit fit_joint(const Panel& panel, const Eigen::VectorXd& eta_start,
                   const DynamicsFit& start, const FitOptions& options) {
  const RegimeKind kind = start.regime.kind;
  const Eigen::VectorXd u_start = transformed_from_regime(start.regime);
  const Eigen::Index n_dyn = u_start.size();
  const Eigen::Index d = eta_start.size();
  Eigen::VectorXd x0(n_dyn + d);
  x0 << u_start, eta_start;

  auto objective = [&](const Eigen::VectorXd& x) {
    try {
      const Intensities lambdas = compute_intensities(panel, x.tail(d));
      return -panel_loglik(panel, lambdas, regime_from_transformed(kind, x.head(n_dyn)),
                           options.likelihood);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  NelderMeadOptions nm;
  nm.initial_step = 0.1;
  nm.max_evals = options.max_evals_per_start * static_cast<int>(n_dyn + d);
  NelderMeadResult best = nelder_mead(objective, x0, nm);
  for (int round = 0; round < 5; ++round) {
    NelderMeadResult r = nelder_mead(objective, best.x, nm);
    const bool improved = r.value < best.value - 1e-10;
    if (r.value < best.value) best = std::move(r);
    if (!improved) break;
  }
  if (!std::isfinite(best.value)) throw EstimationError("fit_joint: no finite likelihood");

  JointFit out;
  out.eta = best.x.tail(d);
  DynamicsFit& fit = out.dynamics;
  fit.regime = regime_from_transformed(kind, best.x.head(n_dyn));
  fit.loglik = -best.value;
  fit.transformed = best.x.head(n_dyn);
  fit.evaluations = best.evaluations;
  const auto params = free_parameters(kind);
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (std::fabs(fit.transformed(static_cast<Eigen::Index>(j))) > kBoundaryCoordinate) {
      fit.boundary.push_back(params[j]);
    }
  }
  fit.k = static_cast<int>(d) + static_cast<int>(params.size());
  fit.n_bic = options.bic == BicConvention::Observations ? panel.n_observed()
                                                         : panel.series.size();
  fit.aic = -2.0 * fit.loglik + 2.0 * fit.k;
  fit.bic = -2.0 * fit.loglik + fit.k * std::log(static_cast<double>(fit.n_bic));
  return out;
}

}  // namespace countssm
