#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "countssm/panel.hpp"
#include "countssm/regimes.hpp"

namespace countssm {

/// Sample size used in the BIC penalty.
enum class BicConvention { Observations, Series };

struct LikelihoodOptions {
  unsigned threads = 1;  ///< 0 = all hardware threads
  /// Constant-variance schedules read a pooled beta_t, built from the average
  /// intensity at each time index, instead of each series' own beta_{i,t}.
  bool pooled_beta = false;
};

/// Pooled beta path used by the constant-variance schedule when
/// LikelihoodOptions::pooled_beta is set; entry t-1 is beta_t.
std::vector<double> pooled_context_beta(const Intensities& intensities,
                                        const RegimeSpec& regime);

/// Sum over series of the per-series predictive log-likelihood. Series are
/// filtered independently and summed in a fixed pairwise order, so the value
/// does not depend on the thread count.
double panel_loglik(const Panel& panel, const Intensities& intensities,
                    const RegimeSpec& regime, const LikelihoodOptions& options = {});

struct FitOptions {
  LikelihoodOptions likelihood;
  /// Regression parameters counted in AIC/BIC (intercept included).
  int regression_params = 1;
  BicConvention bic = BicConvention::Observations;
  int max_evals_per_start = 2000;
};

struct DynamicsFit {
  RegimeSpec regime;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int k = 0;                 ///< regression + dynamics parameters
  std::size_t n_bic = 0;     ///< sample size in the BIC penalty
  std::vector<DynParam> boundary;  ///< transformed coordinate beyond +-8
  Eigen::VectorXd transformed;     ///< (log beta0, logit p, logit q) as free
  int evaluations = 0;

  bool at_boundary(DynParam param) const noexcept;
};

/// Maps between transformed optimizer coordinates and a regime.
RegimeSpec regime_from_transformed(RegimeKind kind, const Eigen::VectorXd& u);
Eigen::VectorXd transformed_from_regime(const RegimeSpec& regime);

/// The deterministic multi-start grid: beta0 in {0.25, 1, 4} crossed with
/// {0.3, 0.7, 0.95} for each free p or q.
std::vector<RegimeSpec> start_grid(RegimeKind kind);

/// Maximizes panel_loglik over the free dynamics parameters of `kind` with a
/// multi-start Nelder-Mead search on transformed coordinates (log beta0,
/// logit p, logit q), followed by a polishing restart from the best point.
DynamicsFit fit_dynamics(const Panel& panel, const Intensities& intensities,
                         RegimeKind kind, const FitOptions& options = {});

/// Fits every kind and returns the fits sorted by AIC (ascending, stable).
std::vector<DynamicsFit> compare_models(const Panel& panel, const Intensities& intensities,
                                        std::span<const RegimeKind> kinds,
                                        const FitOptions& options = {});

/// Largest one-sided finite-difference slope of panel_loglik at the fit,
/// over +-h along each free transformed coordinate. Non-positive (up to
/// rounding) at an interior maximum.
double max_ascent_slope(const Panel& panel, const Intensities& intensities,
                        const DynamicsFit& fit, const LikelihoodOptions& options = {},
                        double h = 1e-5);

struct JointFit {
  DynamicsFit dynamics;
  Eigen::VectorXd eta;
};

/// One-step maximum likelihood over (eta, dynamics) jointly, started from a
/// two-step solution. Slower and not used by default.
JointFit fit_joint(const Panel& panel, const Eigen::VectorXd& eta_start,
                   const DynamicsFit& start, const FitOptions& options = {});

}  // namespace countssm
