#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "countssm/dist.hpp"
#include "countssm/regimes.hpp"

namespace countssm {

/// One period of a series. `count` is empty when the period is unobserved;
/// the intensity (exposure-adjusted lambda_t) is required either way.
struct Observation {
  std::optional<std::int64_t> count;
  double intensity = 1.0;

  static Observation observed(std::int64_t y, double intensity) { return {y, intensity}; }
  static Observation missing(double intensity) { return {std::nullopt, intensity}; }
};

/// Recursion state at time t: the one-step-ahead law of Theta_t given
/// Y_1:t-1 (`pred`) and, once Y_t has been processed, the filtering law of
/// Theta_t given Y_1:t (`post`).
struct FilterState {
  std::size_t t = 1;
  GammaLaw pred = GammaLaw(1.0, 1.0);
  std::optional<GammaLaw> post;
};

FilterState init_state(double beta0);

/// Conjugate update with Y_t. Missing counts leave the law unchanged.
FilterState update(const FilterState& state, const Observation& obs);

/// Moves the filtering law at t to the predictive law at t+1:
///   pred.shape = qstar * alpha_t + (q2 - qstar) * beta_t
///   pred.rate  = q2 * beta_t
/// Requires 0 <= qstar <= q2 <= 1 and q2 > 0.
FilterState predict(const FilterState& state, double qstar, double q2);

/// Transition from t to t+1 under a regime: `predict` with the regime's
/// q-pair, or a reset to the prior for the independent regime.
/// `context_beta` overrides the posterior rate fed to the schedule (pooled
/// constant-variance schedules).
FilterState advance(const FilterState& state, const RegimeSpec& regime,
                    std::optional<double> context_beta = std::nullopt);

NBLaw predictive_law(const FilterState& state, double intensity);
double predictive_mean(const FilterState& state, double intensity);

struct FilterStep {
  GammaLaw pred = GammaLaw(1.0, 1.0);
  GammaLaw post;
  NBLaw predictive;
  std::optional<double> log_density;  ///< empty for missing periods
};

struct FilterTrace {
  std::vector<FilterStep> steps;
  double loglik = 0.0;
  FilterState terminal;  ///< state after the last update
};

struct FilterOptions {
  /// When non-empty, entry t-1 replaces beta_t as the constant-variance
  /// schedule input at the step t -> t+1.
  std::span<const double> context_beta{};
};

/// Filters a nonempty series, alternating update and regime transition.
FilterTrace run_filter(std::span<const Observation> series, const RegimeSpec& regime,
                       const FilterOptions& options = {});

/// Sum of log predictive densities only, without materializing the trace.
double series_loglik(std::span<const Observation> series, const RegimeSpec& regime,
                     const FilterOptions& options = {});

}  // namespace countssm
