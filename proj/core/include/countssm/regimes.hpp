#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace countssm {

enum class RegimeKind {
  Independent,
  Shared,
  Increasing,
  Decreasing,
  Converging,
  Bounded,
  ConstantVariance,
};

/// Config-file spelling: independent | shared | increasing | decreasing |
/// converging | bounded | constant_variance.
std::string_view to_string(RegimeKind kind) noexcept;
std::optional<RegimeKind> parse_regime_kind(std::string_view name) noexcept;
std::vector<RegimeKind> all_regime_kinds();

/// Variance regime and its parameters.
///
/// Schedules (qstar, q2) by kind:
///   Shared                   (1, 1)
///   Increasing               (q, q)
///   Decreasing               (p, 1)
///   Converging / Bounded     (p*q, q)
///   ConstantVariance         (p*q2_t, q2_t),
///                            q2_t = beta0 / (p^2 beta0 + (1 - p^2) beta_t)
///   Independent              no transition; the filter resets to the prior.
///
/// Admissible parameters are the closure that keeps every emitted pair
/// inside 0 <= qstar <= q2 <= 1, q2 > 0: q in (0, 1], p in [0, 1], so the
/// nested cases (q = 1, p = 1) can be evaluated directly.
struct RegimeSpec {
  RegimeKind kind = RegimeKind::Shared;
  double p = 1.0;
  double q = 1.0;
  double beta0 = 1.0;

  static RegimeSpec independent(double beta0);
  static RegimeSpec shared(double beta0);
  static RegimeSpec increasing(double beta0, double q);
  static RegimeSpec decreasing(double beta0, double p);
  static RegimeSpec converging(double beta0, double p, double q);
  static RegimeSpec bounded(double beta0, double p, double q);
  static RegimeSpec constant_variance(double beta0, double p);

  /// Throws InputError naming the violated constraint.
  void validate() const;

  /// Number of free dynamics parameters (beta0 included).
  int free_parameters() const noexcept;

  friend bool operator==(const RegimeSpec&, const RegimeSpec&) = default;
};

/// Free parameters of a regime kind in the order used by the estimator.
enum class DynParam { Beta0, P, Q };
std::vector<DynParam> free_parameters(RegimeKind kind);

struct ScheduleContext {
  double beta;  ///< current posterior rate beta_t
};

struct QPair {
  double qstar;
  double q2;
};

/// The (q*_t, q**_t) pair governing the step from t to t+1.
/// Throws std::domain_error for Independent, which has no transition pair,
/// and InputError for inadmissible parameters.
QPair q_pair(const RegimeSpec& spec, ScheduleContext ctx);

namespace detail {
// q_pair without parameter validation, for callers that already validated the regime
// once up front.
QPair q_pair_unchecked(const RegimeSpec& spec, ScheduleContext ctx);
}  // namespace detail

/// Residual of the constant-variance condition at (qstar, q2):
///   (1/q2)(1/beta_t) + (qstar/q2)^2 (1/beta0 - 1/beta_t) - 1/beta0.
double constant_variance_check(double beta0, double beta_t, double qstar, double q2);

/// Exact unconditional Var(Theta_t), t = 1..horizon, for a fully observed
/// series with the given intensities (the last entry is reused if the
/// sequence is shorter than the horizon). Also reports the deterministic
/// posterior rates beta_t.
struct VarianceTrajectory {
  std::vector<double> variance;  ///< Var(Theta_t)
  std::vector<double> beta;      ///< beta_t
};
VarianceTrajectory variance_recursion(const RegimeSpec& spec,
                                      std::span<const double> intensities,
                                      std::size_t horizon);

}  // namespace countssm
