#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace countssm {

/// One response with its covariates and exposure offset. The design must
/// already contain any intercept column.
struct DesignRow {
  Eigen::VectorXd x;
  double exposure = 1.0;
  std::int64_t y = 0;
};

struct GlmOptions {
  double tol = 1e-8;  ///< on the Euclidean norm of the score vector
  int max_iter = 100;
  std::vector<std::string> column_names;  ///< for error messages; optional
  double min_size = 1e-4;
  double max_size = 1e8;
};

/// Negative binomial GLM with log link: mu = exposure * exp(x . eta),
/// Var(Y) = mu + mu^2 / size.
struct GlmFit {
  Eigen::VectorXd eta;
  double dispersion = 0.0;  ///< NB size parameter
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  /// The profile likelihood kept increasing up to max_size (Poisson limit);
  /// the size component is then excluded from the score.
  bool dispersion_at_bound = false;
  /// Condition number of the Fisher information X'WX at the optimum.
  double hessian_condition = 0.0;
};

/// Maximizes the NB log-likelihood over (eta, size), alternating Fisher
/// scoring for eta with a golden-section search (then Newton polish) on
/// log size. Throws EstimationError if n <= d or the design is rank
/// deficient; a result with converged == false is returned when max_iter is
/// exhausted.
GlmFit fit_nb_glm(std::span<const DesignRow> rows, const GlmOptions& options = {});

double nb_glm_loglik(std::span<const DesignRow> rows, const Eigen::VectorXd& eta,
                     double size);

/// d loglik / d eta.
Eigen::VectorXd nb_glm_score(std::span<const DesignRow> rows, const Eigen::VectorXd& eta,
                             double size);

/// exposure * exp(x . eta). Throws EstimationError when |x . eta| > 700.
double intensity(const Eigen::VectorXd& eta, const DesignRow& row);
inline double intensity(const GlmFit& fit, const DesignRow& row) {
  return intensity(fit.eta, row);
}

}  // namespace countssm
