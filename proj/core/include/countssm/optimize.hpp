#pragma once

#include <Eigen/Dense>

#include <functional>

namespace countssm {

struct NelderMeadOptions {
  double initial_step = 0.5;
  double ftol = 1e-10;  ///< absolute spread of simplex values
  double xtol = 1e-8;   ///< max distance of vertices from the best one
  int max_evals = 4000;
  double box = 30.0;    ///< coordinates are clamped to [-box, box]
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f by the Nelder-Mead simplex method. Non-finite values are
/// treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start,
                             const NelderMeadOptions& options = {});

}  // namespace countssm
