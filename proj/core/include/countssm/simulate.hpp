#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "countssm/dist.hpp"
#include "countssm/regimes.hpp"
#include "countssm/rng.hpp"

namespace countssm {

struct SimPath {
  std::vector<double> theta;                        ///< Theta_1..Theta_T
  std::vector<std::optional<std::int64_t>> counts;  ///< empty where unobserved
};

/// One Theta transition via the beta-gamma stochastic representation:
///   Theta_{t+1} = Theta_t * B / q2 + eta,
///   B   ~ Beta(qstar * alpha_t, (1 - qstar) * alpha_t),
///   eta ~ Gamma((q2 - qstar) * beta_t, q2 * beta_t).
double step_theta(double theta, const GammaLaw& post, double qstar, double q2, Rng& rng);

struct PathConfig {
  RegimeSpec regime;
  std::size_t horizon = 1;
  /// lambda_t for t = 1..horizon; the last value is reused if shorter.
  std::span<const double> intensities;
  /// Per-period observation mask; empty means every period is observed.
  std::span<const bool> observed{};
};

/// Simulates (Theta_t, Y_t) jointly with the filter recursion that drives
/// the observation-dependent transition laws.
SimPath simulate_path(const PathConfig& config, Rng& rng);

struct SimStudyConfig {
  RegimeSpec regime;
  std::size_t horizon = 50;
  std::size_t n_paths = 5000;
  std::vector<double> intensities{1.0};
  std::uint64_t seed = 0;
  std::size_t trajectory_paths = 4;           ///< paths written to trajectories.csv
  std::vector<std::size_t> density_times{1, 5, 20, 50};
  std::size_t density_grid = 200;
  unsigned threads = 1;
};

struct MomentRow {
  std::size_t t;
  double mean;
  double var;     ///< unbiased sample variance (0 for a single path)
  double se;      ///< standard error of the mean
  double var_se;  ///< standard error of the variance estimate
};

struct DensityRow {
  std::size_t t;
  double grid;
  double density;
};

struct TrajectoryRow {
  std::size_t path_id;
  std::size_t t;
  double theta;
  std::optional<std::int64_t> y;
};

struct StudyTables {
  std::vector<TrajectoryRow> trajectories;
  std::vector<MomentRow> moments;
  std::vector<DensityRow> density;
};

/// Path i uses the generator stream Rng(seed, i), so results do not depend on
/// the number of threads.
StudyTables run_study(const SimStudyConfig& config);

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
std::vector<std::pair<double, double>> kernel_density(std::span<const double> sample,
                                                      std::size_t grid_points);

/// Writes trajectories.csv, moments.csv and density.csv into `dir`, each
/// prefixed by the comment lines in `header` (written as "# line").
void write_study(const StudyTables& tables, const std::filesystem::path& dir,
                 std::span<const std::string> header);

}  // namespace countssm
