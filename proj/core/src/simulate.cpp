#include "countssm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "countssm/errors.hpp"
#include "countssm/filter.hpp"
#include "countssm/parallel.hpp"

namespace countssm {

double step_theta(double theta, const GammaLaw& post, double qstar, double q2, Rng& rng) {
  if (!(q2 > 0.0 && q2 <= 1.0 && qstar >= 0.0 && qstar <= q2)) {
    throw std::domain_error("step_theta: requires 0 <= q* <= q** <= 1 and q** > 0");
  }
  const double alpha = post.shape();
  const double beta = post.rate();
  const BetaLaw thinning(qstar * alpha, (1.0 - qstar) * alpha);
  const GammaLaw innovation = GammaLaw::or_zero((q2 - qstar) * beta, q2 * beta);
  const double b = sample_beta(thinning, rng);
  const double eta = sample_gamma(innovation, rng);
  return theta * b / q2 + eta;
}

SimPath simulate_path(const PathConfig& config, Rng& rng) {
  config.regime.validate();
  if (config.horizon == 0) throw std::domain_error("simulate_path: horizon must be >= 1");
  if (config.intensities.empty()) throw std::domain_error("simulate_path: no intensities");
  if (!config.observed.empty() && config.observed.size() < config.horizon) {
    throw std::domain_error("simulate_path: observation mask shorter than horizon");
  }
  const RegimeSpec& regime = config.regime;
  const GammaLaw prior(regime.beta0, regime.beta0);

  SimPath path;
  path.theta.reserve(config.horizon);
  path.counts.reserve(config.horizon);

  FilterState state = init_state(regime.beta0);
  double theta = sample_gamma(prior, rng);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const double lambda = config.intensities[std::min(t, config.intensities.size() - 1)];
    const bool seen = config.observed.empty() || config.observed[t];
    path.theta.push_back(theta);
    Observation obs = Observation::missing(lambda);
    if (seen) obs.count = sample_poisson(lambda * theta, rng);
    path.counts.push_back(obs.count);
    state = update(state, obs);
    if (t + 1 == config.horizon) break;

    if (regime.kind == RegimeKind::Independent) {
      theta = sample_gamma(prior, rng);
    } else {
      const auto [qstar, q2] = detail::q_pair_unchecked(regime, {state.post->rate()});
      theta = step_theta(theta, *state.post, qstar, q2, rng);
    }
    state = advance(state, regime);
  }
  return path;
}

std::vector<std::pair<double, double>> kernel_density(std::span<const double> sample,
                                                      std::size_t grid_points) {
  if (sample.empty() || grid_points == 0) return {};
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : sorted) ss += (x - mean) * (x - mean);
  const double sd = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  auto quantile = [&](double prob) {
    const double pos = prob * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  double h = 0.9 * spread * std::pow(n, -0.2);
  if (!(h > 0.0)) h = 1e-3 * std::max(1.0, std::fabs(mean));

  const double lo = std::max(0.0, sorted.front() - 3.0 * h);
  const double hi = quantile(0.995) + 3.0 * h;
  const double step = grid_points > 1 ? (hi - lo) / static_cast<double>(grid_points - 1) : 0.0;
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<std::pair<double, double>> out;
  out.reserve(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = lo + step * static_cast<double>(g);
    // Only points within 8 bandwidths contribute measurably.
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), x + 8.0 * h);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.emplace_back(x, acc * norm);
  }
  return out;
}

StudyTables run_study(const SimStudyConfig& config) {
  config.regime.validate();
  if (config.horizon == 0 || config.n_paths == 0) {
    throw InputError("run_study: horizon and n_paths must be >= 1");
  }
  if (config.intensities.empty()) throw InputError("run_study: no intensities");

  std::vector<SimPath> paths(config.n_paths);
  parallel_for(config.n_paths, config.threads, [&](std::size_t i) {
    Rng rng(config.seed, i);
    paths[i] = simulate_path({config.regime, config.horizon, config.intensities}, rng);
  });

  StudyTables tables;
  const std::size_t shown = std::min(config.trajectory_paths, config.n_paths);
  for (std::size_t i = 0; i < shown; ++i) {
    for (std::size_t t = 0; t < config.horizon; ++t) {
      tables.trajectories.push_back({i, t + 1, paths[i].theta[t], paths[i].counts[t]});
    }
  }

  const double n = static_cast<double>(config.n_paths);
  std::vector<double> column(config.n_paths);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    for (std::size_t i = 0; i < config.n_paths; ++i) column[i] = paths[i].theta[t];
    const double mean = pairwise_sum(column.data(), column.size()) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : column) {
      const double d = (x - mean) * (x - mean);
      m2 += d;
      m4 += d * d;
    }
    MomentRow row{t + 1, mean, 0.0, 0.0, 0.0};
    if (config.n_paths > 1) {
      row.var = m2 / (n - 1.0);
      row.se = std::sqrt(row.var / n);
      const double pop_var = m2 / n;
      row.var_se = std::sqrt(std::max(0.0, m4 / n - pop_var * pop_var) / n);
    }
    tables.moments.push_back(row);

    if (std::find(config.density_times.begin(), config.density_times.end(), t + 1) !=
        config.density_times.end()) {
      for (const auto& [x, d] : kernel_density(column, config.density_grid)) {
        tables.density.push_back({t + 1, x, d});
      }
    }
  }
  return tables;
}

namespace {

std::ofstream open_with_header(const std::filesystem::path& file,
                               std::span<const std::string> header) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot open " + file.string() + " for writing");
  out.precision(17);
  for (const auto& line : header) out << "# " << line << '\n';
  return out;
}

}  // namespace

void write_study(const StudyTables& tables, const std::filesystem::path& dir,
                 std::span<const std::string> header) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());

  {
    auto out = open_with_header(dir / "trajectories.csv", header);
    out << "path_id,t,theta,y\n";
    for (const auto& r : tables.trajectories) {
      out << r.path_id << ',' << r.t << ',' << r.theta << ',';
      if (r.y) out << *r.y;
      out << '\n';
    }
  }
  {
    auto out = open_with_header(dir / "moments.csv", header);
    out << "t,mean,var,se\n";
    for (const auto& r : tables.moments) {
      out << r.t << ',' << r.mean << ',' << r.var << ',' << r.se << '\n';
    }
  }
  {
    auto out = open_with_header(dir / "density.csv", header);
    out << "t,grid,density\n";
    for (const auto& r : tables.density) {
      out << r.t << ',' << r.grid << ',' << r.density << '\n';
    }
  }
}

}  // namespace countssm
