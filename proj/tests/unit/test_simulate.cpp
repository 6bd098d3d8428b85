#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "countssm/filter.hpp"
#include "countssm/simulate.hpp"
#include "stats.hpp"

using namespace countssm;
using countssm::testing::ks_critical;
using countssm::testing::ks_statistic;
using countssm::testing::moments;

TEST_CASE("step with q* = q** = 1 keeps the state") {
  Rng rng(1);
  for (double theta : {0.1, 1.0, 7.3}) {
    CHECK(step_theta(theta, GammaLaw(4, 3), 1.0, 1.0, rng) == theta);
  }
}

TEST_CASE("martingale step keeps the conditional mean") {
  Rng rng(2);
  const double theta = 1.7;
  std::vector<double> next(200000);
  for (auto& x : next) x = step_theta(theta, GammaLaw(5, 4), 0.8, 0.8, rng);
  const auto m = moments(next);
  CHECK(std::abs(m.mean - theta) < 4 * m.se);
}

TEST_CASE("step output given the data is the predictive gamma law (KS)") {
  struct Case {
    double a, b, qstar, q2;
  };
  for (const Case c : {Case{5, 4, 0.8, 0.8}, Case{5, 4, 0.8, 1.0}, Case{2.5, 1.5, 0.45, 0.9},
                       Case{3, 3, 0.0, 0.7}, Case{0.7, 2.0, 0.3, 0.95}}) {
    Rng r1(10);
    Rng r2(11);
    const std::size_t n = 60000;
    std::vector<double> stepped(n), direct(n);
    const GammaLaw post(c.a, c.b);
    const GammaLaw pred(c.qstar * c.a + (c.q2 - c.qstar) * c.b, c.q2 * c.b);
    for (std::size_t i = 0; i < n; ++i) {
      stepped[i] = step_theta(sample_gamma(post, r1), post, c.qstar, c.q2, r1);
      direct[i] = sample_gamma(pred, r2);
    }
    INFO(c.a << " " << c.b << " " << c.qstar << " " << c.q2);
    CHECK(ks_statistic(stepped, direct) < ks_critical(n, n, 1e-3));
  }
}

TEST_CASE("shared regime paths have a constant state") {
  Rng rng(3);
  const std::vector<double> one{1.0};
  const auto path = simulate_path({RegimeSpec::shared(3), 20, one}, rng);
  REQUIRE(path.theta.size() == 20);
  REQUIRE(path.counts.size() == 20);
  for (double th : path.theta) CHECK(th == path.theta.front());
}

TEST_CASE("paths have positive states and respect the observation mask") {
  Rng rng(4);
  const std::vector<double> lambdas{0.5, 2.0};
  bool mask[6] = {true, false, true, true, false, true};
  const auto path =
      simulate_path({RegimeSpec::converging(2, 0.5, 0.9), 6, lambdas, mask}, rng);
  for (double th : path.theta) CHECK(th > 0.0);
  for (int t = 0; t < 6; ++t) CHECK(path.counts[t].has_value() == mask[t]);
}

TEST_CASE("decreasing regime with p = 0 uses the point mass at zero") {
  Rng rng(5);
  const std::vector<double> one{1.0};
  const auto path = simulate_path({RegimeSpec::decreasing(3, 0.0), 10, one}, rng);
  for (double th : path.theta) CHECK(th > 0.0);
}

TEST_CASE("variance behaviour of the reference regimes") {
  const std::vector<double> one{1.0};
  const auto exact_inc = variance_recursion(RegimeSpec::increasing(3, 0.8), one, 50);
  CHECK(exact_inc.variance[49] / exact_inc.variance[0] > 3.0);

  SimStudyConfig cfg;
  cfg.regime = RegimeSpec::increasing(3, 0.8);
  cfg.n_paths = 5000;
  cfg.seed = 99;
  const auto inc = run_study(cfg);
  CHECK(inc.moments[49].var / inc.moments[0].var > 3.0);

  cfg.regime = RegimeSpec::decreasing(3, 0.8);
  const auto dec = run_study(cfg);
  CHECK(dec.moments[49].var < dec.moments[4].var);
  for (const auto& row : dec.moments) CHECK(std::abs(row.mean - 1.0) < 4 * row.se);
}

TEST_CASE("decreasing regime count variance approaches the intensity") {
  const std::vector<double> one{1.0};
  const auto exact = variance_recursion(RegimeSpec::decreasing(3, 0.8), one, 50);
  std::vector<double> y50;
  for (std::size_t i = 0; i < 5000; ++i) {
    Rng rng(7, i);
    const auto path = simulate_path({RegimeSpec::decreasing(3, 0.8), 50, one}, rng);
    y50.push_back(static_cast<double>(*path.counts.back()));
  }
  const auto m = moments(y50);
  const double expected = 1.0 + exact.variance[49];
  CHECK(expected < 1.05);
  // Var of the sample variance of a near-Poisson(1) variable is about (mu4 - s^4)/n.
  CHECK(std::abs(m.var - expected) < 4 * std::sqrt(3.0 / y50.size()));
}

TEST_CASE("study output is deterministic and independent of threads") {
  SimStudyConfig cfg;
  cfg.regime = RegimeSpec::constant_variance(3, 0.9);
  cfg.n_paths = 300;
  cfg.horizon = 12;
  cfg.density_times = {1, 5};
  cfg.seed = 5;
  const auto a = run_study(cfg);
  cfg.threads = 4;
  const auto b = run_study(cfg);
  REQUIRE(a.moments.size() == b.moments.size());
  for (std::size_t t = 0; t < a.moments.size(); ++t) {
    CHECK(a.moments[t].mean == b.moments[t].mean);
    CHECK(a.moments[t].var == b.moments[t].var);
  }
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    CHECK(a.trajectories[i].theta == b.trajectories[i].theta);
  }
}

TEST_CASE("a single path gives degenerate but well-formed tables") {
  SimStudyConfig cfg;
  cfg.regime = RegimeSpec::increasing(3, 0.8);
  cfg.n_paths = 1;
  cfg.horizon = 50;
  cfg.seed = 1;
  const auto tables = run_study(cfg);
  CHECK(tables.moments.size() == 50);
  for (const auto& row : tables.moments) {
    CHECK(row.var == 0.0);
    CHECK(row.se == 0.0);
  }
  CHECK(tables.trajectories.size() == 50);
}

TEST_CASE("kernel density integrates to about one") {
  Rng rng(8);
  std::vector<double> x(5000);
  for (auto& v : x) v = sample_gamma(GammaLaw(3, 3), rng);
  const auto kd = kernel_density(x, 400);
  REQUIRE(kd.size() == 400);
  double area = 0.0;
  for (std::size_t i = 1; i < kd.size(); ++i) {
    area += 0.5 * (kd[i].second + kd[i - 1].second) * (kd[i].first - kd[i - 1].first);
  }
  CHECK(area == doctest::Approx(1.0).epsilon(0.03));
  for (const auto& [g, d] : kd) CHECK(d >= 0.0);
}

TEST_CASE("study CSVs carry the header and the documented columns") {
  SimStudyConfig cfg;
  cfg.regime = RegimeSpec::increasing(3, 0.8);
  cfg.n_paths = 10;
  cfg.horizon = 5;
  cfg.density_times = {1, 5};
  const auto tables = run_study(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "countssm_study_test";
  std::filesystem::remove_all(dir);
  const std::vector<std::string> header{"seed=0"};
  write_study(tables, dir, header);
  auto first_data_line = [&](const char* name) {
    std::ifstream in(dir / name);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# seed=0");
    std::getline(in, line);
    return line;
  };
  CHECK(first_data_line("trajectories.csv") == "path_id,t,theta,y");
  CHECK(first_data_line("moments.csv") == "t,mean,var,se");
  CHECK(first_data_line("density.csv") == "t,grid,density");
  std::filesystem::remove_all(dir);
}
