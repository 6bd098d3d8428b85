#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "countssm/dist.hpp"
#include "countssm/errors.hpp"
#include "countssm/regression.hpp"

using namespace countssm;

namespace {

/// NB(mu, size) responses with mu = exposure * exp(x . eta); x = (1, z1, z2).
std::vector<DesignRow> nb_rows(std::size_t n, const Eigen::Vector3d& eta, double size,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DesignRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    DesignRow r;
    r.x = Eigen::Vector3d(1.0, rng.normal(), rng.uniform() < 0.3 ? 1.0 : 0.0);
    r.exposure = 0.25 + 0.75 * rng.uniform();
    const double mu = r.exposure * std::exp(r.x.dot(eta));
    r.y = sample_poisson(mu * sample_gamma(GammaLaw(size, size), rng), rng);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Standard errors from the expected information sum w x x', w = mu / (1 + mu / k).
Eigen::VectorXd standard_errors(const std::vector<DesignRow>& rows, const GlmFit& fit) {
  const auto d = fit.eta.size();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : rows) {
    const double mu = r.exposure * std::exp(r.x.dot(fit.eta));
    info += mu / (1.0 + mu / fit.dispersion) * r.x * r.x.transpose();
  }
  return info.inverse().diagonal().cwiseSqrt();
}

}  // namespace

TEST_CASE("intercept-only fit recovers the log sample mean") {
  Rng rng(1);
  std::vector<DesignRow> rows;
  double total = 0.0;
  for (int i = 0; i < 2000; ++i) {
    DesignRow r{Eigen::VectorXd::Ones(1), 1.0, sample_poisson(1.7, rng)};
    total += static_cast<double>(r.y);
    rows.push_back(r);
  }
  const auto fit = fit_nb_glm(rows);
  CHECK(fit.converged);
  CHECK(fit.eta(0) == doctest::Approx(std::log(total / 2000.0)).epsilon(1e-8));
  // Poisson data: the size estimate is large or pinned at the Poisson limit.
  CHECK(fit.dispersion > 20.0);
}

TEST_CASE("coefficients are recovered within three standard errors") {
  const Eigen::Vector3d eta(-0.5, 0.3, 0.8);
  const auto rows = nb_rows(10000, eta, 1.5, 2);
  const auto fit = fit_nb_glm(rows);
  REQUIRE(fit.converged);
  CHECK(fit.score_norm <= 1e-8);
  const auto se = standard_errors(rows, fit);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.eta(j) - eta(j)) < 3 * se(j));
  CHECK(fit.dispersion == doctest::Approx(1.5).epsilon(0.2));
  CHECK(nb_glm_score(rows, fit.eta, fit.dispersion).norm() <= 1e-8);
  CHECK(fit.hessian_condition >= 1.0);
}

TEST_CASE("fitted likelihood is a maximum") {
  const auto rows = nb_rows(3000, Eigen::Vector3d(0.2, -0.4, 0.1), 2.0, 3);
  const auto fit = fit_nb_glm(rows);
  CHECK(fit.loglik == doctest::Approx(nb_glm_loglik(rows, fit.eta, fit.dispersion)));
  for (int j = 0; j < 3; ++j) {
    for (double h : {-1e-3, 1e-3}) {
      Eigen::VectorXd e = fit.eta;
      e(j) += h;
      CHECK(nb_glm_loglik(rows, e, fit.dispersion) < fit.loglik);
    }
  }
  CHECK(nb_glm_loglik(rows, fit.eta, fit.dispersion * 1.01) < fit.loglik);
  CHECK(nb_glm_loglik(rows, fit.eta, fit.dispersion * 0.99) < fit.loglik);
}

TEST_CASE("fitted intensities average close to the responses") {
  const auto rows = nb_rows(5000, Eigen::Vector3d(-0.2, 0.3, 0.5), 3.0, 4);
  const auto fit = fit_nb_glm(rows);
  double sy = 0.0, sm = 0.0;
  for (const auto& r : rows) {
    sy += static_cast<double>(r.y);
    sm += intensity(fit, r);
  }
  CHECK(sm == doctest::Approx(sy).epsilon(0.02));
}

TEST_CASE("affine rescaling of a covariate leaves fitted intensities unchanged") {
  auto rows = nb_rows(3000, Eigen::Vector3d(0.1, 0.5, -0.3), 2.0, 5);
  const auto base = fit_nb_glm(rows);
  auto scaled = rows;
  for (auto& r : scaled) r.x(1) = 2.5 * r.x(1) + 4.0;
  const auto fit = fit_nb_glm(scaled);
  CHECK(fit.eta(1) == doctest::Approx(base.eta(1) / 2.5).epsilon(1e-6));
  for (std::size_t i = 0; i < rows.size(); i += 97) {
    CHECK(intensity(fit, scaled[i]) == doctest::Approx(intensity(base, rows[i])).epsilon(1e-6));
  }
  CHECK(fit.loglik == doctest::Approx(base.loglik).epsilon(1e-9));
}

TEST_CASE("intensity and offsets") {
  const Eigen::Vector2d eta(0.4, -1.0);
  DesignRow r{Eigen::Vector2d(1.0, 0.0), 1.0, 0};
  CHECK(intensity(eta, r) == doctest::Approx(std::exp(0.4)));
  DesignRow half = r;
  half.exposure = 0.5;
  CHECK(intensity(eta, half) == doctest::Approx(0.5 * intensity(eta, r)));
  DesignRow huge{Eigen::Vector2d(1.0, -800.0), 1.0, 0};
  CHECK_THROWS_AS(intensity(eta, huge), EstimationError);
}

TEST_CASE("doubling the exposure doubles the fitted means") {
  const auto rows = nb_rows(2000, Eigen::Vector3d(0.0, 0.4, 0.2), 2.0, 6);
  const auto fit = fit_nb_glm(rows);
  for (std::size_t i = 0; i < rows.size(); i += 101) {
    DesignRow twice = rows[i];
    twice.exposure *= 2.0;
    CHECK(intensity(fit, twice) == doctest::Approx(2.0 * intensity(fit, rows[i])));
  }
}

TEST_CASE("rank-deficient design names the dependent columns") {
  auto rows = nb_rows(500, Eigen::Vector3d(0.0, 0.3, 0.2), 2.0, 7);
  std::vector<DesignRow> bad;
  for (const auto& r : rows) {
    DesignRow b = r;
    b.x = Eigen::Vector4d(r.x(0), r.x(1), r.x(2), 2.0 * r.x(1) - r.x(0));
    bad.push_back(b);
  }
  GlmOptions opts;
  opts.column_names = {"(intercept)", "age", "urban", "age_shifted"};
  try {
    fit_nb_glm(bad, opts);
    FAIL("expected an estimation error");
  } catch (const EstimationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("age_shifted") != std::string::npos);
  }
}

TEST_CASE("too few rows") {
  std::vector<DesignRow> rows{{Eigen::Vector2d(1, 0.5), 1.0, 1}, {Eigen::Vector2d(1, 1.5), 1.0, 2}};
  CHECK_THROWS_AS(fit_nb_glm(rows), EstimationError);
  CHECK_THROWS_AS(fit_nb_glm(std::vector<DesignRow>{}), EstimationError);
}

TEST_CASE("iteration cap reports non-convergence") {
  const auto rows = nb_rows(2000, Eigen::Vector3d(0.0, 0.4, 0.2), 2.0, 8);
  GlmOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  const auto fit = fit_nb_glm(rows, opts);
  CHECK_FALSE(fit.converged);
}
