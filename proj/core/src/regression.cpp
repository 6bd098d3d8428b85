#include "countssm/regression.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "countssm/dist.hpp"
#include "countssm/errors.hpp"

namespace countssm {

namespace {

constexpr double kMaxLinear = 700.0;

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd log_exposure;
};

Design build_design(std::span<const DesignRow> rows) {
  if (rows.empty()) throw EstimationError("fit_nb_glm: no rows");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = rows.front().x.size();
  Design out{Eigen::MatrixXd(n, d), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const DesignRow& r = rows[static_cast<std::size_t>(i)];
    if (r.x.size() != d) throw EstimationError("fit_nb_glm: ragged design rows");
    if (!r.x.allFinite()) throw EstimationError("fit_nb_glm: non-finite covariate");
    if (!(r.exposure > 0.0)) throw EstimationError("fit_nb_glm: exposure must be > 0");
    if (r.y < 0) throw EstimationError("fit_nb_glm: negative response");
    out.x.row(i) = r.x.transpose();
    out.y(i) = static_cast<double>(r.y);
    out.log_exposure(i) = std::log(r.exposure);
  }
  return out;
}

Eigen::VectorXd means(const Design& d, const Eigen::VectorXd& eta) {
  Eigen::VectorXd lin = d.x * eta + d.log_exposure;
  return lin.array().min(kMaxLinear).exp();
}

double loglik_at(const Design& d, const Eigen::VectorXd& mu, double k) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    total += nb_log_pmf(static_cast<std::int64_t>(d.y(i)), NBLaw(mu(i), k));
  }
  return total;
}

Eigen::VectorXd score_at(const Design& d, const Eigen::VectorXd& mu, double k) {
  const Eigen::ArrayXd w = k / (k + mu.array());
  return d.x.transpose() * ((d.y - mu).array() * w).matrix();
}

constexpr double kFiniteSumLimit = 64.0;

// First and second derivative of the log-likelihood in s = log k. For small
// counts the digamma and trigamma differences are written as finite sums and
// combined with their companion terms, which keeps the result accurate when
// k is large (near-Poisson data).
std::pair<double, double> size_derivatives(const Design& d, const Eigen::VectorXd& mu,
                                           double k) {
  using boost::math::digamma;
  using boost::math::trigamma;
  const double psi_k = digamma(k);
  const double tri_k = trigamma(k);
  double g = 0.0, h = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double y = d.y(i);
    const double m = mu(i);
    const double km = k + m;
    double gi = 0.0;
    double hi = 0.0;
    if (y <= kFiniteSumLimit) {
      gi = m / km - std::log1p(m / k);
      hi = m * m / (k * km * km);
      for (double j = 0.0; j < y; j += 1.0) {
        const double kj = k + j;
        gi += (m - j) / (kj * km);
        hi += (j - m) * (2.0 * k + j + m) / (km * km * kj * kj);
      }
    } else {
      gi = -std::log1p(m / k) + (m - y) / km + digamma(y + k) - psi_k;
      hi = m / (k * km) - (m - y) / (km * km) + trigamma(y + k) - tri_k;
    }
    g += gi;
    h += hi;
  }
  return {k * g, k * k * h + k * g};
}

void check_rank(const Design& d, const GlmOptions& options) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  const Eigen::Index rank = qr.rank();
  if (rank == d.x.cols()) return;
  // Columns carrying weight in some null-space direction are the dependent set.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.x, Eigen::ComputeFullV);
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(d.x.cols() - rank);
  std::ostringstream msg;
  msg << "fit_nb_glm: rank-deficient design (rank " << rank << " of " << d.x.cols()
      << "); linearly dependent columns:";
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
    if (null_basis.row(j).cwiseAbs().maxCoeff() < 1e-8) continue;
    const auto col = static_cast<std::size_t>(j);
    msg << ' ';
    if (col < options.column_names.size()) {
      msg << options.column_names[col];
    } else {
      msg << "x" << col;
    }
  }
  throw EstimationError(msg.str());
}

// Fisher scoring for eta at fixed size, with step halving.
int fit_eta(const Design& d, Eigen::VectorXd& eta, double k, double tol, int max_iter) {
  Eigen::VectorXd mu = means(d, eta);
  double ll = loglik_at(d, mu, k);
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd score = score_at(d, mu, k);
    if (score.norm() <= tol) break;
    const Eigen::ArrayXd w = mu.array() * k / (k + mu.array());
    const Eigen::MatrixXd info = d.x.transpose() * (d.x.array().colwise() * w).matrix();
    const Eigen::VectorXd step = info.ldlt().solve(score);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      const Eigen::VectorXd trial = eta + scale * step;
      const Eigen::VectorXd trial_mu = means(d, trial);
      const double trial_ll = loglik_at(d, trial_mu, k);
      if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-12 * std::fabs(ll)) {
        eta = trial;
        mu = trial_mu;
        ll = trial_ll;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return it;
}

double golden_log_size(const Design& d, const Eigen::VectorXd& mu, double lo, double hi) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double s) { return loglik_at(d, mu, std::exp(s)); };
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double e = a + ratio * (b - a);
  double fc = f(c), fe = f(e);
  while (b - a > 1e-6) {
    if (fc >= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + ratio * (b - a);
      fe = f(e);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double nb_glm_loglik(std::span<const DesignRow> rows, const Eigen::VectorXd& eta,
                     double size) {
  const Design d = build_design(rows);
  return loglik_at(d, means(d, eta), size);
}

Eigen::VectorXd nb_glm_score(std::span<const DesignRow> rows, const Eigen::VectorXd& eta,
                             double size) {
  const Design d = build_design(rows);
  return score_at(d, means(d, eta), size);
}

double intensity(const Eigen::VectorXd& eta, const DesignRow& row) {
  if (row.x.size() != eta.size()) {
    throw std::invalid_argument("intensity: covariate dimension does not match eta");
  }
  const double lin = row.x.dot(eta);
  if (!(std::fabs(lin) <= kMaxLinear)) {
    throw EstimationError("intensity: |x . eta| = " + std::to_string(lin) +
                          " exceeds 700; exp would overflow");
  }
  return row.exposure * std::exp(lin);
}

GlmFit fit_nb_glm(std::span<const DesignRow> rows, const GlmOptions& options) {
  const Design d = build_design(rows);
  const Eigen::Index n = d.x.rows();
  const Eigen::Index dim = d.x.cols();
  if (n <= dim) {
    throw EstimationError("fit_nb_glm: need more rows than columns (n=" + std::to_string(n) +
                          ", d=" + std::to_string(dim) + ")");
  }
  check_rank(d, options);

  const double log_lo = std::log(options.min_size);
  const double log_hi = std::log(options.max_size);

  GlmFit fit;
  fit.eta = Eigen::VectorXd::Zero(dim);
  // Poisson-limit start, then a moment estimate of the size.
  fit_eta(d, fit.eta, options.max_size, options.tol, options.max_iter);
  Eigen::VectorXd mu = means(d, fit.eta);
  double log_k = golden_log_size(d, mu, log_lo, log_hi);

  for (int outer = 0; outer < options.max_iter; ++outer) {
    fit.iterations = outer + 1;
    double k = std::exp(log_k);
    fit_eta(d, fit.eta, k, 0.1 * options.tol, options.max_iter);
    mu = means(d, fit.eta);

    // Newton on log size with a golden-section fallback.
    const auto [g, h] = size_derivatives(d, mu, k);
    double next = log_k;
    if (h < 0.0) {
      next = std::clamp(log_k - g / h, log_lo, log_hi);
      if (loglik_at(d, mu, std::exp(next)) < loglik_at(d, mu, k)) {
        next = golden_log_size(d, mu, std::max(log_lo, log_k - 2.0),
                               std::min(log_hi, log_k + 2.0));
      }
    } else {
      next = golden_log_size(d, mu, log_lo, log_hi);
    }
    log_k = next;
    k = std::exp(log_k);
    fit.dispersion_at_bound = log_hi - log_k < 1e-3;

    const Eigen::VectorXd score = score_at(d, mu, k);
    const double size_score = fit.dispersion_at_bound ? 0.0 : size_derivatives(d, mu, k).first;
    fit.score_norm = std::sqrt(score.squaredNorm() + size_score * size_score);
    if (fit.score_norm <= options.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.dispersion = std::exp(log_k);
  fit.loglik = loglik_at(d, mu, fit.dispersion);
  const Eigen::ArrayXd w = mu.array() * fit.dispersion / (fit.dispersion + mu.array());
  const Eigen::MatrixXd info = d.x.transpose() * (d.x.array().colwise() * w).matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double min_ev = eig.eigenvalues().minCoeff();
  fit.hessian_condition = min_ev > 0.0 ? eig.eigenvalues().maxCoeff() / min_ev
                                       : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace countssm
