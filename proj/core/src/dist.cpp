#include "countssm/dist.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "countssm/errors.hpp"

namespace countssm {

namespace {

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

// log of a Gamma(a, 1) draw, stable for very small shapes where the draw
// itself underflows.
double sample_log_gamma_unit(double a, Rng& rng) {
  double boost = 0.0;
  if (a < 1.0) {
    boost = std::log(rng.uniform()) / a;
    a += 1.0;
  }
  // Marsaglia & Tsang (2000).
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return std::log(d * v) + boost;
    }
  }
}

}  // namespace

GammaLaw::GammaLaw(double shape, double rate)
    : shape_(shape), rate_(rate), degenerate_(false) {
  if (!positive_finite(shape) || !positive_finite(rate)) {
    throw std::domain_error("GammaLaw requires shape > 0 and rate > 0, got shape=" +
                            std::to_string(shape) + " rate=" + std::to_string(rate));
  }
}

GammaLaw GammaLaw::or_zero(double shape, double rate) {
  if (shape == 0.0 && positive_finite(rate)) return zero();
  return GammaLaw(shape, rate);
}

BetaLaw::BetaLaw(double a, double b) : a_(a), b_(b), kind_(Kind::Proper) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("BetaLaw requires a >= 0 and b >= 0");
  }
  if (a == 0.0 && b == 0.0) {
    throw std::domain_error("BetaLaw(0, 0) has no meaning");
  }
  if (b == 0.0) {
    kind_ = Kind::ConstantOne;
  } else if (a == 0.0) {
    kind_ = Kind::ConstantZero;
  }
}

NBLaw::NBLaw(double mean, double size) : mean_(mean), size_(size) {
  if (!positive_finite(mean) || !positive_finite(size)) {
    throw std::domain_error("NBLaw requires mean > 0 and size > 0");
  }
}

double log_gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("log_gamma_fn requires x > 0, got " + std::to_string(x));
  }
  return std::lgamma(x);
}

namespace {
constexpr std::int64_t kRisingSumLimit = 64;
}  // namespace

double nb_log_pmf(std::int64_t y, const NBLaw& law) {
  if (y < 0) throw std::domain_error("nb_log_pmf: negative count");
  const double k = law.size();
  const double m = law.mean();
  const double yd = static_cast<double>(y);
  // log(k / (k + m)) and log(m / (k + m)) without cancellation.
  const double log_p_zero = -std::log1p(m / k);
  const double log_p_event = -std::log1p(k / m);
  double out = k * log_p_zero;
  if (y == 0) return out;
  if (y <= kRisingSumLimit) {
    // ln Gamma(y+k) - ln Gamma(k) - y ln k as a sum of log1p terms, which
    // stays accurate when k is huge (near-Poisson laws).
    double rising = 0.0;
    for (std::int64_t j = 1; j < y; ++j) rising += std::log1p(static_cast<double>(j) / k);
    return out + rising - log_gamma_fn(yd + 1.0) + yd * (std::log(m) - std::log1p(m / k));
  }
  return out + log_gamma_fn(yd + k) - log_gamma_fn(k) - log_gamma_fn(yd + 1.0) +
         yd * log_p_event;
}

double gamma_log_pdf(double x, const GammaLaw& law) {
  if (law.degenerate()) throw std::domain_error("gamma_log_pdf: degenerate law");
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double a = law.shape();
  const double b = law.rate();
  return a * std::log(b) - log_gamma_fn(a) + (a - 1.0) * std::log(x) - b * x;
}

double nb_pmf_oracle(std::int64_t y, double shape, double rate, double intensity) {
  if (y < 0 || !positive_finite(shape) || !positive_finite(rate) ||
      !positive_finite(intensity)) {
    throw std::domain_error("nb_pmf_oracle: invalid arguments");
  }
  const double yd = static_cast<double>(y);
  // The integrand is evaluated directly from the Poisson and gamma densities
  // with the C library lgamma, sharing nothing with nb_log_pmf.
  const double log_const =
      shape * std::log(rate) - std::lgamma(shape) - std::lgamma(yd + 1.0) +
      yd * std::log(intensity);
  auto integrand = [&](double theta) {
    if (!(theta > 0.0)) return 0.0;
    return std::exp(log_const + (yd + shape - 1.0) * std::log(theta) -
                    (intensity + rate) * theta);
  };

  // Split at the posterior mean so the finite piece holds the mass and any
  // endpoint singularity at zero, and the tail goes to exp-sinh.
  const double split = (yd + shape) / (intensity + rate);
  double err_head = 0.0, err_tail = 0.0, l1_head = 0.0, l1_tail = 0.0;
  boost::math::quadrature::tanh_sinh<double> head_rule(15);
  boost::math::quadrature::exp_sinh<double> tail_rule(12);
  const double tol = 1e-14;
  const double head =
      head_rule.integrate(integrand, 0.0, split, tol, &err_head, &l1_head);
  const double tail = tail_rule.integrate(
      [&](double u) { return integrand(split + u); }, 0.0,
      std::numeric_limits<double>::infinity(), tol, &err_tail, &l1_tail);
  const double err = err_head + err_tail;
  if (!std::isfinite(head + tail) || err > 1e-10) {
    std::ostringstream msg;
    msg << "nb_pmf_oracle: quadrature did not converge (error estimate " << err << ")";
    throw OracleError(msg.str());
  }
  return head + tail;
}

double sample_gamma(const GammaLaw& law, Rng& rng) {
  if (law.degenerate()) return 0.0;
  return std::exp(sample_log_gamma_unit(law.shape(), rng)) / law.rate();
}

double sample_beta(const BetaLaw& law, Rng& rng) {
  switch (law.kind()) {
    case BetaLaw::Kind::ConstantOne:
      return 1.0;
    case BetaLaw::Kind::ConstantZero:
      return 0.0;
    case BetaLaw::Kind::Proper:
      break;
  }
  // B = X / (X + Y) = 1 / (1 + exp(log Y - log X)), in log space so that
  // tiny shapes do not underflow both gammas to zero.
  const double log_x = sample_log_gamma_unit(law.a(), rng);
  const double log_y = sample_log_gamma_unit(law.b(), rng);
  return 1.0 / (1.0 + std::exp(log_y - log_x));
}

std::int64_t sample_poisson(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::domain_error("sample_poisson: mean must be >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    // Inversion by sequential search.
    double p = std::exp(-mean);
    double cdf = p;
    const double u = rng.uniform();
    std::int64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // PTRS, Hörmann (1993).
  const double slam = std::sqrt(mean);
  const double log_lam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * log_lam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

}  // namespace countssm
